use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "orlicz-lab", version, about = "Orlicz-space norms, risk measures and duality-gap exhibits")]
pub struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Luxemburg and Orlicz norms of a position.
    Norm(NormArgs),
    /// Conjugate values on a grid.
    Conjugate(ConjugateArgs),
    /// Witnesses for the failure of the Δ2 condition.
    Delta2(Delta2Args),
    /// Risk-measure evaluation.
    Risk {
        #[command(subcommand)]
        command: RiskCommand,
    },
    /// Conjugate, biconjugate and scenario extraction.
    Dual(DualArgs),
    /// Disjoint block sequences and their invariants.
    Blocks(BlocksArgs),
    /// The truncated duality-gap construction.
    Cex {
        #[command(subcommand)]
        command: CexCommand,
    },
    /// Split, convex-combination and dominator pipeline on constructed inputs.
    Closure(ClosureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Luxemburg,
    Orlicz,
    Both,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Function spec: power:p=<p>, exp, entropy, sparse:bursts=<k>,ratio=<r>.
    #[arg(long)]
    pub phi: String,
    /// Positions CSV with header atom,probability,value.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "luxemburg")]
    pub which: Which,
}

#[derive(Debug, Args)]
pub struct ConjugateArgs {
    #[arg(long)]
    pub phi: String,
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 10.0)]
    pub to: f64,
    #[arg(long, default_value_t = 11)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct Delta2Args {
    #[arg(long)]
    pub phi: String,
    #[arg(long, default_value_t = 10)]
    pub count: u32,
    #[arg(long, default_value_t = 1e300)]
    pub t_cap: f64,
    /// Scan the conjugate as well.
    #[arg(long)]
    pub conjugate: bool,
}

#[derive(Debug, Subcommand)]
pub enum RiskCommand {
    /// Evaluate a measure on one or more positions.
    Eval(RiskEvalArgs),
}

#[derive(Debug, Args)]
pub struct RiskEvalArgs {
    /// avar:alpha=<a>, worstcase, expectation, entropic:theta=<t>, scenario:<file.json>.
    #[arg(long)]
    pub measure: String,
    /// Positions CSV files on a common space.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Also run the coherence axiom suite on the inputs (needs two or more).
    #[arg(long)]
    pub axioms: bool,
}

#[derive(Debug, Args)]
pub struct DualArgs {
    #[arg(long)]
    pub measure: String,
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Random probes drawn with ORLICZ_LAB_SEED, on top of the measure's scenarios.
    #[arg(long, default_value_t = 8)]
    pub probes: usize,
    /// Random density candidates for scenario extraction.
    #[arg(long, default_value_t = 8)]
    pub candidates: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Force box mode with this radius.
    #[arg(long)]
    pub box_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Omega1,
    Omega2,
    Omega3,
}

#[derive(Debug, Args)]
pub struct BlocksArgs {
    #[arg(long)]
    pub phi: String,
    #[arg(long, default_value_t = 10)]
    pub count: u32,
    #[arg(long, value_enum, default_value = "omega1")]
    pub region: RegionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(name = "L", alias = "l")]
    L,
    #[value(name = "H", alias = "h")]
    H,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, default_value = "sparse:bursts=24,ratio=2")]
    pub phi: String,
    #[arg(long = "i", default_value_t = 4)]
    pub i: usize,
    #[arg(long = "j", default_value_t = 4)]
    pub j: usize,
    #[arg(long = "n", default_value_t = 8)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "L")]
    pub variant: VariantArg,
}

#[derive(Debug, Args)]
pub struct PositionArgs {
    /// minus-w0, constant:c=<c>, xsr:s=<s>,r=<r>.
    #[arg(long, conflicts_with = "combination")]
    pub position: Option<String>,
    /// Block combination as JSON.
    #[arg(long)]
    pub combination: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CexCommand {
    /// Build an instance and check its invariants.
    Build(InstanceArgs),
    /// Decide membership of a position, or of an image given as JSON.
    Member {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        position: PositionArgs,
        /// Image `u ⊕ a ⊕ v` as JSON, instead of a position.
        #[arg(long, conflicts_with_all = ["position", "combination"])]
        image: Option<PathBuf>,
    },
    /// Select an approximant of −W₀ and run the gap exhibit.
    Approx {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Target list as JSON; defaults to the three standard probes.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Number of truncations, each growing (I, J, N) by (1, 1, 2).
        #[arg(long, default_value_t = 1)]
        schedule: usize,
    },
    /// Evaluate the acceptance-set risk measure.
    Rho {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        position: PositionArgs,
    },
}

#[derive(Debug, Args)]
pub struct ClosureArgs {
    #[arg(long, default_value = "power:p=2")]
    pub phi: String,
    /// Number of budget levels 2^-1, …, 2^-levels.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
}
