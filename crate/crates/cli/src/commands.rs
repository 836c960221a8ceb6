use std::path::Path;
use std::sync::Arc;

use orlicz_core::blocks::{block_invariants, build_disjoint_sequence};
use orlicz_core::closure::{as_extraction, mazur_min_norm, order_dominator, split_with_budget};
use orlicz_core::counterexample::{
    build_instance, gap_exhibit, membership, rho_c_bisect, rho_c_image, standard_targets, t_operator, weak_approx_select,
    x_sr, BlockCombination, DualCombination, Membership,
};
use orlicz_core::duality::{default_mode, duality_report, ConjugateMode};
use orlicz_core::norms::{luxemburg_norm, orlicz_norm_report};
use orlicz_core::orlicz::{conjugate_value, delta2_witnesses, numeric_conjugate_value};
use orlicz_core::risk::{axiom_suite, MeasureSpec, ScenarioSet};
use orlicz_core::{
    CounterexampleInstance, FiniteSpace, FunctionSpec, LabError, OrliczFunction, OrliczPair, RandomVariable, Region,
    RiskMeasure, TImage, Truncation, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::io::*;

/// A finished report, plus whether it records a rejected membership query.
pub struct Report {
    pub body: Value,
    pub not_member: bool,
}

impl Report {
    fn ok(body: Value) -> Self {
        Report { body, not_member: false }
    }
}

pub fn run(command: Command) -> CliResult<Report> {
    match command {
        Command::Norm(a) => norm(a),
        Command::Conjugate(a) => conjugate(a),
        Command::Delta2(a) => delta2(a),
        Command::Risk { command: RiskCommand::Eval(a) } => risk_eval(a),
        Command::Dual(a) => dual(a),
        Command::Blocks(a) => blocks(a),
        Command::Cex { command } => cex(command),
        Command::Closure(a) => closure(a),
    }
}

fn function(spec: &str) -> CliResult<(FunctionSpec, OrliczFunction)> {
    let spec: FunctionSpec = spec.parse()?;
    let phi = spec.build()?;
    Ok((spec, phi))
}

fn norm(a: NormArgs) -> CliResult<Report> {
    let (spec, phi) = function(&a.phi)?;
    let pos = read_position(&a.input)?;
    let lux = matches!(a.which, Which::Luxemburg | Which::Both).then(|| luxemburg_norm(&pos.x, &phi)).transpose()?;
    let orl = matches!(a.which, Which::Orlicz | Which::Both)
        .then(|| orlicz_norm_report(&pos.x, &OrliczPair::from_phi(phi.clone())))
        .transpose()?;
    let value = match a.which {
        Which::Orlicz => orl.map(|r| r.value),
        _ => lux,
    };
    Ok(Report::ok(json!({
        "command": "norm",
        "phi": spec.to_string(),
        "atoms": pos.space.len(),
        "value": value,
        "luxemburg": lux,
        "orlicz": orl,
    })))
}

fn conjugate(a: ConjugateArgs) -> CliResult<Report> {
    let (spec, phi) = function(&a.phi)?;
    if !(a.from >= 0.0 && a.to > a.from && a.to.is_finite()) {
        return Err(invalid(format!("need 0 ≤ from < to, got [{}, {}]", a.from, a.to)));
    }
    if a.points < 2 {
        return Err(invalid("--points must be at least 2"));
    }
    let mut rows = Vec::with_capacity(a.points);
    for k in 0..a.points {
        let s = a.from + (a.to - a.from) * k as f64 / (a.points - 1) as f64;
        let psi = conjugate_value(&phi, s)?;
        // The numeric route can exceed the evaluation cap for steep Φ.
        let numeric = numeric_conjugate_value(&phi, s).ok();
        rows.push(json!({ "s": s, "psi": psi, "numeric": numeric }));
    }
    Ok(Report::ok(json!({ "command": "conjugate", "phi": spec.to_string(), "rows": rows })))
}

fn witness_scan(phi: &OrliczFunction, count: u32, t_cap: f64) -> CliResult<Value> {
    match delta2_witnesses(phi, count, t_cap) {
        Ok(w) => Ok(json!({ "status": "found", "witnesses": w, "analytic_delta2": phi.analytic_delta2() })),
        Err(LabError::WitnessNotFound { n, .. }) => {
            let partial = if n > 1 { delta2_witnesses(phi, n - 1, t_cap)? } else { Vec::new() };
            Ok(json!({
                "status": "none-below-cap",
                "first_missing_n": n,
                "witnesses": partial,
                "analytic_delta2": phi.analytic_delta2(),
            }))
        }
        Err(e) => Err(e.into()),
    }
}

fn delta2(a: Delta2Args) -> CliResult<Report> {
    let (spec, phi) = function(&a.phi)?;
    positive("t-cap", a.t_cap)?;
    let mut body = json!({
        "command": "delta2",
        "phi": spec.to_string(),
        "count": a.count,
        "t_cap": a.t_cap,
        "function": witness_scan(&phi, a.count, a.t_cap)?,
    });
    if a.conjugate {
        let psi = phi.analytic_conjugate().ok_or_else(|| invalid("Φ has no exact conjugate"))?;
        body["conjugate"] = witness_scan(&psi, a.count, a.t_cap)?;
    }
    Ok(Report::ok(body))
}

fn measure(spec: &str, space: &Arc<FiniteSpace>) -> CliResult<Box<dyn RiskMeasure>> {
    match spec.parse::<MeasureSpec>()? {
        MeasureSpec::Catalog(m) => Ok(Box::new(m)),
        MeasureSpec::ScenarioFile(path) => {
            let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| invalid(format!("{path}: {e}")))?;
            Ok(Box::new(ScenarioSet::from_json(space, &text)?))
        }
    }
}

fn risk_eval(a: RiskEvalArgs) -> CliResult<Report> {
    let (space, xs) = read_positions(&a.input)?;
    let rho = measure(&a.measure, &space)?;
    let values = xs
        .iter()
        .zip(&a.input)
        .map(|(x, p)| Ok(json!({ "input": p.display().to_string(), "value": rho.eval(x)? })))
        .collect::<CliResult<Vec<_>>>()?;
    let mut body = json!({ "command": "risk eval", "measure": rho.label(), "values": values });
    if a.axioms {
        body["axioms"] = to_json(&axiom_suite(rho.as_ref(), &xs)?)?;
    }
    Ok(Report::ok(body))
}

fn random_density(rng: &mut ChaCha8Rng, space: &Arc<FiniteSpace>) -> CliResult<RandomVariable> {
    let raw: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mean: f64 = raw.iter().zip(space.probabilities()).map(|(r, p)| r * p).sum();
    Ok(RandomVariable::new(space, raw.iter().map(|r| r / mean).collect())?)
}

fn dual(a: DualArgs) -> CliResult<Report> {
    positive("tol", a.tol)?;
    let (space, xs) = read_positions(&a.input)?;
    let rho = measure(&a.measure, &space)?;
    let mode = match a.box_radius {
        Some(r) => ConjugateMode::Box { radius: positive("box-radius", r)? },
        None => default_mode(rho.as_ref(), &space),
    };
    let seed = seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios: Vec<RandomVariable> = match rho.scenario_set(&space) {
        Some(q) => q?.densities().to_vec(),
        None => Vec::new(),
    };
    let mut probes: Vec<RandomVariable> = scenarios.iter().map(|d| d.scale(-1.0)).collect();
    for _ in 0..a.probes {
        probes.push(random_density(&mut rng, &space)?.scale(-1.0));
        let v = (0..space.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        probes.push(RandomVariable::new(&space, v)?);
    }
    let mut candidates = scenarios;
    for _ in 0..a.candidates {
        candidates.push(random_density(&mut rng, &space)?);
    }
    let report = duality_report(rho.as_ref(), &space, &xs, &probes, &candidates, mode, a.tol)?;
    Ok(Report::ok(json!({ "command": "dual", "seed": seed, "report": to_json(&report)? })))
}

fn region(r: RegionArg) -> Region {
    match r {
        RegionArg::Omega1 => Region::Omega1,
        RegionArg::Omega2 => Region::Omega2,
        RegionArg::Omega3 => Region::Omega3,
    }
}

fn blocks(a: BlocksArgs) -> CliResult<Report> {
    let (spec, phi) = function(&a.phi)?;
    let (x, y) = build_disjoint_sequence(&phi, a.count, region(a.region))?;
    let inv = block_invariants(&phi, &x, &y)?;
    Ok(Report::ok(json!({
        "command": "blocks",
        "phi": spec.to_string(),
        "count": a.count,
        "x": to_json(&x)?,
        "y": to_json(&y)?,
        "invariants": to_json(&inv)?,
    })))
}

fn instance(a: &InstanceArgs) -> CliResult<CounterexampleInstance> {
    let (_, phi) = function(&a.phi)?;
    let variant = match a.variant {
        VariantArg::L => Variant::L,
        VariantArg::H => Variant::H,
    };
    Ok(build_instance(&phi, Truncation { i: a.i, j: a.j, n: a.n }, variant)?)
}

fn parse_position(inst: &CounterexampleInstance, spec: &str) -> CliResult<BlockCombination> {
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    let param = |key: &str| -> CliResult<&str> {
        body.split(',')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim())
            .ok_or_else(|| invalid(format!("position '{spec}' needs {key}=<value>")))
    };
    match head {
        "minus-w0" if body.is_empty() => Ok(BlockCombination::minus_w0()),
        "constant" => {
            let c: f64 = param("c")?.parse().map_err(|_| invalid(format!("bad constant in '{spec}'")))?;
            Ok(BlockCombination::constant(c))
        }
        "xsr" => {
            let s: usize = param("s")?.parse().map_err(|_| invalid(format!("bad s in '{spec}'")))?;
            let r: usize = param("r")?.parse().map_err(|_| invalid(format!("bad r in '{spec}'")))?;
            Ok(x_sr(inst, s, r)?)
        }
        _ => Err(invalid(format!("unknown position '{spec}'; use minus-w0, constant:c=<c> or xsr:s=<s>,r=<r>"))),
    }
}

fn position(inst: &CounterexampleInstance, a: &PositionArgs) -> CliResult<(String, BlockCombination)> {
    match (&a.position, &a.combination) {
        (Some(s), None) => Ok((s.clone(), parse_position(inst, s)?)),
        (None, Some(p)) => Ok((p.display().to_string(), read_json(p)?)),
        (None, None) => Ok(("minus-w0".into(), BlockCombination::minus_w0())),
        _ => Err(invalid("give either --position or --combination")),
    }
}

fn cex(command: CexCommand) -> CliResult<Report> {
    match command {
        CexCommand::Build(a) => {
            let inst = instance(&a)?;
            Ok(Report::ok(json!({
                "command": "cex build",
                "phi": a.phi,
                "instance": to_json(&inst.view())?,
                "invariants": to_json(&inst.invariants())?,
            })))
        }
        CexCommand::Member { instance: ia, position: pa, image } => {
            let inst = instance(&ia)?;
            let (label, img) = match image {
                Some(p) => (p.display().to_string(), read_json::<TImage>(&p)?),
                None => {
                    let (label, comb) = position(&inst, &pa)?;
                    (label, t_operator(&inst, &comb)?)
                }
            };
            let m = membership(&inst, &img)?;
            if let Membership::NotMember { verified: false, .. } = m {
                return Err(CliError::Numeric("infeasibility certificate failed verification".into()));
            }
            Ok(Report {
                not_member: !m.is_member(),
                body: json!({
                    "command": "cex member",
                    "truncation": to_json(&inst.truncation)?,
                    "variant": to_json(&inst.variant)?,
                    "position": label,
                    "image": to_json(&img)?,
                    "membership": to_json(&m)?,
                }),
            })
        }
        CexCommand::Approx { instance: ia, eps, targets, schedule } => {
            positive("eps", eps)?;
            if schedule == 0 {
                return Err(invalid("--schedule must be at least 1"));
            }
            let inst = instance(&ia)?;
            let targets: Vec<DualCombination> = match targets {
                Some(p) => read_json(&p)?,
                None => standard_targets(&inst),
            };
            let sel = weak_approx_select(&inst, &targets, eps)?;
            let truncations: Vec<Truncation> = (0..schedule)
                .map(|k| Truncation { i: ia.i + k, j: ia.j + k, n: ia.n + 2 * k })
                .collect();
            let gap = gap_exhibit(&inst.phi, &truncations, inst.variant, &targets, eps)?;
            Ok(Report::ok(json!({
                "command": "cex approx",
                "targets": to_json(&targets)?,
                "selection": to_json(&sel)?,
                "gap": to_json(&gap)?,
            })))
        }
        CexCommand::Rho { instance: ia, position: pa } => {
            let inst = instance(&ia)?;
            let (label, comb) = position(&inst, &pa)?;
            let img = t_operator(&inst, &comb)?;
            let rho = rho_c_image(&inst, &img)?;
            let check = rho_c_bisect(&inst, &img)?;
            if (rho - check).abs() > orlicz_core::counterexample::RHO_BISECT_TOL * (1.0 + rho.abs()) {
                return Err(CliError::Numeric(format!("LP value {rho} and bisection value {check} disagree")));
            }
            Ok(Report::ok(json!({
                "command": "cex rho",
                "truncation": to_json(&inst.truncation)?,
                "variant": to_json(&inst.variant)?,
                "position": label,
                "combination": to_json(&comb)?,
                "rho": rho,
                "bisection": check,
                "tolerance": orlicz_core::counterexample::RHO_BISECT_TOL,
            })))
        }
    }
}

#[derive(Serialize)]
struct LevelRow {
    n: usize,
    budget: f64,
    spike_atom: usize,
    split_k: f64,
    split_tail_modular: f64,
    next_lower_tail: Option<f64>,
    candidates: usize,
    mazur: orlicz_core::closure::MazurReport,
}

/// Sign pattern of the `m`-th Walsh function.
fn walsh(m: usize, atoms: usize) -> Vec<f64> {
    (0..atoms).map(|a| if (a & m).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

fn closure(a: ClosureArgs) -> CliResult<Report> {
    let (spec, phi) = function(&a.phi)?;
    if !(1..=5).contains(&a.levels) {
        return Err(invalid(format!("--levels must lie in 1..=5, got {}", a.levels)));
    }
    let seed = seed()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = 4usize.pow(a.levels as u32);
    let space = FiniteSpace::uniform(atoms);
    let mut next_walsh = 1;
    let mut z_parts = Vec::new();
    let mut w_parts = Vec::new();
    let mut rows = Vec::new();
    for n in 1..=a.levels {
        let budget = 0.5f64.powi(n as i32);
        let group = 2 * 4usize.pow(n as u32 - 1);
        let spike_atom = rng.gen_range(0..atoms);
        let spike = rng.gen_range(0.5..1.0) * phi.inverse(budget * atoms as f64);
        let mut bounded = Vec::with_capacity(group);
        let mut first = None;
        for g in 0..group {
            let mut v: Vec<f64> = walsh(next_walsh, atoms).iter().map(|s| 0.5 * s).collect();
            next_walsh += 1;
            if g == 0 {
                v[spike_atom] += spike;
            }
            let split = split_with_budget(&RandomVariable::new(&space, v)?, &phi, budget)?;
            if g == 0 {
                z_parts.push(split.z.clone());
                first = Some((split.k, split.tail_modular, split.next_lower_tail));
            }
            bounded.push(split.w);
        }
        let mazur = mazur_min_norm(&bounded, &phi, budget)?;
        let mut w = RandomVariable::zero(&space);
        for (c, b) in mazur.weights.iter().zip(&bounded) {
            w = w.add(&b.scale(*c))?;
        }
        w_parts.push(w);
        let (split_k, split_tail_modular, next_lower_tail) = first.expect("group is nonempty");
        rows.push(LevelRow {
            n,
            budget,
            spike_atom,
            split_k,
            split_tail_modular,
            next_lower_tail,
            candidates: group,
            mazur,
        });
    }
    let all_found = rows.iter().all(|r| r.mazur.found);
    let dominator = if all_found { Some(order_dominator(&z_parts, &w_parts, &phi)?) } else { None };

    let limit = RandomVariable::new(&space, (0..atoms).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let seq = (1..=12)
        .map(|n| {
            let mut v = limit.values().to_vec();
            let k = rng.gen_range(0..atoms);
            v[k] += 0.9 * 0.5f64.powi(n as i32) * atoms as f64;
            RandomVariable::new(&space, v)
        })
        .collect::<orlicz_core::Result<Vec<_>>>()?;
    let extraction = as_extraction(&seq, &limit)?;
    let holds = all_found && dominator.as_ref().is_some_and(|d| d.holds) && extraction.holds;
    Ok(Report::ok(json!({
        "command": "closure",
        "phi": spec.to_string(),
        "seed": seed,
        "atoms": atoms,
        "levels": to_json(&rows)?,
        "dominator": to_json(&dominator)?,
        "extraction": to_json(&extraction)?,
        "holds": holds,
    })))
}
