//! The order-closed cone `C` built from two non-Δ2 block families, at
//! finite truncation.
//!
//! Positions are block combinations. `T` sends a position to
//! `u ⊕ a ⊕ v`: pairings with the `Y_n`, with `Z₀`, and with the `Z`
//! blocks on the third region. Membership asks for `(λ, y)` with
//! `λ ≥ 0, y ≥ 0, Σ_i 2^i‖y_i‖₁ = 1`, `a ≥ −λ` and the variant's
//! constraints on `u` and `v`; substituting `z = λy` makes it an LP.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blocks::{build_disjoint_sequence, series_modular, Block, BlockSequence, Region, BLOCK_IDENTITY_TOL};
use crate::error::{LabError, Result};
use crate::finite::{pairing, FiniteSpace, RandomVariable};
use crate::lp::{FarkasCertificate, LinearProgram, LpOutcome, Sense};
use crate::orlicz::OrliczFunction;
use crate::risk::{ExtReal, Provenance, RiskMeasure};
use crate::roots::bisect_predicate;

pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const RHO_BISECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// `v ≥ λy`, `u ≥ λ Σ_i 4^i S y_i` on `L^Φ`.
    L,
    /// `v(j) ≥ λ Σ_i 4^i y(i,j)`, `u(n) ≥ λ Σ_i Σ_{j≥n} y(i,j)` on the heart.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub i: usize,
    pub j: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleInstance {
    pub phi: OrliczFunction,
    pub psi: OrliczFunction,
    pub variant: Variant,
    pub truncation: Truncation,
    pub x: BlockSequence,
    pub y: BlockSequence,
    pub w0: Block,
    pub z0: Block,
    /// `Z` blocks (heights from Ψ-witnesses) and their `W` partners on Ω₃.
    pub z: BlockSequence,
    pub w: BlockSequence,
    /// Variant L: the cell `(i, j)` carried by each Ω₃ block, in diagonal
    /// order. Variant H: `(0, j)`.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceView<'a> {
    pub variant: Variant,
    pub truncation: Truncation,
    pub x_blocks: &'a BlockSequence,
    pub y_blocks: &'a BlockSequence,
    pub w0: Block,
    pub z0: Block,
    pub w_blocks: &'a BlockSequence,
    pub z_blocks: &'a BlockSequence,
    pub cells: &'a [(usize, usize)],
}

/// Cells of `[1, I] × [1, J]` ordered by `i + j`, then `j`.
pub fn diagonal_cells(i_max: usize, j_max: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (1..=i_max).flat_map(|i| (1..=j_max).map(move |j| (i, j))).collect();
    cells.sort_by_key(|&(i, j)| (i + j, j));
    cells
}

/// Builds the instance. Requires `J ≤ N` so that the last `u` row sees every
/// column of `y`.
pub fn build_instance(phi: &OrliczFunction, truncation: Truncation, variant: Variant) -> Result<CounterexampleInstance> {
    let Truncation { i, j, n } = truncation;
    if i == 0 || j == 0 || n == 0 {
        return Err(LabError::InvalidInput("truncation indices must be positive".into()));
    }
    if j > n {
        return Err(LabError::InvalidInput(format!("need J ≤ N, got J = {j}, N = {n}")));
    }
    let psi = phi
        .analytic_conjugate()
        .ok_or_else(|| LabError::InvalidInput("Φ has no exact conjugate".into()))?;
    let (x, y) = build_disjoint_sequence(phi, n as u32, Region::Omega1)?;
    let cells = match variant {
        Variant::L => diagonal_cells(i, j),
        Variant::H => (1..=j).map(|c| (0, c)).collect(),
    };
    let (z, w) = build_disjoint_sequence(&psi, cells.len() as u32, Region::Omega3)?;
    let h = 3f64.sqrt();
    let p = 1.0 / 3.0;
    let w0 = Block { t: h, p, lo: Region::Omega2.start(), hi: Region::Omega2.end() };
    Ok(CounterexampleInstance { phi: phi.clone(), psi, variant, truncation, x, y, w0, z0: w0, z, w, cells })
}

impl CounterexampleInstance {
    pub fn view(&self) -> InstanceView<'_> {
        InstanceView {
            variant: self.variant,
            truncation: self.truncation,
            x_blocks: &self.x,
            y_blocks: &self.y,
            w0: self.w0,
            z0: self.z0,
            w_blocks: &self.w,
            z_blocks: &self.z,
            cells: &self.cells,
        }
    }

    /// Ω₃ block index (0-based) for cell `(i, j)` of variant L, or column `j`
    /// of variant H (`i` ignored).
    pub fn block_of(&self, i: usize, j: usize) -> Option<usize> {
        match self.variant {
            Variant::L => self.cells.iter().position(|&c| c == (i, j)),
            Variant::H => (j >= 1 && j <= self.truncation.j).then(|| j - 1),
        }
    }

    /// `E[W₀Z₀]`: `√3·√3·(1/3)`, which is 1 up to one rounding.
    pub fn w0_pairing(&self) -> f64 {
        self.w0.t * self.z0.t * self.w0.p
    }

    /// `T(1)`: `u(n) = E[Y_n]`, `a = E[Z₀]`, `v = E[Z]`. All positive.
    pub fn t_one(&self) -> TImage {
        TImage {
            u: self.y.blocks.iter().map(|b| b.t * b.p).collect(),
            u_tail: Some(0.0),
            a: self.z0.t * self.z0.p,
            v: self.z.blocks.iter().map(|b| b.t * b.p).collect(),
            variant: self.variant,
        }
    }

    pub fn invariants(&self) -> InstanceInvariants {
        let pairs = |a: &BlockSequence, b: &BlockSequence| -> f64 {
            a.blocks.iter().zip(&b.blocks).map(|(x, y)| (x.t * x.p * y.t - 1.0).abs()).fold(0.0, f64::max)
        };
        let x_mod = series_modular(&self.x, &self.phi, 1.0, self.x.len()).map(|r| r.0).unwrap_or(f64::NAN);
        let z_mod = series_modular(&self.z, &self.psi, 1.0, self.z.len()).map(|r| r.0).unwrap_or(f64::NAN);
        let max_pairing_error = pairs(&self.x, &self.y).max(pairs(&self.w, &self.z)).max((self.w0_pairing() - 1.0).abs());
        let within_regions = [(&self.x, Region::Omega1), (&self.z, Region::Omega3)].iter().all(|(s, r)| {
            s.region == *r && s.total_mass() <= 1.0 / 3.0 && s.blocks.iter().all(|b| b.lo >= r.start() && b.lo < r.end())
        });
        let overlap = self.x.overlap_measure() + self.z.overlap_measure();
        InstanceInvariants {
            max_pairing_error,
            x_series_modular: x_mod,
            z_series_modular: z_mod,
            overlap_measure: overlap,
            within_regions,
            holds: max_pairing_error <= BLOCK_IDENTITY_TOL
                && x_mod <= 1.0 + BLOCK_IDENTITY_TOL
                && z_mod <= 1.0 + BLOCK_IDENTITY_TOL
                && overlap == 0.0
                && within_regions,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceInvariants {
    pub max_pairing_error: f64,
    pub x_series_modular: f64,
    pub z_series_modular: f64,
    pub overlap_measure: f64,
    pub within_regions: bool,
    pub holds: bool,
}

/// `u ⊕ a ⊕ v`; `v` follows the Ω₃ block order of the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TImage {
    pub u: Vec<f64>,
    /// `lim_n u(n)` for closed-form inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_tail: Option<f64>,
    pub a: f64,
    pub v: Vec<f64>,
    pub variant: Variant,
}

impl TImage {
    pub fn zero(inst: &CounterexampleInstance) -> Self {
        TImage {
            u: vec![0.0; inst.truncation.n],
            u_tail: Some(0.0),
            a: 0.0,
            v: vec![0.0; inst.cells.len()],
            variant: inst.variant,
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &TImage) -> TImage {
        TImage {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + c * b).collect(),
            u_tail: match (self.u_tail, other.u_tail) {
                (Some(a), Some(b)) => Some(a + c * b),
                _ => None,
            },
            a: self.a + c * other.a,
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + c * b).collect(),
            variant: self.variant,
        }
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.a >= -tol && self.u.iter().all(|x| *x >= -tol) && self.v.iter().all(|x| *x >= -tol)
    }

    pub fn sup_distance(&self, other: &TImage) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d(&self.u, &other.u).max(d(&self.v, &other.v)).max((self.a - other.a).abs())
    }

    fn check_shape(&self, inst: &CounterexampleInstance) -> Result<()> {
        if self.variant != inst.variant || self.u.len() != inst.truncation.n || self.v.len() != inst.cells.len() {
            return Err(LabError::InvalidInput(format!(
                "image shape (u: {}, v: {}) does not match the truncation (u: {}, v: {})",
                self.u.len(),
                self.v.len(),
                inst.truncation.n,
                inst.cells.len()
            )));
        }
        Ok(())
    }
}

/// A position in closed form: finite coefficients on the blocks plus an
/// optional infinite tail `c·Σ_{n≥r} X_n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockCombination {
    #[serde(default)]
    pub constant: f64,
    /// 1-based `n ≤ N` → coefficient of `X_n`.
    #[serde(default)]
    pub x: BTreeMap<usize, f64>,
    /// `(r, c)` for `c·Σ_{n≥r} X_n`.
    #[serde(default)]
    pub x_tail: Option<(usize, f64)>,
    #[serde(default)]
    pub w0: f64,
    /// 0-based Ω₃ block index → coefficient of `W`.
    #[serde(default)]
    pub w: BTreeMap<usize, f64>,
}

impl BlockCombination {
    pub fn minus_w0() -> Self {
        BlockCombination { w0: -1.0, ..Default::default() }
    }

    pub fn constant(c: f64) -> Self {
        BlockCombination { constant: c, ..Default::default() }
    }

    pub fn shifted(&self, m: f64) -> Self {
        let mut c = self.clone();
        c.constant += m;
        c
    }
}

/// The approximants `X_sr`: variant L is `2^s Σ_{n≥r} X_n − W₀ + 2^{−s} W_sr`,
/// variant H is `2^{−s} Σ_{n≤r} X_n − W₀ + 2^s W_r`.
pub fn x_sr(inst: &CounterexampleInstance, s: usize, r: usize) -> Result<BlockCombination> {
    let Truncation { i, j, n } = inst.truncation;
    if s == 0 || r == 0 || s > i || r > j || r > n {
        return Err(LabError::InvalidInput(format!("(s, r) = ({s}, {r}) lies outside the truncation")));
    }
    let scale = 2f64.powi(s as i32);
    let mut c = BlockCombination::minus_w0();
    match inst.variant {
        Variant::L => {
            c.x_tail = Some((r, scale));
            c.w.insert(inst.block_of(s, r).expect("cell inside the box"), 1.0 / scale);
        }
        Variant::H => {
            for k in 1..=r {
                c.x.insert(k, 1.0 / scale);
            }
            c.w.insert(r - 1, scale);
        }
    }
    Ok(c)
}

/// Closed-form `T`: paired blocks contribute exactly 1, disjoint ones 0.
pub fn t_operator(inst: &CounterexampleInstance, x: &BlockCombination) -> Result<TImage> {
    let n_max = inst.truncation.n;
    let mut img = TImage::zero(inst).axpy(x.constant, &inst.t_one());
    for (&k, &c) in &x.x {
        if k == 0 || k > n_max {
            return Err(LabError::UnsupportedInput(format!("X_{k} lies outside 1..={n_max}")));
        }
        img.u[k - 1] += c;
    }
    if let Some((r, c)) = x.x_tail {
        if r == 0 {
            return Err(LabError::UnsupportedInput("tail must start at r ≥ 1".into()));
        }
        for k in r..=n_max {
            img.u[k - 1] += c;
        }
        img.u_tail = img.u_tail.map(|t| t + c);
    }
    img.a += x.w0;
    for (&m, &c) in &x.w {
        if m >= img.v.len() {
            return Err(LabError::UnsupportedInput(format!("W block {m} lies outside the truncation")));
        }
        img.v[m] += c;
    }
    Ok(img)
}

/// The instance as a finite space: one atom per block, one for Ω₂, and one
/// remainder atom each for Ω₁ and Ω₃.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: Arc<FiniteSpace>,
    pub x: Vec<RandomVariable>,
    pub y: Vec<RandomVariable>,
    pub w0: RandomVariable,
    pub z0: RandomVariable,
    pub w: Vec<RandomVariable>,
    pub z: Vec<RandomVariable>,
    pub one: RandomVariable,
}

impl CounterexampleInstance {
    pub fn discretize(&self) -> Result<Discretization> {
        let nx = self.x.len();
        let nz = self.z.len();
        let mut probs: Vec<f64> = self.x.blocks.iter().map(|b| b.p).collect();
        let mut labels: Vec<String> = (1..=nx).map(|k| format!("A{k}")).collect();
        probs.push(1.0 / 3.0 - self.x.total_mass());
        labels.push("omega1-rest".into());
        probs.push(self.w0.p);
        labels.push("omega2".into());
        probs.extend(self.z.blocks.iter().map(|b| b.p));
        labels.extend(self.cells.iter().map(|(i, j)| format!("B{i},{j}")));
        probs.push(1.0 / 3.0 - self.z.total_mass());
        labels.push("omega3-rest".into());
        let space = FiniteSpace::with_tolerance(probs, labels, 1e-12)?;
        let len = space.len();
        let at = |k: usize, h: f64| -> Result<RandomVariable> {
            let mut v = vec![0.0; len];
            v[k] = h;
            RandomVariable::new(&space, v)
        };
        let o2 = nx + 1;
        let o3 = nx + 2;
        Ok(Discretization {
            x: self.x.blocks.iter().enumerate().map(|(k, b)| at(k, b.t)).collect::<Result<_>>()?,
            y: self.y.blocks.iter().enumerate().map(|(k, b)| at(k, b.t)).collect::<Result<_>>()?,
            w0: at(o2, self.w0.t)?,
            z0: at(o2, self.z0.t)?,
            w: self.w.blocks.iter().enumerate().map(|(k, b)| at(o3 + k, b.t)).collect::<Result<_>>()?,
            z: (0..nz).map(|k| at(o3 + k, self.z.blocks[k].t)).collect::<Result<_>>()?,
            one: RandomVariable::constant(&space, 1.0),
            space,
        })
    }
}

impl Discretization {
    /// `T` by summation on the finite space.
    pub fn t_operator(&self, inst: &CounterexampleInstance, x: &RandomVariable) -> Result<TImage> {
        Ok(TImage {
            u: self.y.iter().map(|y| pairing(x, y)).collect::<Result<_>>()?,
            u_tail: None,
            a: pairing(x, &self.z0)?,
            v: self.z.iter().map(|z| pairing(x, z)).collect::<Result<_>>()?,
            variant: inst.variant,
        })
    }

    /// The combination as a random variable; an infinite tail is cut at `N`,
    /// which leaves `u(1..=N)`, `a` and `v` unchanged.
    pub fn realise(&self, x: &BlockCombination) -> Result<RandomVariable> {
        let mut out = self.one.scale(x.constant);
        let mut add = |rv: &RandomVariable, c: f64| -> Result<()> {
            out = out.add(&rv.scale(c))?;
            Ok(())
        };
        for (&k, &c) in &x.x {
            let rv = self.x.get(k.wrapping_sub(1)).ok_or_else(|| LabError::UnsupportedInput(format!("X_{k}")))?;
            add(rv, c)?;
        }
        if let Some((r, c)) = x.x_tail {
            for rv in self.x.iter().skip(r.saturating_sub(1)) {
                add(rv, c)?;
            }
        }
        add(&self.w0, x.w0)?;
        for (&m, &c) in &x.w {
            let rv = self.w.get(m).ok_or_else(|| LabError::UnsupportedInput(format!("W block {m}")))?;
            add(rv, c)?;
        }
        Ok(out)
    }
}

/// Prefix sums of `row`, extended or cut to length `n`.
pub fn summing(row: &[f64], n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|k| {
            if let Some(v) = row.get(k) {
                acc += v;
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub lambda: f64,
    pub y: Vec<CertEntry>,
    /// `Σ_i 4^i ‖y_i‖₁`, stored for variant H.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finiteness: Option<f64>,
}

impl MembershipCertificate {
    /// The convention for `λ = 0`: a single entry `y(1,1) = 1/2`.
    pub fn canonical(variant: Variant) -> Self {
        let y = vec![CertEntry { i: 1, j: 1, value: 0.5 }];
        let finiteness = (variant == Variant::H).then_some(2.0);
        MembershipCertificate { lambda: 0.0, y, finiteness }
    }

    pub fn dense(&self, i_max: usize, j_max: usize) -> Vec<Vec<f64>> {
        let mut y = vec![vec![0.0; j_max]; i_max];
        for e in &self.y {
            if e.i >= 1 && e.i <= i_max && e.j >= 1 && e.j <= j_max {
                y[e.i - 1][e.j - 1] += e.value;
            }
        }
        y
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.y.iter().filter(|e| e.i == i && e.j == j).map(|e| e.value).sum()
    }

    fn from_dense(lambda: f64, y: &[Vec<f64>], variant: Variant) -> Self {
        let mut entries = Vec::new();
        let mut fin = 0.0;
        for (i, row) in y.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    entries.push(CertEntry { i: i + 1, j: j + 1, value: v });
                    fin += 4f64.powi(i as i32 + 1) * v;
                }
            }
        }
        MembershipCertificate { lambda, y: entries, finiteness: (variant == Variant::H).then_some(fin) }
    }
}

/// Re-checks `(λ, y)` against an image. Returns the first failed condition.
pub fn verify_certificate(inst: &CounterexampleInstance, img: &TImage, cert: &MembershipCertificate) -> std::result::Result<(), String> {
    let Truncation { i: i_max, j: j_max, n: n_max } = inst.truncation;
    if img.check_shape(inst).is_err() {
        return Err("image shape does not match the instance".into());
    }
    let lambda = cert.lambda;
    if !(lambda >= 0.0) {
        return Err(format!("λ = {lambda} is negative"));
    }
    for e in &cert.y {
        if !(e.value >= 0.0) || e.i == 0 || e.j == 0 || e.i > i_max || e.j > j_max {
            return Err(format!("entry y({}, {}) = {} is invalid for the truncation", e.i, e.j, e.value));
        }
    }
    let y = cert.dense(i_max, j_max);
    let norm: f64 = y.iter().enumerate().map(|(i, r)| 2f64.powi(i as i32 + 1) * r.iter().sum::<f64>()).sum();
    if (norm - 1.0).abs() > MEMBERSHIP_TOL {
        return Err(format!("Σ_i 2^i‖y_i‖₁ = {norm}, not 1"));
    }
    // Slack matches the LP's feasibility tolerance, which is relative to
    // row coefficients as large as 4^I.
    let sup = img.u.iter().chain(&img.v).fold(img.a.abs(), |m, x| m.max(x.abs()));
    let rows = 4f64.powi(i_max as i32);
    let scale = |x: f64| MEMBERSHIP_TOL * rows * (1.0 + sup + x.abs());
    if img.a < -lambda - scale(lambda) {
        return Err(format!("a = {} < −λ = {}", img.a, -lambda));
    }
    match inst.variant {
        Variant::L => {
            for (m, &(i, j)) in inst.cells.iter().enumerate() {
                let need = lambda * y[i - 1][j - 1];
                if img.v[m] < need - scale(need) {
                    return Err(format!("v({i},{j}) = {} < λy = {need}", img.v[m]));
                }
            }
            let mut need = vec![0.0; n_max];
            for (i, row) in y.iter().enumerate() {
                let s = summing(row, n_max);
                for (k, v) in s.iter().enumerate() {
                    need[k] += 4f64.powi(i as i32 + 1) * v;
                }
            }
            for (k, nd) in need.iter().enumerate() {
                let nd = lambda * nd;
                if img.u[k] < nd - scale(nd) {
                    return Err(format!("u({}) = {} < {nd}", k + 1, img.u[k]));
                }
            }
        }
        Variant::H => {
            for j in 0..j_max {
                let need = lambda * (0..i_max).map(|i| 4f64.powi(i as i32 + 1) * y[i][j]).sum::<f64>();
                if img.v[j] < need - scale(need) {
                    return Err(format!("v({}) = {} < {need}", j + 1, img.v[j]));
                }
            }
            for k in 0..n_max {
                let need = lambda * (0..i_max).map(|i| y[i][k.min(j_max)..].iter().sum::<f64>()).sum::<f64>();
                if img.u[k] < need - scale(need) {
                    return Err(format!("u({}) = {} < {need}", k + 1, img.u[k]));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Membership {
    Member { certificate: MembershipCertificate },
    NotMember { farkas: FarkasCertificate, verified: bool, constraints: Vec<String> },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }
}

/// Variable layout: `[m?] λ z(1,1) … z(I,J)` (row-major in `(i, j)`).
struct Layout {
    with_m: bool,
    i_max: usize,
    j_max: usize,
}

impl Layout {
    fn lambda(&self) -> usize {
        usize::from(self.with_m)
    }
    fn z(&self, i: usize, j: usize) -> usize {
        self.lambda() + 1 + (i - 1) * self.j_max + (j - 1)
    }
    fn count(&self) -> usize {
        self.lambda() + 1 + self.i_max * self.j_max
    }
}

/// Rows of the linearised membership system for `img + m·shift`. With
/// `shift = None`, `m` is absent.
fn membership_lp(inst: &CounterexampleInstance, img: &TImage, shift: Option<&TImage>) -> (LinearProgram, Layout, Vec<String>) {
    let Truncation { i: i_max, j: j_max, n: n_max } = inst.truncation;
    let lay = Layout { with_m: shift.is_some(), i_max, j_max };
    let mut lp = LinearProgram::new(lay.count());
    let mut names = Vec::new();
    let lam = lay.lambda();
    // Σ_i 2^i Σ_j z(i,j) − λ = 0
    let mut terms = vec![(lam, -1.0)];
    for i in 1..=i_max {
        for j in 1..=j_max {
            terms.push((lay.z(i, j), 2f64.powi(i as i32)));
        }
    }
    lp.add_sparse(&terms, Sense::Eq, 0.0);
    names.push("normalisation".to_string());
    // λ + m·a₁ ≥ −a₀
    let mut terms = vec![(lam, 1.0)];
    if let Some(t1) = shift {
        terms.push((0, t1.a));
    }
    lp.add_sparse(&terms, Sense::Ge, -img.a);
    names.push("a".to_string());
    let with_shift = |mut terms: Vec<(usize, f64)>, coef: Option<f64>| {
        if let Some(c) = coef {
            terms.push((0, -c));
        }
        terms
    };
    match inst.variant {
        Variant::L => {
            for (m, &(i, j)) in inst.cells.iter().enumerate() {
                let terms = with_shift(vec![(lay.z(i, j), 1.0)], shift.map(|t| t.v[m]));
                lp.add_sparse(&terms, Sense::Le, img.v[m]);
                names.push(format!("v({i},{j})"));
            }
            for n in 1..=n_max {
                let mut terms = Vec::new();
                for i in 1..=i_max {
                    for j in 1..=j_max.min(n) {
                        terms.push((lay.z(i, j), 4f64.powi(i as i32)));
                    }
                }
                let terms = with_shift(terms, shift.map(|t| t.u[n - 1]));
                lp.add_sparse(&terms, Sense::Le, img.u[n - 1]);
                names.push(format!("u({n})"));
            }
        }
        Variant::H => {
            for j in 1..=j_max {
                let terms: Vec<_> = (1..=i_max).map(|i| (lay.z(i, j), 4f64.powi(i as i32))).collect();
                let terms = with_shift(terms, shift.map(|t| t.v[j - 1]));
                lp.add_sparse(&terms, Sense::Le, img.v[j - 1]);
                names.push(format!("v({j})"));
            }
            for n in 1..=n_max {
                let mut terms = Vec::new();
                for i in 1..=i_max {
                    for j in n..=j_max {
                        terms.push((lay.z(i, j), 1.0));
                    }
                }
                let terms = with_shift(terms, shift.map(|t| t.u[n - 1]));
                lp.add_sparse(&terms, Sense::Le, img.u[n - 1]);
                names.push(format!("u({n})"));
            }
        }
    }
    if shift.is_some() {
        lp.free[0] = true;
    }
    (lp, lay, names)
}

fn certificate_from(lay: &Layout, x: &[f64], variant: Variant) -> MembershipCertificate {
    let lambda = x[lay.lambda()];
    if lambda <= MEMBERSHIP_TOL {
        return MembershipCertificate::canonical(variant);
    }
    let mut y = vec![vec![0.0; lay.j_max]; lay.i_max];
    let mut norm = 0.0;
    for i in 1..=lay.i_max {
        for j in 1..=lay.j_max {
            let v = (x[lay.z(i, j)] / lambda).max(0.0);
            y[i - 1][j - 1] = v;
            norm += 2f64.powi(i as i32) * v;
        }
    }
    // Renormalise away LP round-off.
    for row in y.iter_mut() {
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    MembershipCertificate::from_dense(lambda, &y, variant)
}

/// Decides `X ∈ C` from `T X`, maximising `λ` among certificates.
pub fn membership(inst: &CounterexampleInstance, img: &TImage) -> Result<Membership> {
    img.check_shape(inst)?;
    let (mut lp, lay, names) = membership_lp(inst, img, None);
    lp.objective[lay.lambda()] = 1.0;
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            let cert = certificate_from(&lay, &sol.x, inst.variant);
            verify_certificate(inst, img, &cert).map_err(LabError::CertificateVerification)?;
            Ok(Membership::Member { certificate: cert })
        }
        LpOutcome::Infeasible(farkas) => {
            let verified = farkas.verify(&lp);
            Ok(Membership::NotMember { farkas, verified, constraints: names })
        }
        LpOutcome::Unbounded => Err(LabError::NumericFailure("membership LP unbounded".into())),
    }
}

/// `ρ_C(X) = inf{m : X + m·1 ∈ C}`.
///
/// The joint LP in `(m, λ, z)` carries `T(1)` in the `m` column, whose
/// entries span many orders of magnitude, so its optimum is audited with
/// the membership LP at `m ± δ`. If the audit fails the value comes from
/// bisection on membership alone, down to `1e-12` relative.
pub fn rho_c_image(inst: &CounterexampleInstance, img: &TImage) -> Result<f64> {
    img.check_shape(inst)?;
    let one = inst.t_one();
    let member = |m: f64| -> Result<bool> { Ok(membership(inst, &img.axpy(m, &one))?.is_member()) };
    let (mut lp, _, _) = membership_lp(inst, img, Some(&one));
    lp.objective[0] = -1.0;
    let mut value = None;
    if let Ok(LpOutcome::Optimal(sol)) = lp.solve() {
        let m = sol.x[0];
        let delta = MEMBERSHIP_TOL * (1.0 + m.abs());
        if member(m + delta)? && !member(m - delta)? {
            value = Some(m);
        }
    }
    let m = match value {
        Some(m) => m,
        None => {
            let (lo, hi) = shift_bracket(&member)?;
            bisect_membership(&member, lo, hi, 1e-12)?
        }
    };
    // The λ = 0 branch has the closed form max_k(−c₀/c₁); snap to it when
    // the solver lands there.
    let m0 = lambda_zero_threshold(img, &one);
    Ok(if (m - m0).abs() <= RHO_BISECT_TOL * (1.0 + m0.abs()) { m0 } else { m })
}

/// Least `m` with `img + m·T(1) ≥ 0` componentwise.
fn lambda_zero_threshold(img: &TImage, one: &TImage) -> f64 {
    let comps = img.u.iter().zip(&one.u).chain(img.v.iter().zip(&one.v)).chain(std::iter::once((&img.a, &one.a)));
    comps.map(|(c0, c1)| -c0 / c1).fold(f64::NEG_INFINITY, f64::max)
}

/// `(lo, hi)` with `X + lo ∉ C` and `X + hi ∈ C`.
fn shift_bracket(member: &dyn Fn(f64) -> Result<bool>) -> Result<(f64, f64)> {
    let mut hi = 1.0;
    let mut steps = 0;
    while !member(hi)? {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(LabError::BracketInvalid("no accepted shift below 2^200".into()));
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { -1.0 };
    steps = 0;
    while member(lo)? {
        lo = if lo > 0.0 { -1.0 } else { lo * 2.0 };
        steps += 1;
        if steps > 200 {
            return Err(LabError::BracketInvalid("no rejected shift above −2^200".into()));
        }
    }
    Ok((lo, hi))
}

fn bisect_membership(member: &dyn Fn(f64) -> Result<bool>, lo: f64, hi: f64, rel: f64) -> Result<f64> {
    let mut failure = None;
    let (_, b) = bisect_predicate(lo, hi, rel, rel, |m| match member(m) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            true
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(b),
    }
}

pub fn rho_c(inst: &CounterexampleInstance, x: &BlockCombination) -> Result<f64> {
    rho_c_image(inst, &t_operator(inst, x)?)
}

/// Bisection on `m` with the membership LP as predicate, to
/// [`RHO_BISECT_TOL`]; the cross-check for [`rho_c_image`].
pub fn rho_c_bisect(inst: &CounterexampleInstance, img: &TImage) -> Result<f64> {
    img.check_shape(inst)?;
    let one = inst.t_one();
    let member = |m: f64| -> Result<bool> { Ok(membership(inst, &img.axpy(m, &one))?.is_member()) };
    let (lo, hi) = shift_bracket(&member)?;
    bisect_membership(&member, lo, hi, RHO_BISECT_TOL / 4.0)
}

/// `ρ_C` on the discretised instance, for the axiom and Fatou harnesses.
pub struct RhoC<'a> {
    pub instance: &'a CounterexampleInstance,
    pub disc: &'a Discretization,
}

impl RiskMeasure for RhoC<'_> {
    fn eval(&self, x: &RandomVariable) -> Result<ExtReal> {
        let img = self.disc.t_operator(self.instance, x)?;
        rho_c_image(self.instance, &img).map(ExtReal::Finite)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Acceptance
    }

    fn precision(&self) -> f64 {
        RHO_BISECT_TOL
    }

    fn label(&self) -> String {
        let t = self.instance.truncation;
        format!("rho_c[{:?}; I={}, J={}, N={}]", self.instance.variant, t.i, t.j, t.n)
    }
}

/// A Ψ-side combination: constant, `Y_n`, `Z₀` and Ω₃ `Z` blocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DualCombination {
    #[serde(default)]
    pub constant: f64,
    /// 1-based `n ≤ N` → coefficient of `Y_n`.
    #[serde(default)]
    pub y: BTreeMap<usize, f64>,
    #[serde(default)]
    pub z0: f64,
    /// 0-based Ω₃ block index → coefficient of `Z`.
    #[serde(default)]
    pub z: BTreeMap<usize, f64>,
}

impl DualCombination {
    /// Values on each region piece: `A_n` for `n ≤ N`, the rest of Ω₁
    /// (including the untruncated tail blocks), Ω₂, each Ω₃ block, and the
    /// rest of Ω₃.
    fn pieces(&self, inst: &CounterexampleInstance) -> Result<DualPieces> {
        let n = inst.truncation.n;
        if let Some(k) = self.y.keys().find(|&&k| k == 0 || k > n) {
            return Err(LabError::UnsupportedInput(format!("Y_{k} lies outside 1..={n}")));
        }
        if let Some(m) = self.z.keys().find(|&&m| m >= inst.z.len()) {
            return Err(LabError::UnsupportedInput(format!("Z block {m} lies outside the truncation")));
        }
        Ok(DualPieces {
            a: (1..=n).map(|k| self.constant + self.y.get(&k).copied().unwrap_or(0.0) * inst.y.blocks[k - 1].t).collect(),
            omega1_rest: self.constant,
            omega2: self.constant + self.z0 * inst.z0.t,
            b: (0..inst.z.len()).map(|m| self.constant + self.z.get(&m).copied().unwrap_or(0.0) * inst.z.blocks[m].t).collect(),
            omega3_rest: self.constant,
        })
    }
}

/// Default probes for the exhibit: `Z₀`, `Y₁ + Y₂ + Y₃` and
/// `0.05·Σ_m Z_m` over the truncated Ω₃ blocks.
pub fn standard_targets(inst: &CounterexampleInstance) -> Vec<DualCombination> {
    let n = inst.truncation.n;
    vec![
        DualCombination { z0: 1.0, ..Default::default() },
        DualCombination { y: (1..=n.min(3)).map(|k| (k, 1.0)).collect(), ..Default::default() },
        DualCombination { z: (0..inst.z.len()).map(|m| (m, 0.05)).collect(), ..Default::default() },
    ]
}

#[derive(Debug, Clone)]
struct DualPieces {
    a: Vec<f64>,
    omega1_rest: f64,
    omega2: f64,
    b: Vec<f64>,
    omega3_rest: f64,
}

impl DualPieces {
    fn abs(&self) -> Self {
        DualPieces {
            a: self.a.iter().map(|v| v.abs()).collect(),
            omega1_rest: self.omega1_rest.abs(),
            omega2: self.omega2.abs(),
            b: self.b.iter().map(|v| v.abs()).collect(),
            omega3_rest: self.omega3_rest.abs(),
        }
    }

    fn add_scaled(&mut self, c: f64, o: &DualPieces) {
        for (a, b) in self.a.iter_mut().zip(&o.a) {
            *a += c * b;
        }
        self.omega1_rest += c * o.omega1_rest;
        self.omega2 += c * o.omega2;
        for (a, b) in self.b.iter_mut().zip(&o.b) {
            *a += c * b;
        }
        self.omega3_rest += c * o.omega3_rest;
    }
}

/// `E[(X + W₀)V]` for `X + W₀ = αΣ_{n∈S} X_n (+ tail) + βW_m`, returned
/// as `(value, tail_bound)` where the true value lies within `tail_bound`.
fn approximant_pairing(inst: &CounterexampleInstance, x: &BlockCombination, v: &DualPieces) -> (f64, f64) {
    let n = inst.truncation.n;
    let mut value = 0.0;
    let mut tail = 0.0;
    let mut coef = vec![0.0; n];
    for (&k, &c) in &x.x {
        coef[k - 1] += c;
    }
    if let Some((r, c)) = x.x_tail {
        for k in r..=n {
            coef[k - 1] += c;
        }
        // Σ_{k>N} t_k p_k ≤ (t_N/Φ(t_N))·2^{−N}: t/Φ(t) falls with t and
        // the witnesses increase with k.
        let last = inst.x.blocks[n - 1];
        tail += (c * v.omega1_rest).abs() * last.t / inst.phi.eval(last.t) * 0.5f64.powi(n as i32);
    }
    for (k, c) in coef.iter().enumerate() {
        let b = inst.x.blocks[k];
        value += c * b.t * b.p * v.a[k];
    }
    for (&m, &c) in &x.w {
        let b = inst.w.blocks[m];
        value += c * b.t * b.p * v.b[m];
    }
    (value, tail)
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetRow {
    pub target: usize,
    /// `E[(X_sr + W₀)V_t]` over the truncated blocks.
    pub pairing: f64,
    /// Bound on the untruncated tail's contribution.
    pub tail_bound: f64,
    pub below_epsilon: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub s: usize,
    pub r: usize,
    pub member: BlockCombination,
    pub certificate: MembershipCertificate,
    /// `max E[W V]` over the box, against `2^{s−1}` (variant L).
    pub w_bound: f64,
    /// `Σ_{n≥r} E[X_n V]` with its tail bound included, against `2^{−(s+1)}`.
    pub x_tail_bound: f64,
    pub table: Vec<TargetRow>,
}

/// Picks `(s, r)` so that `X_sr` is within `ε` of `−W₀` against every
/// target, and certifies `X_sr ∈ C`.
pub fn weak_approx_select(inst: &CounterexampleInstance, targets: &[DualCombination], eps: f64) -> Result<Selection> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    if targets.is_empty() {
        return Err(LabError::InvalidInput("need at least one target".into()));
    }
    let pieces: Vec<DualPieces> = targets.iter().map(|t| t.pieces(inst)).collect::<Result<_>>()?;
    // V = (1/ε) Σ_t |V_t|, piecewise.
    let mut v = pieces[0].abs();
    v.add_scaled(-1.0, &pieces[0].abs());
    for p in &pieces {
        v.add_scaled(1.0 / eps, &p.abs());
    }
    let Truncation { i: i_max, j: j_max, n: n_max } = inst.truncation;
    // E[W_m V] = V|_{B_m}/s_m, E[X_n V] = t_n p_n V|_{A_n}.
    let ew: Vec<f64> = (0..inst.z.len()).map(|m| v.b[m] / inst.z.blocks[m].t).collect();
    let ex: Vec<f64> = (0..n_max).map(|k| inst.x.blocks[k].t * inst.x.blocks[k].p * v.a[k]).collect();
    let last = inst.x.blocks[n_max - 1];
    let beyond = v.omega1_rest * last.t / inst.phi.eval(last.t) * 0.5f64.powi(n_max as i32);

    let (s, r, w_bound, x_tail_bound) = match inst.variant {
        Variant::L => {
            let w_max = ew.iter().copied().fold(0.0, f64::max);
            let s = (1..=i_max)
                .find(|&s| w_max < 2f64.powi(s as i32 - 1))
                .ok_or_else(|| LabError::TruncationTooSmall(format!("max E[W V] = {w_max:.4e} needs s > I = {i_max}")))?;
            let tail_from = |r: usize| ex[r - 1..].iter().sum::<f64>() + beyond;
            let bound = 0.5f64.powi(s as i32 + 1);
            let r = (1..=j_max.min(n_max)).find(|&r| tail_from(r) < bound).ok_or_else(|| {
                LabError::TruncationTooSmall(format!(
                    "X-tail pairing {:.4e} stays above 2^-(s+1) = {bound:.4e} for r ≤ {}",
                    tail_from(j_max.min(n_max)),
                    j_max.min(n_max)
                ))
            })?;
            (s, r, w_max, tail_from(r))
        }
        Variant::H => {
            // 2^{−s} Σ_{n≤N} E[X_n V] < 1/2, then 2^s E[W_r V] < 1/2.
            let head: f64 = ex.iter().sum::<f64>() + beyond;
            let s = (1..=i_max)
                .find(|&s| head * 0.5f64.powi(s as i32) < 0.5)
                .ok_or_else(|| LabError::TruncationTooSmall(format!("Σ E[X_n V] = {head:.4e} needs s > I = {i_max}")))?;
            let scale = 2f64.powi(s as i32);
            let r = (1..=j_max.min(n_max)).find(|&r| scale * ew[r - 1] < 0.5).ok_or_else(|| {
                LabError::TruncationTooSmall(format!("2^s E[W_r V] stays above 1/2 for r ≤ {}", j_max.min(n_max)))
            })?;
            (s, r, scale * ew[r - 1], head)
        }
    };
    let member = x_sr(inst, s, r)?;
    let mut plus_w0 = member.clone();
    plus_w0.w0 = 0.0;
    let table = pieces
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let (value, tail) = approximant_pairing(inst, &plus_w0, p);
            TargetRow { target: t, pairing: value, tail_bound: tail, below_epsilon: value.abs() + tail < eps }
        })
        .collect();
    let certificate = match membership(inst, &t_operator(inst, &member)?)? {
        Membership::Member { certificate } => certificate,
        Membership::NotMember { .. } => {
            return Err(LabError::CertificateVerification(format!("X_sr with (s, r) = ({s}, {r}) was rejected")))
        }
    };
    Ok(Selection { s, r, member, certificate, w_bound, x_tail_bound, table })
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub certificate: MembershipCertificate,
    pub bound_m: f64,
    pub lambda_estimate: f64,
    pub spread: f64,
    pub snap_distance: f64,
    pub canonical: bool,
}

/// Extracts a certificate for the limit of certified members: bounded
/// `λ_p`, a limit point of `(λ_p, λ_p y_p)` read off the tail of the
/// sequence, and a projection onto the limit's certificate polytope.
pub fn limit_certificate(
    inst: &CounterexampleInstance,
    members: &[(TImage, MembershipCertificate)],
    limit: &TImage,
) -> Result<LimitReport> {
    if members.is_empty() {
        return Err(LabError::EmptySequence);
    }
    limit.check_shape(inst)?;
    let Truncation { i: i_max, j: j_max, .. } = inst.truncation;
    let mut bound_m: f64 = 0.0;
    for (p, (img, cert)) in members.iter().enumerate() {
        verify_certificate(inst, img, cert)
            .map_err(|e| LabError::CertificateVerification(format!("member {p}: {e}")))?;
        let m = match inst.variant {
            Variant::L => img.u.iter().copied().fold(0.0, f64::max),
            Variant::H => img.v.iter().map(|v| v.abs()).sum(),
        };
        bound_m = bound_m.max(m);
    }
    for (p, (_, cert)) in members.iter().enumerate() {
        let weighted: f64 = cert.y.iter().map(|e| 4f64.powi(e.i as i32) * e.value).sum();
        if cert.lambda * weighted > bound_m * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL {
            return Err(LabError::CertificateVerification(format!(
                "member {p}: λΣ4^i‖y_i‖₁ = {} exceeds the uniform bound {bound_m}",
                cert.lambda * weighted
            )));
        }
    }
    let deviations: Vec<f64> = members.iter().map(|(img, _)| img.sup_distance(limit)).collect();
    let first_half = deviations[..deviations.len().div_ceil(2)].iter().copied().fold(0.0, f64::max);
    let last = *deviations.last().expect("nonempty");
    if last > MEMBERSHIP_TOL * (1.0 + bound_m) && last > 0.5 * first_half {
        return Err(LabError::NonConvergentInput(format!(
            "images do not approach the limit: last deviation {last:.3e}, early maximum {first_half:.3e}"
        )));
    }
    // Points (λ_p, λ_p y_p) and their spread over the second half.
    let point = |cert: &MembershipCertificate| -> Vec<f64> {
        let y = cert.dense(i_max, j_max);
        let mut v = vec![cert.lambda];
        v.extend(y.iter().flat_map(|r| r.iter().map(|x| cert.lambda * x)));
        v
    };
    let pts: Vec<Vec<f64>> = members.iter().map(|(_, c)| point(c)).collect();
    let half = &pts[pts.len() / 2..];
    let spread = half
        .iter()
        .flat_map(|a| half.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()))
        .fold(0.0, f64::max);
    let est = pts.last().expect("nonempty").clone();
    let lambda_estimate = est[0];
    if lambda_estimate <= spread + MEMBERSHIP_TOL && limit.is_nonnegative(MEMBERSHIP_TOL) {
        let cert = MembershipCertificate::canonical(inst.variant);
        verify_certificate(inst, limit, &cert).map_err(LabError::CertificateVerification)?;
        return Ok(LimitReport { certificate: cert, bound_m, lambda_estimate, spread, snap_distance: 0.0, canonical: true });
    }
    // Nearest feasible (λ, z) for the limit image in L1.
    let (base, lay, _) = membership_lp(inst, limit, None);
    let k = lay.count();
    let mut lp = LinearProgram::new(2 * k);
    for c in &base.constraints {
        let mut coeffs = c.coeffs.clone();
        coeffs.extend(std::iter::repeat(0.0).take(k));
        lp.add(coeffs, c.sense, c.rhs);
    }
    for (idx, e) in est.iter().enumerate() {
        // d_idx ≥ |x_idx − e|
        lp.add_sparse(&[(idx, 1.0), (k + idx, -1.0)], Sense::Le, *e);
        lp.add_sparse(&[(idx, -1.0), (k + idx, -1.0)], Sense::Le, -e);
    }
    // Keep λ away from the degenerate branch decided above.
    lp.add_sparse(&[(lay.lambda(), 1.0)], Sense::Ge, 0.5 * lambda_estimate);
    for idx in 0..k {
        lp.objective[k + idx] = -1.0;
    }
    let sol = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        _ => {
            return Err(LabError::CertificateVerification(
                "the limit image admits no certificate near the sequence's limit point".into(),
            ))
        }
    };
    let snap_distance = -sol.value;
    if snap_distance > 4.0 * spread + MEMBERSHIP_TOL * (1.0 + bound_m) {
        return Err(LabError::NonConvergentInput(format!(
            "nearest limit certificate is {snap_distance:.3e} away, spread {spread:.3e}"
        )));
    }
    let cert = certificate_from(&lay, &sol.x[..k], inst.variant);
    verify_certificate(inst, limit, &cert).map_err(LabError::CertificateVerification)?;
    Ok(LimitReport { certificate: cert, bound_m, lambda_estimate, spread, snap_distance, canonical: false })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub truncation: Truncation,
    pub rho_minus_w0: f64,
    pub minus_w0_member: bool,
    pub s: usize,
    pub r: usize,
    pub rho_xsr: f64,
    pub max_pairing: f64,
}

/// Gap exhibit report.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub variant: Variant,
    pub epsilon: f64,
    pub truncation: Vec<Truncation>,
    pub rho_minus_w0: Vec<f64>,
    /// `min_t ρ_C(−W₀)` along the schedule.
    pub delta: f64,
    pub approximants: Vec<GapRow>,
    pub holds: bool,
}

/// For each truncation: `ρ_C(−W₀) > 0` while selected members `X_sr` have
/// `ρ_C(X_sr) ≤ 0` and pair within `ε` of `−W₀` with every target.
pub fn gap_exhibit(
    phi: &OrliczFunction,
    schedule: &[Truncation],
    variant: Variant,
    targets: &[DualCombination],
    eps: f64,
) -> Result<GapReport> {
    let mut rows = Vec::new();
    for &t in schedule {
        let inst = build_instance(phi, t, variant)?;
        let minus = t_operator(&inst, &BlockCombination::minus_w0())?;
        let rho_minus_w0 = rho_c_image(&inst, &minus)?;
        let sel = weak_approx_select(&inst, targets, eps)?;
        let rho_xsr = rho_c(&inst, &sel.member)?;
        let max_pairing = sel.table.iter().map(|r| r.pairing.abs() + r.tail_bound).fold(0.0, f64::max);
        rows.push(GapRow {
            truncation: t,
            rho_minus_w0,
            minus_w0_member: membership(&inst, &minus)?.is_member(),
            s: sel.s,
            r: sel.r,
            rho_xsr,
            max_pairing,
        });
    }
    let delta = rows.iter().map(|r| r.rho_minus_w0).fold(f64::INFINITY, f64::min);
    let holds = delta > 0.0
        && rows.iter().all(|r| !r.minus_w0_member && r.rho_xsr <= MEMBERSHIP_TOL && r.max_pairing < eps);
    Ok(GapReport {
        variant,
        epsilon: eps,
        truncation: schedule.to_vec(),
        rho_minus_w0: rows.iter().map(|r| r.rho_minus_w0).collect(),
        delta,
        approximants: rows,
        holds,
    })
}
