//! Small dense linear programs: two-phase simplex with Bland's rule.
//!
//! Infeasible problems come back with Farkas multipliers read off the
//! phase-one duals, so infeasibility can be audited without trusting the
//! solver.

use serde::Serialize;

use crate::error::{LabError, Result};

pub const LP_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize objective·x` subject to the rows, `x_j ≥ 0` unless free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub free: Vec<bool>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Multipliers `w` with `wᵀA ≥ 0` on sign-constrained columns, `wᵀA = 0` on
/// free columns, `w ≥ 0` on `≤` rows, `w ≤ 0` on `≥` rows, and `wᵀb < 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
    /// `wᵀA`, one entry per variable.
    pub combined: Vec<f64>,
    /// `wᵀb`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, free: vec![false; n_vars], objective: vec![0.0; n_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.n_vars);
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Adds a row given as sparse `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut coeffs = vec![0.0; self.n_vars];
        for &(j, c) in terms {
            coeffs[j] += c;
        }
        self.add(coeffs, sense, rhs);
    }

    /// Largest violation of the rows and sign constraints at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            if !self.free[j] {
                worst = worst.max(-v);
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let gap = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Solves a power-of-two equilibrated copy and maps the answer back.
    pub fn solve(&self) -> Result<LpOutcome> {
        let (scaled, row_scale, col_scale) = self.equilibrated();
        Ok(match Simplex::build(&scaled).run(&scaled)? {
            LpOutcome::Optimal(s) => {
                let x: Vec<f64> = s.x.iter().zip(&col_scale).map(|(v, c)| v * c).collect();
                let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                LpOutcome::Optimal(LpSolution { x, value })
            }
            LpOutcome::Infeasible(f) => {
                let w: Vec<f64> = f.multipliers.iter().zip(&row_scale).map(|(w, r)| w * r).collect();
                LpOutcome::Infeasible(FarkasCertificate::from_multipliers(self, w))
            }
            LpOutcome::Unbounded => LpOutcome::Unbounded,
        })
    }

    /// Geometric row and column scaling by powers of two, so that rows
    /// whose coefficients span many orders of magnitude stay usable under
    /// the absolute pivot tolerance.
    fn equilibrated(&self) -> (LinearProgram, Vec<f64>, Vec<f64>) {
        let mut lp = self.clone();
        let m = lp.constraints.len();
        let mut rows = vec![1.0; m];
        let mut cols = vec![1.0; lp.n_vars];
        let pow2 = |v: f64| 2f64.powi(v.log2().round() as i32);
        let spread = |it: &mut dyn Iterator<Item = f64>| -> Option<f64> {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for a in it {
                let a = a.abs();
                if a > 0.0 {
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
            }
            (hi > 0.0).then(|| pow2(1.0 / (lo * hi).sqrt()))
        };
        for _ in 0..6 {
            for (i, c) in lp.constraints.iter_mut().enumerate() {
                if let Some(f) = spread(&mut c.coeffs.iter().copied()) {
                    c.coeffs.iter_mut().for_each(|a| *a *= f);
                    c.rhs *= f;
                    rows[i] *= f;
                }
            }
            for j in 0..lp.n_vars {
                if let Some(f) = spread(&mut lp.constraints.iter().map(|c| c.coeffs[j])) {
                    lp.constraints.iter_mut().for_each(|c| c.coeffs[j] *= f);
                    lp.objective[j] *= f;
                    cols[j] *= f;
                }
            }
        }
        (lp, rows, cols)
    }
}

impl FarkasCertificate {
    fn from_multipliers(lp: &LinearProgram, multipliers: Vec<f64>) -> Self {
        let mut combined = vec![0.0; lp.n_vars];
        let mut rhs = 0.0;
        for (wi, c) in multipliers.iter().zip(&lp.constraints) {
            rhs += wi * c.rhs;
            for (acc, a) in combined.iter_mut().zip(&c.coeffs) {
                *acc += wi * a;
            }
        }
        FarkasCertificate { multipliers, combined, rhs }
    }

    /// Recomputes `wᵀA` and `wᵀb` from the program and checks every sign
    /// condition, scaled by the size of the multipliers.
    pub fn verify(&self, lp: &LinearProgram) -> bool {
        if self.multipliers.len() != lp.constraints.len() {
            return false;
        }
        let scale = self.multipliers.iter().fold(0.0, |m: f64, w| m.max(w.abs()));
        if scale == 0.0 {
            return false;
        }
        let tol = LP_TOL * scale;
        for (w, c) in self.multipliers.iter().zip(&lp.constraints) {
            let ok = match c.sense {
                Sense::Le => *w >= -tol,
                Sense::Ge => *w <= tol,
                Sense::Eq => true,
            };
            if !ok {
                return false;
            }
        }
        let mut rhs = 0.0;
        let mut combined = vec![0.0; lp.n_vars];
        for (w, c) in self.multipliers.iter().zip(&lp.constraints) {
            rhs += w * c.rhs;
            for (acc, a) in combined.iter_mut().zip(&c.coeffs) {
                *acc += w * a;
            }
        }
        let col_scale = lp
            .constraints
            .iter()
            .flat_map(|c| c.coeffs.iter())
            .fold(1.0, |m: f64, a| m.max(a.abs()));
        let ctol = tol * col_scale;
        let cols_ok = combined.iter().zip(&lp.free).all(|(v, free)| if *free { v.abs() <= ctol } else { *v >= -ctol });
        cols_ok && rhs < -tol
    }
}

/// Tableau over the standard form `A x = b, x ≥ 0, b ≥ 0`, with one
/// artificial per row kept to the end so that its columns hold `B⁻¹`.
struct Simplex {
    m: usize,
    /// Structural columns (free variables split in two, plus slacks).
    n: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Structural column → (original variable, sign).
    col_map: Vec<Option<(usize, f64)>>,
    /// +1 or −1: whether row `i` was negated to make `b_i ≥ 0`.
    row_sign: Vec<f64>,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.constraints.len();
        let mut col_map = Vec::new();
        for j in 0..lp.n_vars {
            col_map.push(Some((j, 1.0)));
            if lp.free[j] {
                col_map.push(Some((j, -1.0)));
            }
        }
        let n_struct = col_map.len();
        let n_slack = lp.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
        let n = n_struct + n_slack;
        let mut rows = vec![vec![0.0; n + m]; m];
        let mut rhs = vec![0.0; m];
        let mut row_sign = vec![1.0; m];
        let mut slack = n_struct;
        let mut basis: Vec<usize> = (n..n + m).collect();
        for (i, c) in lp.constraints.iter().enumerate() {
            for (k, cm) in col_map.iter().enumerate() {
                let (j, s) = cm.expect("structural column");
                rows[i][k] = s * c.coeffs[j];
            }
            match c.sense {
                Sense::Le => {
                    rows[i][slack] = 1.0;
                    slack += 1;
                }
                Sense::Ge => {
                    rows[i][slack] = -1.0;
                    slack += 1;
                }
                Sense::Eq => {}
            }
            rhs[i] = c.rhs;
            if rhs[i] < 0.0 {
                row_sign[i] = -1.0;
                rhs[i] = -rhs[i];
                for v in rows[i][..n].iter_mut() {
                    *v = -*v;
                }
            }
            rows[i][n + i] = 1.0;
            // A slack with coefficient +1 starts basic; artificials are kept
            // only as the running record of B⁻¹.
            if c.sense != Sense::Eq && rows[i][slack - 1] == 1.0 {
                basis[i] = slack - 1;
            }
        }
        col_map.extend(std::iter::repeat(None).take(n_slack));
        Self { m, n, rows, rhs, basis, col_map, row_sign }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        self.rhs[r] /= piv;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                self.rhs[i] -= f * prhs;
                if self.rhs[i].abs() < 1e-15 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimises `cost·x` over columns `< allowed`; `false` when unbounded.
    /// Phase one cannot be unbounded, so a column without a usable pivot
    /// there only carries round-off and is set aside.
    fn optimise(&mut self, cost: &[f64], allowed: usize, phase_one: bool) -> Result<bool> {
        let mut blocked = vec![false; allowed];
        for _ in 0..MAX_PIVOTS {
            let cb: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..allowed).find(|&j| {
                if blocked[j] || self.basis.contains(&j) {
                    return false;
                }
                let d = cost[j] - (0..self.m).map(|i| cb[i] * self.rows[i][j]).sum::<f64>();
                d < -LP_TOL
            });
            let Some(j) = entering else { return Ok(true) };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.m {
                let a = self.rows[i][j];
                if a > LP_TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, j),
                None if phase_one => blocked[j] = true,
                None => return Ok(false),
            }
        }
        Err(LabError::NumericFailure(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let total = self.n + self.m;
        let mut cost1 = vec![0.0; total];
        for c in cost1[self.n..].iter_mut() {
            *c = 1.0;
        }
        self.optimise(&cost1, self.n, true)?;
        let infeas: f64 = self.basis.iter().zip(&self.rhs).filter(|(b, _)| **b >= self.n).map(|(_, v)| v).sum();
        let b_scale = self.rhs.iter().fold(1.0, |m: f64, v| m.max(v.abs()));
        if infeas > LP_TOL * b_scale {
            return Ok(LpOutcome::Infeasible(self.farkas(lp)));
        }
        // Drive zero-level artificials out where a structural pivot exists.
        for r in 0..self.m {
            if self.basis[r] >= self.n {
                if let Some(c) = (0..self.n).find(|&c| self.rows[r][c].abs() > LP_TOL && !self.basis.contains(&c)) {
                    self.pivot(r, c);
                }
            }
        }
        let mut cost2 = vec![0.0; total];
        for (k, cm) in self.col_map.iter().enumerate() {
            if let Some((j, s)) = cm {
                cost2[k] = -s * lp.objective[*j];
            }
        }
        if !self.optimise(&cost2, self.n, false)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; lp.n_vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if let Some(Some((j, s))) = self.col_map.get(b) {
                x[*j] += s * self.rhs[r];
            }
        }
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, value }))
    }

    /// Phase-one duals `y = c_Bᵀ B⁻¹`, negated and mapped back through the
    /// row negations.
    fn farkas(&self, lp: &LinearProgram) -> FarkasCertificate {
        let mut w = vec![0.0; self.m];
        for (r, &b) in self.basis.iter().enumerate() {
            if b >= self.n {
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi -= self.rows[r][self.n + i];
                }
            }
        }
        for (wi, s) in w.iter_mut().zip(&self.row_sign) {
            *wi *= s;
            if wi.abs() < 1e-14 {
                *wi = 0.0;
            }
        }
        let mut combined = vec![0.0; lp.n_vars];
        let mut rhs = 0.0;
        for (wi, c) in w.iter().zip(&lp.constraints) {
            rhs += wi * c.rhs;
            for (acc, a) in combined.iter_mut().zip(&c.coeffs) {
                *acc += wi * a;
            }
        }
        FarkasCertificate { multipliers: w, combined, rhs }
    }
}
