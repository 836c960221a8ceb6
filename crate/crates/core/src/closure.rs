//! Finite-scale steps of the order-closure argument: truncation splits,
//! Mazur combinations, order dominators and almost-sure extraction.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::finite::{expectation, RandomVariable};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::norms::{luxemburg_norm, modular};
use crate::orlicz::OrliczFunction;

/// Relative slack on the per-term input bounds.
pub const BOUND_TOL: f64 = 1e-12;
pub const MAZUR_STATIONARITY: f64 = 1e-8;
pub const MAZUR_MAX_ITER: usize = 20_000;
pub const MARKOV_LEVELS: [f64; 3] = [1e-2, 1e-1, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    pub k: f64,
    /// `X·1_{|X|>k}`.
    pub z: RandomVariable,
    /// `X·1_{|X|≤k}`.
    pub w: RandomVariable,
    /// `E[1_{|X|>k} Φ(|X|)]`.
    pub tail_modular: f64,
    /// Tail at the next lower grid level, which exceeds the budget.
    pub next_lower_tail: Option<f64>,
}

fn tail_modular(x: &RandomVariable, phi: &OrliczFunction, k: f64) -> f64 {
    x.values()
        .iter()
        .zip(x.space().probabilities())
        .filter(|(v, _)| v.abs() > k)
        .map(|(v, p)| p * phi.eval(v.abs()))
        .sum()
}

/// Smallest level `k ∈ {0} ∪ {|x_a|}` whose modular tail fits the budget.
pub fn split_with_budget(x: &RandomVariable, phi: &OrliczFunction, budget: f64) -> Result<SplitReport> {
    if !(budget > 0.0) {
        return Err(LabError::InvalidInput(format!("budget must be positive, got {budget}")));
    }
    let mut grid: Vec<f64> = std::iter::once(0.0).chain(x.values().iter().map(|v| v.abs())).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // The tail falls as k grows and vanishes at max|X|.
    let idx = grid.iter().position(|&k| tail_modular(x, phi, k) <= budget).unwrap_or(grid.len() - 1);
    let k = grid[idx];
    let z = x.map(|v| if v.abs() > k { v } else { 0.0 });
    let w = x.map(|v| if v.abs() > k { 0.0 } else { v });
    Ok(SplitReport {
        k,
        tail_modular: tail_modular(x, phi, k),
        next_lower_tail: idx.checked_sub(1).map(|i| tail_modular(x, phi, grid[i])),
        z,
        w,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MazurReport {
    pub weights: Vec<f64>,
    /// `‖Σ c_i W_i‖_Φ` at the returned weights.
    pub value: f64,
    pub target: f64,
    pub found: bool,
    /// LP pre-check: whether 0 lies in the convex hull.
    pub hull_contains_zero: bool,
    pub iterations: usize,
}

fn combine(candidates: &[RandomVariable], c: &[f64]) -> Result<RandomVariable> {
    let mut acc = candidates[0].scale(c[0]);
    for (w, ci) in candidates.iter().zip(c).skip(1) {
        acc = acc.add(&w.scale(*ci))?;
    }
    Ok(acc)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Gradient of `X ↦ ‖X‖_Φ` as a vector over atoms, from differentiating
/// `E[Φ(|X|/N)] = 1` in `X`. `None` where the norm is zero or `Φ'` vanishes.
fn norm_gradient(x: &RandomVariable, phi: &OrliczFunction, norm: f64) -> Option<Vec<f64>> {
    if !(norm > 0.0) {
        return None;
    }
    let p = x.space().probabilities();
    let d: Vec<f64> = x.values().iter().map(|v| phi.rderiv(v.abs() / norm)).collect();
    let denom: f64 = x.values().iter().zip(&d).zip(p).map(|((v, di), pi)| pi * di * v.abs() / norm).sum();
    if !(denom > 0.0) || !denom.is_finite() {
        return None;
    }
    Some(x.values().iter().zip(&d).zip(p).map(|((v, di), pi)| pi * di * v.signum() / denom).collect())
}

/// Weights from the LP `c ≥ 0, Σc = 1, Σ c_i W_i = 0`, if feasible.
fn hull_weights(candidates: &[RandomVariable]) -> Result<Option<Vec<f64>>> {
    let n = candidates.len();
    let atoms = candidates[0].space().len();
    let mut lp = LinearProgram::new(n);
    lp.add(vec![1.0; n], Sense::Eq, 1.0);
    for a in 0..atoms {
        lp.add(candidates.iter().map(|w| w.values()[a]).collect(), Sense::Eq, 0.0);
    }
    Ok(match lp.solve()? {
        LpOutcome::Optimal(s) => Some(project_simplex(&s.x)),
        _ => None,
    })
}

/// Minimises the Luxemburg norm over convex combinations by projected
/// subgradient descent from the barycentre and, when the LP finds one, from
/// a convex combination equal to zero.
pub fn mazur_min_norm(candidates: &[RandomVariable], phi: &OrliczFunction, target: f64) -> Result<MazurReport> {
    if candidates.is_empty() {
        return Err(LabError::EmptySequence);
    }
    for c in &candidates[1..] {
        c.check_space(&candidates[0])?;
    }
    let n = candidates.len();
    let hull = hull_weights(candidates)?;
    let value_at = |c: &[f64]| -> Result<f64> { luxemburg_norm(&combine(candidates, c)?, phi) };

    let mut best_c = vec![1.0 / n as f64; n];
    let mut best = value_at(&best_c)?;
    if let Some(h) = &hull {
        let v = value_at(h)?;
        if v < best {
            best = v;
            best_c = h.clone();
        }
    }
    let mut c = best_c.clone();
    let scale = candidates.iter().map(|w| w.max_abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    while iterations < MAZUR_MAX_ITER && best > 0.0 {
        iterations += 1;
        let x = combine(candidates, &c)?;
        let f = luxemburg_norm(&x, phi)?;
        if f < best {
            best = f;
            best_c = c.clone();
        }
        let Some(g_atoms) = norm_gradient(&x, phi, f) else { break };
        let g: Vec<f64> = candidates.iter().map(|w| w.values().iter().zip(&g_atoms).map(|(a, b)| a * b).sum()).collect();
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let step = f / (scale * gnorm * (iterations as f64).sqrt());
        let next = project_simplex(&c.iter().zip(&g).map(|(ci, gi)| ci - step * gi).collect::<Vec<_>>());
        let moved: f64 = next.iter().zip(&c).map(|(a, b)| (a - b).abs()).sum();
        c = next;
        if moved < MAZUR_STATIONARITY {
            break;
        }
    }
    Ok(MazurReport {
        found: best <= target,
        weights: best_c,
        value: best,
        target,
        hull_contains_zero: hull.is_some(),
        iterations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovRow {
    pub n: usize,
    pub eps: f64,
    /// `Φ(ε)·P(|Z_n| > ε)`.
    pub lhs: f64,
    /// `E[Φ(|Z_n|)]`.
    pub modular: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominatorReport {
    /// `sup_n |Z_n| + Σ_n |W_n|`.
    pub x_tilde: RandomVariable,
    pub z_modulars: Vec<f64>,
    pub w_norms: Vec<f64>,
    /// `E[Φ(sup_n |Z_n|)]`.
    pub sup_z_modular: f64,
    /// `Σ_n E[Φ(|Z_n|)]`, which bounds the previous line.
    pub modular_sum: f64,
    /// `Σ_n 2⁻ⁿ`.
    pub bound: f64,
    pub dominates: bool,
    pub markov: Vec<MarkovRow>,
    pub holds: bool,
}

/// Builds `X̃` from the truncated pieces and checks every bound. `Z_n` and
/// `W_n` are indexed from `n = 1`.
pub fn order_dominator(z: &[RandomVariable], w: &[RandomVariable], phi: &OrliczFunction) -> Result<DominatorReport> {
    let first = z.first().or(w.first()).ok_or(LabError::EmptySequence)?;
    for v in z.iter().chain(w) {
        v.check_space(first)?;
    }
    let bound_n = |n: usize| 0.5f64.powi(n as i32);
    let z_modulars: Vec<f64> = z.iter().map(|zn| modular(zn, phi, 1.0)).collect::<Result<_>>()?;
    for (i, m) in z_modulars.iter().enumerate() {
        if *m > bound_n(i + 1) * (1.0 + BOUND_TOL) {
            return Err(LabError::BoundViolation {
                index: i + 1,
                detail: format!("E[Φ(|Z_{}|)] = {m:e} exceeds 2^-{}", i + 1, i + 1),
            });
        }
    }
    let w_norms: Vec<f64> = w.iter().map(|wn| luxemburg_norm(wn, phi)).collect::<Result<_>>()?;
    for (i, m) in w_norms.iter().enumerate() {
        if *m > bound_n(i + 1) * (1.0 + BOUND_TOL) {
            return Err(LabError::BoundViolation {
                index: i + 1,
                detail: format!("‖W_{}‖_Φ = {m:e} exceeds 2^-{}", i + 1, i + 1),
            });
        }
    }
    let zero = RandomVariable::zero(first.space());
    let mut sup_z = zero.clone();
    for zn in z {
        sup_z = sup_z.zip_with(zn, |a, b| a.max(b.abs()))?;
    }
    let mut sum_w = zero;
    for wn in w {
        sum_w = sum_w.zip_with(wn, |a, b| a + b.abs())?;
    }
    let x_tilde = sup_z.add(&sum_w)?;
    let mut dominates = true;
    for (i, zn) in z.iter().enumerate() {
        let piece = match w.get(i) {
            Some(wn) => zn.abs().add(&wn.abs())?,
            None => zn.abs(),
        };
        dominates &= x_tilde.dominates(&piece)?;
    }
    for wn in w.iter().skip(z.len()) {
        dominates &= x_tilde.dominates(&wn.abs())?;
    }
    // Φ(sup|Z_n|) = sup Φ(|Z_n|) ≤ Σ Φ(|Z_n|), atomwise.
    let sup_z_modular = modular(&sup_z, phi, 1.0)?;
    let modular_sum: f64 = z_modulars.iter().sum();
    let bound: f64 = (1..=z.len()).map(bound_n).sum();
    let mut markov = Vec::new();
    for (i, zn) in z.iter().enumerate() {
        for eps in MARKOV_LEVELS {
            let prob: f64 = zn
                .values()
                .iter()
                .zip(zn.space().probabilities())
                .filter(|(v, _)| v.abs() > eps)
                .map(|(_, p)| p)
                .sum();
            let lhs = phi.eval(eps) * prob;
            let b = bound_n(i + 1);
            markov.push(MarkovRow {
                n: i + 1,
                eps,
                lhs,
                modular: z_modulars[i],
                bound: b,
                holds: lhs <= z_modulars[i] * (1.0 + BOUND_TOL) && z_modulars[i] <= b * (1.0 + BOUND_TOL),
            });
        }
    }
    let holds = dominates
        && sup_z_modular <= modular_sum * (1.0 + BOUND_TOL) + BOUND_TOL
        && modular_sum <= bound * (1.0 + BOUND_TOL)
        && bound <= 1.0
        && markov.iter().all(|r| r.holds);
    Ok(DominatorReport { x_tilde, z_modulars, w_norms, sup_z_modular, modular_sum, bound, dominates, markov, holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionRow {
    pub n: usize,
    /// `E|X_n − X|`.
    pub l1_distance: f64,
    /// `E[sup_{m≥n} (|X_m − X| ∧ 1)]` over the supplied terms.
    pub capped_tail: f64,
    /// `2^{1−n}`.
    pub tail_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsExtractionReport {
    pub rows: Vec<ExtractionRow>,
    /// `max_a |X_N − X|(a)` for the last term.
    pub final_deviation: f64,
    /// Markov bound `2^{−N}/min_a P(a)` on that deviation.
    pub final_bound: f64,
    pub converges_atomwise: bool,
    pub holds: bool,
}

/// Checks the capped-sup tail bound behind almost-sure extraction for a
/// sequence with `E|X_n − X| ≤ 2⁻ⁿ`, indexed from `n = 1`.
pub fn as_extraction(seq: &[RandomVariable], limit: &RandomVariable) -> Result<AsExtractionReport> {
    if seq.is_empty() {
        return Err(LabError::EmptySequence);
    }
    let devs: Vec<RandomVariable> = seq.iter().map(|x| x.sub(limit).map(|d| d.abs())).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(seq.len());
    for (i, d) in devs.iter().enumerate() {
        let n = i + 1;
        let l1 = expectation(d);
        if l1 > 0.5f64.powi(n as i32) * (1.0 + BOUND_TOL) {
            return Err(LabError::HypothesisViolation(format!("E|X_{n} − X| = {l1:e} exceeds 2^-{n}")));
        }
        let mut sup = d.map(|v| v.min(1.0));
        for later in &devs[i + 1..] {
            sup = sup.zip_with(later, |a, b| a.max(b.min(1.0)))?;
        }
        let capped_tail = expectation(&sup);
        let tail_bound = 2f64.powi(1 - n as i32);
        rows.push(ExtractionRow { n, l1_distance: l1, capped_tail, tail_bound, holds: capped_tail <= tail_bound * (1.0 + BOUND_TOL) });
    }
    let last = devs.last().expect("nonempty");
    let final_deviation = last.max_abs();
    let min_p = limit.space().probabilities().iter().copied().fold(f64::INFINITY, f64::min);
    let final_bound = 0.5f64.powi(seq.len() as i32) / min_p;
    let converges_atomwise = final_deviation <= final_bound * (1.0 + BOUND_TOL);
    let holds = converges_atomwise && rows.iter().all(|r| r.holds);
    Ok(AsExtractionReport { rows, final_deviation, final_bound, converges_atomwise, holds })
}
