//! Orlicz functions, their conjugates and Δ2-failure witnesses.
//!
//! An Orlicz function here is a convex, increasing map `Φ: [0, ∞) → [0, ∞)`
//! with `Φ(0) = 0`. The catalog is closed under conjugation: every entry
//! knows the closed form of its conjugate, and piecewise-linear functions
//! are conjugated exactly by swapping breakpoints and slopes.
//!
//! The conjugate `Ψ(s) = sup_{t ≥ 0} (ts − Φ(t))` is available through two
//! independent routes: [`conjugate_value`] uses closed forms, and
//! [`numeric_conjugate_value`] locates the maximiser by monotone root finding
//! on the right derivative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::roots::{bisect_predicate, EVAL_CAP};

/// Absolute tolerance on the maximiser when root-finding `Φ'(t) = s`.
pub const ROOT_ABS_TOL: f64 = 1e-12;
/// Relative tolerance on the maximiser when root-finding `Φ'(t) = s`.
pub const ROOT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    CatalogAnalytic,
    PiecewiseLinear,
}

/// Convex piecewise-linear function through the origin.
///
/// Slope `slopes[0]` on `[0, breakpoints[0])`, `slopes[k]` on
/// `[breakpoints[k-1], breakpoints[k])`, and the last slope continues to
/// `domain_end` (or forever). Beyond `domain_end` the function is `+∞`;
/// this only arises for conjugates of functions that are eventually linear.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    /// `values[k] = f(breakpoints[k])`.
    values: Vec<f64>,
    domain_end: Option<f64>,
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, domain_end: Option<f64>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(LabError::InvalidSchedule(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if slopes[0] < 0.0 || !slopes.iter().all(|s| s.is_finite()) {
            return Err(LabError::InvalidSchedule("slopes must be finite and nonnegative".into()));
        }
        if slopes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidSchedule("slopes must be strictly increasing".into()));
        }
        if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(LabError::InvalidSchedule("breakpoints must be finite and positive".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidSchedule("breakpoints must be strictly increasing".into()));
        }
        if let (Some(end), Some(last)) = (domain_end, breakpoints.last()) {
            if end <= *last {
                return Err(LabError::InvalidSchedule("domain end must exceed the last breakpoint".into()));
            }
        }
        let mut values = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (k, &b) in breakpoints.iter().enumerate() {
            acc += slopes[k] * (b - prev);
            values.push(acc);
            prev = b;
        }
        Ok(Self { breakpoints, slopes, values, domain_end })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain_end(&self) -> Option<f64> {
        self.domain_end
    }

    /// Index of the linear piece containing `t` (right-continuous).
    fn piece(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if let Some(end) = self.domain_end {
            if t > end {
                return f64::INFINITY;
            }
        }
        let k = self.piece(t);
        if k == 0 {
            self.slopes[0] * t
        } else {
            self.values[k - 1] + self.slopes[k] * (t - self.breakpoints[k - 1])
        }
    }

    pub fn rderiv(&self, t: f64) -> f64 {
        if let Some(end) = self.domain_end {
            if t >= end {
                return f64::INFINITY;
            }
        }
        self.slopes[self.piece(t)]
    }

    /// Exact Legendre conjugate: slopes become breakpoints and vice versa.
    pub fn conjugate(&self) -> PiecewiseLinear {
        let k_max = self.breakpoints.len();
        if k_max == 0 {
            // f(t) = g·t: conjugate is 0 up to g, then +∞ (or D·(s − g) past a domain end D).
            let g = self.slopes[0];
            return match self.domain_end {
                Some(end) => PiecewiseLinear::new(vec![g], vec![0.0, end], None),
                None => PiecewiseLinear::new(vec![], vec![0.0], Some(g)),
            }
            .expect("conjugate of a linear function");
        }
        // Conjugate slope on [slopes[k-1], slopes[k]] is breakpoints[k-1];
        // on [0, slopes[0]] it is 0.
        let mut bps = Vec::new();
        let mut sls = Vec::new();
        if self.slopes[0] > 0.0 {
            sls.push(0.0);
            bps.push(self.slopes[0]);
        }
        for k in 1..=k_max {
            sls.push(self.breakpoints[k - 1]);
            if k < k_max {
                bps.push(self.slopes[k]);
            }
        }
        let domain_end = match self.domain_end {
            Some(end) => {
                bps.push(self.slopes[k_max]);
                sls.push(end);
                None
            }
            None => Some(self.slopes[k_max]),
        };
        // `bps.len() + 1 == sls.len()` by construction.
        PiecewiseLinear::new(bps, sls, domain_end).expect("conjugate of a valid piecewise-linear function")
    }

    fn inverse(&self, y: f64) -> f64 {
        let k = self.values.partition_point(|&v| v <= y);
        let (base_t, base_v) = if k == 0 { (0.0, 0.0) } else { (self.breakpoints[k - 1], self.values[k - 1]) };
        let slope = self.slopes[k];
        if slope == 0.0 {
            return base_t;
        }
        let t = base_t + (y - base_v) / slope;
        match self.domain_end {
            Some(end) if t > end => end,
            _ => t,
        }
    }
}

/// Breakpoint/slope schedule for a piecewise-linear Orlicz function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSlopeSchedule {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PiecewiseSlopeSchedule {
    /// `τ_k = ratio^(k²)` and `σ_k = ratio^(k(k+1)/2)` for `k = 1..=bursts`,
    /// with `σ_0 = 1`. The slope jumps by `ratio^k` at `τ_k` while the
    /// breakpoint gaps `τ_{k+1}/τ_k = ratio^(2k+1)` grow without bound, so both
    /// the function and its conjugate fail Δ2.
    pub fn sparse(bursts: u32, ratio: f64) -> Result<Self> {
        if bursts == 0 {
            return Err(LabError::InvalidSchedule("need at least one burst".into()));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(LabError::InvalidSchedule(format!("ratio must exceed 1, got {ratio}")));
        }
        let mut breakpoints = Vec::with_capacity(bursts as usize);
        let mut slopes = vec![1.0];
        for k in 1..=bursts as i32 {
            let tau = ratio.powi(k * k);
            let sigma = ratio.powi(k * (k + 1) / 2);
            if !tau.is_finite() || !sigma.is_finite() {
                return Err(LabError::InvalidSchedule(format!(
                    "burst {k} overflows double precision for ratio {ratio}"
                )));
            }
            breakpoints.push(tau);
            slopes.push(sigma);
        }
        Ok(Self { breakpoints, slopes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrliczFunction {
    /// `coef · t^p`, `p > 1`.
    Power { coef: f64, p: f64 },
    /// `eᵗ − 1`.
    Exp,
    /// Conjugate of `eᵗ − 1`: `0` on `[0, 1]`, `s ln s − s + 1` beyond.
    ExpConjugate,
    /// `(1 + t) ln(1 + t) − t`.
    Entropy,
    /// Conjugate of the entropy function: `eˢ − 1 − s`.
    EntropyConjugate,
    PiecewiseLinear(PiecewiseLinear),
}

impl OrliczFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(LabError::InvalidInput(format!(
                "power exponent must be > 1 (p = 1 is linear at infinity), got {p}"
            )));
        }
        Ok(OrliczFunction::Power { coef: 1.0, p })
    }

    pub fn kind(&self) -> FunctionKind {
        match self {
            OrliczFunction::PiecewiseLinear(_) => FunctionKind::PiecewiseLinear,
            _ => FunctionKind::CatalogAnalytic,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OrliczFunction::Power { coef, p } => coef * t.powf(*p),
            OrliczFunction::Exp => t.exp_m1(),
            OrliczFunction::ExpConjugate => {
                if t <= 1.0 {
                    0.0
                } else {
                    t * t.ln() - t + 1.0
                }
            }
            OrliczFunction::Entropy => {
                if t < 1e-3 {
                    // Σ_{k≥2} (−1)^k t^k / (k(k−1))
                    let mut term = t * t;
                    let mut acc = 0.0;
                    for k in 2..12 {
                        let kf = k as f64;
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * term / (kf * (kf - 1.0));
                        term *= t;
                    }
                    acc
                } else {
                    (1.0 + t) * t.ln_1p() - t
                }
            }
            OrliczFunction::EntropyConjugate => {
                if t < 1e-3 {
                    let mut term = t * t / 2.0;
                    let mut acc = 0.0;
                    for k in 2..12 {
                        acc += term;
                        term *= t / (k as f64 + 1.0);
                    }
                    acc
                } else {
                    t.exp_m1() - t
                }
            }
            OrliczFunction::PiecewiseLinear(pl) => pl.eval(t),
        }
    }

    /// Right derivative; nondecreasing in `t`.
    pub fn rderiv(&self, t: f64) -> f64 {
        match self {
            OrliczFunction::Power { coef, p } => {
                if t == 0.0 {
                    0.0
                } else {
                    coef * p * t.powf(p - 1.0)
                }
            }
            OrliczFunction::Exp => t.exp(),
            OrliczFunction::ExpConjugate => {
                if t < 1.0 {
                    0.0
                } else {
                    t.ln()
                }
            }
            OrliczFunction::Entropy => t.ln_1p(),
            OrliczFunction::EntropyConjugate => t.exp_m1(),
            OrliczFunction::PiecewiseLinear(pl) => pl.rderiv(t),
        }
    }

    /// Closed-form conjugate, when one is known (every catalog entry has one).
    pub fn analytic_conjugate(&self) -> Option<OrliczFunction> {
        Some(match self {
            OrliczFunction::Power { coef, p } => {
                let q = p / (p - 1.0);
                let c = (p - 1.0) * coef * (coef * p).powf(-q);
                OrliczFunction::Power { coef: c, p: q }
            }
            OrliczFunction::Exp => OrliczFunction::ExpConjugate,
            OrliczFunction::ExpConjugate => OrliczFunction::Exp,
            OrliczFunction::Entropy => OrliczFunction::EntropyConjugate,
            OrliczFunction::EntropyConjugate => OrliczFunction::Entropy,
            OrliczFunction::PiecewiseLinear(pl) => OrliczFunction::PiecewiseLinear(pl.conjugate()),
        })
    }

    /// Known Δ2 status of catalog entries; `None` for user-built schedules.
    pub fn analytic_delta2(&self) -> Option<bool> {
        match self {
            OrliczFunction::Power { .. } => Some(true),
            OrliczFunction::Exp => Some(false),
            OrliczFunction::ExpConjugate => Some(true),
            OrliczFunction::Entropy => Some(true),
            OrliczFunction::EntropyConjugate => Some(false),
            OrliczFunction::PiecewiseLinear(_) => None,
        }
    }

    /// Generalised inverse `inf{t ≥ 0 : Φ(t) ≥ y}`.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            OrliczFunction::Power { coef, p } => (y / coef).powf(1.0 / p),
            OrliczFunction::Exp => y.ln_1p(),
            OrliczFunction::PiecewiseLinear(pl) => pl.inverse(y),
            _ => {
                let mut hi = 1.0;
                while self.eval(hi) < y && hi < EVAL_CAP {
                    hi *= 2.0;
                }
                let (_, hi) = bisect_predicate(0.0, hi, 0.0, 1e-15, |t| self.eval(t) >= y);
                hi
            }
        }
    }

    /// Left inverse of the right derivative: `inf{t ≥ 0 : Φ'(t) ≥ s}`.
    /// `+∞` when no slope reaches `s`.
    pub fn deriv_left_inverse(&self, s: f64) -> f64 {
        if s <= self.rderiv(0.0) {
            return 0.0;
        }
        match self {
            OrliczFunction::Power { coef, p } => (s / (coef * p)).powf(1.0 / (p - 1.0)),
            OrliczFunction::Exp => s.ln(),
            OrliczFunction::ExpConjugate => s.exp(),
            OrliczFunction::Entropy => s.exp_m1(),
            OrliczFunction::EntropyConjugate => s.ln_1p(),
            OrliczFunction::PiecewiseLinear(pl) => {
                let k = pl.slopes().partition_point(|&sl| sl < s);
                if k < pl.slopes().len() {
                    pl.breakpoints()[k - 1]
                } else {
                    pl.domain_end().unwrap_or(f64::INFINITY)
                }
            }
        }
    }

    /// Breakpoints of a piecewise-linear function; empty otherwise.
    pub fn kinks(&self) -> &[f64] {
        match self {
            OrliczFunction::PiecewiseLinear(pl) => pl.breakpoints(),
            _ => &[],
        }
    }
}

/// `Ψ(s) = sup_{t ≥ 0} (ts − Φ(t))`, closed form when available.
pub fn conjugate_value(phi: &OrliczFunction, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(LabError::InvalidInput(format!("conjugate needs s ≥ 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    match phi.analytic_conjugate() {
        Some(psi) => {
            let v = psi.eval(s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(LabError::NumericFailure(format!(
                    "s = {s:e} lies beyond the representable slope range"
                )))
            }
        }
        None => numeric_conjugate_value(phi, s),
    }
}

/// Conjugate by root finding on `Φ'(t) = s` with bracket doubling.
pub fn numeric_conjugate_value(phi: &OrliczFunction, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(LabError::InvalidInput(format!("conjugate needs s ≥ 0, got {s}")));
    }
    if s == 0.0 || phi.rderiv(0.0) >= s {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while phi.rderiv(hi) < s {
        hi *= 2.0;
        if hi > EVAL_CAP || !phi.eval(hi).is_finite() {
            return Err(LabError::NumericFailure(format!(
                "no maximiser bracket for s = {s:e} below the evaluation cap"
            )));
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let (lo, hi) = bisect_predicate(lo, hi, ROOT_ABS_TOL, ROOT_REL_TOL, |t| phi.rderiv(t) >= s);
    let objective = |t: f64| t * s - phi.eval(t);
    Ok(objective(lo).max(objective(hi)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YoungCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Young's inequality `ts ≤ Φ(t) + Ψ(s)`.
pub fn young_check(phi: &OrliczFunction, t: f64, s: f64) -> Result<YoungCheck> {
    if !(t >= 0.0) {
        return Err(LabError::InvalidInput(format!("Young check needs t ≥ 0, got {t}")));
    }
    let lhs = t * s;
    let rhs = phi.eval(t) + conjugate_value(phi, s)?;
    Ok(YoungCheck { lhs, rhs, holds: lhs <= rhs + 1e-9 * (1.0 + rhs) })
}

/// A function together with its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct OrliczPair {
    pub phi: OrliczFunction,
    pub psi: OrliczFunction,
}

impl OrliczPair {
    pub fn from_phi(phi: OrliczFunction) -> Self {
        let psi = phi.analytic_conjugate().expect("every catalog function has a closed-form conjugate");
        Self { phi, psi }
    }

    /// The same pair with the roles of Φ and Ψ exchanged.
    pub fn swapped(&self) -> Self {
        Self { phi: self.psi.clone(), psi: self.phi.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta2Witness {
    pub n: u32,
    pub t: f64,
    pub phi_t: f64,
    pub phi_2t: f64,
}

impl Delta2Witness {
    /// The defining inequalities, re-evaluated from scratch.
    pub fn is_valid_for(&self, phi: &OrliczFunction) -> bool {
        is_delta2_witness(phi, self.n, self.t)
    }
}

/// `Φ(2t) > 2ⁿ Φ(t)` and `Φ(t) ≥ 3`, both finite.
pub fn is_delta2_witness(phi: &OrliczFunction, n: u32, t: f64) -> bool {
    let a = phi.eval(t);
    let b = phi.eval(2.0 * t);
    a.is_finite() && b.is_finite() && a >= 3.0 && b > 2f64.powi(n as i32) * a
}

/// Scans a geometric grid (ratio 2^(1/16)) plus the kinks of piecewise-linear
/// functions for the smallest `t_n ≤ t_cap` with `Φ(2t_n) > 2ⁿΦ(t_n)` and
/// `Φ(t_n) ≥ 3`, for each `n = 1..=count`.
///
/// A `WitnessNotFound` error is a semi-decision: Φ may still fail Δ2 above
/// the cap.
pub fn delta2_witnesses(phi: &OrliczFunction, count: u32, t_cap: f64) -> Result<Vec<Delta2Witness>> {
    if count == 0 {
        return Err(LabError::InvalidInput("count must be at least 1".into()));
    }
    if !(t_cap > 0.0) {
        return Err(LabError::InvalidInput(format!("t_cap must be positive, got {t_cap}")));
    }
    let mut candidates: Vec<f64> = Vec::new();
    let step = 2f64.powf(1.0 / 16.0);
    let mut t = 2f64.powi(-20);
    while t <= t_cap {
        candidates.push(t);
        t *= step;
    }
    for &k in phi.kinks() {
        for c in [k, 0.5 * k] {
            if c <= t_cap {
                candidates.push(c);
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Ratio at each admissible candidate, in increasing t.
    let scored: Vec<(f64, f64, f64)> = candidates
        .into_iter()
        .filter_map(|t| {
            let a = phi.eval(t);
            let b = phi.eval(2.0 * t);
            (a.is_finite() && b.is_finite() && a >= 3.0).then_some((t, a, b))
        })
        .collect();

    let mut out = Vec::with_capacity(count as usize);
    for n in 1..=count {
        let bound = 2f64.powi(n as i32);
        match scored.iter().find(|(_, a, b)| *b > bound * *a) {
            Some(&(t, a, b)) => out.push(Delta2Witness { n, t, phi_t: a, phi_2t: b }),
            None => return Err(LabError::WitnessNotFound { n, t_cap }),
        }
    }
    Ok(out)
}

/// Piecewise-linear Φ from a schedule; its exact conjugate is
/// [`OrliczFunction::analytic_conjugate`].
pub fn build_sparse_pair(schedule: &PiecewiseSlopeSchedule) -> Result<OrliczFunction> {
    if schedule.slopes.first().map_or(true, |s| *s <= 0.0) {
        return Err(LabError::InvalidSchedule("σ_0 must be positive".into()));
    }
    let pl = PiecewiseLinear::new(schedule.breakpoints.clone(), schedule.slopes.clone(), None)?;
    Ok(OrliczFunction::PiecewiseLinear(pl))
}

/// Textual function specification: `power:p=<real>`, `exp`, `entropy`,
/// `sparse:bursts=<int>,ratio=<real>`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Power { p: f64 },
    Exp,
    Entropy,
    Sparse { bursts: u32, ratio: f64 },
}

impl FunctionSpec {
    pub const DEFAULT_SPARSE: FunctionSpec = FunctionSpec::Sparse { bursts: 24, ratio: 2.0 };

    pub fn build(&self) -> Result<OrliczFunction> {
        match *self {
            FunctionSpec::Power { p } => OrliczFunction::power(p),
            FunctionSpec::Exp => Ok(OrliczFunction::Exp),
            FunctionSpec::Entropy => Ok(OrliczFunction::Entropy),
            FunctionSpec::Sparse { bursts, ratio } => build_sparse_pair(&PiecewiseSlopeSchedule::sparse(bursts, ratio)?),
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Power { p } => write!(f, "power:p={p}"),
            FunctionSpec::Exp => write!(f, "exp"),
            FunctionSpec::Entropy => write!(f, "entropy"),
            FunctionSpec::Sparse { bursts, ratio } => write!(f, "sparse:bursts={bursts},ratio={ratio}"),
        }
    }
}

fn parse_params(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| LabError::InvalidInput(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

impl FromStr for FunctionSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let params = parse_params(body)?;
        let bad = |what: &str| LabError::InvalidInput(format!("bad function spec `{s}`: {what}"));
        let num = |key: &str| -> Result<Option<f64>> {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.parse::<f64>().map_err(|_| bad(&format!("`{key}` is not a number"))))
                .transpose()
        };
        let known = |keys: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !keys.contains(k)) {
                Some((k, _)) => Err(bad(&format!("unknown parameter `{k}`"))),
                None => Ok(()),
            }
        };
        match name.trim() {
            "power" => {
                known(&["p"])?;
                let p = num("p")?.ok_or_else(|| bad("missing p"))?;
                if !(p > 1.0) {
                    return Err(bad("p must exceed 1"));
                }
                Ok(FunctionSpec::Power { p })
            }
            "exp" => {
                known(&[])?;
                Ok(FunctionSpec::Exp)
            }
            "entropy" => {
                known(&[])?;
                Ok(FunctionSpec::Entropy)
            }
            "sparse" => {
                known(&["bursts", "ratio"])?;
                let bursts = match params.iter().find(|(k, _)| *k == "bursts") {
                    Some((_, v)) => v.parse::<u32>().map_err(|_| bad("`bursts` is not an integer"))?,
                    None => 24,
                };
                let ratio = num("ratio")?.unwrap_or(2.0);
                Ok(FunctionSpec::Sparse { bursts, ratio })
            }
            other => Err(bad(&format!("unknown function `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<OrliczFunction> {
        vec![
            OrliczFunction::power(2.0).unwrap(),
            OrliczFunction::power(1.5).unwrap(),
            OrliczFunction::power(3.0).unwrap(),
            OrliczFunction::Exp,
            OrliczFunction::Entropy,
            FunctionSpec::DEFAULT_SPARSE.build().unwrap(),
        ]
    }

    fn grid() -> Vec<f64> {
        (0..60).map(|k| 1e-3 * 1.25f64.powi(k)).collect()
    }

    #[test]
    fn catalog_satisfies_standing_assumptions() {
        for phi in catalog() {
            assert_eq!(phi.eval(0.0), 0.0);
            let g = grid();
            for &t in &g {
                assert!(phi.eval(t) > 0.0, "{phi:?} vanishes at {t}");
            }
            for w in g.windows(2) {
                assert!(phi.eval(w[0]) <= phi.eval(w[1]));
                assert!(phi.eval(w[0]) / w[0] <= phi.eval(w[1]) / w[1] * (1.0 + 1e-12));
            }
            for &a in &g {
                for &b in &g {
                    let mid = phi.eval(0.5 * (a + b));
                    let avg = 0.5 * (phi.eval(a) + phi.eval(b));
                    assert!(mid <= avg * (1.0 + 1e-12) + 1e-300, "{phi:?} not midpoint convex at {a},{b}");
                }
            }
            // Superlinear growth: Φ(t)/t keeps climbing.
            assert!(phi.eval(1e8) / 1e8 > phi.eval(1e2) / 1e2 + 1.0);
        }
    }

    #[test]
    fn conjugate_of_square_at_two() {
        let phi = OrliczFunction::power(2.0).unwrap();
        assert!((conjugate_value(&phi, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((numeric_conjugate_value(&phi, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_at_zero_vanishes() {
        for phi in catalog() {
            assert_eq!(conjugate_value(&phi, 0.0).unwrap(), 0.0);
            assert_eq!(numeric_conjugate_value(&phi, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn conjugate_of_exp_at_one_matches_grid_oracle() {
        // Oracle: maximise t - (e^t - 1) on a fine grid over [0, 50].
        let best = (0..=500_000)
            .map(|k| {
                let t = 50.0 * k as f64 / 500_000.0;
                t - t.exp_m1()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 0.0);
        assert_eq!(conjugate_value(&OrliczFunction::Exp, 1.0).unwrap(), 0.0);
        assert_eq!(numeric_conjugate_value(&OrliczFunction::Exp, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn closed_and_numeric_conjugates_agree() {
        for phi in catalog() {
            for k in 0..40 {
                let s = 0.05 * 1.3f64.powi(k);
                let Ok(closed) = conjugate_value(&phi, s) else { continue };
                let numeric = numeric_conjugate_value(&phi, s).unwrap();
                assert!(
                    (closed - numeric).abs() <= 1e-8 * (1.0 + closed.abs()),
                    "{phi:?} at s={s}: {closed} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn young_examples() {
        let sq = OrliczFunction::power(2.0).unwrap();
        let y = young_check(&sq, 1.0, 1.0).unwrap();
        assert_eq!((y.lhs, y.rhs, y.holds), (1.0, 1.25, true));
        let y = young_check(&OrliczFunction::Exp, 0.0, 3.0).unwrap();
        assert_eq!(y.lhs, 0.0);
        assert!(y.holds);
        let s = 2f64.exp();
        let y = young_check(&OrliczFunction::Exp, 2.0, s).unwrap();
        assert!((y.lhs - y.rhs).abs() < 1e-12 * y.rhs);
    }

    #[test]
    fn power_reports_no_witness() {
        for p in [1.5, 2.0, 3.0] {
            let phi = OrliczFunction::power(p).unwrap();
            let err = delta2_witnesses(&phi, 10, 1e300).unwrap_err();
            match err {
                LabError::WitnessNotFound { n, .. } => assert_eq!(n as f64, p.ceil()),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn exp_witness_at_three_for_n_four() {
        let phi = OrliczFunction::Exp;
        assert!(is_delta2_witness(&phi, 4, 3.0));
        assert!((phi.eval(6.0) - 402.428_793).abs() < 1e-5);
        assert!((16.0 * phi.eval(3.0) - 305.368_591).abs() < 1e-5);
        let ws = delta2_witnesses(&phi, 20, 1e300).unwrap();
        for w in &ws {
            assert!(w.is_valid_for(&phi));
        }
        assert!(ws.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn sparse_pair_fails_delta2_on_both_sides() {
        let phi = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
        let psi = phi.analytic_conjugate().unwrap();
        let wp = delta2_witnesses(&phi, 10, 1e300).unwrap();
        let wq = delta2_witnesses(&psi, 10, 1e300).unwrap();
        for w in &wp {
            assert!(w.is_valid_for(&phi), "{w:?}");
        }
        for w in &wq {
            assert!(w.is_valid_for(&psi));
        }
    }

    #[test]
    fn sparse_conjugate_vanishes_up_to_first_slope() {
        let phi = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
        assert_eq!(conjugate_value(&phi, 1.0).unwrap(), 0.0);
        assert_eq!(conjugate_value(&phi, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_biconjugate_is_exact() {
        let phi = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
        let back = phi.analytic_conjugate().unwrap().analytic_conjugate().unwrap();
        assert_eq!(back, phi);
        for k in 0..200 {
            let t = 1e-3 * 1.3f64.powi(k);
            let (a, b) = (phi.eval(t), back.eval(t));
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }

    #[test]
    fn slopes_beyond_range_fail() {
        let phi = build_sparse_pair(&PiecewiseSlopeSchedule::sparse(3, 2.0).unwrap()).unwrap();
        let err = conjugate_value(&phi, 1e6).unwrap_err();
        assert!(matches!(err, LabError::NumericFailure(_)));
    }

    #[test]
    fn invalid_schedules_rejected() {
        let bad = PiecewiseSlopeSchedule { breakpoints: vec![1.0], slopes: vec![0.0, 2.0] };
        assert!(matches!(build_sparse_pair(&bad), Err(LabError::InvalidSchedule(_))));
        let bad = PiecewiseSlopeSchedule { breakpoints: vec![1.0], slopes: vec![2.0, 1.0] };
        assert!(matches!(build_sparse_pair(&bad), Err(LabError::InvalidSchedule(_))));
        assert!(PiecewiseSlopeSchedule::sparse(40, 2.0).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["power:p=2", "power:p=1.5", "exp", "entropy", "sparse:bursts=12,ratio=2"] {
            let spec: FunctionSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<FunctionSpec>().unwrap(), spec);
        }
        assert!("power:p=1".parse::<FunctionSpec>().is_err());
        assert!("power:q=2".parse::<FunctionSpec>().is_err());
        assert!("cosh".parse::<FunctionSpec>().is_err());
    }

    #[test]
    fn inverses_match_evaluation() {
        for phi in catalog() {
            for k in 0..30 {
                let y = 1e-3 * 1.6f64.powi(k);
                let t = phi.inverse(y);
                assert!((phi.eval(t) - y).abs() <= 1e-10 * y, "{phi:?} {y}");
            }
        }
    }
}
