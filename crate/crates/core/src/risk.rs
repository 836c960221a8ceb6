//! Risk measures on finite spaces: scenario maxima, acceptance thresholds,
//! a small catalog, and harnesses for the coherence axioms and Fatou.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::finite::{expectation, order_convergence_check, pairing, FiniteSpace, RandomVariable};
use crate::norms::luxemburg_norm;
use crate::orlicz::OrliczFunction;
use crate::roots::bisect_predicate;

/// Tolerance on `E[Y] = 1` for scenario densities.
pub const DENSITY_MEAN_TOL: f64 = 1e-10;
pub const AXIOM_TOL: f64 = 1e-9;
pub const FATOU_TOL: f64 = 1e-8;
/// Largest atom count for polytope vertex enumeration.
pub const MAX_VERTEX_ATOMS: usize = 12;

pub const AXIOM_SHIFTS: [f64; 4] = [-2.0, -0.5, 0.5, 3.0];
pub const AXIOM_SCALES: [f64; 3] = [0.5, 2.0, 3.7];

/// A value in `(−∞, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::Finite(v)),
            Raw::Text(t) if t == "+inf" || t == "inf" => Ok(ExtReal::PosInf),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Scenario,
    Acceptance,
    Catalog,
}

pub trait RiskMeasure {
    fn eval(&self, x: &RandomVariable) -> Result<ExtReal>;
    fn provenance(&self) -> Provenance;
    fn label(&self) -> String;

    /// Absolute accuracy of `eval`; the axiom suite widens its tolerance by
    /// this much. Zero for closed forms.
    fn precision(&self) -> f64 {
        0.0
    }

    /// The measure as a finite scenario maximum on `space`, when it is one.
    fn scenario_set(&self, _space: &Arc<FiniteSpace>) -> Option<Result<ScenarioSet>> {
        None
    }

    /// Not identically `+∞`: finite at the zero position.
    fn is_proper_on(&self, space: &Arc<FiniteSpace>) -> Result<bool> {
        Ok(self.eval(&RandomVariable::zero(space))?.is_finite())
    }
}

/// Finite list of densities `Y ≥ 0` with `E[Y] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    space: Arc<FiniteSpace>,
    densities: Vec<RandomVariable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub densities: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn new(space: &Arc<FiniteSpace>, densities: Vec<RandomVariable>) -> Result<Self> {
        for (k, y) in densities.iter().enumerate() {
            if !Arc::ptr_eq(y.space(), space) && **y.space() != **space {
                return Err(LabError::SpaceMismatch);
            }
            if let Some(i) = y.values().iter().position(|v| !(*v >= 0.0)) {
                return Err(LabError::InvalidInput(format!("density {k} is negative at atom {i}")));
            }
            let m = expectation(y);
            if (m - 1.0).abs() > DENSITY_MEAN_TOL {
                return Err(LabError::InvalidInput(format!("density {k} has expectation {m}, not 1")));
            }
        }
        Ok(Self { space: Arc::clone(space), densities })
    }

    pub fn from_rows(space: &Arc<FiniteSpace>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ys = rows.into_iter().map(|r| RandomVariable::new(space, r)).collect::<Result<Vec<_>>>()?;
        Self::new(space, ys)
    }

    pub fn from_json(space: &Arc<FiniteSpace>, text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| LabError::InvalidInput(format!("scenario JSON: {e}")))?;
        Self::from_rows(space, file.densities)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile { densities: self.densities.iter().map(|y| y.values().to_vec()).collect() }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn densities(&self) -> &[RandomVariable] {
        &self.densities
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }
}

/// `max_{Y ∈ Q} E[−XY]`.
pub fn scenario_eval(q: &ScenarioSet, x: &RandomVariable) -> Result<f64> {
    if q.is_empty() {
        return Err(LabError::EmptyScenarioSet);
    }
    let neg = x.scale(-1.0);
    let mut best = f64::NEG_INFINITY;
    for y in &q.densities {
        best = best.max(pairing(&neg, y)?);
    }
    Ok(best)
}

impl RiskMeasure for ScenarioSet {
    fn eval(&self, x: &RandomVariable) -> Result<ExtReal> {
        scenario_eval(self, x).map(ExtReal::Finite)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Scenario
    }

    fn label(&self) -> String {
        format!("scenario[{}]", self.len())
    }

    fn scenario_set(&self, space: &Arc<FiniteSpace>) -> Option<Result<ScenarioSet>> {
        Some(if **space == *self.space { Ok(self.clone()) } else { Err(LabError::SpaceMismatch) })
    }
}

/// Vertices of `{Y : 0 ≤ Y ≤ 1/α, E[Y] = 1}`: every coordinate at a bound
/// except at most one.
pub fn avar_vertices(space: &Arc<FiniteSpace>, alpha: f64) -> Result<ScenarioSet> {
    check_alpha(alpha)?;
    let n = space.len();
    if n > MAX_VERTEX_ATOMS {
        return Err(LabError::UnsupportedInput(format!(
            "vertex enumeration is limited to {MAX_VERTEX_ATOMS} atoms, got {n}"
        )));
    }
    let cap = 1.0 / alpha;
    let p = space.probabilities();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let full: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| p[i] * cap).sum();
        let rest = 1.0 - full;
        if rest < -1e-12 {
            continue;
        }
        for k in (0..n).filter(|i| mask & (1 << i) == 0) {
            let yk = rest.max(0.0) / p[k];
            if yk > cap * (1.0 + 1e-12) {
                continue;
            }
            let mut row: Vec<f64> = (0..n).map(|i| if mask & (1 << i) != 0 { cap } else { 0.0 }).collect();
            row[k] = yk.min(cap);
            if !rows.iter().any(|r| r.iter().zip(&row).all(|(a, b)| (a - b).abs() <= 1e-12 * cap)) {
                rows.push(row);
            }
        }
        if mask.count_ones() as usize == n && rest.abs() <= 1e-12 {
            let row = vec![cap; n];
            if !rows.iter().any(|r| r == &row) {
                rows.push(row);
            }
        }
    }
    ScenarioSet::from_rows(space, rows)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(LabError::InvalidInput(format!("AVaR level must lie in (0, 1], got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogMeasure {
    Avar { alpha: f64 },
    WorstCase,
    Entropic { theta: f64 },
    /// `−E[X]`.
    Expectation,
}

impl CatalogMeasure {
    pub fn value(&self, x: &RandomVariable) -> Result<f64> {
        match *self {
            CatalogMeasure::Avar { alpha } => {
                check_alpha(alpha)?;
                // Fractional knapsack: fill density 1/α on the worst atoms first.
                let cap = 1.0 / alpha;
                let p = x.space().probabilities();
                let mut order: Vec<usize> = (0..p.len()).collect();
                order.sort_by(|&a, &b| x.values()[a].total_cmp(&x.values()[b]).then(a.cmp(&b)));
                let mut remaining = 1.0;
                let mut acc = 0.0;
                for i in order {
                    if remaining <= 0.0 {
                        break;
                    }
                    let w = (p[i] * cap).min(remaining);
                    acc -= w * x.values()[i];
                    remaining -= w;
                }
                Ok(acc)
            }
            CatalogMeasure::WorstCase => Ok(-x.min_value()),
            CatalogMeasure::Entropic { theta } => {
                if !(theta > 0.0) {
                    return Err(LabError::InvalidInput(format!("entropic θ must be positive, got {theta}")));
                }
                let m = x.values().iter().map(|v| -v / theta).fold(f64::NEG_INFINITY, f64::max);
                let s = x
                    .space()
                    .probabilities()
                    .iter()
                    .zip(x.values())
                    .fold(0.0, |acc, (p, v)| acc + p * (-v / theta - m).exp());
                Ok(theta * (m + s.ln()))
            }
            CatalogMeasure::Expectation => Ok(-expectation(x)),
        }
    }

    pub fn is_coherent(&self) -> bool {
        !matches!(self, CatalogMeasure::Entropic { .. })
    }
}

impl RiskMeasure for CatalogMeasure {
    fn eval(&self, x: &RandomVariable) -> Result<ExtReal> {
        self.value(x).map(ExtReal::Finite)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Catalog
    }

    fn label(&self) -> String {
        match self {
            CatalogMeasure::Avar { alpha } => format!("avar:alpha={alpha}"),
            CatalogMeasure::WorstCase => "worstcase".into(),
            CatalogMeasure::Entropic { theta } => format!("entropic:theta={theta}"),
            CatalogMeasure::Expectation => "expectation".into(),
        }
    }

    fn scenario_set(&self, space: &Arc<FiniteSpace>) -> Option<Result<ScenarioSet>> {
        match *self {
            CatalogMeasure::Avar { alpha } => Some(avar_vertices(space, alpha)),
            CatalogMeasure::WorstCase => {
                let p = space.probabilities();
                let rows = (0..p.len())
                    .map(|k| (0..p.len()).map(|i| if i == k { 1.0 / p[k] } else { 0.0 }).collect())
                    .collect();
                Some(ScenarioSet::from_rows(space, rows))
            }
            CatalogMeasure::Expectation => Some(ScenarioSet::from_rows(space, vec![vec![1.0; space.len()]])),
            CatalogMeasure::Entropic { .. } => None,
        }
    }
}

/// Parsed `--measure` argument. Scenario files are loaded by the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Catalog(CatalogMeasure),
    ScenarioFile(String),
}

impl FromStr for MeasureSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once(':').unwrap_or((s, ""));
        let param = |name: &str| -> Result<f64> {
            let (k, v) = tail
                .split_once('=')
                .ok_or_else(|| LabError::InvalidInput(format!("'{s}' needs {name}=<value>")))?;
            if k != name {
                return Err(LabError::InvalidInput(format!("unknown parameter '{k}' in '{s}'")));
            }
            v.parse::<f64>().map_err(|_| LabError::InvalidInput(format!("bad number '{v}' in '{s}'")))
        };
        match head {
            "avar" => {
                let alpha = param("alpha")?;
                check_alpha(alpha)?;
                Ok(MeasureSpec::Catalog(CatalogMeasure::Avar { alpha }))
            }
            "entropic" => {
                let theta = param("theta")?;
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(LabError::InvalidInput(format!("entropic θ must be positive, got {theta}")));
                }
                Ok(MeasureSpec::Catalog(CatalogMeasure::Entropic { theta }))
            }
            "worstcase" if tail.is_empty() => Ok(MeasureSpec::Catalog(CatalogMeasure::WorstCase)),
            "expectation" if tail.is_empty() => Ok(MeasureSpec::Catalog(CatalogMeasure::Expectation)),
            "scenario" if !tail.is_empty() => Ok(MeasureSpec::ScenarioFile(tail.to_string())),
            _ => Err(LabError::InvalidInput(format!("unknown measure spec '{s}'"))),
        }
    }
}

/// `inf{m : X + m·1 ∈ C}` by bisection inside a valid bracket.
pub fn acceptance_eval<F>(member: F, x: &RandomVariable, bracket: (f64, f64)) -> Result<f64>
where
    F: Fn(&RandomVariable) -> Result<bool>,
{
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(LabError::BracketInvalid(format!("need m_lo < m_hi, got ({lo}, {hi})")));
    }
    if !member(&x.shift(hi))? {
        return Err(LabError::BracketInvalid(format!("X + {hi}·1 is not accepted")));
    }
    if member(&x.shift(lo))? {
        return Err(LabError::BracketInvalid(format!("X + {lo}·1 is already accepted")));
    }
    let mut failure = None;
    let (a, b) = bisect_predicate(lo, hi, 1e-10, 1e-8, |m| match member(&x.shift(m)) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            true
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(0.5 * (a + b)),
    }
}

/// Widens `(−1, 1)` by doubling until it brackets the threshold.
pub fn find_bracket<F>(member: F, x: &RandomVariable) -> Result<(f64, f64)>
where
    F: Fn(&RandomVariable) -> Result<bool>,
{
    let mut hi = 1.0;
    for _ in 0..200 {
        if member(&x.shift(hi))? {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = -1.0;
    for _ in 0..200 {
        if !member(&x.shift(lo))? {
            break;
        }
        lo *= 2.0;
    }
    if !member(&x.shift(hi))? || member(&x.shift(lo))? {
        return Err(LabError::BracketInvalid("no bracket within 2^200".into()));
    }
    Ok((lo, hi))
}

/// Risk measure induced by a monotone acceptance predicate.
pub struct AcceptanceMeasure<F> {
    pub member: F,
    pub label: String,
}

impl<F> RiskMeasure for AcceptanceMeasure<F>
where
    F: Fn(&RandomVariable) -> Result<bool>,
{
    fn eval(&self, x: &RandomVariable) -> Result<ExtReal> {
        let bracket = find_bracket(&self.member, x)?;
        acceptance_eval(&self.member, x, bracket).map(ExtReal::Finite)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Acceptance
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Subadditive,
    Monotone,
    CashAdditive,
    PositivelyHomogeneous,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    /// Indices into the sample list.
    pub samples: Vec<usize>,
    /// Shift `m` or scale `λ` when the axiom has one.
    pub parameter: Option<f64>,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub measure: String,
    pub subadditive: bool,
    pub monotone: bool,
    pub cash_additive: bool,
    pub positively_homogeneous: bool,
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.subadditive && self.monotone && self.cash_additive && self.positively_homogeneous
    }
}

fn close(a: ExtReal, b: ExtReal, scale: f64, slack: f64) -> bool {
    match (a, b) {
        (ExtReal::PosInf, ExtReal::PosInf) => true,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= AXIOM_TOL * scale + slack,
        _ => false,
    }
}

fn le(a: ExtReal, b: ExtReal, slack: f64) -> bool {
    match (a, b) {
        (_, ExtReal::PosInf) => true,
        (ExtReal::PosInf, ExtReal::Finite(_)) => false,
        (ExtReal::Finite(x), ExtReal::Finite(y)) => x <= y + AXIOM_TOL + slack,
    }
}

fn add(a: ExtReal, b: ExtReal) -> ExtReal {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::Finite(x + y),
        _ => ExtReal::PosInf,
    }
}

/// Checks the four coherence axioms on every unordered pair of distinct
/// samples, every ordered dominated pair, and the fixed shift/scale grids.
pub fn axiom_suite(rho: &dyn RiskMeasure, samples: &[RandomVariable]) -> Result<AxiomReport> {
    if samples.len() < 2 {
        return Err(LabError::InvalidInput("axiom suite needs at least two samples".into()));
    }
    for s in &samples[1..] {
        s.check_space(&samples[0])?;
    }
    let values: Vec<ExtReal> = samples.iter().map(|x| rho.eval(x)).collect::<Result<_>>()?;
    // Each side of a check may carry one evaluation error per term.
    let eps = rho.precision();
    let mut violations = Vec::new();
    let mut checks = 0;

    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            checks += 1;
            let lhs = rho.eval(&samples[i].add(&samples[j])?)?;
            let rhs = add(values[i], values[j]);
            if !le(lhs, rhs, 3.0 * eps) {
                violations.push(AxiomViolation { axiom: Axiom::Subadditive, samples: vec![i, j], parameter: None, lhs, rhs });
            }
        }
    }
    for i in 0..samples.len() {
        for j in 0..samples.len() {
            if i != j && samples[i].dominates(&samples[j])? {
                checks += 1;
                if !le(values[i], values[j], 2.0 * eps) {
                    violations.push(AxiomViolation {
                        axiom: Axiom::Monotone,
                        samples: vec![i, j],
                        parameter: None,
                        lhs: values[i],
                        rhs: values[j],
                    });
                }
            }
        }
    }
    for (i, x) in samples.iter().enumerate() {
        let scale = 1.0 + values[i].finite().map_or(0.0, f64::abs);
        for m in AXIOM_SHIFTS {
            checks += 1;
            let lhs = rho.eval(&x.shift(m))?;
            let rhs = add(values[i], ExtReal::Finite(-m));
            if !close(lhs, rhs, scale + m.abs(), 2.0 * eps) {
                violations.push(AxiomViolation { axiom: Axiom::CashAdditive, samples: vec![i], parameter: Some(m), lhs, rhs });
            }
        }
        for lambda in AXIOM_SCALES {
            checks += 1;
            let lhs = rho.eval(&x.scale(lambda))?;
            let rhs = match values[i] {
                ExtReal::Finite(v) => ExtReal::Finite(lambda * v),
                ExtReal::PosInf => ExtReal::PosInf,
            };
            let rel = rhs.finite().map_or(1.0, |v| v.abs().max(1.0));
            if !close(lhs, rhs, rel, (1.0 + lambda) * eps) {
                violations.push(AxiomViolation {
                    axiom: Axiom::PositivelyHomogeneous,
                    samples: vec![i],
                    parameter: Some(lambda),
                    lhs,
                    rhs,
                });
            }
        }
    }
    let fails = |a: Axiom| violations.iter().any(|v| v.axiom == a);
    Ok(AxiomReport {
        measure: rho.label(),
        subadditive: !fails(Axiom::Subadditive),
        monotone: !fails(Axiom::Monotone),
        cash_additive: !fails(Axiom::CashAdditive),
        positively_homogeneous: !fails(Axiom::PositivelyHomogeneous),
        checks,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FatouMode {
    /// Atomwise convergence with a pointwise dominator.
    Order,
    /// Atomwise convergence with a Luxemburg-norm bound.
    NormBounded(OrliczFunction),
}

#[derive(Debug, Clone, Serialize)]
pub struct FatouReport {
    pub rho_limit: ExtReal,
    /// Infimum over the second half of the prefix, standing in for liminf.
    pub liminf: ExtReal,
    pub margin: Option<f64>,
    pub holds: bool,
    /// Largest Luxemburg norm along the family in norm-bounded mode.
    pub norm_bound: Option<f64>,
    /// Sup-norm residual of the second half, added to the comparison.
    pub allowance: f64,
    pub verdict: String,
}

/// `ρ(X) ≤ liminf ρ(X_n) + 1e−8` on a finite prefix, after checking the
/// family converges in the chosen mode (within `tol` in sup-norm). Only a
/// violation is conclusive.
pub fn fatou_harness(
    rho: &dyn RiskMeasure,
    family: &[RandomVariable],
    limit: &RandomVariable,
    mode: &FatouMode,
    tol: f64,
) -> Result<FatouReport> {
    let conv = order_convergence_check(family, limit, None, tol)?;
    if !conv.converges || !conv.order_bounded {
        return Err(LabError::FamilyNotConvergent(format!(
            "sup-deviation {:.3e} over the second half exceeds {tol:.1e}",
            conv.tail_deviation
        )));
    }
    let norm_bound = match mode {
        FatouMode::Order => None,
        FatouMode::NormBounded(phi) => {
            let mut b: f64 = 0.0;
            for x in family {
                b = b.max(luxemburg_norm(x, phi)?);
            }
            Some(b)
        }
    };
    let rho_limit = rho.eval(limit)?;
    let half = family.len() / 2;
    let mut liminf = ExtReal::PosInf;
    for x in &family[half..] {
        let v = rho.eval(x)?;
        if v < liminf {
            liminf = v;
        }
    }
    // A monotone cash-additive ρ moves by at most the sup-norm distance, so
    // the prefix infimum can undershoot the true liminf by the residual
    // deviation of the second half.
    let allowance = conv.tail_deviation;
    let (holds, margin) = match (rho_limit, liminf) {
        (_, ExtReal::PosInf) => (true, None),
        (ExtReal::PosInf, ExtReal::Finite(_)) => (false, None),
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a <= b + FATOU_TOL + allowance, Some(b - a)),
    };
    Ok(FatouReport {
        rho_limit,
        liminf,
        margin,
        holds,
        norm_bound,
        allowance,
        verdict: if holds { "no violation found".into() } else { "violation".into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Arc<FiniteSpace> {
        FiniteSpace::uniform(2)
    }

    fn rv(s: &Arc<FiniteSpace>, v: &[f64]) -> RandomVariable {
        RandomVariable::new(s, v.to_vec()).unwrap()
    }

    #[test]
    fn avar_half_on_two_atoms() {
        let s = two();
        let q = avar_vertices(&s, 0.5).unwrap();
        assert_eq!(q.len(), 2);
        let x = rv(&s, &[-1.0, 1.0]);
        assert_eq!(scenario_eval(&q, &x).unwrap(), 1.0);
        assert_eq!(CatalogMeasure::Avar { alpha: 0.5 }.value(&x).unwrap(), 1.0);
    }

    #[test]
    fn single_scenario_is_minus_expectation() {
        let s = FiniteSpace::from_probabilities(vec![0.2, 0.3, 0.5]).unwrap();
        let q = ScenarioSet::from_rows(&s, vec![vec![1.0; 3]]).unwrap();
        let x = rv(&s, &[1.0, -4.0, 2.0]);
        assert!((scenario_eval(&q, &x).unwrap() + expectation(&x)).abs() < 1e-15);
        let m = RandomVariable::constant(&s, 2.5);
        let q = avar_vertices(&s, 0.3).unwrap();
        assert!((scenario_eval(&q, &m).unwrap() + 2.5).abs() < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        let s = two();
        assert!(ScenarioSet::from_rows(&s, vec![vec![3.0, -1.0]]).is_err());
        assert!(ScenarioSet::from_rows(&s, vec![vec![1.0, 0.5]]).is_err());
        let empty = ScenarioSet::from_rows(&s, vec![]).unwrap();
        assert_eq!(scenario_eval(&empty, &rv(&s, &[0.0, 0.0])), Err(LabError::EmptyScenarioSet));
        let q = ScenarioSet::from_json(&s, r#"{"densities": [[2.0, 0.0]]}"#).unwrap();
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn acceptance_examples() {
        let s = two();
        let member = |x: &RandomVariable| Ok(expectation(x) >= 0.0);
        let x = rv(&s, &[-1.0, 1.0]);
        let v = acceptance_eval(member, &x, (-1.0, 1.0)).unwrap();
        assert!(v.abs() < 1e-8);
        let y = rv(&s, &[3.0, 5.0]);
        assert!(acceptance_eval(member, &y, (-10.0, 1.0)).unwrap() <= 0.0);
        let base = acceptance_eval(member, &y, (-10.0, 1.0)).unwrap();
        let moved = acceptance_eval(member, &y.shift(1.5), (-10.0, 1.0)).unwrap();
        assert!((moved - (base - 1.5)).abs() < 1e-7);
        assert!(matches!(acceptance_eval(member, &x, (0.5, 1.0)), Err(LabError::BracketInvalid(_))));
    }

    #[test]
    fn axioms_for_coherent_catalog_and_entropic_failure() {
        let s = FiniteSpace::from_probabilities(vec![0.25, 0.25, 0.5]).unwrap();
        let samples = vec![rv(&s, &[1.0, -2.0, 0.5]), rv(&s, &[0.0, 3.0, -1.0]), rv(&s, &[2.0, -1.0, 1.0])];
        for m in [CatalogMeasure::Avar { alpha: 0.3 }, CatalogMeasure::WorstCase, CatalogMeasure::Expectation] {
            let r = axiom_suite(&m, &samples).unwrap();
            assert!(r.all_pass(), "{r:?}");
            let q = m.scenario_set(&s).unwrap().unwrap();
            assert!(axiom_suite(&q, &samples).unwrap().all_pass());
        }
        let s2 = two();
        let ent = CatalogMeasure::Entropic { theta: 1.0 };
        let r = axiom_suite(&ent, &[rv(&s2, &[1.0, -1.0]), rv(&s2, &[-1.0, 1.0])]).unwrap();
        assert!(!r.positively_homogeneous);
        assert!(r.subadditive && r.monotone && r.cash_additive, "{r:?}");
        assert!(r.violations.iter().any(|v| v.parameter == Some(2.0)));
    }

    #[test]
    fn fatou_examples() {
        let s = two();
        let x = rv(&s, &[1.0, -2.0]);
        let m = CatalogMeasure::Avar { alpha: 0.5 };
        let r = fatou_harness(&m, &vec![x.clone(); 6], &x, &FatouMode::Order, 1e-12).unwrap();
        assert!(r.holds && r.margin == Some(0.0));
        let fam: Vec<_> = (1..=200).map(|n| x.shift(1.0 / n as f64)).collect();
        let r = fatou_harness(&m, &fam, &x, &FatouMode::NormBounded(OrliczFunction::Exp), 1e-2).unwrap();
        assert!(r.holds && r.norm_bound.unwrap().is_finite());
        let osc: Vec<_> = (0..10).map(|n| x.shift(if n % 2 == 0 { 1.0 } else { -1.0 })).collect();
        assert!(matches!(
            fatou_harness(&m, &osc, &x, &FatouMode::Order, 1e-6),
            Err(LabError::FamilyNotConvergent(_))
        ));
    }

    #[test]
    fn measure_specs() {
        assert_eq!("worstcase".parse::<MeasureSpec>().unwrap(), MeasureSpec::Catalog(CatalogMeasure::WorstCase));
        assert_eq!(
            "avar:alpha=0.05".parse::<MeasureSpec>().unwrap(),
            MeasureSpec::Catalog(CatalogMeasure::Avar { alpha: 0.05 })
        );
        assert_eq!(
            "scenario:q.json".parse::<MeasureSpec>().unwrap(),
            MeasureSpec::ScenarioFile("q.json".into())
        );
        for bad in ["avar:alpha=0", "avar:beta=0.1", "entropic:theta=-1", "var", "worstcase:x=1"] {
            assert!(bad.parse::<MeasureSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn ext_real_json() {
        assert_eq!(serde_json::to_string(&ExtReal::PosInf).unwrap(), "\"+inf\"");
        assert_eq!(serde_json::to_string(&ExtReal::Finite(1.5)).unwrap(), "1.5");
        let back: ExtReal = serde_json::from_str("\"+inf\"").unwrap();
        assert_eq!(back, ExtReal::PosInf);
    }
}
