//! Convex conjugates of risk measures, biconjugates over probe lists, and
//! recovery of scenario sets from conjugate zeros.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::finite::{expectation, pairing, FiniteSpace, RandomVariable};
use crate::lp::{LinearProgram, LpOutcome, Sense};
use crate::risk::{ExtReal, RiskMeasure, ScenarioSet};

pub const DEFAULT_BOX_RADIUS: f64 = 1e3;
/// Conjugate values this close to zero count as zero.
pub const CONJUGATE_ZERO_TOL: f64 = 1e-9;
const STATIONARITY_TOL: f64 = 1e-8;
const MAX_ASCENT_STEPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ConjugateMode {
    /// Exact: `ρ` must be a finite scenario maximum.
    Polyhedral,
    /// Supremum over `[−M, M]^atoms` with one doubling of `M`.
    Box { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugateFlag {
    Exact,
    /// Box maximiser stayed inside the box.
    Interior,
    /// Maximiser touched the box, but the value did not grow when doubled.
    PossiblyInfinite,
    /// Value grew with the box (box mode) or a growth direction exists.
    Infinite,
}

/// A position along which `E[XY] − ρ(X)` grows linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub direction: Vec<f64>,
    /// `E[XY] − ρ(X)` at the direction; positive.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateValue {
    pub value: ExtReal,
    pub flag: ConjugateFlag,
    /// Convex weights on the scenarios reproducing `−Y` (polyhedral, finite).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthCertificate>,
    /// Box-mode best value before the `+∞` decision.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_value: Option<f64>,
}

/// `ρ*(Y) = sup_X (E[XY] − ρ(X))`.
pub fn conjugate_rho(rho: &dyn RiskMeasure, y: &RandomVariable, mode: ConjugateMode) -> Result<ConjugateValue> {
    match mode {
        ConjugateMode::Polyhedral => {
            let q = rho
                .scenario_set(y.space())
                .ok_or_else(|| LabError::ModeMismatch(format!("{} is not a finite scenario maximum", rho.label())))??;
            polyhedral_conjugate(rho, &q, y)
        }
        ConjugateMode::Box { radius } => {
            if !(radius > 0.0) {
                return Err(LabError::InvalidInput(format!("box radius must be positive, got {radius}")));
            }
            box_conjugate(rho, y, radius)
        }
    }
}

fn polyhedral_conjugate(rho: &dyn RiskMeasure, q: &ScenarioSet, y: &RandomVariable) -> Result<ConjugateValue> {
    if q.is_empty() {
        return Err(LabError::EmptyScenarioSet);
    }
    y.check_space(&q.densities()[0])?;
    // Σ c_k = 1, Σ c_k Y_k = −Y atomwise, c ≥ 0.
    let k = q.len();
    let n = y.space().len();
    let mut lp = LinearProgram::new(k);
    lp.add(vec![1.0; k], Sense::Eq, 1.0);
    for i in 0..n {
        let row: Vec<f64> = q.densities().iter().map(|d| d.values()[i]).collect();
        lp.add(row, Sense::Eq, -y.values()[i]);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok(ConjugateValue {
            value: ExtReal::Finite(0.0),
            flag: ConjugateFlag::Exact,
            weights: Some(sol.x),
            growth: None,
            box_value: None,
        }),
        LpOutcome::Infeasible(cert) => {
            if !cert.verify(&lp) {
                return Err(LabError::NumericFailure("infeasibility certificate failed verification".into()));
            }
            // X_i = w_i / p_i gives E[X Y_k] ≥ −w_0 and E[XY] > w_0.
            let p = y.space().probabilities();
            let direction: Vec<f64> = (0..n).map(|i| cert.multipliers[i + 1] / p[i]).collect();
            let x = RandomVariable::new(y.space(), direction.clone())?;
            let slope = match rho.eval(&x)? {
                ExtReal::Finite(r) => pairing(&x, y)? - r,
                ExtReal::PosInf => f64::NEG_INFINITY,
            };
            if !(slope > 0.0) {
                return Err(LabError::NumericFailure(format!("growth direction has slope {slope}")));
            }
            Ok(ConjugateValue {
                value: ExtReal::PosInf,
                flag: ConjugateFlag::Infinite,
                weights: None,
                growth: Some(GrowthCertificate { direction, slope }),
                box_value: None,
            })
        }
        LpOutcome::Unbounded => Err(LabError::NumericFailure("feasibility LP reported unbounded".into())),
    }
}

/// Projected ascent on the concave map `X ↦ E[XY] − ρ(X)` over a box, with
/// central-difference supergradients and backtracking.
fn box_ascent(rho: &dyn RiskMeasure, y: &RandomVariable, radius: f64) -> Result<(f64, Vec<f64>)> {
    let space = y.space();
    let n = space.len();
    let objective = |v: &[f64]| -> Result<f64> {
        let x = RandomVariable::new(space, v.to_vec())?;
        Ok(match rho.eval(&x)? {
            ExtReal::Finite(r) => pairing(&x, y)? - r,
            ExtReal::PosInf => f64::NEG_INFINITY,
        })
    };
    let clamp = |v: f64| v.clamp(-radius, radius);
    let mut x = vec![0.0; n];
    let mut fx = objective(&x)?;
    let mut step = radius;
    for _ in 0..MAX_ASCENT_STEPS {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            grad[i] = (objective(&xp)? - objective(&xm)?) / (2.0 * h);
        }
        // Projected gradient: zero components pushing out of the box.
        let pg: f64 = grad
            .iter()
            .zip(&x)
            .map(|(g, xi)| if (*xi >= radius && *g > 0.0) || (*xi <= -radius && *g < 0.0) { 0.0 } else { g * g })
            .sum::<f64>()
            .sqrt();
        if pg <= STATIONARITY_TOL {
            break;
        }
        let mut improved = false;
        while step > 1e-14 * radius {
            let cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| clamp(xi + step * g / pg)).collect();
            let fc = objective(&cand)?;
            if fc > fx + 1e-15 * (1.0 + fx.abs()) {
                x = cand;
                fx = fc;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((fx, x))
}

fn box_conjugate(rho: &dyn RiskMeasure, y: &RandomVariable, radius: f64) -> Result<ConjugateValue> {
    let (v1, x1) = box_ascent(rho, y, radius)?;
    let touches = x1.iter().any(|v| v.abs() >= radius * (1.0 - 1e-9));
    if !touches {
        return Ok(ConjugateValue {
            value: ExtReal::Finite(v1),
            flag: ConjugateFlag::Interior,
            weights: None,
            growth: None,
            box_value: Some(v1),
        });
    }
    let (v2, x2) = box_ascent(rho, y, 2.0 * radius)?;
    if v2 > v1 + 1e-6 * (1.0 + v1.abs()) {
        let slope = objective_at(rho, y, &x2)?;
        return Ok(ConjugateValue {
            value: ExtReal::PosInf,
            flag: ConjugateFlag::Infinite,
            weights: None,
            growth: Some(GrowthCertificate { direction: x2, slope }),
            box_value: Some(v2),
        });
    }
    Ok(ConjugateValue {
        value: ExtReal::Finite(v1),
        flag: ConjugateFlag::PossiblyInfinite,
        weights: None,
        growth: None,
        box_value: Some(v1),
    })
}

fn objective_at(rho: &dyn RiskMeasure, y: &RandomVariable, v: &[f64]) -> Result<f64> {
    let x = RandomVariable::new(y.space(), v.to_vec())?;
    Ok(match rho.eval(&x)? {
        ExtReal::Finite(r) => pairing(&x, y)? - r,
        ExtReal::PosInf => f64::NEG_INFINITY,
    })
}

/// Polyhedral when the measure exposes scenarios, box mode otherwise.
pub fn default_mode(rho: &dyn RiskMeasure, space: &Arc<FiniteSpace>) -> ConjugateMode {
    match rho.scenario_set(space) {
        Some(Ok(_)) => ConjugateMode::Polyhedral,
        _ => ConjugateMode::Box { radius: DEFAULT_BOX_RADIUS },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub y: Vec<f64>,
    pub rho_star: ConjugateValue,
}

/// `max_{Y ∈ probes} (E[XY] − ρ*(Y))` over probes with finite conjugate.
pub fn biconjugate_from_values(x: &RandomVariable, probes: &[ProbeRow]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for row in probes {
        if let ExtReal::Finite(c) = row.rho_star.value {
            let y = RandomVariable::new(x.space(), row.y.clone())?;
            let v = pairing(x, &y)? - c;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or(LabError::AllProbesInfinite)
}

pub fn conjugate_probes(rho: &dyn RiskMeasure, probes: &[RandomVariable], mode: ConjugateMode) -> Result<Vec<ProbeRow>> {
    probes
        .iter()
        .map(|y| Ok(ProbeRow { y: y.values().to_vec(), rho_star: conjugate_rho(rho, y, mode)? }))
        .collect()
}

pub fn biconjugate(rho: &dyn RiskMeasure, x: &RandomVariable, probes: &[RandomVariable], mode: ConjugateMode) -> Result<f64> {
    if probes.is_empty() {
        return Err(LabError::InvalidInput("biconjugate needs at least one probe".into()));
    }
    biconjugate_from_values(x, &conjugate_probes(rho, probes, mode)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionReport {
    pub kept: Vec<usize>,
    pub rejected: Vec<usize>,
    pub scenarios: Vec<Vec<f64>>,
}

/// Keeps candidate densities `Y` with `ρ*(−Y) = 0` and checks that every
/// survivor is a genuine density.
pub fn extract_scenarios(
    rho: &dyn RiskMeasure,
    space: &Arc<FiniteSpace>,
    candidates: &[RandomVariable],
    mode: ConjugateMode,
) -> Result<(ScenarioSet, ExtractionReport)> {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (k, y) in candidates.iter().enumerate() {
        let c = conjugate_rho(rho, &y.scale(-1.0), mode)?;
        match c.value {
            ExtReal::Finite(v) if v.abs() <= CONJUGATE_ZERO_TOL && c.flag != ConjugateFlag::Infinite => kept.push(k),
            _ => rejected.push(k),
        }
    }
    for &k in &kept {
        let y = &candidates[k];
        if y.values().iter().any(|v| *v < -CONJUGATE_ZERO_TOL) || (expectation(y) - 1.0).abs() > CONJUGATE_ZERO_TOL {
            return Err(LabError::HypothesisViolation(format!(
                "candidate {k} has ρ*(−Y) = 0 but is not a density; is ρ coherent?"
            )));
        }
    }
    let rows: Vec<Vec<f64>> = kept
        .iter()
        .map(|&k| candidates[k].values().iter().map(|v| v.max(0.0)).collect())
        .collect();
    let set = ScenarioSet::from_rows(space, rows.clone())
        .or_else(|_| ScenarioSet::from_rows(space, normalise(space, &rows)))?;
    Ok((set, ExtractionReport { kept, rejected, scenarios: rows }))
}

fn normalise(space: &Arc<FiniteSpace>, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let m: f64 = space.probabilities().iter().zip(r).map(|(p, v)| p * v).sum();
            r.iter().map(|v| v / m).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PositionRow {
    pub x: Vec<f64>,
    pub rho: ExtReal,
    pub biconjugate: f64,
    pub gap: bool,
}

/// Report with the field names of the duality JSON schema.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub measure: String,
    pub surrogate: String,
    pub probes: Vec<Vec<f64>>,
    pub rho_star: Vec<ConjugateValue>,
    pub biconjugate: Vec<PositionRow>,
    pub gap: bool,
    pub extracted_scenarios: Vec<Vec<f64>>,
    pub tolerance: f64,
}

pub fn duality_report(
    rho: &dyn RiskMeasure,
    space: &Arc<FiniteSpace>,
    positions: &[RandomVariable],
    probes: &[RandomVariable],
    candidates: &[RandomVariable],
    mode: ConjugateMode,
    tolerance: f64,
) -> Result<DualityReport> {
    let rows = conjugate_probes(rho, probes, mode)?;
    let mut bi = Vec::with_capacity(positions.len());
    for x in positions {
        let r = rho.eval(x)?;
        let b = biconjugate_from_values(x, &rows)?;
        let gap = match r {
            ExtReal::Finite(v) => (v - b).abs() > tolerance,
            ExtReal::PosInf => true,
        };
        bi.push(PositionRow { x: x.values().to_vec(), rho: r, biconjugate: b, gap });
    }
    let extracted = if candidates.is_empty() {
        Vec::new()
    } else {
        extract_scenarios(rho, space, candidates, mode)?.1.scenarios
    };
    let surrogate = match mode {
        ConjugateMode::Polyhedral => format!("polyhedral; supremum over {} probes", probes.len()),
        ConjugateMode::Box { radius } => format!("box radius {radius}; supremum over {} probes", probes.len()),
    };
    Ok(DualityReport {
        measure: rho.label(),
        surrogate,
        probes: rows.iter().map(|r| r.y.clone()).collect(),
        rho_star: rows.into_iter().map(|r| r.rho_star).collect(),
        gap: bi.iter().any(|r| r.gap),
        biconjugate: bi,
        extracted_scenarios: extracted,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{avar_vertices, scenario_eval, CatalogMeasure};

    fn rv(s: &Arc<FiniteSpace>, v: &[f64]) -> RandomVariable {
        RandomVariable::new(s, v.to_vec()).unwrap()
    }

    #[test]
    fn avar_conjugate_examples() {
        let s = FiniteSpace::uniform(2);
        let avar = CatalogMeasure::Avar { alpha: 0.5 };
        let c = conjugate_rho(&avar, &rv(&s, &[-1.0, -1.0]), ConjugateMode::Polyhedral).unwrap();
        assert_eq!(c.value, ExtReal::Finite(0.0));
        let c = conjugate_rho(&avar, &rv(&s, &[-3.0, 1.0]), ConjugateMode::Polyhedral).unwrap();
        assert_eq!(c.value, ExtReal::PosInf);
        assert!(c.growth.unwrap().slope > 0.0);
        // Homogeneity of ρ gives ρ*(W) = λρ*(W), so values are 0 or +∞;
        // scaling a zero-conjugate probe leaves the density set.
        let c2 = conjugate_rho(&avar, &rv(&s, &[-2.0, -2.0]), ConjugateMode::Polyhedral).unwrap();
        assert_eq!(c2.value, ExtReal::PosInf);
        let ent = CatalogMeasure::Entropic { theta: 1.0 };
        assert!(matches!(
            conjugate_rho(&ent, &rv(&s, &[-1.0, -1.0]), ConjugateMode::Polyhedral),
            Err(LabError::ModeMismatch(_))
        ));
    }

    #[test]
    fn box_mode_matches_polyhedral_and_relative_entropy() {
        let s = FiniteSpace::uniform(2);
        let avar = CatalogMeasure::Avar { alpha: 0.5 };
        let c = conjugate_rho(&avar, &rv(&s, &[-3.0, 1.0]), ConjugateMode::Box { radius: 10.0 }).unwrap();
        assert_eq!(c.flag, ConjugateFlag::Infinite);
        let c = conjugate_rho(&avar, &rv(&s, &[-1.5, -0.5]), ConjugateMode::Box { radius: 10.0 }).unwrap();
        assert!(c.value.finite().unwrap().abs() < 1e-7, "{c:?}");

        let ent = CatalogMeasure::Entropic { theta: 1.0 };
        let c = conjugate_rho(&ent, &rv(&s, &[-1.5, -0.5]), ConjugateMode::Box { radius: 50.0 }).unwrap();
        let oracle = 0.5 * (1.5 * 1.5f64.ln() + 0.5 * 0.5f64.ln());
        assert!((c.value.finite().unwrap() - oracle).abs() < 1e-7, "{c:?} vs {oracle}");
    }

    #[test]
    fn biconjugate_examples() {
        let s = FiniteSpace::from_probabilities(vec![0.2, 0.3, 0.5]).unwrap();
        let avar = CatalogMeasure::Avar { alpha: 0.4 };
        let q = avar_vertices(&s, 0.4).unwrap();
        let probes: Vec<_> = q.densities().iter().map(|y| y.scale(-1.0)).collect();
        let x = rv(&s, &[1.0, -2.0, 0.5]);
        let b = biconjugate(&q, &x, &probes, ConjugateMode::Polyhedral).unwrap();
        assert!((b - scenario_eval(&q, &x).unwrap()).abs() < 1e-12);
        assert!((b - avar.value(&x).unwrap()).abs() < 1e-12);

        // Entropic with stationarity probes Y = −softmax(−X).
        let s2 = FiniteSpace::uniform(2);
        let ent = CatalogMeasure::Entropic { theta: 1.0 };
        let x = rv(&s2, &[0.3, -0.8]);
        let w: Vec<f64> = x.values().iter().map(|v| (-v).exp()).collect();
        let z = 0.5 * (w[0] + w[1]);
        let probe = rv(&s2, &[-w[0] / z, -w[1] / z]);
        let b = biconjugate(&ent, &x, &[probe], ConjugateMode::Box { radius: 50.0 }).unwrap();
        assert!((b - ent.value(&x).unwrap()).abs() < 1e-6);

        let far = rv(&s2, &[5.0, -9.0]);
        assert_eq!(
            biconjugate(&avar, &x, &[far], ConjugateMode::Polyhedral).unwrap_err(),
            LabError::AllProbesInfinite
        );
    }

    #[test]
    fn extraction_examples() {
        let s = FiniteSpace::uniform(2);
        let grid: Vec<_> = (0..=8).map(|k| {
            let a = 0.25 * k as f64;
            rv(&s, &[a, 2.0 - a])
        }).chain([rv(&s, &[3.0, -1.0]), rv(&s, &[-0.5, 2.5])]).collect();
        let avar = CatalogMeasure::Avar { alpha: 0.5 };
        let (q, rep) = extract_scenarios(&avar, &s, &grid, ConjugateMode::Polyhedral).unwrap();
        assert_eq!(rep.kept, (0..=8).collect::<Vec<_>>());
        assert_eq!(q.len(), 9);
        let (q, _) = extract_scenarios(&CatalogMeasure::WorstCase, &s, &grid, ConjugateMode::Polyhedral).unwrap();
        assert_eq!(q.len(), 9);
    }
}
