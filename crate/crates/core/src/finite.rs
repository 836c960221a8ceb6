//! Finite probability spaces and random variables on them.
//!
//! Sums always run in atom-index order so results are bitwise reproducible.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::norms::luxemburg_norm;
use crate::orlicz::OrliczFunction;

/// Tolerance on `Σ p_i = 1` for spaces built in code.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    probabilities: Vec<f64>,
    labels: Vec<String>,
}

impl FiniteSpace {
    pub fn new(probabilities: Vec<f64>, labels: Vec<String>) -> Result<Arc<Self>> {
        Self::with_tolerance(probabilities, labels, PROBABILITY_SUM_TOL)
    }

    pub fn with_tolerance(probabilities: Vec<f64>, labels: Vec<String>, tol: f64) -> Result<Arc<Self>> {
        if probabilities.is_empty() {
            return Err(LabError::InvalidInput("a space needs at least one atom".into()));
        }
        if labels.len() != probabilities.len() {
            return Err(LabError::InvalidInput(format!(
                "{} labels for {} atoms",
                labels.len(),
                probabilities.len()
            )));
        }
        if let Some((i, p)) = probabilities.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(LabError::InvalidInput(format!("atom {i} has probability {p}, need p > 0")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(LabError::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Arc::new(Self { probabilities, labels }))
    }

    /// Atoms labelled `0, 1, …`.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Arc<Self>> {
        let labels = (0..probabilities.len()).map(|i| i.to_string()).collect();
        Self::new(probabilities, labels)
    }

    pub fn uniform(n: usize) -> Arc<Self> {
        Self::from_probabilities(vec![1.0 / n as f64; n]).expect("uniform space")
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone)]
pub struct RandomVariable {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
}

impl PartialEq for RandomVariable {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.values == other.values
    }
}

/// Serialised as the bare value list; the space travels separately.
impl serde::Serialize for RandomVariable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl RandomVariable {
    pub fn new(space: &Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(LabError::InvalidInput(format!(
                "{} values for a space with {} atoms",
                values.len(),
                space.len()
            )));
        }
        Ok(Self { space: Arc::clone(space), values })
    }

    pub fn constant(space: &Arc<FiniteSpace>, c: f64) -> Self {
        Self { space: Arc::clone(space), values: vec![c; space.len()] }
    }

    pub fn zero(space: &Arc<FiniteSpace>) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { space: Arc::clone(&self.space), values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    pub fn shift(&self, m: f64) -> Self {
        self.map(|x| x + m)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: Arc::clone(&self.space),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_space(&self, other: &Self) -> Result<()> {
        if same_space(&self.space, &other.space) {
            Ok(())
        } else {
            Err(LabError::SpaceMismatch)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `self ≥ other` atomwise.
    pub fn dominates(&self, other: &Self) -> Result<bool> {
        self.check_space(other)?;
        Ok(self.values.iter().zip(&other.values).all(|(a, b)| a >= b))
    }
}

pub fn expectation(x: &RandomVariable) -> f64 {
    x.space.probabilities.iter().zip(&x.values).fold(0.0, |acc, (p, v)| acc + p * v)
}

/// `E[XY]`.
pub fn pairing(x: &RandomVariable, y: &RandomVariable) -> Result<f64> {
    x.check_space(y)?;
    Ok(x.space
        .probabilities
        .iter()
        .zip(x.values.iter().zip(&y.values))
        .fold(0.0, |acc, (p, (a, b))| acc + p * a * b))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub converges: bool,
    /// `max_i |X_n(i) − X(i)|` for every term.
    pub deviations: Vec<f64>,
    /// Largest deviation over the second half of the prefix.
    pub tail_deviation: f64,
    pub order_bounded: bool,
    /// Atomwise `sup_n |X_n|`.
    #[serde(serialize_with = "serialize_values")]
    pub dominator: RandomVariable,
    /// Luxemburg norm of the dominator, when an Orlicz function is supplied.
    pub dominator_norm: Option<f64>,
}

fn serialize_values<S: serde::Serializer>(x: &RandomVariable, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.values().serialize(s)
}

/// Checks atomwise (= almost sure, on a finite space) convergence of a finite
/// prefix to `limit`, and records the pointwise dominator.
///
/// A prefix converges when every term in its second half lies within `tol`
/// of the limit in sup-norm. Order boundedness is automatic on a finite space.
pub fn order_convergence_check(
    sequence: &[RandomVariable],
    limit: &RandomVariable,
    phi: Option<&OrliczFunction>,
    tol: f64,
) -> Result<ConvergenceReport> {
    if sequence.is_empty() {
        return Err(LabError::EmptySequence);
    }
    let mut dominator = RandomVariable::zero(limit.space());
    let mut deviations = Vec::with_capacity(sequence.len());
    for x in sequence {
        x.check_space(limit)?;
        let d = x.values.iter().zip(&limit.values).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
        deviations.push(d);
        for (dv, v) in dominator.values.iter_mut().zip(&x.values) {
            *dv = dv.max(v.abs());
        }
    }
    let half = sequence.len() / 2;
    let tail_deviation = deviations[half..].iter().fold(0.0, |m: f64, d| m.max(*d));
    let order_bounded = dominator.values.iter().all(|v| v.is_finite());
    let dominator_norm = match phi {
        Some(phi) => Some(luxemburg_norm(&dominator, phi)?),
        None => None,
    };
    Ok(ConvergenceReport {
        converges: tail_deviation <= tol,
        deviations,
        tail_deviation,
        order_bounded,
        dominator,
        dominator_norm,
    })
}
