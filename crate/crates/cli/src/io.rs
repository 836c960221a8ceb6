use std::path::Path;
use std::sync::Arc;

use orlicz_core::{FiniteSpace, LabError, RandomVariable};
use serde::{Deserialize, Serialize};

pub const EXIT_NOT_MEMBER: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Seed for every randomised search.
pub const SEED_VAR: &str = "ORLICZ_LAB_SEED";

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn payload(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Invalid(m) => ("invalid-input", m),
            CliError::Numeric(m) => ("numeric-failure", m),
        };
        serde_json::json!({ "error": kind, "message": message, "exit_code": self.exit_code() })
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        if e.is_numeric() || matches!(e, LabError::CertificateVerification(_)) {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

#[derive(Debug, Deserialize)]
struct PositionRow {
    atom: String,
    probability: f64,
    value: f64,
}

/// A position read from a CSV file.
#[derive(Debug, Clone)]
pub struct Position {
    pub space: Arc<FiniteSpace>,
    pub x: RandomVariable,
}

pub fn read_position(path: &Path) -> CliResult<Position> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| invalid(format!("{}: {e}", path.display())))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["atom", "probability", "value"] {
        return Err(invalid(format!("{}: header must be atom,probability,value", path.display())));
    }
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    let mut values = Vec::new();
    for row in reader.deserialize::<PositionRow>() {
        let row = row.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if !row.value.is_finite() {
            return Err(invalid(format!("{}: atom {} has a non-finite value", path.display(), row.atom)));
        }
        labels.push(row.atom);
        probs.push(row.probability);
        values.push(row.value);
    }
    let space = FiniteSpace::new(probs, labels)?;
    let x = RandomVariable::new(&space, values)?;
    Ok(Position { space, x })
}

/// Positions from several files; they must share one space.
pub fn read_positions(paths: &[impl AsRef<Path>]) -> CliResult<(Arc<FiniteSpace>, Vec<RandomVariable>)> {
    let first = read_position(paths[0].as_ref())?;
    let space = first.space.clone();
    let mut xs = vec![first.x];
    for p in &paths[1..] {
        let pos = read_position(p.as_ref())?;
        if *pos.space != *space {
            return Err(invalid(format!("{} lives on a different space than {}", p.as_ref().display(), paths[0].as_ref().display())));
        }
        xs.push(RandomVariable::new(&space, pos.x.values().to_vec())?);
    }
    Ok((space, xs))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn seed() -> CliResult<u64> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().map_err(|_| invalid(format!("{SEED_VAR} must be an unsigned integer, got '{s}'"))),
        Err(_) => Ok(0),
    }
}

pub fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must be positive, got {v}")))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(value).map_err(|e| CliError::Numeric(format!("report serialisation failed: {e}")))
}
