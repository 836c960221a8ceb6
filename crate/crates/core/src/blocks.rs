//! Symbolic disjoint indicator blocks `t·1_A` on thirds of `[0, 1)`.
//!
//! A block is a (height, mass) pair with a positional interval. The mass is
//! authoritative: for deep witnesses it falls far below the spacing of
//! doubles near 1/3, so `hi - lo` need not reproduce it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::finite::{FiniteSpace, RandomVariable};
use crate::norms::indicator_luxemburg;
use crate::orlicz::{delta2_witnesses, OrliczFunction};

pub const REGION_MASS: f64 = 1.0 / 3.0;
/// Slack for closed-form identities evaluated in floating point.
pub const BLOCK_IDENTITY_TOL: f64 = 1e-12;
/// Witness search cap used when building sequences.
pub const DEFAULT_T_CAP: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Omega1,
    Omega2,
    Omega3,
}

impl Region {
    pub fn start(self) -> f64 {
        match self {
            Region::Omega1 => 0.0,
            Region::Omega2 => 1.0 / 3.0,
            Region::Omega3 => 2.0 / 3.0,
        }
    }

    pub fn end(self) -> f64 {
        match self {
            Region::Omega1 => 1.0 / 3.0,
            Region::Omega2 => 2.0 / 3.0,
            Region::Omega3 => 1.0,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Omega1 => "omega1",
            Region::Omega2 => "omega2",
            Region::Omega3 => "omega3",
        })
    }
}

impl FromStr for Region {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega1" | "1" => Ok(Region::Omega1),
            "omega2" | "2" => Ok(Region::Omega2),
            "omega3" | "3" => Ok(Region::Omega3),
            other => Err(LabError::InvalidInput(format!("unknown region '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub t: f64,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSequence {
    pub region: Region,
    pub blocks: Vec<Block>,
    /// Witness index `n` behind each block, when generated from witnesses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness_indices: Vec<u32>,
}

impl BlockSequence {
    /// Packs `(height, mass)` pairs left to right from the start of `region`.
    pub fn pack(region: Region, entries: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total > REGION_MASS * (1.0 + 1e-15) {
            return Err(LabError::RegionOverflow(format!(
                "blocks need mass {total} but {region} has {REGION_MASS}"
            )));
        }
        let mut cursor = 0.0;
        let mut blocks = Vec::with_capacity(entries.len());
        for &(t, p) in entries {
            if !(p > 0.0 && t.is_finite() && t >= 0.0) {
                return Err(LabError::InvalidInput(format!("block needs t ≥ 0 and p > 0, got ({t}, {p})")));
            }
            let lo = region.start() + cursor;
            cursor += p;
            blocks.push(Block { t, p, lo, hi: region.start() + cursor });
        }
        Ok(Self { region, blocks, witness_indices: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.blocks.iter().map(|b| b.p).sum()
    }

    /// Overlap measure between distinct blocks. Packing is sequential, so this
    /// is zero unless the sequence was edited by hand.
    pub fn overlap_measure(&self) -> f64 {
        let mut iv: Vec<(f64, f64)> = self.blocks.iter().map(|b| (b.lo, b.hi)).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        iv.windows(2).map(|w| (w[0].1 - w[1].0).max(0.0)).sum()
    }
}

/// `X_n = t_n·1_{A_n}` with `P(A_n) = 1/(2ⁿΦ(t_n))`, and dual blocks
/// `Y_n = 1_{A_n}/(t_n P(A_n))` on the same sets.
pub fn build_disjoint_sequence(
    phi: &OrliczFunction,
    count: u32,
    region: Region,
) -> Result<(BlockSequence, BlockSequence)> {
    let witnesses = delta2_witnesses(phi, count, DEFAULT_T_CAP)?;
    let mut xs = Vec::with_capacity(witnesses.len());
    let mut ys = Vec::with_capacity(witnesses.len());
    for w in &witnesses {
        let p = 1.0 / (2f64.powi(w.n as i32) * w.phi_t);
        xs.push((w.t, p));
        ys.push((1.0 / (w.t * p), p));
    }
    let mut x = BlockSequence::pack(region, &xs)?;
    let mut y = BlockSequence::pack(region, &ys)?;
    let idx: Vec<u32> = witnesses.iter().map(|w| w.n).collect();
    x.witness_indices = idx.clone();
    y.witness_indices = idx;
    Ok((x, y))
}

/// `(Σ_{n≤N} p_n Φ(t_n/λ), 2^{-N})`. The tail bound needs `λ ≥ 1` and the
/// witness normalisation `p_nΦ(t_n) = 2⁻ⁿ`.
pub fn series_modular(blocks: &BlockSequence, phi: &OrliczFunction, lambda: f64, n: usize) -> Result<(f64, f64)> {
    if !(lambda >= 1.0) {
        return Err(LabError::InvalidLambda(lambda));
    }
    if blocks.is_empty() {
        return Ok((0.0, 0.0));
    }
    let upto = n.min(blocks.len());
    let value = blocks.blocks[..upto].iter().fold(0.0, |acc, b| acc + b.p * phi.eval(b.t / lambda));
    Ok((value, 0.5f64.powi(upto as i32)))
}

/// `E[X_m Y_n]`: zero for distinct blocks of a packed pair.
pub fn block_pairing(x: &Block, y: &Block) -> f64 {
    if x.lo == y.lo && x.p == y.p {
        x.t * x.p * y.t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRow {
    pub n: u32,
    pub t: f64,
    pub p: f64,
    pub pairing: f64,
    pub x_norm: f64,
    pub y_orlicz_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockInvariantReport {
    pub rows: Vec<BlockRow>,
    pub series_modular: f64,
    pub tail_bound: f64,
    pub overlap_measure: f64,
    pub total_mass: f64,
    pub min_x_norm: f64,
    pub max_y_orlicz_norm: f64,
    pub holds: bool,
}

/// Re-derives the block guarantees: unit pairings, `‖X_n‖_Φ ∈ (1/2, 1]`,
/// `‖Y_n‖_Ψ < 2` for the Orlicz norm, and the modular of the sum.
pub fn block_invariants(phi: &OrliczFunction, x: &BlockSequence, y: &BlockSequence) -> Result<BlockInvariantReport> {
    if x.len() != y.len() {
        return Err(LabError::InvalidInput("X and Y sequences differ in length".into()));
    }
    let mut rows = Vec::with_capacity(x.len());
    for (k, (xb, yb)) in x.blocks.iter().zip(&y.blocks).enumerate() {
        let n = x.witness_indices.get(k).copied().unwrap_or(k as u32 + 1);
        let inv = phi.inverse(1.0 / xb.p);
        rows.push(BlockRow {
            n,
            t: xb.t,
            p: xb.p,
            pairing: block_pairing(xb, yb),
            x_norm: indicator_luxemburg(phi, xb.t, xb.p),
            // ‖c·1_A‖ in the Orlicz norm is c·P(A)·Φ⁻¹(1/P(A)).
            y_orlicz_norm: yb.t * yb.p * inv,
        });
    }
    let (value, tail) = series_modular(x, phi, 1.0, x.len())?;
    let min_x_norm = rows.iter().map(|r| r.x_norm).fold(f64::INFINITY, f64::min);
    let max_y_orlicz_norm = rows.iter().map(|r| r.y_orlicz_norm).fold(0.0, f64::max);
    let overlap = x.overlap_measure();
    let holds = rows.iter().all(|r| {
        (r.pairing - 1.0).abs() <= BLOCK_IDENTITY_TOL
            && r.x_norm > 0.5
            && r.x_norm <= 1.0 + BLOCK_IDENTITY_TOL
            && r.y_orlicz_norm < 2.0
    }) && value <= 1.0 + BLOCK_IDENTITY_TOL
        && value + tail >= 1.0 - BLOCK_IDENTITY_TOL
        && overlap == 0.0
        && x.total_mass() <= REGION_MASS;
    Ok(BlockInvariantReport {
        rows,
        series_modular: value,
        tail_bound: tail,
        overlap_measure: overlap,
        total_mass: x.total_mass(),
        min_x_norm,
        max_y_orlicz_norm,
        holds,
    })
}

/// Finite space with one atom per block and one remainder atom, plus the
/// blocks of each sequence as random variables on it. Sequences must share
/// their support sets (as an `X`/`Y` pair does) or be given on distinct
/// regions.
pub fn discretize(sequences: &[&BlockSequence]) -> Result<(Arc<FiniteSpace>, Vec<Vec<RandomVariable>>)> {
    // Distinct supports keyed by (lo, p).
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for seq in sequences {
        for b in &seq.blocks {
            if !atoms.iter().any(|a| a.0 == b.lo && a.1 == b.p) {
                atoms.push((b.lo, b.p));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let used: f64 = atoms.iter().map(|a| a.1).sum();
    let rest = 1.0 - used;
    let mut probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let mut labels: Vec<String> = atoms.iter().map(|a| format!("[{:.17e},+{:.6e})", a.0, a.1)).collect();
    if rest > 0.0 {
        probs.push(rest);
        labels.push("rest".into());
    }
    let space = FiniteSpace::with_tolerance(probs, labels, 1e-12)?;
    let mut out = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let mut vars = Vec::with_capacity(seq.len());
        for b in &seq.blocks {
            let mut v = vec![0.0; space.len()];
            let k = atoms.iter().position(|a| a.0 == b.lo && a.1 == b.p).expect("atom registered above");
            v[k] = b.t;
            vars.push(RandomVariable::new(&space, v)?);
        }
        out.push(vars);
    }
    Ok((space, out))
}
