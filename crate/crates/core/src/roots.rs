//! Scalar search routines shared by the norm, conjugate and risk modules.

use crate::error::{LabError, Result};

/// Largest argument we are willing to hand to an Orlicz function.
pub const EVAL_CAP: f64 = 1e300;

/// Bisection on a monotone predicate: `pred(lo)` is false, `pred(hi)` is true.
/// Stops once `hi - lo <= abs_tol + rel_tol * |hi|` and returns `(lo, hi)`.
pub fn bisect_predicate<F>(mut lo: f64, mut hi: f64, abs_tol: f64, rel_tol: f64, mut pred: F) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    // 2000 halvings cover any pair of finite doubles.
    for _ in 0..2000 {
        if hi - lo <= abs_tol + rel_tol * hi.abs() {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Expands `hi` by doubling from `start` until `pred(hi)` holds.
pub fn expand_up<F>(start: f64, max_doublings: usize, mut pred: F) -> Result<f64>
where
    F: FnMut(f64) -> bool,
{
    let mut hi = start;
    for _ in 0..=max_doublings {
        if pred(hi) {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() || hi > EVAL_CAP {
            break;
        }
    }
    Err(LabError::NumericFailure(format!(
        "no upper bracket found after {max_doublings} doublings from {start:e}"
    )))
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F>(mut a: f64, mut b: f64, tol: f64, mut f: F) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
