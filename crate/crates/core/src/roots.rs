//! Certified bisection for monotone scalar equations.

use crate::error::{Error, Result};

/// Final bracket of a bisection run: the sign change lies in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisects an increasing sign function: `neg(x)` must hold at `lo` and fail
/// at `hi`.  Stops when the bracket width is at most `xtol` or no float lies
/// strictly between the ends.
pub fn bisect_sign<F: FnMut(f64) -> bool>(
    mut neg: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_steps: usize,
) -> Result<Bracket> {
    if !(lo < hi) {
        return Err(Error::Numeric(format!("empty bracket [{lo}, {hi}]")));
    }
    if !neg(lo) || neg(hi) {
        return Err(Error::Numeric(format!("no sign change on [{lo}, {hi}]")));
    }
    let mut steps = 0;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if steps == max_steps {
            return Err(Error::Numeric(format!(
                "bisection did not converge in {max_steps} steps (bracket [{lo}, {hi}])"
            )));
        }
        steps += 1;
        if neg(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket { lo, hi, steps })
}

/// Bisects an increasing function `f` for its root.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
    max_steps: usize,
) -> Result<Bracket> {
    bisect_sign(|x| f(x) < 0.0, lo, hi, xtol, max_steps)
}
