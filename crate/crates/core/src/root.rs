//! Bracketed bisection for strictly monotone functions on `(0, ∞)`.
//!
//! Every root the allocator needs (minimum bandwidths, inverse gradients,
//! the bandwidth multiplier) is a level set of a strictly monotone map, so
//! plain bisection with a geometric midpoint is enough. The bracket grows by
//! doubling (or halving) until it straddles the target.

use crate::error::{Error, Result};

/// Maximum number of doublings/halvings applied to either bracket end.
pub const MAX_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// Final bracket around a level-set crossing.
///
/// `below` and `above` name the side of the target on which `f` sits: for an
/// increasing function `f(below) <= target <= f(above)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub below: f64,
    pub above: f64,
}

impl Bracket {
    pub fn midpoint(&self) -> f64 {
        geometric_mid(self.below, self.above)
    }
}

fn geometric_mid(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo * (hi / lo).sqrt()
}

/// Solve `f(x) = target` for `x > 0`, starting from the guess `[lo, hi]`.
///
/// On return the bracket width satisfies `hi/lo - 1 <= rel_tol` (or the two
/// ends are adjacent floats).
pub fn solve_monotone<F>(f: F, target: f64, lo: f64, hi: f64, shape: Monotone, rel_tol: f64) -> Result<Bracket>
where
    F: Fn(f64) -> f64,
{
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("invalid initial bracket [{lo}, {hi}]")));
    }
    // `up(x)` is true when x lies beyond the crossing (f on the far side).
    let up = |x: f64| -> bool {
        let v = f(x);
        match shape {
            Monotone::Increasing => v >= target,
            Monotone::Decreasing => v <= target,
        }
    };

    let (mut lo, mut hi) = (lo, hi);
    let mut grown = 0;
    while !up(hi) {
        if grown == MAX_EXPANSIONS {
            return Err(Error::Bracket(format!(
                "upper end still short of target {target:e} after {MAX_EXPANSIONS} doublings (hi = {hi:e})"
            )));
        }
        lo = hi;
        hi *= 2.0;
        grown += 1;
    }
    let mut shrunk = 0;
    while up(lo) {
        if shrunk == MAX_EXPANSIONS {
            return Err(Error::Bracket(format!("lower end still past target {target:e} after {MAX_EXPANSIONS} halvings (lo = {lo:e})")));
        }
        hi = lo;
        lo *= 0.5;
        shrunk += 1;
    }

    // Invariant: !up(lo) && up(hi).
    for _ in 0..256 {
        if hi / lo - 1.0 <= rel_tol {
            break;
        }
        let mid = geometric_mid(lo, hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if up(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let (below, above) = match shape {
        Monotone::Increasing => (lo, hi),
        Monotone::Decreasing => (hi, lo),
    };
    Ok(Bracket { below, above })
}
