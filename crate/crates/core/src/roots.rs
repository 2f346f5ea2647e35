//! Bracketing and bisection for monotone scalar functions.

use crate::scalar::Scalar;

/// Where a nondecreasing function crosses zero on `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing<T> {
    /// Negative everywhere on the interval.
    Below,
    /// Nonnegative everywhere on the interval.
    Above,
    /// `f(lo) < 0 <= f(hi)`.
    Bracket { lo: T, hi: T },
}

/// Expands outward from `start` in doubling steps until the sign changes
/// or `±bound` is reached.
pub fn expand_bracket<T: Scalar, F: FnMut(T) -> T>(mut f: F, start: T, bound: T) -> Crossing<T> {
    let start = start.max(-bound).min(bound);
    let f0 = f(start);
    let mut step = T::lit(0.5);
    let two = T::lit(2.0);
    if f0 < T::zero() {
        let mut lo = start;
        loop {
            let hi = (lo + step).min(bound);
            if f(hi) >= T::zero() {
                return Crossing::Bracket { lo, hi };
            }
            if hi >= bound {
                return Crossing::Below;
            }
            lo = hi;
            step = step * two;
        }
    } else {
        let mut hi = start;
        loop {
            let lo = (hi - step).max(-bound);
            if f(lo) < T::zero() {
                return Crossing::Bracket { lo, hi };
            }
            if lo <= -bound {
                return Crossing::Above;
            }
            hi = lo;
            step = step * two;
        }
    }
}

/// Bisects a bracket with `f(lo) < 0 <= f(hi)` down to width `xtol`, or
/// until the midpoint stops moving. Returns the midpoint of the last bracket.
pub fn bisect<T: Scalar, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, xtol: T) -> T {
    let half = T::lit(0.5);
    for _ in 0..400 {
        if hi - lo <= xtol {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + (hi - lo) * half
}
