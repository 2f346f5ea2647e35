//! Payoff difference between recommending the risky and the safe action,
//! the best-response cutoff against fixed posteriors, and the stationary
//! cutoff equilibrium.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::Cutoff;
use crate::gaussian::{norm_sf, posteriors_of_cutoff, signal_sf, success_prob_parts, Posteriors};
use crate::model::{ModelError, Primitives, Reputation};
use crate::roots::bisect;
use crate::scalar::Scalar;

/// Search interval half-width, in signal units.
pub const BRACKET_BOUND: f64 = 60.0;
/// Root tolerance of the best-response search.
pub const ROOT_TOL: f64 = 1e-12;
/// Fixed-point tolerance of the equilibrium iteration.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Points in the sign scan of the payoff difference.
pub const SCAN_POINTS: usize = 513;
/// Half-width of the scanned region beyond the signal means, in units of
/// `sigma_l`; outside it the success probability is monotone.
const SCAN_REACH: f64 = 8.0;

/// Which payoff the expert maximizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffMode {
    /// Unimplemented risky recommendations earn nothing.
    #[default]
    Faithful,
    /// Unimplemented risky recommendations earn `W(r_unimplemented)`.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("payoff difference is not single-crossing at rho = {rho}: {reason}")]
    NonMonotone { rho: f64, reason: String },
    #[error("no convergence after {iterations} iterations (residual {residual}, last iterates {last:?})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: [f64; 2],
    },
    #[error("iteration cycles between {a} and {b} after {iterations} iterations")]
    CycleDetected { a: f64, b: f64, iterations: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Coefficient multiplying `lambda * p'(x)` in the slope of the payoff
/// difference: `W(r_success) - W(r_failure) + b`.
#[inline]
pub fn slope_coefficient<T: Scalar>(post: &Posteriors<T>, p: &Primitives<T>) -> T {
    p.payoff(post.r_success) - p.payoff(post.r_failure) + p.b
}

/// Payoff difference `U_R(x) - U_S` at signal `x`.
pub fn delta<T: Scalar>(
    x: T,
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> T {
    let px = success_prob_parts(x, rho, p).p;
    delta_at_prob(px, rho, post, p, mode)
}

/// Payoff difference as a function of the success probability itself.
pub fn delta_at_prob<T: Scalar>(
    px: T,
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> T {
    let lam = p.lambda_at(rho.get());
    let w1 = p.payoff(post.r_success);
    let w0 = p.payoff(post.r_failure);
    let mut risky = lam * (px * w1 + (T::one() - px) * w0) + p.b * lam * px;
    if mode == PayoffMode::Extended {
        risky = risky + (T::one() - lam) * p.payoff(post.r_unimplemented);
    }
    risky - p.payoff(post.r_safe)
}

/// `d delta / dx = lambda * p'(x) * (W(r_success) - W(r_failure) + b)`.
pub fn delta_dx<T: Scalar>(x: T, rho: Reputation<T>, post: &Posteriors<T>, p: &Primitives<T>) -> T {
    let lam = p.lambda_at(rho.get());
    lam * success_prob_parts(x, rho, p).dx * slope_coefficient(post, p)
}

/// Limits of the payoff difference as `p(x) -> 0` and `p(x) -> 1`.
pub fn delta_limits<T: Scalar>(
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> (T, T) {
    (
        delta_at_prob(T::zero(), rho, post, p, mode),
        delta_at_prob(T::one(), rho, post, p, mode),
    )
}

/// Cutoff that is optimal against fixed posteriors.
///
/// The payoff difference is single-crossing only when the slope coefficient
/// is nonnegative; a negative coefficient, or more than one sign change on
/// the scan grid, is reported as `NonMonotone`. A zero coefficient (or no
/// implementation) makes the difference constant, which is resolved to a
/// boundary strategy with ties going to the risky action.
pub fn best_response_cutoff<T: Scalar>(
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<Cutoff<T>, SolveError> {
    let k = slope_coefficient(post, p);
    if k < T::zero() && p.lambda_at(rho.get()) > T::zero() {
        return Err(SolveError::NonMonotone {
            rho: rho.get().as_f64(),
            reason: format!(
                "W(r_success) - W(r_failure) + b = {} is negative",
                k.as_f64()
            ),
        });
    }
    let best = optimal_cutoff_rule(rho, post, p, mode);
    if best.sign_changes > 1 {
        return Err(SolveError::NonMonotone {
            rho: rho.get().as_f64(),
            reason: format!(
                "{} sign changes of the payoff difference (best cutoff rule {})",
                best.sign_changes, best.cutoff
            ),
        });
    }
    Ok(best.cutoff)
}

/// Result of optimizing over cutoff rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffRule<T> {
    pub cutoff: Cutoff<T>,
    /// Sign changes of the payoff difference found on the scan grid.
    pub sign_changes: usize,
}

/// Expected gain of the cutoff rule `c` over always recommending safe:
/// `V(c) = integral over x >= c of delta(x) f_X(x) dx`, in closed form.
pub fn cutoff_rule_value<T: Scalar>(
    c: Cutoff<T>,
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> T {
    let lam = p.lambda_at(rho.get());
    let extra = match mode {
        PayoffMode::Faithful => T::zero(),
        PayoffMode::Extended => (T::one() - lam) * p.payoff(post.r_unimplemented),
    };
    let ws = p.payoff(post.r_safe);
    let gain_good = lam * (p.payoff(post.r_success) + p.b) + extra - ws;
    let gain_bad = lam * p.payoff(post.r_failure) + extra - ws;
    let (m0, m1) = p.signal_means();
    let r = rho.get();
    let above = |mu: T| match c {
        Cutoff::AlwaysRisky => T::one(),
        Cutoff::AlwaysSafe => T::zero(),
        Cutoff::Interior(x) => {
            r * norm_sf((x - mu) / p.sigma_h) + (T::one() - r) * norm_sf((x - mu) / p.sigma_l)
        }
    };
    p.pi * gain_good * above(m1) + (T::one() - p.pi) * gain_bad * above(m0)
}

/// Best rule among cutoff strategies against fixed posteriors.
///
/// Scans the payoff difference on a grid covering the signal's bulk plus
/// the two bracket ends. With a single upward crossing that root is
/// returned; with several sign changes the upward crossings and the two
/// boundary rules are compared by [`cutoff_rule_value`].
pub fn optimal_cutoff_rule<T: Scalar>(
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> CutoffRule<T> {
    let f = |x: T| delta(x, rho, post, p, mode);
    let k = slope_coefficient(post, p);
    if k == T::zero() || p.lambda_at(rho.get()) == T::zero() {
        let cutoff = if f(p.signal_midpoint()) >= T::zero() {
            Cutoff::AlwaysRisky
        } else {
            Cutoff::AlwaysSafe
        };
        return CutoffRule {
            cutoff,
            sign_changes: 0,
        };
    }
    let bound = T::lit(BRACKET_BOUND);
    let (m0, m1) = p.signal_means();
    let reach = T::lit(SCAN_REACH) * p.sigma_l;
    let lo = (m0.min(m1) - reach).max(-bound);
    let hi = (m0.max(m1) + reach).min(bound);
    let n = SCAN_POINTS - 1;
    let mut grid = Vec::with_capacity(SCAN_POINTS + 2);
    if lo > -bound {
        grid.push(-bound);
    }
    for i in 0..=n {
        grid.push(lo + (hi - lo) * T::lit(i as f64) / T::lit(n as f64));
    }
    if hi < bound {
        grid.push(bound);
    }
    let values: Vec<T> = grid.iter().map(|&x| f(x)).collect();
    let mut sign_changes = 0;
    let mut ups = Vec::new();
    for i in 1..grid.len() {
        let (a, b) = (values[i - 1] >= T::zero(), values[i] >= T::zero());
        if a != b {
            sign_changes += 1;
            if b {
                ups.push(bisect(f, grid[i - 1], grid[i], T::tol(ROOT_TOL)));
            }
        }
    }
    let cutoff = match (sign_changes, ups.as_slice()) {
        (0, _) if values[0] >= T::zero() => Cutoff::AlwaysRisky,
        (0, _) => Cutoff::AlwaysSafe,
        (1, [root]) => Cutoff::Interior(*root),
        _ => {
            let mut best = Cutoff::AlwaysRisky;
            let mut best_value = cutoff_rule_value(best, rho, post, p, mode);
            let candidates = ups
                .iter()
                .map(|&x| Cutoff::Interior(x))
                .chain(std::iter::once(Cutoff::AlwaysSafe));
            for c in candidates {
                let v = cutoff_rule_value(c, rho, post, p, mode);
                if v > best_value {
                    best = c;
                    best_value = v;
                }
            }
            best
        }
    };
    CutoffRule {
        cutoff,
        sign_changes,
    }
}

/// Best response to the posteriors generated by cutoff `c`; the map whose
/// fixed points are equilibria.
pub fn best_response_to_cutoff<T: Scalar>(
    c: Cutoff<T>,
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<Cutoff<T>, SolveError> {
    let post = posteriors_of_cutoff(c, rho, p);
    best_response_cutoff(rho, &post, p, mode)
}

/// `1 - F_X(c)`: ex-ante probability of a risky recommendation.
pub fn experimentation_rate<T: Scalar>(c: Cutoff<T>, rho: Reputation<T>, p: &Primitives<T>) -> T {
    match c {
        Cutoff::AlwaysRisky => T::one(),
        Cutoff::Interior(x) => signal_sf(x, rho, p),
        Cutoff::AlwaysSafe => T::zero(),
    }
}

/// A solved cutoff equilibrium at one reputation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct Equilibrium<T> {
    pub cutoff: Cutoff<T>,
    pub posteriors: Posteriors<T>,
    pub eps: T,
    /// Number of cutoff updates before the fixed point was reached.
    pub iterations: usize,
    /// `|BR(c) - c|` at the returned cutoff.
    pub residual: T,
}

/// Controls for the damped best-response iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    pub damping: T,
    /// Starting cutoff; the signal midpoint when `None`.
    pub start: Option<Cutoff<T>>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            damping: T::lit(0.5),
            start: None,
            tol: T::tol(FIXED_POINT_TOL),
            max_iter: 10_000,
        }
    }
}

/// Solves for the stationary cutoff equilibrium with default options.
pub fn solve_equilibrium<T: Scalar>(
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<Equilibrium<T>, SolveError> {
    solve_equilibrium_with(rho, p, mode, &SolveOptions::default())
}

/// Damped best-response iteration `c <- (1 - a) c + a BR(c)`.
///
/// Steps that touch a boundary strategy jump straight to the best response.
/// When two successive best responses coincide exactly the map is flat
/// there and the iterate jumps to it undamped. Trial cutoffs whose
/// posteriors make the payoff difference cross more than once are mapped to
/// the best cutoff rule; the returned equilibrium itself must pass the
/// single-crossing check of [`best_response_cutoff`].
pub fn solve_equilibrium_with<T: Scalar>(
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
    opts: &SolveOptions<T>,
) -> Result<Equilibrium<T>, SolveError> {
    let mut c = opts
        .start
        .unwrap_or_else(|| Cutoff::Interior(p.signal_midpoint()));
    let mut prev: Option<Cutoff<T>> = None;
    let mut last_br: Option<Cutoff<T>> = None;
    let mut repeats = 0;
    for updates in 0..opts.max_iter {
        let post = posteriors_of_cutoff(c, rho, p);
        let br = optimal_cutoff_rule(rho, &post, p, mode).cutoff;
        if c.close_to(br, opts.tol) {
            best_response_cutoff(rho, &post, p, mode)?;
            return Ok(Equilibrium {
                cutoff: c,
                posteriors: post,
                eps: experimentation_rate(c, rho, p),
                iterations: updates,
                residual: c.distance(br),
            });
        }
        let next = match (c, br) {
            (Cutoff::Interior(a), Cutoff::Interior(b)) if last_br != Some(br) => {
                Cutoff::Interior(a + opts.damping * (b - a))
            }
            _ => br,
        };
        if let Some(q) = prev {
            if next.close_to(q, opts.tol) && !next.close_to(c, opts.tol) {
                repeats += 1;
                if repeats >= 3 {
                    return Err(SolveError::CycleDetected {
                        a: c.value().as_f64(),
                        b: next.value().as_f64(),
                        iterations: updates + 1,
                    });
                }
            } else {
                repeats = 0;
            }
        }
        prev = Some(c);
        last_br = Some(br);
        c = next;
    }
    let post = posteriors_of_cutoff(c, rho, p);
    let br = optimal_cutoff_rule(rho, &post, p, mode).cutoff;
    Err(SolveError::NoConvergence {
        iterations: opts.max_iter,
        residual: c.distance(br).as_f64(),
        last: [
            prev.map_or(f64::NAN, |q| q.value().as_f64()),
            c.value().as_f64(),
        ],
    })
}
