//! Policy levers: calibrating the success bonus to a target experimentation
//! rate, and sweeping gatekeeping stringency.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cutoff::Cutoff;
use crate::equilibrium::{solve_equilibrium, PayoffMode, SolveError};
use crate::gaussian::{posteriors_of_cutoff, signal_cdf, signal_sf, success_prob};
use crate::model::{ModelError, Primitives, Reputation};
use crate::roots::{bisect, expand_bracket, Crossing};
use crate::scalar::Scalar;

/// Largest accepted gap between the target and the re-solved rate.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("{what} = {value} must lie strictly inside (0,1)")]
    Domain { what: &'static str, value: f64 },
    #[error("target {target} is not above the zero-bonus rate {floor} (implied bonus {bonus})")]
    TargetBelowFloor { target: f64, floor: f64, bonus: f64 },
    #[error("target {target} is not below 1")]
    TargetAtUnity { target: f64 },
    #[error(
        "bonus {bonus} for target {target} re-solves to rate {achieved} (gap {gap}, cutoff {cutoff} vs {achieved_cutoff})"
    )]
    RoundtripFailure {
        target: f64,
        bonus: f64,
        achieved: f64,
        gap: f64,
        cutoff: f64,
        achieved_cutoff: f64,
    },
    #[error("gatekeeping sweep needs b > 0, got {b}")]
    NeedsBonus { b: f64 },
    #[error("t grid invalid: {0}")]
    Grid(String),
    #[error("implementation or success probability is zero at cutoff {cutoff}")]
    Degenerate { cutoff: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Inverse of the unconditional signal CDF, by bisection.
pub fn quantile_fx<T: Scalar>(
    q: T,
    rho: Reputation<T>,
    p: &Primitives<T>,
) -> Result<T, PolicyError> {
    if !(q > T::zero() && q < T::one()) {
        return Err(PolicyError::Domain {
            what: "q",
            value: q.as_f64(),
        });
    }
    // Work with whichever tail is small so extreme quantiles keep precision.
    let g = |c: T| {
        if q <= T::lit(0.5) {
            signal_cdf(c, rho, p) - q
        } else {
            (T::one() - q) - signal_sf(c, rho, p)
        }
    };
    let (m0, m1) = p.signal_means();
    let bound = m0.abs().max(m1.abs()) + T::lit(60.0) * p.sigma_l;
    match expand_bracket(g, p.signal_midpoint(), bound) {
        Crossing::Bracket { lo, hi } => Ok(bisect(g, lo, hi, T::tol(1e-12))),
        _ => Err(PolicyError::Domain {
            what: "q",
            value: q.as_f64(),
        }),
    }
}

/// Bonus that makes `c` the indifference cutoff when posteriors are the
/// ones generated by `c`.
pub fn bonus_at_cutoff<T: Scalar>(
    c: T,
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<T, PolicyError> {
    let post = posteriors_of_cutoff(Cutoff::Interior(c), rho, p);
    let pc = success_prob(c, rho, p);
    let lam = p.lambda_at(rho.get());
    if !(lam * pc > T::zero()) {
        return Err(PolicyError::Degenerate { cutoff: c.as_f64() });
    }
    let mut risky =
        lam * (pc * p.payoff(post.r_success) + (T::one() - pc) * p.payoff(post.r_failure));
    if mode == PayoffMode::Extended {
        risky = risky + (T::one() - lam) * p.payoff(post.r_unimplemented);
    }
    Ok((p.payoff(post.r_safe) - risky) / (lam * pc))
}

/// Experimentation rate of the zero-bonus equilibrium.
pub fn epsilon_floor<T: Scalar>(
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<T, PolicyError> {
    let base = Primitives { b: T::zero(), ..*p };
    Ok(solve_equilibrium(rho, &base, mode)?.eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult<T> {
    pub target_eps: T,
    /// Cutoff implementing the target rate.
    pub cutoff: T,
    pub bonus: T,
    /// Rate of the equilibrium re-solved at `bonus`.
    pub achieved_eps: T,
    pub roundtrip_gap: T,
    /// Zero-bonus rate.
    pub floor_eps: T,
}

/// Bonus that implements a target experimentation rate, verified by
/// re-solving the equilibrium at that bonus.
pub fn bonus_for_target<T: Scalar>(
    target_eps: T,
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<CalibrationResult<T>, PolicyError> {
    if target_eps >= T::one() {
        return Err(PolicyError::TargetAtUnity {
            target: target_eps.as_f64(),
        });
    }
    let floor = epsilon_floor(rho, p, mode)?;
    let below = |bonus: T| PolicyError::TargetBelowFloor {
        target: target_eps.as_f64(),
        floor: floor.as_f64(),
        bonus: bonus.as_f64(),
    };
    if target_eps <= floor {
        return Err(below(T::nan()));
    }
    let cutoff = quantile_fx(T::one() - target_eps, rho, p)?;
    let bonus = bonus_at_cutoff(cutoff, rho, p, mode)?;
    if bonus < T::zero() {
        return Err(below(bonus));
    }
    let eq = solve_equilibrium(rho, &Primitives { b: bonus, ..*p }, mode)?;
    let gap = (eq.eps - target_eps).abs();
    if !(gap <= T::lit(ROUNDTRIP_TOL)) {
        return Err(PolicyError::RoundtripFailure {
            target: target_eps.as_f64(),
            bonus: bonus.as_f64(),
            achieved: eq.eps.as_f64(),
            gap: gap.as_f64(),
            cutoff: cutoff.as_f64(),
            achieved_cutoff: eq.cutoff.value().as_f64(),
        });
    }
    Ok(CalibrationResult {
        target_eps,
        cutoff,
        bonus,
        achieved_eps: eq.eps,
        roundtrip_gap: gap,
        floor_eps: floor,
    })
}

/// Equilibrium experimentation rate at each bonus on the grid.
pub fn bonus_response<T: Scalar>(
    b_grid: &[T],
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Vec<Result<T, SolveError>> {
    b_grid
        .par_iter()
        .map(|&b| solve_equilibrium(rho, &Primitives { b, ..*p }, mode).map(|eq| eq.eps))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct GateRow<T> {
    pub t: T,
    pub lambda: T,
    pub cutoff: Cutoff<T>,
    pub eps: T,
}

/// Re-solves the equilibrium at each gatekeeping stringency.
pub fn gatekeeping_sweep<T: Scalar>(
    t_grid: &[T],
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<Vec<GateRow<T>>, PolicyError> {
    if !(p.b > T::zero()) {
        return Err(PolicyError::NeedsBonus { b: p.b.as_f64() });
    }
    if t_grid.is_empty() {
        return Err(PolicyError::Grid("empty".into()));
    }
    if t_grid.iter().any(|&t| !(t >= T::zero() && t.is_finite())) {
        return Err(PolicyError::Grid(
            "values must be finite and nonnegative".into(),
        ));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PolicyError::Grid("not strictly ascending".into()));
    }
    t_grid
        .par_iter()
        .map(|&t| {
            let q = Primitives { t_gate: t, ..*p };
            let eq = solve_equilibrium(rho, &q, mode)?;
            Ok(GateRow {
                t,
                lambda: q.lambda_at(rho.get()),
                cutoff: eq.cutoff,
                eps: eq.eps,
            })
        })
        .collect()
}
