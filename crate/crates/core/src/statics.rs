//! Comparative statics of the equilibrium cutoff.
//!
//! Analytic derivatives apply the implicit-function rule to the indifference
//! condition with posteriors frozen at their equilibrium values; numeric
//! derivatives re-solve the full equilibrium, so the two differ by the
//! posterior-feedback wedge.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutoff::Cutoff;
use crate::equilibrium::{
    slope_coefficient, solve_equilibrium, Equilibrium, PayoffMode, SolveError,
};
use crate::gaussian::{posteriors_of_cutoff, success_prob_at, success_prob_parts, Posteriors};
use crate::model::{ModelError, Primitives, Reputation};
use crate::scalar::Scalar;

/// Slack used in every sign and monotonicity verdict.
pub const SIGN_SLACK: f64 = 1e-8;
/// Default relative step of numeric derivatives.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Smallest `d delta / dx` accepted by the implicit-function rule.
const MIN_SLOPE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Rho,
    Theta,
    Pi,
    Kappa,
    B,
    Lambda,
    TGate,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::Rho,
        Param::Theta,
        Param::Pi,
        Param::Kappa,
        Param::B,
        Param::Lambda,
        Param::TGate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Rho => "rho",
            Param::Theta => "theta",
            Param::Pi => "pi",
            Param::Kappa => "kappa",
            Param::B => "b",
            Param::Lambda => "lambda",
            Param::TGate => "t_gate",
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StaticsError {
    #[error("cutoff {cutoff} is not interior")]
    NotInterior { cutoff: String },
    #[error("d delta / dx = {slope} at the cutoff is too small to divide by")]
    Degenerate { slope: f64 },
    #[error("perturbing {param} reached a boundary equilibrium ({cutoff})")]
    BoundaryHit { param: Param, cutoff: String },
    #[error("rho grid invalid: {0}")]
    Grid(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Partial derivatives of the payoff difference at `x`, posteriors frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPartials<T> {
    pub dx: T,
    pub drho: T,
    pub dtheta: T,
    pub dpi: T,
    pub dkappa: T,
    pub db: T,
    pub dlambda: T,
    pub dt_gate: T,
}

pub fn delta_partials<T: Scalar>(
    x: T,
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> DeltaPartials<T> {
    let sp = success_prob_parts(x, rho, p);
    let lam = p.lambda_at(rho.get());
    let k = slope_coefficient(post, p);
    let one = T::one();
    let (w1, w0) = (p.payoff(post.r_success), p.payoff(post.r_failure));
    let mut dlambda = sp.p * w1 + (one - sp.p) * w0 + p.b * sp.p;
    // Reputational part of delta per unit of kappa.
    let mut dkappa = lam * (sp.p * post.r_success + (one - sp.p) * post.r_failure) - post.r_safe;
    if mode == PayoffMode::Extended {
        dlambda = dlambda - p.payoff(post.r_unimplemented);
        dkappa = dkappa + (one - lam) * post.r_unimplemented;
    }
    DeltaPartials {
        dx: lam * k * sp.dx,
        drho: p.lambda_slope() * dlambda + lam * k * sp.drho,
        dtheta: lam * k * sp.dtheta,
        dpi: lam * k * sp.dpi,
        dkappa,
        db: lam * sp.p,
        dlambda,
        dt_gate: -lam * dlambda,
    }
}

/// Implicit-function derivative `-d_xi delta / d_x delta` at the equilibrium
/// cutoff with posteriors frozen. For `rho` only the direct channels
/// (implementation intensity and the success probability) move.
pub fn analytic_derivative<T: Scalar>(
    param: Param,
    rho: Reputation<T>,
    eq: &Equilibrium<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<T, StaticsError> {
    let c = eq
        .cutoff
        .interior()
        .ok_or_else(|| StaticsError::NotInterior {
            cutoff: eq.cutoff.to_string(),
        })?;
    let d = delta_partials(c, rho, &eq.posteriors, p, mode);
    if !(d.dx > T::lit(MIN_SLOPE)) {
        return Err(StaticsError::Degenerate {
            slope: d.dx.as_f64(),
        });
    }
    let num = match param {
        Param::Rho => d.drho,
        Param::Theta => d.dtheta,
        Param::Pi => d.dpi,
        Param::Kappa => d.dkappa,
        Param::B => d.db,
        Param::Lambda => d.dlambda,
        Param::TGate => d.dt_gate,
    };
    Ok(-num / d.dx)
}

/// The displayed closed form for `dc/dlambda`, term by term.
pub fn dc_dlambda_closed_form<T: Scalar>(
    c: T,
    rho: Reputation<T>,
    post: &Posteriors<T>,
    p: &Primitives<T>,
) -> T {
    let sp = success_prob_parts(c, rho, p);
    let (w1, w0) = (p.payoff(post.r_success), p.payoff(post.r_failure));
    let numerator = (sp.p * w1 + (T::one() - sp.p) * w0) + p.b * sp.p;
    let denominator = p.lambda_at(rho.get()) * sp.dx * (w1 - w0 + p.b);
    -numerator / denominator
}

fn with_param<T: Scalar>(p: &Primitives<T>, param: Param, v: T) -> Primitives<T> {
    let mut q = *p;
    match param {
        Param::Theta => q.theta = v,
        Param::Pi => q.pi = v,
        Param::Kappa => q.kappa = v,
        Param::B => q.b = v,
        Param::TGate => q.t_gate = v,
        Param::Rho | Param::Lambda => unreachable!("not a primitive"),
    }
    q
}

/// Admissible range of a perturbed parameter; `open` marks strict bounds.
fn param_range<T: Scalar>(param: Param) -> (T, T, bool) {
    match param {
        Param::Rho | Param::Pi => (T::zero(), T::one(), true),
        Param::Theta => (T::zero(), T::infinity(), true),
        _ => (T::zero(), T::infinity(), false),
    }
}

/// Finite difference of the re-solved equilibrium cutoff.
///
/// Central by default; second-order one-sided when the central stencil would
/// leave the parameter's domain (e.g. `b = 0`). The `lambda` derivative is
/// taken through `t_gate`, using `d lambda / dT = -lambda`.
pub fn numeric_derivative<T: Scalar>(
    param: Param,
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
    h: T,
) -> Result<T, StaticsError> {
    if param == Param::Lambda {
        let lam = p.lambda_at(rho.get());
        if lam <= T::zero() {
            return Err(StaticsError::Degenerate { slope: 0.0 });
        }
        return Ok(-numeric_derivative(Param::TGate, rho, p, mode, h)? / lam);
    }
    let x0 = match param {
        Param::Rho => rho.get(),
        Param::Theta => p.theta,
        Param::Pi => p.pi,
        Param::Kappa => p.kappa,
        Param::B => p.b,
        Param::TGate => p.t_gate,
        Param::Lambda => unreachable!(),
    };
    let step = h * x0.abs().max(T::one());
    let cutoff_at = |v: T| -> Result<T, StaticsError> {
        let eq = if param == Param::Rho {
            solve_equilibrium(Reputation::new(v)?, p, mode)?
        } else {
            solve_equilibrium(rho, &with_param(p, param, v).validate()?, mode)?
        };
        match eq.cutoff {
            Cutoff::Interior(c) => Ok(c),
            other => Err(StaticsError::BoundaryHit {
                param,
                cutoff: other.to_string(),
            }),
        }
    };
    let (lo, hi, open) = param_range::<T>(param);
    let fits = |v: T| {
        if open {
            v > lo && v < hi
        } else {
            v >= lo && v <= hi
        }
    };
    let two = T::lit(2.0);
    if fits(x0 - step) && fits(x0 + step) {
        return Ok((cutoff_at(x0 + step)? - cutoff_at(x0 - step)?) / (two * step));
    }
    let f0 = cutoff_at(x0)?;
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    if fits(x0 + two * step) {
        let f1 = cutoff_at(x0 + step)?;
        let f2 = cutoff_at(x0 + two * step)?;
        Ok((-three * f0 + four * f1 - f2) / (two * step))
    } else {
        let f1 = cutoff_at(x0 - step)?;
        let f2 = cutoff_at(x0 - two * step)?;
        Ok((three * f0 - four * f1 + f2) / (two * step))
    }
}

/// Analytic and numeric derivative of the cutoff in one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticsReport<T> {
    pub param: Param,
    pub rho: T,
    pub analytic: T,
    pub numeric: T,
    /// `|analytic - numeric| <= max(1e-3, 0.05 |numeric|)`.
    pub agree: bool,
}

pub fn statics_report<T: Scalar>(
    param: Param,
    rho: Reputation<T>,
    p: &Primitives<T>,
    mode: PayoffMode,
    h: T,
) -> Result<StaticsReport<T>, StaticsError> {
    let eq = solve_equilibrium(rho, p, mode)?;
    let analytic = analytic_derivative(param, rho, &eq, p, mode)?;
    let numeric = numeric_derivative(param, rho, p, mode, h)?;
    let band = T::lit(1e-3).max(T::lit(0.05) * numeric.abs());
    Ok(StaticsReport {
        param,
        rho: rho.get(),
        analytic,
        numeric,
        agree: (analytic - numeric).abs() <= band,
    })
}

/// Derivative of samples on an ascending, possibly uneven grid: second-order
/// central differences inside, first-order one-sided at the ends.
pub fn grid_gradient<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 2 {
        return vec![T::zero(); n];
    }
    let mut g = Vec::with_capacity(n);
    g.push((y[1] - y[0]) / (x[1] - x[0]));
    for i in 1..n - 1 {
        let hl = x[i] - x[i - 1];
        let hr = x[i + 1] - x[i];
        g.push(
            (hl * hl * y[i + 1] - hr * hr * y[i - 1] + (hr * hr - hl * hl) * y[i])
                / (hl * hr * (hl + hr)),
        );
    }
    g.push((y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]));
    g
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<Vec<Reputation<T>>, StaticsError> {
    if grid.is_empty() {
        return Err(StaticsError::Grid("empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(StaticsError::Grid("not strictly ascending".into()));
    }
    grid.iter()
        .map(|&r| Reputation::new(r).map_err(StaticsError::from))
        .collect()
}

/// What the market observes at a reputation, for a fixed cutoff.
#[derive(Debug, Clone, Copy)]
struct ReturnState<T> {
    post: Posteriors<T>,
    p_c: T,
}

/// Reputational return to the risky action relative to the safe one.
fn risky_return<T: Scalar>(lam: T, s: &ReturnState<T>, p: &Primitives<T>, mode: PayoffMode) -> T {
    let w1 = p.payoff(s.post.r_success);
    let w0 = p.payoff(s.post.r_failure);
    let mut r = lam * (s.p_c * w1 + (T::one() - s.p_c) * w0) + p.b * lam * s.p_c;
    if mode == PayoffMode::Extended {
        r = r + (T::one() - lam) * p.payoff(s.post.r_unimplemented);
    }
    r - p.payoff(s.post.r_safe)
}

/// Relative-diagnosticity check along a reputation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct RdReport<T> {
    pub grid: Vec<T>,
    pub anchor_rho: T,
    pub anchor_cutoff: Cutoff<T>,
    /// Return to the risky action at the anchor cutoff, per grid point.
    pub returns: Vec<T>,
    pub drift: Vec<T>,
    /// Drift with implementation intensity held at its local value.
    pub drift_diagnosticity: Vec<T>,
    /// Drift with posteriors and success probability held at local values.
    pub drift_implementation: Vec<T>,
    /// `drift <= SIGN_SLACK` per grid point.
    pub nonpositive: Vec<bool>,
    /// First grid point from which the drift stays nonpositive.
    pub rho_bar: Option<T>,
}

impl<T: Scalar> RdReport<T> {
    /// Index where the nonpositive-drift suffix starts.
    pub fn suffix_start(&self) -> Option<usize> {
        self.rho_bar.map(|_| {
            self.nonpositive
                .iter()
                .rposition(|&ok| !ok)
                .map_or(0, |i| i + 1)
        })
    }

    pub fn verified(&self, i: usize) -> bool {
        self.suffix_start().is_some_and(|s| i >= s)
    }
}

/// Evaluates the reputational return at the anchor's solved cutoff across
/// the grid and differentiates it in `rho`. The anchor is the grid midpoint.
pub fn check_rd<T: Scalar>(
    rho_grid: &[T],
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<RdReport<T>, StaticsError> {
    let reps = check_grid(rho_grid)?;
    let anchor = reps[reps.len() / 2];
    let c0 = solve_equilibrium(anchor, p, mode)?.cutoff;
    let states: Vec<ReturnState<T>> = reps
        .iter()
        .map(|&r| ReturnState {
            post: posteriors_of_cutoff(c0, r, p),
            p_c: success_prob_at(c0, r, p),
        })
        .collect();
    let lams: Vec<T> = rho_grid.iter().map(|&r| p.lambda_at(r)).collect();
    let returns: Vec<T> = states
        .iter()
        .zip(&lams)
        .map(|(s, &l)| risky_return(l, s, p, mode))
        .collect();
    let drift = grid_gradient(rho_grid, &returns);
    let n = rho_grid.len();
    let mut drift_diagnosticity = Vec::with_capacity(n);
    let mut drift_implementation = Vec::with_capacity(n);
    for i in 0..n {
        let frozen_lam: Vec<T> = states
            .iter()
            .map(|s| risky_return(lams[i], s, p, mode))
            .collect();
        let frozen_state: Vec<T> = lams
            .iter()
            .map(|&l| risky_return(l, &states[i], p, mode))
            .collect();
        drift_diagnosticity.push(grid_gradient(rho_grid, &frozen_lam)[i]);
        drift_implementation.push(grid_gradient(rho_grid, &frozen_state)[i]);
    }
    let slack = T::lit(SIGN_SLACK);
    let nonpositive: Vec<bool> = drift.iter().map(|&d| d <= slack).collect();
    let start = nonpositive.iter().rposition(|&ok| !ok).map_or(0, |i| i + 1);
    let rho_bar = (start < n).then(|| rho_grid[start]);
    Ok(RdReport {
        grid: rho_grid.to_vec(),
        anchor_rho: anchor.get(),
        anchor_cutoff: c0,
        returns,
        drift,
        drift_diagnosticity,
        drift_implementation,
        nonpositive,
        rho_bar,
    })
}

/// Outcome of the monotonicity check on the RD-verified sub-grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Conservatism<T> {
    /// Cutoffs nondecreasing on a nonempty verified sub-grid.
    Holds { from_rho: T },
    /// A decrease beyond the slack between two verified grid points.
    Violated { rho_lo: T, rho_hi: T },
    /// No grid point passed the RD check; nothing to assert.
    Vacuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct ScanRow<T> {
    pub rho: T,
    pub cutoff: Cutoff<T>,
    pub eps: T,
    pub rd_verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct ConservatismScan<T> {
    pub rows: Vec<ScanRow<T>>,
    pub rd: RdReport<T>,
    pub verdict: Conservatism<T>,
}

/// Solves the equilibrium along the grid and checks that the cutoff is
/// nondecreasing where relative diagnosticity holds.
pub fn conservatism_scan<T: Scalar>(
    rho_grid: &[T],
    p: &Primitives<T>,
    mode: PayoffMode,
) -> Result<ConservatismScan<T>, StaticsError> {
    let reps = check_grid(rho_grid)?;
    let rd = check_rd(rho_grid, p, mode)?;
    let solved: Vec<Result<Equilibrium<T>, SolveError>> = reps
        .par_iter()
        .map(|&r| solve_equilibrium(r, p, mode))
        .collect();
    let mut rows = Vec::with_capacity(reps.len());
    for (i, eq) in solved.into_iter().enumerate() {
        let eq = eq?;
        rows.push(ScanRow {
            rho: rho_grid[i],
            cutoff: eq.cutoff,
            eps: eq.eps,
            rd_verified: rd.verified(i),
        });
    }
    let verdict = match rd.suffix_start() {
        None => Conservatism::Vacuous,
        Some(s) => {
            let slack = T::lit(SIGN_SLACK);
            let bad = rows[s..]
                .windows(2)
                .find(|w| w[1].cutoff.value() < w[0].cutoff.value() - slack);
            match bad {
                Some(w) => Conservatism::Violated {
                    rho_lo: w[0].rho,
                    rho_hi: w[1].rho,
                },
                None => Conservatism::Holds {
                    from_rho: rows[s].rho,
                },
            }
        }
    };
    Ok(ConservatismScan { rows, rd, verdict })
}
