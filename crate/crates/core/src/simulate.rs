//! Seeded Monte Carlo of single-episode experts playing the solved cutoff.
//!
//! Experts are simulated in fixed-size blocks; block `k` of reputation cell
//! `j` draws from ChaCha8 stream `(j << 32) | k` of the configured seed, so
//! results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cutoff::Cutoff;
use crate::equilibrium::{solve_equilibrium, PayoffMode, SolveError};
use crate::gaussian::{event_probability, posteriors_of_cutoff, signal_sf, PublicEvent};
use crate::model::{ModelError, Primitives, Reputation};
use crate::scalar::Scalar;

const BLOCK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub n_experts: usize,
    pub rho_values: Vec<T>,
    pub seed: u64,
    pub primitives: Primitives<T>,
    pub mode: PayoffMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub n_risky: u64,
    pub n_implemented: u64,
    pub n_success: u64,
    pub n_failure: u64,
    pub n_unimplemented: u64,
    pub n_safe: u64,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally {
            n_risky: self.n_risky + o.n_risky,
            n_implemented: self.n_implemented + o.n_implemented,
            n_success: self.n_success + o.n_success,
            n_failure: self.n_failure + o.n_failure,
            n_unimplemented: self.n_unimplemented + o.n_unimplemented,
            n_safe: self.n_safe + o.n_safe,
        }
    }

    pub fn count(&self, event: PublicEvent) -> u64 {
        match event {
            PublicEvent::RiskySuccess => self.n_success,
            PublicEvent::RiskyFailure => self.n_failure,
            PublicEvent::RiskyUnimplemented => self.n_unimplemented,
            PublicEvent::Safe => self.n_safe,
        }
    }
}

/// Simulated tallies at one reputation, with the analytic benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct SimCell<T> {
    pub rho: T,
    pub n: u64,
    #[serde(flatten)]
    pub tally: Tally,
    pub emp_eps: T,
    /// Successes per implemented risky recommendation.
    pub emp_hit_rate: T,
    /// Average posterior over the realized public events.
    pub mean_posterior: T,
    pub cutoff: Cutoff<T>,
    pub analytic_eps: T,
    pub analytic_hit_rate: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar + Serialize")]
pub struct SimOutcome<T> {
    pub seed: u64,
    pub cells: Vec<SimCell<T>>,
}

/// `Pr[s = 1 | x >= c]`; `pi` when every signal is above the cutoff, and
/// the upper-tail limit when none is.
pub fn analytic_hit_rate<T: Scalar>(c: Cutoff<T>, rho: Reputation<T>, p: &Primitives<T>) -> T {
    let (_, m1) = p.signal_means();
    let r = rho.get();
    let tail = |mu: T, x: T| {
        r * crate::gaussian::norm_sf((x - mu) / p.sigma_h)
            + (T::one() - r) * crate::gaussian::norm_sf((x - mu) / p.sigma_l)
    };
    match c {
        Cutoff::AlwaysRisky => p.pi,
        Cutoff::AlwaysSafe => T::one(),
        Cutoff::Interior(x) => {
            let all = signal_sf(x, rho, p);
            if all > T::zero() {
                p.pi * tail(m1, x) / all
            } else {
                T::one()
            }
        }
    }
}

fn simulate_block(
    rng: &mut ChaCha8Rng,
    n: usize,
    rho: f64,
    cutoff: f64,
    lam: f64,
    p: &Primitives<f64>,
) -> Tally {
    let (m0, m1) = p.signal_means();
    let mut t = Tally::default();
    for _ in 0..n {
        let high = rng.random::<f64>() < rho;
        let good = rng.random::<f64>() < p.pi;
        let z: f64 = rng.sample(StandardNormal);
        let sigma = if high { p.sigma_h } else { p.sigma_l };
        let x = if good { m1 } else { m0 } + sigma * z;
        if x >= cutoff {
            t.n_risky += 1;
            if rng.random::<f64>() < lam {
                t.n_implemented += 1;
                if good {
                    t.n_success += 1;
                } else {
                    t.n_failure += 1;
                }
            } else {
                t.n_unimplemented += 1;
            }
        } else {
            t.n_safe += 1;
        }
    }
    t
}

fn as_f64_primitives<T: Scalar>(p: &Primitives<T>) -> Primitives<f64> {
    Primitives {
        pi: p.pi.as_f64(),
        mu0: p.mu0.as_f64(),
        mu1: p.mu1.as_f64(),
        sigma_h: p.sigma_h.as_f64(),
        sigma_l: p.sigma_l.as_f64(),
        theta: p.theta.as_f64(),
        kappa: p.kappa.as_f64(),
        b: p.b.as_f64(),
        t_gate: p.t_gate.as_f64(),
        lambda_min: p.lambda_min.as_f64(),
        lambda_max: p.lambda_max.as_f64(),
    }
}

/// Simulates `n_experts` experts at each reputation against its solved
/// equilibrium cutoff.
pub fn run_sim<T: Scalar>(cfg: &SimConfig<T>) -> Result<SimOutcome<T>, SimError> {
    if cfg.n_experts == 0 {
        return Err(SimError::Config("n_experts must be at least 1".into()));
    }
    if cfg.rho_values.is_empty() {
        return Err(SimError::Config("rho_values is empty".into()));
    }
    let p = cfg.primitives.validate()?;
    let draws = as_f64_primitives(&p);
    let mut cells = Vec::with_capacity(cfg.rho_values.len());
    for (j, &rho_t) in cfg.rho_values.iter().enumerate() {
        let rho = Reputation::new(rho_t)?;
        let eq = solve_equilibrium(rho, &p, cfg.mode)?;
        let lam = p.lambda_at(rho_t).as_f64();
        let cutoff = eq.cutoff.value().as_f64();
        let blocks = cfg.n_experts.div_ceil(BLOCK);
        let tally = (0..blocks)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((j as u64) << 32) | k as u64);
                let n = BLOCK.min(cfg.n_experts - k * BLOCK);
                simulate_block(&mut rng, n, rho_t.as_f64(), cutoff, lam, &draws)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::add);
        let post = posteriors_of_cutoff(eq.cutoff, rho, &p);
        let n = T::lit(cfg.n_experts as f64);
        let count = |v: u64| T::lit(v as f64);
        let posterior_sum = PublicEvent::ALL.iter().fold(T::zero(), |acc, &e| {
            acc + count(tally.count(e)) * post.get(e)
        });
        cells.push(SimCell {
            rho: rho_t,
            n: cfg.n_experts as u64,
            tally,
            emp_eps: count(tally.n_risky) / n,
            emp_hit_rate: count(tally.n_success) / count(tally.n_implemented.max(1)),
            mean_posterior: posterior_sum / n,
            cutoff: eq.cutoff,
            analytic_eps: eq.eps,
            analytic_hit_rate: analytic_hit_rate(eq.cutoff, rho, &p),
        });
    }
    Ok(SimOutcome {
        seed: cfg.seed,
        cells,
    })
}

/// Analytic probability of each public event at a simulated cell.
pub fn analytic_event_probabilities<T: Scalar>(
    cell: &SimCell<T>,
    p: &Primitives<T>,
) -> Result<[T; 4], ModelError> {
    let rho = Reputation::new(cell.rho)?;
    Ok(PublicEvent::ALL.map(|e| event_probability(e, cell.cutoff, rho, p)))
}

/// Comparison between neighbouring reputations in a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Comparison {
    /// Fewer than two reputations were simulated.
    NotApplicable,
    /// At least one endpoint lies outside the RD-verified sub-grid.
    NotVerified,
    Flagged {
        /// Empirical drop in experimentation is consistent with zero or
        /// negative (within three standard errors).
        eps_nonincreasing: bool,
        hit_nondecreasing: bool,
        /// Same statements for the analytic values.
        analytic_eps_nonincreasing: bool,
        analytic_hit_nondecreasing: bool,
        /// Empirical and analytic flags agree, or the analytic difference
        /// is too small for the sample to resolve.
        consistent: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionRow {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub d_eps: f64,
    pub se_eps: f64,
    pub d_hit: f64,
    pub se_hit: f64,
    #[serde(flatten)]
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub rows: Vec<PredictionRow>,
}

fn binomial_se(rate: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (rate * (1.0 - rate) / n as f64).sqrt()
    }
}

/// Checks that experimentation falls and hit rates rise with reputation on
/// the RD-verified sub-grid. `verified[i]` marks cells inside it.
pub fn prediction_report<T: Scalar>(out: &SimOutcome<T>, verified: &[bool]) -> PredictionReport {
    let cells = &out.cells;
    if cells.len() < 2 {
        let rows = cells
            .iter()
            .map(|c| PredictionRow {
                rho_lo: c.rho.as_f64(),
                rho_hi: c.rho.as_f64(),
                d_eps: 0.0,
                se_eps: 0.0,
                d_hit: 0.0,
                se_hit: 0.0,
                comparison: Comparison::NotApplicable,
            })
            .collect();
        return PredictionReport { rows };
    }
    let rows = cells
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (a, b) = (&w[0], &w[1]);
            let d_eps = b.emp_eps.as_f64() - a.emp_eps.as_f64();
            let se_eps =
                binomial_se(a.emp_eps.as_f64(), a.n).hypot(binomial_se(b.emp_eps.as_f64(), b.n));
            let d_hit = b.emp_hit_rate.as_f64() - a.emp_hit_rate.as_f64();
            let se_hit = binomial_se(a.emp_hit_rate.as_f64(), a.tally.n_implemented)
                .hypot(binomial_se(b.emp_hit_rate.as_f64(), b.tally.n_implemented));
            let both = verified.get(i).copied().unwrap_or(false)
                && verified.get(i + 1).copied().unwrap_or(false);
            let comparison = if both {
                let da = b.analytic_eps.as_f64() - a.analytic_eps.as_f64();
                let dh = b.analytic_hit_rate.as_f64() - a.analytic_hit_rate.as_f64();
                let eps_nonincreasing = d_eps <= 3.0 * se_eps;
                let hit_nondecreasing = d_hit >= -3.0 * se_hit;
                let analytic_eps_nonincreasing = da <= 1e-8;
                let analytic_hit_nondecreasing = dh >= -1e-8;
                let consistent = (eps_nonincreasing == analytic_eps_nonincreasing
                    || da.abs() <= 3.0 * se_eps)
                    && (hit_nondecreasing == analytic_hit_nondecreasing
                        || dh.abs() <= 3.0 * se_hit);
                Comparison::Flagged {
                    eps_nonincreasing,
                    hit_nondecreasing,
                    analytic_eps_nonincreasing,
                    analytic_hit_nondecreasing,
                    consistent,
                }
            } else {
                Comparison::NotVerified
            };
            PredictionRow {
                rho_lo: a.rho.as_f64(),
                rho_hi: b.rho.as_f64(),
                d_eps,
                se_eps,
                d_hit,
                se_hit,
                comparison,
            }
        })
        .collect();
    PredictionReport { rows }
}
