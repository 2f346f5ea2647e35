//! Subcommands. Sweeps never abort on a bad row: each row carries a
//! `status`, and the command reports whether any row failed.

use anyhow::{anyhow, Result};
use cutoff_core::policy::{bonus_for_target, bonus_response, gatekeeping_sweep, PolicyError};
use cutoff_core::simulate::{prediction_report, run_sim, Comparison, SimConfig};
use cutoff_core::statics::{
    check_rd, conservatism_scan, statics_report, Conservatism, Param, StaticsError,
};
use cutoff_core::{solve_equilibrium, Cutoff64, Reputation};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Sink;

/// Whether every row of a command succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Clean,
    RowFailures,
}

impl Completion {
    fn from_failures(n: usize) -> Self {
        if n == 0 {
            Completion::Clean
        } else {
            Completion::RowFailures
        }
    }
}

fn rep(r: f64) -> Reputation<f64> {
    Reputation::new(r).expect("grid validated")
}

#[derive(Debug, Serialize)]
pub struct SolveRow {
    pub rho: f64,
    pub status: &'static str,
    pub cutoff: Option<Cutoff64>,
    pub eps: Option<f64>,
    pub r_success: Option<f64>,
    pub r_failure: Option<f64>,
    pub r_safe: Option<f64>,
    pub r_unimplemented: Option<f64>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub error: String,
}

pub fn solve_rows(cfg: &RunConfig) -> Vec<SolveRow> {
    cfg.rho_grid
        .iter()
        .map(
            |&r| match solve_equilibrium(rep(r), &cfg.primitives, cfg.mode) {
                Ok(eq) => SolveRow {
                    rho: r,
                    status: "ok",
                    cutoff: Some(eq.cutoff),
                    eps: Some(eq.eps),
                    r_success: Some(eq.posteriors.r_success),
                    r_failure: Some(eq.posteriors.r_failure),
                    r_safe: Some(eq.posteriors.r_safe),
                    r_unimplemented: Some(eq.posteriors.r_unimplemented),
                    iterations: Some(eq.iterations),
                    residual: Some(eq.residual),
                    error: String::new(),
                },
                Err(e) => SolveRow {
                    rho: r,
                    status: "error",
                    cutoff: None,
                    eps: None,
                    r_success: None,
                    r_failure: None,
                    r_safe: None,
                    r_unimplemented: None,
                    iterations: None,
                    residual: None,
                    error: e.to_string(),
                },
            },
        )
        .collect()
}

pub fn solve(cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
    let rows = solve_rows(cfg);
    sink.write("solve", &rows)?;
    Ok(Completion::from_failures(
        rows.iter().filter(|r| r.status != "ok").count(),
    ))
}

#[derive(Debug, Serialize)]
pub struct RdRow {
    pub rho: f64,
    pub risky_return: f64,
    pub drift: f64,
    pub drift_diagnosticity: f64,
    pub drift_implementation: f64,
    pub nonpositive: bool,
    pub verified: bool,
    pub anchor_rho: f64,
    pub anchor_cutoff: Cutoff64,
    pub rho_bar: Option<f64>,
}

fn rd_rows(cfg: &RunConfig) -> Result<Vec<RdRow>> {
    let rd = check_rd(&cfg.rho_grid, &cfg.primitives, cfg.mode)?;
    Ok((0..rd.grid.len())
        .map(|i| RdRow {
            rho: rd.grid[i],
            risky_return: rd.returns[i],
            drift: rd.drift[i],
            drift_diagnosticity: rd.drift_diagnosticity[i],
            drift_implementation: rd.drift_implementation[i],
            nonpositive: rd.nonpositive[i],
            verified: rd.verified(i),
            anchor_rho: rd.anchor_rho,
            anchor_cutoff: rd.anchor_cutoff,
            rho_bar: rd.rho_bar,
        })
        .collect())
}

pub fn check_rd_cmd(cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
    sink.write("check_rd", &rd_rows(cfg)?)?;
    Ok(Completion::Clean)
}

#[derive(Debug, Serialize)]
pub struct ScanRow {
    pub rho: f64,
    pub cutoff: Cutoff64,
    pub eps: f64,
    pub rd_verified: bool,
    /// `holds`, `violated` or `vacuous`; the same on every row.
    pub verdict: &'static str,
}

#[derive(Debug, Serialize)]
pub struct DerivativeRow {
    pub param: Param,
    pub rho: f64,
    /// `ok`, `boundary` (no interior equilibrium to differentiate) or `error`.
    pub status: &'static str,
    pub analytic: Option<f64>,
    pub numeric: Option<f64>,
    pub agree: Option<bool>,
    pub error: String,
}

pub fn derivative_rows(cfg: &RunConfig) -> Vec<DerivativeRow> {
    let mut rows = Vec::new();
    for &r in &cfg.rho_grid {
        for &param in &cfg.params {
            let row = match statics_report(param, rep(r), &cfg.primitives, cfg.mode, cfg.h) {
                Ok(s) => DerivativeRow {
                    param,
                    rho: r,
                    status: "ok",
                    analytic: Some(s.analytic),
                    numeric: Some(s.numeric),
                    agree: Some(s.agree),
                    error: String::new(),
                },
                Err(e) => DerivativeRow {
                    param,
                    rho: r,
                    status: match e {
                        StaticsError::NotInterior { .. } | StaticsError::BoundaryHit { .. } => {
                            "boundary"
                        }
                        _ => "error",
                    },
                    analytic: None,
                    numeric: None,
                    agree: None,
                    error: e.to_string(),
                },
            };
            rows.push(row);
        }
    }
    rows
}

pub fn statics(cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
    let scan = conservatism_scan(&cfg.rho_grid, &cfg.primitives, cfg.mode)?;
    let verdict = match scan.verdict {
        Conservatism::Holds { .. } => "holds",
        Conservatism::Violated { .. } => "violated",
        Conservatism::Vacuous => "vacuous",
    };
    let rows: Vec<ScanRow> = scan
        .rows
        .iter()
        .map(|r| ScanRow {
            rho: r.rho,
            cutoff: r.cutoff,
            eps: r.eps,
            rd_verified: r.rd_verified,
            verdict,
        })
        .collect();
    sink.write("statics_scan", &rows)?;
    sink.write("check_rd", &rd_rows(cfg)?)?;
    let derivs = derivative_rows(cfg);
    sink.write("statics_derivatives", &derivs)?;
    Ok(Completion::from_failures(
        derivs.iter().filter(|r| r.status == "error").count(),
    ))
}

#[derive(Debug, Serialize)]
pub struct CalibrationRow {
    pub rho: f64,
    pub target_eps: f64,
    /// `ok`, `below_floor`, `roundtrip_failure` or `error`.
    pub status: &'static str,
    pub bonus: Option<f64>,
    pub cutoff: Option<f64>,
    pub achieved_eps: Option<f64>,
    pub roundtrip_gap: Option<f64>,
    pub floor_eps: Option<f64>,
    pub error: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn calibration_row(cfg: &RunConfig, r: f64, target: f64) -> CalibrationRow {
    let mut row = CalibrationRow {
        rho: r,
        target_eps: target,
        status: "ok",
        bonus: None,
        cutoff: None,
        achieved_eps: None,
        roundtrip_gap: None,
        floor_eps: None,
        error: String::new(),
    };
    match bonus_for_target(target, rep(r), &cfg.primitives, cfg.mode) {
        Ok(c) => {
            row.bonus = Some(c.bonus);
            row.cutoff = Some(c.cutoff);
            row.achieved_eps = Some(c.achieved_eps);
            row.roundtrip_gap = Some(c.roundtrip_gap);
            row.floor_eps = Some(c.floor_eps);
        }
        Err(e) => {
            row.error = e.to_string();
            match e {
                PolicyError::TargetBelowFloor { floor, bonus, .. } => {
                    row.status = "below_floor";
                    row.floor_eps = Some(floor);
                    row.bonus = finite(bonus);
                }
                PolicyError::RoundtripFailure {
                    bonus,
                    achieved,
                    gap,
                    cutoff,
                    ..
                } => {
                    row.status = "roundtrip_failure";
                    row.bonus = Some(bonus);
                    row.cutoff = Some(cutoff);
                    row.achieved_eps = Some(achieved);
                    row.roundtrip_gap = Some(gap);
                }
                _ => row.status = "error",
            }
        }
    }
    row
}

#[derive(Debug, Serialize)]
pub struct BonusResponseRow {
    pub rho: f64,
    pub b: f64,
    pub status: &'static str,
    pub eps: Option<f64>,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct GateRow {
    pub rho: f64,
    pub t: f64,
    pub status: &'static str,
    pub lambda: Option<f64>,
    pub cutoff: Option<Cutoff64>,
    pub eps: Option<f64>,
    pub error: String,
}

pub fn calibrate(cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
    let targets = cfg
        .targets
        .as_ref()
        .ok_or_else(|| anyhow!("targets: required by calibrate"))?;
    let mut failures = 0;
    let mut rows = Vec::new();
    for &r in &cfg.rho_grid {
        for &t in targets {
            rows.push(calibration_row(cfg, r, t));
        }
    }
    failures += rows
        .iter()
        .filter(|r| matches!(r.status, "roundtrip_failure" | "error"))
        .count();
    sink.write("calibrate", &rows)?;

    if let Some(b_grid) = &cfg.b_grid {
        let mut rows = Vec::new();
        for &r in &cfg.rho_grid {
            for (&b, res) in
                b_grid
                    .iter()
                    .zip(bonus_response(b_grid, rep(r), &cfg.primitives, cfg.mode))
            {
                rows.push(match res {
                    Ok(eps) => BonusResponseRow {
                        rho: r,
                        b,
                        status: "ok",
                        eps: Some(eps),
                        error: String::new(),
                    },
                    Err(e) => BonusResponseRow {
                        rho: r,
                        b,
                        status: "error",
                        eps: None,
                        error: e.to_string(),
                    },
                });
            }
        }
        failures += rows.iter().filter(|r| r.status != "ok").count();
        sink.write("bonus_response", &rows)?;
    }

    if let Some(t_grid) = &cfg.t_grid {
        let mut rows = Vec::new();
        for &r in &cfg.rho_grid {
            match gatekeeping_sweep(t_grid, rep(r), &cfg.primitives, cfg.mode) {
                Ok(sweep) => rows.extend(sweep.into_iter().map(|g| GateRow {
                    rho: r,
                    t: g.t,
                    status: "ok",
                    lambda: Some(g.lambda),
                    cutoff: Some(g.cutoff),
                    eps: Some(g.eps),
                    error: String::new(),
                })),
                Err(e) => rows.extend(t_grid.iter().map(|&t| GateRow {
                    rho: r,
                    t,
                    status: "error",
                    lambda: None,
                    cutoff: None,
                    eps: None,
                    error: e.to_string(),
                })),
            }
        }
        failures += rows.iter().filter(|r| r.status != "ok").count();
        sink.write("gatekeeping", &rows)?;
    }
    Ok(Completion::from_failures(failures))
}

#[derive(Debug, Serialize)]
pub struct SimRow {
    pub rho: f64,
    pub n: u64,
    pub n_risky: u64,
    pub n_implemented: u64,
    pub n_success: u64,
    pub n_failure: u64,
    pub n_unimplemented: u64,
    pub n_safe: u64,
    pub emp_eps: f64,
    pub emp_hit_rate: f64,
    pub mean_posterior: f64,
    pub cutoff: Cutoff64,
    pub analytic_eps: f64,
    pub analytic_hit_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct PredictionRow {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub d_eps: f64,
    pub se_eps: f64,
    pub d_hit: f64,
    pub se_hit: f64,
    /// `not_applicable`, `not_verified` or `flagged`; the flags are empty
    /// unless flagged.
    pub status: &'static str,
    pub eps_nonincreasing: Option<bool>,
    pub hit_nondecreasing: Option<bool>,
    pub analytic_eps_nonincreasing: Option<bool>,
    pub analytic_hit_nondecreasing: Option<bool>,
    pub consistent: Option<bool>,
}

pub fn simulate(cfg: &RunConfig, sink: &Sink) -> Result<Completion> {
    let sim = cfg
        .sim
        .as_ref()
        .ok_or_else(|| anyhow!("sim: required by simulate"))?;
    let out = run_sim(&SimConfig {
        n_experts: sim.n_experts,
        rho_values: cfg.rho_grid.clone(),
        seed: sim.seed,
        primitives: cfg.primitives,
        mode: cfg.mode,
    })?;
    let rows: Vec<SimRow> = out
        .cells
        .iter()
        .map(|c| SimRow {
            rho: c.rho,
            n: c.n,
            n_risky: c.tally.n_risky,
            n_implemented: c.tally.n_implemented,
            n_success: c.tally.n_success,
            n_failure: c.tally.n_failure,
            n_unimplemented: c.tally.n_unimplemented,
            n_safe: c.tally.n_safe,
            emp_eps: c.emp_eps,
            emp_hit_rate: c.emp_hit_rate,
            mean_posterior: c.mean_posterior,
            cutoff: c.cutoff,
            analytic_eps: c.analytic_eps,
            analytic_hit_rate: c.analytic_hit_rate,
            seed: out.seed,
        })
        .collect();
    sink.write("simulate", &rows)?;

    // Without a usable RD report every comparison is left unflagged.
    let verified: Vec<bool> = match check_rd(&cfg.rho_grid, &cfg.primitives, cfg.mode) {
        Ok(rd) => (0..rd.grid.len()).map(|i| rd.verified(i)).collect(),
        Err(_) => vec![false; cfg.rho_grid.len()],
    };
    let report = prediction_report(&out, &verified);
    let rows: Vec<PredictionRow> = report
        .rows
        .iter()
        .map(|r| {
            let mut row = PredictionRow {
                rho_lo: r.rho_lo,
                rho_hi: r.rho_hi,
                d_eps: r.d_eps,
                se_eps: r.se_eps,
                d_hit: r.d_hit,
                se_hit: r.se_hit,
                status: "not_applicable",
                eps_nonincreasing: None,
                hit_nondecreasing: None,
                analytic_eps_nonincreasing: None,
                analytic_hit_nondecreasing: None,
                consistent: None,
            };
            match r.comparison {
                Comparison::NotApplicable => {}
                Comparison::NotVerified => row.status = "not_verified",
                Comparison::Flagged {
                    eps_nonincreasing,
                    hit_nondecreasing,
                    analytic_eps_nonincreasing,
                    analytic_hit_nondecreasing,
                    consistent,
                } => {
                    row.status = "flagged";
                    row.eps_nonincreasing = Some(eps_nonincreasing);
                    row.hit_nondecreasing = Some(hit_nondecreasing);
                    row.analytic_eps_nonincreasing = Some(analytic_eps_nonincreasing);
                    row.analytic_hit_nondecreasing = Some(analytic_hit_nondecreasing);
                    row.consistent = Some(consistent);
                }
            }
            row
        })
        .collect();
    sink.write("predictions", &rows)?;
    Ok(Completion::Clean)
}
