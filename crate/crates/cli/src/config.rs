//! Run configuration: one JSON document, validated in full before any
//! computation starts.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cutoff_core::statics::{Param, DEFAULT_STEP};
use cutoff_core::{PayoffMode, Primitives64};
use serde::Deserialize;

/// Overrides applied on top of the reference primitives.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveOverrides {
    pub pi: Option<f64>,
    pub mu0: Option<f64>,
    pub mu1: Option<f64>,
    pub sigma_h: Option<f64>,
    pub sigma_l: Option<f64>,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub b: Option<f64>,
    pub t_gate: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
}

impl PrimitiveOverrides {
    fn apply(&self) -> Primitives64 {
        let r = Primitives64::reference();
        Primitives64 {
            pi: self.pi.unwrap_or(r.pi),
            mu0: self.mu0.unwrap_or(r.mu0),
            mu1: self.mu1.unwrap_or(r.mu1),
            sigma_h: self.sigma_h.unwrap_or(r.sigma_h),
            sigma_l: self.sigma_l.unwrap_or(r.sigma_l),
            theta: self.theta.unwrap_or(r.theta),
            kappa: self.kappa.unwrap_or(r.kappa),
            b: self.b.unwrap_or(r.b),
            t_gate: self.t_gate.unwrap_or(r.t_gate),
            lambda_min: self.lambda_min.unwrap_or(r.lambda_min),
            lambda_max: self.lambda_max.unwrap_or(r.lambda_max),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub n_experts: usize,
    pub seed: u64,
}

/// The JSON config as written.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub primitives: PrimitiveOverrides,
    #[serde(default)]
    pub mode: PayoffMode,
    pub rho_grid: Option<Vec<f64>>,
    pub b_grid: Option<Vec<f64>>,
    pub t_grid: Option<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
    pub sim: Option<SimSettings>,
    pub params: Option<Vec<Param>>,
    pub h: Option<f64>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub primitives: Primitives64,
    pub mode: PayoffMode,
    pub rho_grid: Vec<f64>,
    pub b_grid: Option<Vec<f64>>,
    pub t_grid: Option<Vec<f64>>,
    pub targets: Option<Vec<f64>>,
    pub sim: Option<SimSettings>,
    pub params: Vec<Param>,
    pub h: f64,
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool, range: &str) -> Result<()> {
    if grid.is_empty() {
        bail!("{name}: must not be empty");
    }
    for (i, &v) in grid.iter().enumerate() {
        if !ok(v) {
            bail!("{name}[{i}] = {v}: must lie in {range}");
        }
    }
    if let Some(i) = grid.windows(2).position(|w| w[0] >= w[1]) {
        bail!(
            "{name}[{}] = {}: grid must be strictly ascending",
            i + 1,
            grid[i + 1]
        );
    }
    Ok(())
}

impl RawConfig {
    pub fn validate(self) -> Result<RunConfig> {
        let primitives = self
            .primitives
            .apply()
            .validate()
            .map_err(|e| anyhow!("primitives.{}: {e}", e.field()))?;
        let rho_grid = self.rho_grid.ok_or_else(|| anyhow!("rho_grid: required"))?;
        check_grid("rho_grid", &rho_grid, |r| r > 0.0 && r < 1.0, "(0, 1)")?;
        if let Some(g) = &self.b_grid {
            check_grid("b_grid", g, |b| b.is_finite() && b >= 0.0, "[0, inf)")?;
        }
        if let Some(g) = &self.t_grid {
            check_grid("t_grid", g, |t| t.is_finite() && t >= 0.0, "[0, inf)")?;
        }
        if let Some(g) = &self.targets {
            check_grid("targets", g, |e| e > 0.0 && e < 1.0, "(0, 1)")?;
        }
        if let Some(s) = &self.sim {
            if s.n_experts == 0 {
                bail!("sim.n_experts: must be at least 1");
            }
        }
        let h = self.h.unwrap_or(DEFAULT_STEP);
        if !(h > 0.0 && h < 0.1) {
            bail!("h = {h}: must lie in (0, 0.1)");
        }
        let params = self.params.unwrap_or_else(|| Param::ALL.to_vec());
        if params.is_empty() {
            bail!("params: must not be empty");
        }
        Ok(RunConfig {
            primitives,
            mode: self.mode,
            rho_grid,
            b_grid: self.b_grid,
            t_grid: self.t_grid,
            targets: self.targets,
            sim: self.sim,
            params,
            h,
        })
    }
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    raw.validate()
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text).with_context(|| format!("{}", path.display()))
}
