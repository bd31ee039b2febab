//! Run configuration. Physical parameters are required; numerical tolerances default.

use phi4lab::besov::{PartitionConfig, VerifyConfig, WeightSpec};
use phi4lab::gaussian::WickConvention;
use phi4lab::grid::TorusGrid;
use phi4lab::plane::{PeriodizationConfig, SolutionStudyConfig, StackStudyConfig};
use phi4lab::solver::{PicardInit, SolverConfig};
use serde::{Deserialize, Serialize};

/// Configuration used when `--config` is not given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub numerics: Numerics,
    pub besov: Option<BesovSection>,
    pub wick: Option<WickSection>,
    pub verify_solver: Option<SolverSection>,
    pub converge: Option<ConvergeSection>,
}

/// `M, N, dt, T, a, α, α′, β, σ, p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub side_length: f64,
    pub points_per_side: usize,
    pub dt: f64,
    pub t_end: f64,
    pub a: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub sigma: f64,
    pub p: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub initial_window: usize,
    pub record_stride: usize,
    pub energy: bool,
    pub init: PicardInit,
    /// Noise sub-steps per solver step.
    pub substeps: usize,
    pub convention: WickConvention,
    pub partition_theta: f64,
    pub partition_delta: f64,
    pub bump_inner: f64,
    pub bump_outer: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let s = SolverConfig::default();
        let b = PeriodizationConfig::default();
        Self {
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            initial_window: s.initial_window,
            record_stride: s.record_stride,
            energy: s.energy,
            init: s.init,
            substeps: 1,
            convention: WickConvention::Shifted,
            partition_theta: 2.0,
            partition_delta: 0.4,
            bump_inner: b.bump_inner,
            bump_outer: b.bump_outer,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovSection {
    pub weight: WeightSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub kinds: Option<Vec<String>>,
    pub band_radius: Option<f64>,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

fn default_trials() -> usize {
    100
}
fn default_t_min() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WickSection {
    pub times: Vec<f64>,
    pub lags: Vec<[f64; 2]>,
    /// Space-time points `[t, x1, x2]` for the centering check.
    pub points: Vec<[f64; 3]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_z")]
    pub max_z: f64,
}

fn default_samples() -> usize {
    10_000
}
fn default_z() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_solver_seeds")]
    pub seeds: usize,
    /// The energy residual is compared between `dt` and `dt / 2`.
    #[serde(default = "default_true")]
    pub refine: bool,
    #[serde(default = "default_min_ratio")]
    pub min_residual_ratio: f64,
    #[serde(default = "default_resub")]
    pub max_resubstitution: f64,
    /// Horizon of the densely stored run used for re-substitution.
    #[serde(default = "default_resub_t")]
    pub resubstitution_t_end: f64,
    /// Picard initializations compared for uniqueness.
    #[serde(default = "default_true")]
    pub uniqueness: bool,
    #[serde(default = "default_agreement")]
    pub max_disagreement: f64,
}

fn default_solver_seeds() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_min_ratio() -> f64 {
    1.6
}
fn default_resub() -> f64 {
    1e-12
}
fn default_resub_t() -> f64 {
    0.2
}
fn default_agreement() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub spacing: f64,
    pub m_list: Vec<f64>,
    /// Sampling step and window of the stack study.
    pub stack_dt: f64,
    pub t_window: [f64; 2],
    /// Regularity `−alpha` and time weight exponent of the stack norms.
    pub stack_alpha: f64,
    pub stack_alpha_prime: f64,
    #[serde(default = "default_study_seeds")]
    pub seeds: usize,
    #[serde(default = "default_true")]
    pub solutions: bool,
    #[serde(default = "default_fraction")]
    pub min_monotone_fraction: f64,
    #[serde(default = "default_growth")]
    pub max_growth_ratio: f64,
}

fn default_study_seeds() -> usize {
    5
}
fn default_fraction() -> f64 {
    0.8
}
fn default_growth() -> f64 {
    2.0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let c: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), String> {
        self.grid()?;
        self.solver().validate().map_err(|e| e.to_string())?;
        if self.numerics.substeps == 0 {
            return Err("substeps must be positive".into());
        }
        self.periodization().validate().map_err(|e| e.to_string())?;
        if let Some(w) = &self.wick {
            if w.samples < phi4lab::gaussian::MIN_REALIZATIONS {
                return Err(format!("wick.samples must be at least {}", phi4lab::gaussian::MIN_REALIZATIONS));
            }
        }
        if let Some(b) = &self.besov {
            b.weight.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid, String> {
        TorusGrid::new(self.model.side_length, self.model.points_per_side).map_err(|e| e.to_string())
    }

    pub fn solver(&self) -> SolverConfig {
        let (m, n) = (&self.model, &self.numerics);
        SolverConfig {
            a: m.a,
            dt: m.dt,
            t_end: m.t_end,
            picard_tol: n.picard_tol,
            picard_max_iters: n.picard_max_iters,
            p_diag: m.p,
            alpha: m.alpha,
            alpha_prime: m.alpha_prime,
            beta: m.beta,
            initial_window: n.initial_window,
            record_stride: n.record_stride,
            energy: n.energy,
            init: n.init,
        }
    }

    pub fn partition(&self, grid: &TorusGrid) -> PartitionConfig {
        PartitionConfig::for_grid(grid, self.numerics.partition_theta, self.numerics.partition_delta)
    }

    pub fn periodization(&self) -> PeriodizationConfig {
        PeriodizationConfig { bump_inner: self.numerics.bump_inner, bump_outer: self.numerics.bump_outer }
    }

    pub fn verify(&self, b: &BesovSection, seed: u64) -> VerifyConfig {
        VerifyConfig { weight: b.weight, band_radius: b.band_radius, root_seed: seed, t_min: b.t_min, t_max: b.t_max }
    }

    pub fn stack_study(&self, c: &ConvergeSection) -> StackStudyConfig {
        StackStudyConfig {
            spacing: c.spacing,
            m_list: c.m_list.clone(),
            dt: c.stack_dt,
            t_window: c.t_window,
            sigma: self.model.sigma,
            alpha: c.stack_alpha,
            alpha_prime: c.stack_alpha_prime,
            p: self.model.p as f64,
            theta: self.numerics.partition_theta,
            delta: self.numerics.partition_delta,
            convention: self.numerics.convention,
            periodization: self.periodization(),
        }
    }

    pub fn solution_study(&self, c: &ConvergeSection) -> SolutionStudyConfig {
        SolutionStudyConfig {
            spacing: c.spacing,
            m_list: c.m_list.clone(),
            solver: self.solver(),
            substeps: self.numerics.substeps,
            sigma: self.model.sigma,
            theta: self.numerics.partition_theta,
            delta: self.numerics.partition_delta,
            convention: self.numerics.convention,
            periodization: self.periodization(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let c = RunConfig::parse(DEFAULT_CONFIG).unwrap();
        assert_eq!(c.model.points_per_side, 128);
        assert!(c.besov.is_some() && c.wick.is_some() && c.converge.is_some());
    }

    #[test]
    fn physics_fields_are_required() {
        let text = DEFAULT_CONFIG.replace("side_length = 4.0\n", "");
        assert!(RunConfig::parse(&text).unwrap_err().contains("side_length"));
    }

    #[test]
    fn tolerances_default() {
        let model = DEFAULT_CONFIG.split("[numerics]").next().unwrap();
        let c = RunConfig::parse(model).unwrap();
        assert_eq!(c.numerics.picard_tol, SolverConfig::default().picard_tol);
        assert!(c.besov.is_none());
    }
}
