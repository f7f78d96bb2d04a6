//! Evaluation grid and the aggregate statistic
//! `T = n hᵈ c_K Σ_k f̂_Z(z_k) ρ̂²(z_k)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::bootstrap::{bootstrap_test, BootstrapConfig, BootstrapSummary};
use crate::error::{MnccError, Result};
use crate::kernel::{c_k, KernelConfig};
use crate::mncc::{assign_cells, estimate_rho_with_cells, Regularization, RhoEstimate};
use crate::nulldist::{asymptotic_test, normal_test, NullDistSummary, NullDistribution, DEFAULT_MC};
use crate::sample::Sample;

/// How the critical value of the statistic is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Monte-Carlo quantile of the null law `Σ_k λ_k`.
    Asymptotic,
    /// Normal approximation of the null law.
    Normal,
    /// Local bootstrap.
    Bootstrap,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Asymptotic => "asymptotic",
            Method::Normal => "normal",
            Method::Bootstrap => "bootstrap",
        })
    }
}

/// Boundary margin `ε(h) = scale · h^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRule {
    pub margin_scale: f64,
    pub margin_exponent: f64,
}

impl Default for GridRule {
    fn default() -> Self {
        Self {
            margin_scale: 0.143,
            margin_exponent: 0.121,
        }
    }
}

impl GridRule {
    pub fn margin(&self, h: f64) -> f64 {
        self.margin_scale * h.powf(self.margin_exponent)
    }
}

fn axis_points(eps: f64, h0: f64) -> Vec<f64> {
    let upper = 1.0 - eps;
    (0..)
        .map(|k| eps + k as f64 * h0)
        .take_while(|&z| z <= upper + 1e-12)
        .collect()
}

/// Grid `z_k = ε + (k-1) h0` inside `[ε, 1-ε]`, tensorized for `d > 1`.
pub fn eval_points(h: f64, h0: f64, d: usize) -> Result<Vec<Vec<f64>>> {
    eval_points_with(h, h0, d, &GridRule::default())
}

pub fn eval_points_with(h: f64, h0: f64, d: usize, rule: &GridRule) -> Result<Vec<Vec<f64>>> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(MnccError::Domain(format!("bandwidth {h} outside (0, 0.5]")));
    }
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(MnccError::InvalidArgument(format!(
            "grid spacing {h0} must be positive"
        )));
    }
    if d == 0 {
        return Err(MnccError::InvalidArgument("z dimension must be positive".into()));
    }
    let axis = axis_points(rule.margin(h), h0);
    // a spacing wider than the unit interval does not define a grid
    if axis.is_empty() || h0 > 1.0 {
        return Err(MnccError::EmptyGrid { h, h0 });
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..d {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(grid)
}

/// Everything needed to evaluate and calibrate the statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub h: f64,
    pub h0: f64,
    pub eps: f64,
    pub z_points: Vec<Vec<f64>>,
    /// Total cell counts of the X and Y bases.
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub seed: u64,
    pub method: Method,
    /// Monte-Carlo draws for the null law.
    pub mc: usize,
    pub regularization: Regularization,
}

impl TestConfig {
    pub fn new(h: f64, h0: f64, z_dim: usize, p: usize, q: usize) -> Result<Self> {
        Self::with_grid_rule(h, h0, z_dim, p, q, &GridRule::default())
    }

    pub fn with_grid_rule(h: f64, h0: f64, z_dim: usize, p: usize, q: usize, rule: &GridRule) -> Result<Self> {
        let z_points = eval_points_with(h, h0, z_dim, rule)?;
        if h0 < h {
            log::warn!("grid spacing {h0} is below the bandwidth {h}; evaluation points are not kernel-separated");
        }
        let cfg = Self {
            h,
            h0,
            eps: rule.margin(h),
            z_points,
            p,
            q,
            alpha: 0.05,
            seed: 0,
            method: Method::Asymptotic,
            mc: DEFAULT_MC,
            regularization: Regularization::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn mc(mut self, mc: usize) -> Self {
        self.mc = mc;
        self
    }

    pub fn n_z(&self) -> usize {
        self.z_points.len()
    }

    pub fn z_dim(&self) -> usize {
        self.z_points.first().map_or(0, |z| z.len())
    }

    pub fn kernel(&self) -> Result<KernelConfig> {
        KernelConfig::new(self.h, self.z_dim())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(MnccError::InvalidArgument(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.p < 2 || self.q < 2 {
            return Err(MnccError::InvalidArgument("p and q must be at least 2".into()));
        }
        if self.z_points.is_empty() {
            return Err(MnccError::EmptyGrid { h: self.h, h0: self.h0 });
        }
        let d = self.z_dim();
        if self.z_points.iter().any(|z| z.len() != d) {
            return Err(MnccError::InvalidArgument(
                "evaluation points differ in dimension".into(),
            ));
        }
        if !(self.h > 0.0) {
            return Err(MnccError::InvalidArgument("bandwidth must be positive".into()));
        }
        Ok(())
    }
}

/// Statistic value with its per-point ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub statistic: f64,
    pub per_point: Vec<RhoEstimate>,
}

/// `T = n hᵈ c_K Σ_k f̂_Z(z_k) ρ̂²(z_k)` with clipped `ρ̂²`.
pub fn statistic(sample: &Sample, cfg: &TestConfig) -> Result<StatisticValue> {
    cfg.validate()?;
    let d = cfg.z_dim();
    if sample.dz() != d {
        return Err(MnccError::InvalidArgument(format!(
            "sample has {}-dimensional Z, grid is {d}-dimensional",
            sample.dz()
        )));
    }
    if !sample.in_unit_cube() {
        return Err(MnccError::Domain(
            "sample coordinates must lie in [0, 1]; transform the data first".into(),
        ));
    }
    let bx = BasisSpec::with_total_cells(sample.dx(), cfg.p)?;
    let by = BasisSpec::with_total_cells(sample.dy(), cfg.q)?;
    let cells = assign_cells(sample, &bx, &by)?;
    let kernel = cfg.kernel()?;

    let per_point = cfg
        .z_points
        .par_iter()
        .map(|z| estimate_rho_with_cells(sample, &cells, z, &kernel, &cfg.regularization).map_err(|e| e.at_point(z)))
        .collect::<Result<Vec<_>>>()?;

    let weighted: f64 = per_point.iter().map(|r| r.fz_hat * r.rho * r.rho).sum();
    let scale = sample.n() as f64 * cfg.h.powi(d as i32) * c_k(d);
    Ok(StatisticValue {
        statistic: scale * weighted,
        per_point,
    })
}

/// Outcome of a test run, with every resolved parameter echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub version: String,
    pub method: Method,
    pub n: usize,
    pub statistic: f64,
    pub per_point: Vec<RhoEstimate>,
    pub critical_value: Option<f64>,
    pub p_value: f64,
    /// Standardized statistic of the normal approximation.
    pub z_score: Option<f64>,
    pub reject: bool,
    pub config: TestConfig,
    pub null_summary: Option<NullDistSummary>,
    pub bootstrap: Option<BootstrapSummary>,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run the test selected by `cfg.method`. The bootstrap configuration is
/// only consulted by the bootstrap method; `None` uses its defaults.
pub fn run_test(sample: &Sample, cfg: &TestConfig, bootstrap: Option<&BootstrapConfig>) -> Result<TestReport> {
    match cfg.method {
        Method::Asymptotic => {
            let null = NullDistribution::simulate(cfg.n_z(), cfg.p, cfg.q, cfg.mc, cfg.seed)?;
            asymptotic_test(sample, cfg, &null)
        }
        Method::Normal => {
            let null = NullDistribution::simulate(cfg.n_z(), cfg.p, cfg.q, cfg.mc, cfg.seed)?;
            normal_test(sample, cfg, &null)
        }
        Method::Bootstrap => {
            let default;
            let bcfg = match bootstrap {
                Some(b) => b,
                None => {
                    default = BootstrapConfig::for_bandwidth(cfg.h, crate::bootstrap::DEFAULT_RESAMPLES, cfg.seed)?;
                    &default
                }
            };
            bootstrap_test(sample, cfg, bcfg)
        }
    }
}
