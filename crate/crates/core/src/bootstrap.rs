//! Local bootstrap: `Z*` is drawn from the observed `Z`, then `X*` and `Y*`
//! are drawn independently from the observations whose `Z` is near `Z*`.
//! This imposes conditional independence on the resample.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MnccError, Result};
use crate::kernel::{raw_weights, KernelConfig};
use crate::nulldist::empirical_quantile;
use crate::rng::stream_rng;
use crate::sample::Sample;
use crate::teststat::{statistic, Method, TestConfig, TestReport, VERSION};

pub const DEFAULT_RESAMPLES: usize = 1000;
/// Largest `n` for which the `n×n` cumulative weight table is cached.
const PRECOMPUTE_LIMIT: usize = 1500;

/// How the observed statistic is compared with the resampled ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapRule {
    /// Reject iff `T` exceeds the type-7 `(1-α)` quantile of `T*`.
    #[default]
    Quantile,
    /// Reject iff `#{T* < T} > (1-α) B`.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Resampling bandwidth.
    pub b: f64,
    pub n_resamples: usize,
    pub seed: u64,
    pub rule: BootstrapRule,
}

impl BootstrapConfig {
    pub fn new(b: f64, n_resamples: usize, seed: u64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(MnccError::InvalidArgument(format!(
                "resampling bandwidth {b} must be positive"
            )));
        }
        if n_resamples == 0 {
            return Err(MnccError::InvalidArgument("at least one resample is required".into()));
        }
        Ok(Self {
            b,
            n_resamples,
            seed,
            rule: BootstrapRule::default(),
        })
    }

    /// Resampling bandwidth `b = h^0.4`.
    pub fn for_bandwidth(h: f64, n_resamples: usize, seed: u64) -> Result<Self> {
        Self::new(h.powf(0.4), n_resamples, seed)
    }

    pub fn rule(mut self, rule: BootstrapRule) -> Self {
        self.rule = rule;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub b: f64,
    pub n_resamples: usize,
    pub failed: usize,
    pub rule: BootstrapRule,
    pub statistics: Vec<f64>,
}

/// Draws local-bootstrap resamples of a fixed sample.
pub struct LocalResampler<'a> {
    sample: &'a Sample,
    kernel: KernelConfig,
    /// Row `i`: cumulative weights `Σ_{j' ≤ j} k((Z_i - Z_j')/b)`.
    cumulative: Option<Vec<Vec<f64>>>,
}

fn cumulative_row(sample: &Sample, i: usize, kernel: &KernelConfig) -> Result<Vec<f64>> {
    let mut w = raw_weights(sample.z_row(i), sample.z_values(), kernel)?;
    let mut acc = 0.0;
    for v in w.iter_mut() {
        acc += *v;
        *v = acc;
    }
    Ok(w)
}

fn draw(cum: &[f64], rng: &mut impl Rng) -> usize {
    let total = cum[cum.len() - 1];
    let u = rng.random::<f64>() * total;
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl<'a> LocalResampler<'a> {
    pub fn new(sample: &'a Sample, b: f64) -> Result<Self> {
        let kernel = KernelConfig::new(b, sample.dz())?;
        let cumulative = if sample.n() <= PRECOMPUTE_LIMIT {
            Some(
                (0..sample.n())
                    .into_par_iter()
                    .map(|i| cumulative_row(sample, i, &kernel))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self {
            sample,
            kernel,
            cumulative,
        })
    }

    /// Indices `(I, J_X, J_Y)` of one resample; `Z*_i = Z_{I_i}`.
    pub fn draw_indices(&self, rng: &mut impl Rng) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let n = self.sample.n();
        let centres: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut jx = Vec::with_capacity(n);
        let mut jy = Vec::with_capacity(n);
        match &self.cumulative {
            Some(table) => {
                for &c in &centres {
                    jx.push(draw(&table[c], rng));
                    jy.push(draw(&table[c], rng));
                }
            }
            None => {
                // one kernel row per distinct centre; draws still in row order
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&i| centres[i]);
                let uniforms: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
                jx.resize(n, 0);
                jy.resize(n, 0);
                let mut row: Option<(usize, Vec<f64>)> = None;
                for i in order {
                    let c = centres[i];
                    if row.as_ref().is_none_or(|(rc, _)| *rc != c) {
                        row = Some((c, cumulative_row(self.sample, c, &self.kernel)?));
                    }
                    let cum = &row.as_ref().unwrap().1;
                    let total = cum[n - 1];
                    let pick = |u: f64| cum.partition_point(|&v| v <= u * total).min(n - 1);
                    jx[i] = pick(uniforms[i].0);
                    jy[i] = pick(uniforms[i].1);
                }
            }
        }
        Ok((centres, jx, jy))
    }

    pub fn resample(&self, rng: &mut impl Rng) -> Result<Sample> {
        let (centres, jx, jy) = self.draw_indices(rng)?;
        Ok(self.sample.gather(&jx, &jy, &centres))
    }
}

/// One local-bootstrap resample with resampling bandwidth `b`.
pub fn local_bootstrap_resample(sample: &Sample, b: f64, rng: &mut impl Rng) -> Result<Sample> {
    LocalResampler::new(sample, b)?.resample(rng)
}

/// Bootstrap calibration of the statistic. Resamples whose statistic fails
/// with degenerate kernel weights are dropped.
pub fn bootstrap_test(sample: &Sample, cfg: &TestConfig, bcfg: &BootstrapConfig) -> Result<TestReport> {
    if bcfg.n_resamples == 0 {
        return Err(MnccError::InvalidArgument("at least one resample is required".into()));
    }
    let observed = statistic(sample, cfg)?;
    let t = observed.statistic;
    let resampler = LocalResampler::new(sample, bcfg.b)?;

    let outcomes = (0..bcfg.n_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(bcfg.seed, r);
            let star = resampler.resample(&mut rng)?;
            match statistic(&star, cfg) {
                Ok(v) => Ok(Some(v.statistic)),
                Err(e) if e.is_degenerate_weights() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let stats: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let failed = outcomes.len() - stats.len();
    if stats.is_empty() {
        return Err(MnccError::Numerical(
            "every bootstrap resample had degenerate kernel weights".into(),
        ));
    }
    if failed * 100 > outcomes.len() {
        log::warn!("{failed} of {} bootstrap resamples were dropped", outcomes.len());
    }

    let mut sorted = stats.clone();
    sorted.sort_by(f64::total_cmp);
    let critical = empirical_quantile(&sorted, 1.0 - cfg.alpha);
    let ge = stats.iter().filter(|&&s| s >= t).count();
    let below = stats.iter().filter(|&&s| s < t).count();
    let reject = match bcfg.rule {
        BootstrapRule::Quantile => t > critical,
        BootstrapRule::Count => below as f64 > (1.0 - cfg.alpha) * stats.len() as f64,
    };

    Ok(TestReport {
        version: VERSION.to_string(),
        method: Method::Bootstrap,
        n: sample.n(),
        statistic: t,
        per_point: observed.per_point,
        critical_value: Some(critical),
        p_value: (1 + ge) as f64 / (stats.len() + 1) as f64,
        z_score: None,
        reject,
        config: cfg.clone(),
        null_summary: None,
        bootstrap: Some(BootstrapSummary {
            b: bcfg.b,
            n_resamples: bcfg.n_resamples,
            failed,
            rule: bcfg.rule,
            statistics: stats,
        }),
    })
}
