//! Data-generating models and the power-study harness.
//!
//! * `M1`: `Z ~ U[0,1]`, `(X, Y) = (Φ(Z ε₁), Φ(Z ε₂))` — conditionally independent.
//! * `M2`: `Z ~ N(0,1)`, `(X, Y) | Z = z` bivariate normal with correlation
//!   `a|1 - 2Φ(z)|`; tested after the coordinatewise transform `Φ`.
//! * `M3`: `Z₀` standard Cauchy, `(X₀, Y₀) | Φ(Z₀) = u` bivariate normal with
//!   correlation `a|1 - 2u|`; output `(Φ(X₀), Φ(Y₀), Φ(Z₀))`.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_test, BootstrapConfig};
use crate::error::{MnccError, Result};
use crate::nulldist::{asymptotic_test, normal_test, NullDistribution};
use crate::rng::{derive_seed, stream_rng};
use crate::sample::Sample;
use crate::special::normal_cdf;
use crate::teststat::{Method, TestConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Model {
    M1,
    M2,
    M3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    /// Dependence strength; ignored by `M1`.
    pub a: f64,
    pub n: usize,
}

impl ModelSpec {
    pub fn new(model: Model, a: f64, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(MnccError::InvalidArgument(format!(
                "dependence strength {a} outside [0, 1]"
            )));
        }
        if n == 0 {
            return Err(MnccError::InvalidArgument("n must be positive".into()));
        }
        Ok(Self { model, a, n })
    }

    /// A sample on `[0,1]³`, ready for the test.
    pub fn generate(&self, rng: &mut impl Rng) -> Sample {
        match self.model {
            Model::M1 => gen_m1(self.n, rng),
            Model::M2 => gen_m2(self.n, self.a, rng).transformed,
            Model::M3 => gen_m3(self.n, self.a, rng),
        }
    }
}

fn correlated_pair(rho: f64, rng: &mut impl Rng) -> (f64, f64) {
    let x: f64 = rng.sample(StandardNormal);
    let e: f64 = rng.sample(StandardNormal);
    (x, rho * x + (1.0 - rho * rho).sqrt() * e)
}

pub fn gen_m1(n: usize, rng: &mut impl Rng) -> Sample {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let zi: f64 = rng.random();
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        x.push(normal_cdf(zi * e1));
        y.push(normal_cdf(zi * e2));
        z.push(zi);
    }
    Sample::from_columns(x, y, z).expect("generated sample is finite")
}

/// `M2` draws on the original scale together with their `Φ` transform.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Sample {
    pub raw: Sample,
    pub transformed: Sample,
}

pub fn gen_m2(n: usize, a: f64, rng: &mut impl Rng) -> M2Sample {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let zi: f64 = rng.sample(StandardNormal);
        let rho = a * (1.0 - 2.0 * normal_cdf(zi)).abs();
        let (xi, yi) = correlated_pair(rho, rng);
        x.push(xi);
        y.push(yi);
        z.push(zi);
    }
    let raw = Sample::from_columns(x, y, z).expect("generated sample is finite");
    let transformed = raw.map(normal_cdf);
    M2Sample { raw, transformed }
}

pub fn gen_m3(n: usize, a: f64, rng: &mut impl Rng) -> Sample {
    let cauchy = Cauchy::new(0.0, 1.0).expect("unit scale");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let u = normal_cdf(cauchy.sample(rng));
        let (x0, y0) = correlated_pair(a * (1.0 - 2.0 * u).abs(), rng);
        x.push(normal_cdf(x0));
        y.push(normal_cdf(y0));
        z.push(u);
    }
    Sample::from_columns(x, y, z).expect("generated sample is finite")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudyResult {
    pub model_spec: ModelSpec,
    pub method: Method,
    pub reps: usize,
    pub rejections: usize,
    /// Replicates whose test errored; they count as non-rejections.
    pub failures: usize,
    pub rate: f64,
    pub seed: u64,
    pub runtime_secs: f64,
}

const BOOTSTRAP_STREAM: u64 = 0x626f_6f74;

/// Rejection rate of the test `cfg.method` over `reps` samples from `spec`.
/// Replicate `r` draws its data from stream `r` of `seed`; the null law is
/// simulated once from `cfg.seed`.
pub fn power_study(
    spec: &ModelSpec,
    cfg: &TestConfig,
    bootstrap: Option<&BootstrapConfig>,
    reps: usize,
    seed: u64,
) -> Result<PowerStudyResult> {
    if reps == 0 {
        return Err(MnccError::InvalidArgument("reps must be at least 1".into()));
    }
    cfg.validate()?;
    let start = Instant::now();
    let null = match cfg.method {
        Method::Asymptotic | Method::Normal => {
            Some(NullDistribution::simulate(cfg.n_z(), cfg.p, cfg.q, cfg.mc, cfg.seed)?)
        }
        Method::Bootstrap => None,
    };
    let bcfg = match bootstrap {
        Some(b) => *b,
        None => BootstrapConfig::for_bandwidth(cfg.h, crate::bootstrap::DEFAULT_RESAMPLES, seed)?,
    };

    let outcomes: Vec<Option<bool>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let sample = spec.generate(&mut stream_rng(seed, r));
            let report = match (cfg.method, &null) {
                (Method::Asymptotic, Some(null)) => asymptotic_test(&sample, cfg, null),
                (Method::Normal, Some(null)) => normal_test(&sample, cfg, null),
                _ => {
                    let mut b = bcfg;
                    b.seed = derive_seed(derive_seed(bcfg.seed, BOOTSTRAP_STREAM), r);
                    bootstrap_test(&sample, cfg, &b)
                }
            };
            match report {
                Ok(rep) => Some(rep.reject),
                Err(e) => {
                    log::debug!("replicate {r} failed: {e}");
                    None
                }
            }
        })
        .collect();

    let rejections = outcomes.iter().filter(|o| **o == Some(true)).count();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    if failures > 0 {
        log::warn!("{failures} of {reps} replicates failed");
    }
    Ok(PowerStudyResult {
        model_spec: *spec,
        method: cfg.method,
        reps,
        rejections,
        failures,
        rate: rejections as f64 / reps as f64,
        seed,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
