//! Null law of the statistic: a sum of independent copies of the largest
//! eigenvalue of `C Cᵀ`, `C` a `(p-1)×(q-1)` standard normal matrix.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MnccError, Result};
use crate::linalg::largest_sym_eigenvalue;
use crate::rng::{derive_seed, stream_rng};
use crate::sample::Sample;
use crate::special::normal_quantile;
use crate::teststat::{statistic, Method, TestConfig, TestReport, VERSION};

pub const DEFAULT_MC: usize = 100_000;
pub const MIN_MC: usize = 10_000;
const MOMENT_STREAM: u64 = 0x6d6f_6d65_6e74;

/// One draw of `λ_max(C Cᵀ)`.
pub fn sample_lambda<R: Rng + ?Sized>(p: usize, q: usize, rng: &mut R) -> f64 {
    let (r, c) = (p - 1, q - 1);
    let (small, large) = (r.min(c), r.max(c));
    if small == 1 {
        return (0..large).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
    }
    let m = DMatrix::<f64>::from_fn(small, large, |_, _| rng.sample(StandardNormal));
    // the nonzero spectra of C Cᵀ and Cᵀ C coincide; use the smaller Gram
    largest_sym_eigenvalue(&(&m * m.transpose()))
}

fn check_dims(p: usize, q: usize) -> Result<()> {
    if p < 2 || q < 2 {
        return Err(MnccError::InvalidArgument(format!(
            "p = {p}, q = {q}: both must be at least 2"
        )));
    }
    Ok(())
}

fn check_mc(mc: usize) -> Result<()> {
    if mc < MIN_MC {
        return Err(MnccError::InvalidArgument(format!(
            "mc = {mc} below the minimum {MIN_MC}"
        )));
    }
    Ok(())
}

/// `mc` independent draws of `Σ_{k=1}^{n_z} λ_k`; replicate `r` uses stream `r`.
pub fn null_sums(n_z: usize, p: usize, q: usize, mc: usize, seed: u64) -> Vec<f64> {
    (0..mc as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            (0..n_z).map(|_| sample_lambda(p, q, &mut rng)).sum()
        })
        .collect()
}

/// Type-7 empirical quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = level.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Monte-Carlo `level`-quantile of `Σ_{k=1}^{n_z} λ_k`.
pub fn null_quantile(n_z: usize, p: usize, q: usize, level: f64, mc: usize, seed: u64) -> Result<f64> {
    check_dims(p, q)?;
    check_mc(mc)?;
    if n_z == 0 {
        return Err(MnccError::InvalidArgument("n_z must be positive".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(MnccError::InvalidArgument(format!("level {level} outside (0, 1)")));
    }
    Ok(empirical_quantile(&sorted(null_sums(n_z, p, q, mc, seed)), level))
}

/// Monte-Carlo mean and variance of a single `λ`.
pub fn null_moments(p: usize, q: usize, mc: usize, seed: u64) -> Result<(f64, f64)> {
    check_dims(p, q)?;
    check_mc(mc)?;
    let draws = null_sums(1, p, q, mc, derive_seed(seed, MOMENT_STREAM));
    let n = draws.len() as f64;
    let mu = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mu, var))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistSummary {
    pub n_z: usize,
    pub p: usize,
    pub q: usize,
    pub mc: usize,
    pub seed: u64,
    /// Mean and variance of a single eigenvalue.
    pub mu: f64,
    pub sigma2: f64,
    pub quantiles: Vec<QuantilePoint>,
}

/// Simulated null law kept in sorted form for repeated use.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    n_z: usize,
    p: usize,
    q: usize,
    mc: usize,
    seed: u64,
    sums: Vec<f64>,
    mu: f64,
    sigma2: f64,
}

impl NullDistribution {
    pub fn simulate(n_z: usize, p: usize, q: usize, mc: usize, seed: u64) -> Result<Self> {
        check_dims(p, q)?;
        check_mc(mc)?;
        if n_z == 0 {
            return Err(MnccError::InvalidArgument("n_z must be positive".into()));
        }
        let sums = sorted(null_sums(n_z, p, q, mc, seed));
        let (mu, sigma2) = null_moments(p, q, mc, seed)?;
        Ok(Self {
            n_z,
            p,
            q,
            mc,
            seed,
            sums,
            mu,
            sigma2,
        })
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sorted_sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn quantile(&self, level: f64) -> f64 {
        empirical_quantile(&self.sums, level)
    }

    /// Fraction of simulated sums `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sums.partition_point(|&v| v <= x) as f64 / self.sums.len() as f64
    }

    /// `(1 + #{S ≥ t}) / (mc + 1)`.
    pub fn p_value(&self, t: f64) -> f64 {
        let ge = self.sums.len() - self.sums.partition_point(|&v| v < t);
        (1 + ge) as f64 / (self.sums.len() + 1) as f64
    }

    pub fn summary(&self, levels: &[f64]) -> NullDistSummary {
        NullDistSummary {
            n_z: self.n_z,
            p: self.p,
            q: self.q,
            mc: self.mc,
            seed: self.seed,
            mu: self.mu,
            sigma2: self.sigma2,
            quantiles: levels
                .iter()
                .map(|&level| QuantilePoint {
                    level,
                    value: self.quantile(level),
                })
                .collect(),
        }
    }

    fn matches(&self, cfg: &TestConfig) -> Result<()> {
        if self.n_z != cfg.n_z() || self.p != cfg.p || self.q != cfg.q {
            return Err(MnccError::InvalidArgument(format!(
                "null law simulated for (n_z, p, q) = ({}, {}, {}), test needs ({}, {}, {})",
                self.n_z,
                self.p,
                self.q,
                cfg.n_z(),
                cfg.p,
                cfg.q
            )));
        }
        Ok(())
    }
}

pub const SUMMARY_LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.999];

/// Reject iff `t` strictly exceeds the critical value.
pub fn decide_test1(t: f64, critical: f64) -> bool {
    t > critical
}

/// Standardized statistic `(t - n_z μ) / sqrt(n_z σ²)` and the decision
/// `z ≥ Φ⁻¹(1 - α)`.
pub fn decide_test1n(t: f64, n_z: usize, mu: f64, sigma2: f64, alpha: f64) -> (f64, bool) {
    let n = n_z as f64;
    let z = (t - n * mu) / (n * sigma2).sqrt();
    (z, z >= normal_quantile(1.0 - alpha))
}

/// Test against the Monte-Carlo quantile of the null law.
pub fn asymptotic_test(sample: &Sample, cfg: &TestConfig, null: &NullDistribution) -> Result<TestReport> {
    null.matches(cfg)?;
    let value = statistic(sample, cfg)?;
    let critical = null.quantile(1.0 - cfg.alpha);
    Ok(TestReport {
        version: VERSION.to_string(),
        method: Method::Asymptotic,
        n: sample.n(),
        statistic: value.statistic,
        per_point: value.per_point,
        critical_value: Some(critical),
        p_value: null.p_value(value.statistic),
        z_score: None,
        reject: decide_test1(value.statistic, critical),
        config: cfg.clone(),
        null_summary: Some(null.summary(&SUMMARY_LEVELS)),
        bootstrap: None,
    })
}

/// Test using the normal approximation of the null law.
pub fn normal_test(sample: &Sample, cfg: &TestConfig, null: &NullDistribution) -> Result<TestReport> {
    null.matches(cfg)?;
    let value = statistic(sample, cfg)?;
    let (z, reject) = decide_test1n(value.statistic, cfg.n_z(), null.mu(), null.sigma2(), cfg.alpha);
    let n = cfg.n_z() as f64;
    Ok(TestReport {
        version: VERSION.to_string(),
        method: Method::Normal,
        n: sample.n(),
        statistic: value.statistic,
        per_point: value.per_point,
        critical_value: Some(n * null.mu() + normal_quantile(1.0 - cfg.alpha) * (n * null.sigma2()).sqrt()),
        p_value: 1.0 - crate::special::normal_cdf(z),
        z_score: Some(z),
        reject,
        config: cfg.clone(),
        null_summary: Some(null.summary(&SUMMARY_LEVELS)),
        bootstrap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{chi_square_cdf, chi_square_quantile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_by_two_is_chi_square() {
        for n_z in [1, 4, 5] {
            let qv = null_quantile(n_z, 2, 2, 0.95, 200_000, 11).unwrap();
            let exact = chi_square_quantile(0.95, n_z);
            assert!((qv - exact).abs() / exact < 0.01, "n_z={n_z}: {qv} vs {exact}");
        }
        let (mu, var) = null_moments(2, 2, 200_000, 3).unwrap();
        assert_abs_diff_eq!(mu, 1.0, epsilon = 0.02);
        assert_abs_diff_eq!(var, 2.0, epsilon = 0.05);
    }

    #[test]
    fn vector_case_is_chi_square_with_more_dof() {
        // C is 1×(q-1): λ = ‖C‖² ~ χ²(q-1)
        let d = NullDistribution::simulate(1, 2, 4, 100_000, 5).unwrap();
        for x in [1.0, 3.0, 7.8] {
            assert_abs_diff_eq!(d.cdf(x), chi_square_cdf(x, 3), epsilon = 0.01);
        }
    }

    #[test]
    fn lambda_matches_dense_eigensolver() {
        // replay the same normal draws into nalgebra's solver
        let mut a = stream_rng(9, 0);
        let mut b = stream_rng(9, 0);
        for _ in 0..500 {
            let lam = sample_lambda(3, 4, &mut a);
            let m = DMatrix::<f64>::from_fn(2, 3, |_, _| b.sample(StandardNormal));
            let g = &m * m.transpose();
            let e = g.symmetric_eigenvalues();
            assert_abs_diff_eq!(lam, e.max(), epsilon = 1e-10 * e.max().max(1.0));
        }
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let a = null_quantile(3, 3, 3, 0.9, 10_000, 1).unwrap();
        let b = null_quantile(3, 3, 3, 0.9, 10_000, 1).unwrap();
        let c = null_quantile(3, 3, 3, 0.9, 10_000, 2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
    }

    #[test]
    fn preconditions() {
        assert!(null_quantile(3, 2, 2, 0.95, 100, 1).is_err());
        assert!(null_quantile(3, 1, 2, 0.95, 10_000, 1).is_err());
        assert!(null_quantile(0, 2, 2, 0.95, 10_000, 1).is_err());
        assert!(null_quantile(3, 2, 2, 1.0, 10_000, 1).is_err());
    }

    #[test]
    fn type7_quantile() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(empirical_quantile(&v, 0.0), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0), 5.0);
        assert_abs_diff_eq!(empirical_quantile(&v, 0.9), 4.6, epsilon = 1e-12);
    }

    #[test]
    fn decisions() {
        assert!(!decide_test1(2.0, 2.0));
        assert!(decide_test1(2.0 + 1e-12, 2.0));
        let thr = normal_quantile(0.95);
        let (z, r) = decide_test1n(5.0 + thr * 10f64.sqrt() + 1e-9, 5, 1.0, 2.0, 0.05);
        assert_abs_diff_eq!(z, thr, epsilon = 1e-9);
        assert!(r);
        let (_, r2) = decide_test1n(5.0, 5, 1.0, 2.0, 0.05);
        assert!(!r2);
    }

    #[test]
    fn p_value_counts_ties() {
        let d = NullDistribution::simulate(1, 2, 2, 10_000, 4).unwrap();
        let s = d.sorted_sums();
        let t = s[s.len() - 1];
        assert_abs_diff_eq!(d.p_value(t), 2.0 / 10_001.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.p_value(-1.0), 1.0, epsilon = 1e-15);
    }
}
