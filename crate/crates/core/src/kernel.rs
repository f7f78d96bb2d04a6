//! Gaussian product kernel, kernel density estimate and Nadaraya-Watson
//! conditional expectation.

use crate::error::{MnccError, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    bandwidth: f64,
    z_dim: usize,
}

impl KernelConfig {
    pub fn new(bandwidth: f64, z_dim: usize) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(MnccError::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if z_dim == 0 {
            return Err(MnccError::InvalidArgument("z dimension must be positive".into()));
        }
        Ok(Self { bandwidth, z_dim })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn z_dim(&self) -> usize {
        self.z_dim
    }
}

/// `k0(u) = Π φ(u_j)` with `φ` the standard normal density.
pub fn gaussian_product_kernel(u: &[f64]) -> f64 {
    let sq: f64 = u.iter().map(|v| v * v).sum();
    (-0.5 * sq).exp() / (2.0 * PI).powf(0.5 * u.len() as f64)
}

/// `c_K = 1 / ∫ k0²` for the Gaussian product kernel in `d` dimensions.
pub fn c_k(d: usize) -> f64 {
    (2.0 * PI.sqrt()).powi(d as i32)
}

/// Unnormalized kernel weights `k0((z - Z_i)/h)` for every row of the
/// row-major `z_samples` buffer.
pub fn raw_weights(z: &[f64], z_samples: &[f64], cfg: &KernelConfig) -> Result<Vec<f64>> {
    let d = cfg.z_dim;
    if z.len() != d || !z_samples.len().is_multiple_of(d) || z_samples.is_empty() {
        return Err(MnccError::InvalidArgument(format!(
            "evaluation point / sample dimension mismatch (d = {d})"
        )));
    }
    let h = cfg.bandwidth;
    let norm = (2.0 * PI).powf(-0.5 * d as f64);
    Ok(z_samples
        .chunks_exact(d)
        .map(|zi| {
            let sq: f64 = zi.iter().zip(z).map(|(a, b)| ((b - a) / h).powi(2)).sum();
            norm * (-0.5 * sq).exp()
        })
        .collect())
}

/// Kernel weights at `z` normalized to sum to one, plus the raw sum.
#[derive(Debug, Clone)]
pub struct Weights {
    pub normalized: Vec<f64>,
    pub raw_sum: f64,
}

pub fn normalized_weights(z: &[f64], z_samples: &[f64], cfg: &KernelConfig) -> Result<Weights> {
    let mut w = raw_weights(z, z_samples, cfg)?;
    let n = w.len();
    let raw_sum: f64 = w.iter().sum();
    if !(raw_sum >= 1e-300 * n as f64) {
        return Err(MnccError::DegenerateWeights {
            z: z.to_vec(),
            bandwidth: cfg.bandwidth,
        });
    }
    w.iter_mut().for_each(|v| *v /= raw_sum);
    Ok(Weights { normalized: w, raw_sum })
}

/// `f̂_Z(z) = (n h^d)^{-1} Σ k0((z - Z_i)/h)`.
pub fn kde(z: &[f64], z_samples: &[f64], cfg: &KernelConfig) -> Result<f64> {
    let w = raw_weights(z, z_samples, cfg)?;
    let n = w.len() as f64;
    Ok(w.iter().sum::<f64>() / (n * cfg.bandwidth.powi(cfg.z_dim as i32)))
}

/// Density estimate from an already computed raw weight sum.
pub(crate) fn kde_from_raw_sum(raw_sum: f64, n: usize, cfg: &KernelConfig) -> f64 {
    raw_sum / (n as f64 * cfg.bandwidth.powi(cfg.z_dim as i32))
}

/// Nadaraya-Watson estimate of `E(g | Z = z)`.
pub fn cond_expect(g_values: &[f64], z: &[f64], z_samples: &[f64], cfg: &KernelConfig) -> Result<f64> {
    let w = normalized_weights(z, z_samples, cfg)?;
    if g_values.len() != w.normalized.len() {
        return Err(MnccError::InvalidArgument(format!(
            "{} function values for {} observations",
            g_values.len(),
            w.normalized.len()
        )));
    }
    Ok(g_values.iter().zip(&w.normalized).map(|(g, w)| g * w).sum())
}
