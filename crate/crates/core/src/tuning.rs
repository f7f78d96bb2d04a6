//! Data-independent tuning: the bandwidth minimizing the integrated squared
//! error of a KDE of uniform data, and the grid spacing calibrated by a
//! Kolmogorov–Smirnov comparison with the null law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MnccError, Result};
use crate::nulldist::NullDistribution;
use crate::quad::integrate;
use crate::rng::{stream_rng, McRng};
use crate::sample::Sample;
use crate::simulate::gen_m1;
use crate::special::{chi_square_cdf, normal_cdf};
use crate::teststat::{statistic, GridRule, TestConfig};

const INV_TWO_SQRT_PI: f64 = 0.28209479177387814;

/// `E f̂(z)` for `n` uniform draws and bandwidth `h`.
fn kde_mean(z: f64, h: f64) -> f64 {
    normal_cdf((1.0 - z) / h) - normal_cdf(-z / h)
}

/// `E k_h(z - U)²` for `U ~ U[0,1]`.
fn kernel_second_moment(z: f64, h: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 / h;
    INV_TWO_SQRT_PI / h * (normal_cdf(s * z) - normal_cdf(s * (z - 1.0)))
}

/// `∫_ε^{1-ε} E(f̂(z) - 1)² dz` for a sample of `n` uniforms, `ε = 0.143 h^0.121`.
pub fn mise_uniform(h: f64, n: usize) -> Result<f64> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(MnccError::Domain(format!("bandwidth {h} outside (0, 0.5]")));
    }
    if n < 2 {
        return Err(MnccError::InvalidArgument("n must be at least 2".into()));
    }
    let eps = GridRule::default().margin(h);
    let nf = n as f64;
    let integrand = |z: f64| {
        let m = kde_mean(z, h);
        let var = (kernel_second_moment(z, h) - m * m) / nf;
        var + (m - 1.0).powi(2)
    };
    Ok(integrate(integrand, eps, 1.0 - eps, 1e-13))
}

pub const MIN_BANDWIDTH: f64 = 1e-4;
const GOLDEN_TOL: f64 = 1e-6;

/// `(h, criterion)` pairs on a logarithmic grid over `[MIN_BANDWIDTH, 0.5]`.
pub fn objective_curve(n: usize, points: usize) -> Result<Vec<(f64, f64)>> {
    let points = points.max(2);
    let (lo, hi) = (MIN_BANDWIDTH.ln(), 0.5f64.ln());
    (0..points)
        .map(|i| {
            let h = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp().min(0.5);
            Ok((h, mise_uniform(h, n)?))
        })
        .collect()
}

/// Minimizer of [`mise_uniform`] over `(0, 0.5]`: a log-grid bracket refined
/// by golden-section search.
pub fn select_bandwidth(n: usize) -> Result<f64> {
    let curve = objective_curve(n, 120)?;
    let best = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("nonempty curve");
    if best + 1 == curve.len() {
        return Ok(0.5);
    }
    let mut a = curve[best.saturating_sub(1)].0;
    let mut b = curve[best + 1].0;
    let f = |h: f64| mise_uniform(h, n).expect("bracket inside domain");
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample KS distance and its asymptotic p-value.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if values.is_empty() {
        return Err(MnccError::InvalidArgument("KS test needs at least one value".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(m.sqrt() * d),
    })
}

/// Reference law for the grid-spacing calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NullReference {
    /// `χ²(n_Z)`; exact when `p = q = 2`.
    ChiSquare,
    /// Monte-Carlo null law with the given number of draws.
    MonteCarlo { mc: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H0Options {
    /// Accept the first candidate whose KS p-value exceeds this.
    pub threshold: f64,
    pub p: usize,
    pub q: usize,
    /// Largest candidate examined; candidates are multiples of 0.01.
    pub max_h0: f64,
    pub reference: NullReference,
}

impl Default for H0Options {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            p: 2,
            q: 2,
            max_h0: 1.0,
            reference: NullReference::ChiSquare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTraceEntry {
    pub h0: f64,
    pub n_z: usize,
    pub d: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H0Selection {
    pub h0: f64,
    pub ks_trace: Vec<KsTraceEntry>,
}

/// Smallest multiple of 0.01 for which `reps` draws of the statistic pass a
/// KS comparison with the null law. `draw(cfg, r)` returns replicate `r`
/// of the statistic under the candidate configuration.
pub fn scan_h0<F>(h: f64, draw: F, reps: usize, opts: &H0Options) -> Result<H0Selection>
where
    F: Fn(&TestConfig, u64) -> Result<f64> + Sync,
{
    if reps < 100 {
        return Err(MnccError::InvalidArgument(format!(
            "reps = {reps}: at least 100 required"
        )));
    }
    let mut trace = Vec::new();
    let steps = (opts.max_h0 * 100.0).round() as usize;
    for k in 1..=steps {
        let h0 = k as f64 / 100.0;
        let cfg = match TestConfig::new(h, h0, 1, opts.p, opts.q) {
            Ok(cfg) => cfg,
            Err(MnccError::EmptyGrid { .. }) => continue,
            Err(e) => return Err(e),
        };
        let stats = (0..reps as u64)
            .into_par_iter()
            .map(|r| draw(&cfg, r))
            .collect::<Result<Vec<_>>>()?;
        let n_z = cfg.n_z();
        let ks = match opts.reference {
            NullReference::ChiSquare => ks_statistic(&stats, |x| chi_square_cdf(x, n_z))?,
            NullReference::MonteCarlo { mc, seed } => {
                let null = NullDistribution::simulate(n_z, opts.p, opts.q, mc, seed)?;
                ks_statistic(&stats, |x| null.cdf(x))?
            }
        };
        log::debug!("h0 = {h0}: n_z = {n_z}, D = {:.4}, p = {:.4}", ks.d, ks.p_value);
        trace.push(KsTraceEntry {
            h0,
            n_z,
            d: ks.d,
            p_value: ks.p_value,
        });
        if ks.p_value > opts.threshold {
            return Ok(H0Selection { h0, ks_trace: trace });
        }
    }
    Err(MnccError::CalibrationFailed { upper: opts.max_h0 })
}

/// [`scan_h0`] with the statistic computed on samples from `sampler`;
/// replicate `r` is drawn from stream `r` of `seed` for every candidate.
pub fn select_h0_with<S>(h: f64, sampler: S, reps: usize, seed: u64, opts: &H0Options) -> Result<H0Selection>
where
    S: Fn(&mut McRng) -> Sample + Sync,
{
    scan_h0(
        h,
        |cfg, r| statistic(&sampler(&mut stream_rng(seed, r)), cfg).map(|v| v.statistic),
        reps,
        opts,
    )
}

/// [`select_h0_with`] using samples of size `n` from the conditionally
/// independent model `M1`.
pub fn select_h0(n: usize, h: f64, reps: usize, seed: u64, opts: &H0Options) -> Result<H0Selection> {
    select_h0_with(h, |rng| gen_m1(n, rng), reps, seed, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub n: usize,
    pub h: f64,
    pub h0: f64,
    pub objective_curve: Vec<(f64, f64)>,
    pub ks_trace: Vec<KsTraceEntry>,
}

/// Bandwidth and grid spacing for sample size `n`.
pub fn calibrate(n: usize, reps: usize, seed: u64, opts: &H0Options) -> Result<TuningResult> {
    let h = select_bandwidth(n)?;
    let sel = select_h0(n, h, reps, seed, opts)?;
    Ok(TuningResult {
        n,
        h,
        h0: sel.h0,
        objective_curve: objective_curve(n, 60)?,
        ks_trace: sel.ks_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::chi_square_quantile;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn closed_form_against_monte_carlo() {
        // 200 replicates of 1000 uniforms, h = 0.08; Simpson on 401 nodes
        let (h, n, reps) = (0.08, 1000usize, 200u64);
        let eps = GridRule::default().margin(h);
        let nodes = 401;
        let step = (1.0 - 2.0 * eps) / (nodes - 1) as f64;
        let zs: Vec<f64> = (0..nodes).map(|i| eps + i as f64 * step).collect();
        let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        let vals: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = stream_rng(17, r);
                let u: Vec<f64> = (0..n).map(|_| rng.random()).collect();
                let sq: Vec<f64> = zs
                    .iter()
                    .map(|&z| {
                        let f: f64 = u.iter().map(|&v| (-0.5 * ((z - v) / h).powi(2)).exp()).sum::<f64>() * norm;
                        (f - 1.0).powi(2)
                    })
                    .collect();
                let mut s = sq[0] + sq[nodes - 1];
                for (i, v) in sq.iter().enumerate().take(nodes - 1).skip(1) {
                    s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
                }
                s * step / 3.0
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        let se = sd / (reps as f64).sqrt();
        let exact = mise_uniform(h, n).unwrap();
        assert!((mean - exact).abs() < 3.0 * se, "mc {mean} ± {se}, closed form {exact}");
    }

    #[test]
    fn criterion_shape() {
        let at = |h| mise_uniform(h, 500).unwrap();
        assert!(at(0.5) > at(0.0983));
        assert!(at(1e-4) > at(0.0983));
        for h in [0.01, 0.05, 0.1, 0.2, 0.4] {
            assert!(mise_uniform(h, 1000).unwrap() < mise_uniform(h, 500).unwrap());
        }
        assert!(mise_uniform(0.0, 10).is_err());
        assert!(mise_uniform(0.6, 10).is_err());
    }

    #[test]
    fn bandwidth_is_a_local_minimum() {
        let h = select_bandwidth(2000).unwrap();
        let f = |x| mise_uniform(x, 2000).unwrap();
        assert!(f(h) <= f(h * 1.01) && f(h) <= f(h * 0.99));
        assert_eq!(h.to_bits(), select_bandwidth(2000).unwrap().to_bits());
    }

    #[test]
    fn ks_closed_form_cases() {
        let r = ks_statistic(&[0.5], |x| x).unwrap();
        assert_abs_diff_eq!(r.d, 0.5, epsilon = 1e-15);
        let m = 50;
        let v: Vec<f64> = (1..=m).map(|i| (i as f64 - 0.5) / m as f64).collect();
        assert_abs_diff_eq!(ks_statistic(&v, |x| x).unwrap().d, 0.5 / m as f64, epsilon = 1e-12);
        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn kolmogorov_tail_values() {
        // reference values of the Kolmogorov distribution
        assert_abs_diff_eq!(kolmogorov_survival(1.3581), 0.05, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_survival(1.6276), 0.01, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_survival(0.8276), 0.5, epsilon = 1e-3);
        // the two series agree where they switch
        let c = std::f64::consts::PI.powi(2) / (8.0 * 1.18 * 1.18);
        let small = 1.0
            - (2.0 * std::f64::consts::PI).sqrt() / 1.18
                * (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>();
        assert_abs_diff_eq!(small, kolmogorov_survival(1.18), epsilon = 1e-12);
    }

    #[test]
    fn ks_self_consistency() {
        let draws: Vec<f64> = {
            let mut rng = stream_rng(8, 0);
            (0..10_000)
                .map(|_| chi_square_quantile(rng.random::<f64>().max(1e-300), 5))
                .collect()
        };
        assert!(ks_statistic(&draws, |x| chi_square_cdf(x, 5)).unwrap().p_value > 0.01);
    }

    #[test]
    fn exact_null_draws_accept_first_candidate() {
        let draw = |cfg: &TestConfig, r: u64| {
            let u: f64 = stream_rng(21, r).random();
            Ok(chi_square_quantile(u.max(1e-300), cfg.n_z()))
        };
        let sel = scan_h0(0.06, draw, 1000, &H0Options::default()).unwrap();
        assert_abs_diff_eq!(sel.h0, 0.01, epsilon = 1e-15);
        assert_eq!(sel.ks_trace.len(), 1);
    }

    #[test]
    fn impossible_threshold_fails() {
        let err = select_h0_with(
            0.1,
            |rng| gen_m1(200, rng),
            100,
            1,
            &H0Options {
                threshold: 1.0,
                max_h0: 0.05,
                ..H0Options::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, MnccError::CalibrationFailed { .. }));
        assert!(select_h0(100, 0.1, 10, 1, &H0Options::default()).is_err());
    }
}
