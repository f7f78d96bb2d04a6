//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line straight to
//! stderr (bypassing output capture) and then asserts.

use std::io::Write;

use mncc::basis::{evaluate_basis, BasisSpec};
use mncc::bootstrap::BootstrapConfig;
use mncc::kernel::{c_k, cond_expect, gaussian_product_kernel, KernelConfig};
use mncc::mncc::{estimate_rho, mean_rho_squared_uniform, rho_hat, rho_hat_eigen, ConditionalMoments, Regularization};
use mncc::nulldist::{null_quantile, null_sums, NullDistribution};
use mncc::quad::integrate;
use mncc::rng::stream_rng;
use mncc::simulate::{power_study, Model, ModelSpec};
use mncc::special::chi_square_cdf;
use mncc::teststat::{eval_points, statistic, Method, TestConfig};
use mncc::tuning::{ks_statistic, select_bandwidth, select_h0, H0Options};
use mncc::Sample;
use rand::Rng;

fn report(id: &str, pass: bool, detail: String) {
    let line = format!("{} criterion {id}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

const H_10K: f64 = 0.05935281;
const H_5K: f64 = 0.06525282;
const H_500: f64 = 0.0983018;

fn power(model: Model, a: f64, n: usize, h: f64, h0: f64, reps: usize, seed: u64) -> f64 {
    let spec = ModelSpec::new(model, a, n).unwrap();
    let cfg = TestConfig::new(h, h0, 1, 2, 2).unwrap().seed(seed);
    let res = power_study(&spec, &cfg, None, reps, seed).unwrap();
    assert_eq!(res.failures, 0);
    res.rate
}

#[test]
fn criterion_01_kernel_constant() {
    let c1 = c_k(1);
    let k2 = |u: &[f64]| gaussian_product_kernel(u).powi(2);
    let l = 12.0;
    let d1 = integrate(|a| k2(&[a]), -l, l, 1e-14);
    let d2 = integrate(|a| integrate(|b| k2(&[a, b]), -l, l, 1e-14), -l, l, 1e-13);
    let d3 = integrate(
        |a| integrate(|b| integrate(|c| k2(&[a, b, c]), -l, l, 1e-14), -l, l, 1e-13),
        -l,
        l,
        1e-12,
    );
    let errs = [
        (1.0 / c_k(1) - d1).abs(),
        (1.0 / c_k(2) - d2).abs(),
        (1.0 / c_k(3) - d3).abs(),
    ];
    let c1_err = (c1 - 2.0 * std::f64::consts::PI.sqrt()).abs();
    let pass = c1_err < 1e-10 && errs.iter().all(|&e| e < 1e-8);
    report(
        "1",
        pass,
        format!(
            "|c_K(1) - 2√π| = {c1_err:.1e}; |1/c_K(d) - ∫k²| = {} for d = 1, 2, 3",
            errs.map(|e| format!("{e:.1e}")).join(", ")
        ),
    );
}

#[test]
fn criterion_02_bandwidth_table() {
    let table = [
        (10_000, 0.05935281),
        (5000, 0.06525282),
        (1000, 0.08533451),
        (500, 0.0983018),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (n, want) in table {
        let h = select_bandwidth(n).unwrap();
        worst = worst.max((h - want).abs());
        parts.push(format!("n={n}: {h:.6} (ref {want})"));
    }
    report(
        "2",
        worst <= 2e-3,
        format!("{}; max deviation {worst:.2e} (tol 2e-3)", parts.join(", ")),
    );
}

#[test]
fn criterion_03_grid_arithmetic() {
    let a = eval_points(H_10K, 0.16, 1).unwrap().len();
    let b = eval_points(H_5K, 0.2, 1).unwrap().len();
    report(
        "3",
        a == 5 && b == 4,
        format!("n_Z = {a} (n=10000, want 5), n_Z = {b} (n=5000, want 4)"),
    );
}

#[test]
fn criterion_04_null_law() {
    let sums = null_sums(5, 2, 2, 100_000, 41);
    let ks = ks_statistic(&sums, |x| chi_square_cdf(x, 5)).unwrap();
    let q = null_quantile(5, 2, 2, 0.95, 100_000, 42).unwrap();
    let pass = ks.d < 0.01 && (q - 11.07).abs() <= 0.15;
    report(
        "4",
        pass,
        format!(
            "KS distance to χ²(5) = {:.4} (tol 0.01); 0.95-quantile = {q:.3} (11.07 ± 0.15)",
            ks.d
        ),
    );
}

#[test]
fn criterion_05_size() {
    let rate = power(Model::M2, 0.0, 10_000, H_10K, 0.16, 500, 501);
    report(
        "5",
        (0.03..=0.07).contains(&rate),
        format!("M2 a=0 n=10000 size = {rate:.3} over 500 reps (band [0.03, 0.07])"),
    );
}

#[test]
fn criterion_06_power_n10000() {
    let strong = power(Model::M2, 0.3, 10_000, H_10K, 0.16, 200, 601);
    let weak = power(Model::M2, 0.1, 10_000, H_10K, 0.16, 500, 602);
    let pass = strong >= 0.99 && (0.58..=0.72).contains(&weak);
    report(
        "6",
        pass,
        format!("M2 n=10000: a=0.3 power {strong:.3} (≥ 0.99), a=0.1 power {weak:.3} (band [0.58, 0.72])"),
    );
}

#[test]
fn criterion_07_sample_size_monotonicity() {
    let small = power(Model::M2, 0.1, 5000, H_5K, 0.2, 500, 701);
    let large = power(Model::M2, 0.1, 10_000, H_10K, 0.16, 500, 602);
    let pass = (0.30..=0.45).contains(&small) && small < large;
    report(
        "7",
        pass,
        format!("M2 a=0.1: n=5000 power {small:.3} (band [0.30, 0.45]) vs n=10000 power {large:.3}"),
    );
}

#[test]
fn criterion_08a_population_oracle_a01() {
    let v = mean_rho_squared_uniform(0.1);
    let rel = (v - 0.001345575).abs() / 0.001345575;
    report(
        "8a",
        rel <= 0.02,
        format!(
            "E ρ² at a=0.1 = {v:.7} vs 0.001345575 (rel. dev. {:.2}%, tol 2%)",
            100.0 * rel
        ),
    );
}

#[test]
fn criterion_08b_population_oracle_a03() {
    let v = mean_rho_squared_uniform(0.3);
    let rel = (v - 0.01908246).abs() / 0.01908246;
    report(
        "8b",
        rel <= 0.02,
        format!(
            "E ρ² at a=0.3 = {v:.7} vs 0.01908246 (rel. dev. {:.2}%, tol 2%)",
            100.0 * rel
        ),
    );
}

#[test]
fn criterion_09_local_bootstrap() {
    let run = |a: f64, seed: u64| {
        let spec = ModelSpec::new(Model::M2, a, 500).unwrap();
        let cfg = TestConfig::new(H_500, 0.4, 1, 2, 2).unwrap().method(Method::Bootstrap);
        let b = BootstrapConfig::for_bandwidth(H_500, 200, seed).unwrap();
        let res = power_study(&spec, &cfg, Some(&b), 200, seed).unwrap();
        assert_eq!(res.failures, 0);
        res.rate
    };
    let size = run(0.0, 901);
    let pow = run(0.3, 902);
    let pass = (0.015..=0.09).contains(&size) && pow >= 0.20;
    report(
        "9",
        pass,
        format!("bootstrap n=500, 200×200: size {size:.3} (band [0.015, 0.09]), a=0.3 power {pow:.3} (≥ 0.20)"),
    );
}

fn random_moments(rng: &mut impl Rng, p: usize, q: usize) -> ConditionalMoments {
    let cx: Vec<usize> = (0..p * q).map(|k| k / q).collect();
    let cy: Vec<usize> = (0..p * q).map(|k| k % q).collect();
    let mut w: Vec<f64> = (0..p * q).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    ConditionalMoments::from_weighted_cells(&cx, &cy, &w, p, q)
}

fn random_sample(n: usize, seed: u64) -> Sample {
    ModelSpec::new(Model::M2, 0.3, n)
        .unwrap()
        .generate(&mut stream_rng(seed, 0))
}

#[test]
fn criterion_10_property_suite() {
    let mut rng = stream_rng(1000, 0);
    let mut failures = Vec::new();

    // partition of unity
    let spec = BasisSpec::new(2, 3).unwrap();
    for _ in 0..2000 {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let s: f64 = evaluate_basis(&x, &spec).unwrap().iter().sum();
        if s != 1.0 {
            failures.push("partition of unity");
            break;
        }
    }

    // conditional expectation: constants preserved, linear in g
    let s = random_sample(500, 1);
    let kc = KernelConfig::new(0.1, 1).unwrap();
    let g1: Vec<f64> = (0..500).map(|_| rng.random()).collect();
    let g2: Vec<f64> = (0..500).map(|_| rng.random()).collect();
    for z in [0.2, 0.5, 0.8] {
        let one = cond_expect(&vec![1.0; 500], &[z], s.z_values(), &kc).unwrap();
        let e1 = cond_expect(&g1, &[z], s.z_values(), &kc).unwrap();
        let e2 = cond_expect(&g2, &[z], s.z_values(), &kc).unwrap();
        let mix: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let em = cond_expect(&mix, &[z], s.z_values(), &kc).unwrap();
        if (one - 1.0).abs() > 1e-10 || (em - (2.0 * e1 - 3.0 * e2)).abs() > 1e-10 {
            failures.push("cond_expect normalization/linearity");
        }
    }

    // X↔Y symmetry and cell-permutation invariance
    let reg = Regularization::default();
    for _ in 0..200 {
        let m = random_moments(&mut rng, 3, 2);
        if (rho_hat(&m, &reg).unwrap().rho - rho_hat(&m.swapped(), &reg).unwrap().rho).abs() > 1e-10 {
            failures.push("X↔Y symmetry");
            break;
        }
    }
    let bx = BasisSpec::new(1, 3).unwrap();
    let by = BasisSpec::new(1, 2).unwrap();
    let swapped = Sample::new(
        1,
        1,
        1,
        s.y_values().to_vec(),
        s.x_values().to_vec(),
        s.z_values().to_vec(),
    )
    .unwrap();
    let (b2, b3) = (BasisSpec::new(1, 2).unwrap(), BasisSpec::new(1, 3).unwrap());
    let a = estimate_rho(&s, &bx, &by, &[0.5], &kc, &reg).unwrap().rho;
    let b = estimate_rho(&swapped, &b2, &b3, &[0.5], &kc, &reg).unwrap().rho;
    if (a - b).abs() > 1e-10 {
        failures.push("sample-level X↔Y symmetry");
    }
    // relabel cells by reflecting X: cell i ↦ m + 1 - i
    let reflected = Sample::new(
        1,
        1,
        1,
        s.x_values().iter().map(|v| 1.0 - v).collect(),
        s.y_values().to_vec(),
        s.z_values().to_vec(),
    )
    .unwrap();
    let c = estimate_rho(&reflected, &BasisSpec::new(1, 4).unwrap(), &by, &[0.5], &kc, &reg)
        .unwrap()
        .rho;
    let d = estimate_rho(&s, &BasisSpec::new(1, 4).unwrap(), &by, &[0.5], &kc, &reg)
        .unwrap()
        .rho;
    // reflection only swaps boundary conventions, which matters on a null set
    if (c - d).abs() > 1e-10 {
        failures.push("cell-permutation invariance");
    }

    // eigen route vs whitened SVD
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let p = 2 + k % 3;
        let q = 2 + (k / 3) % 3;
        let m = random_moments(&mut rng, p, q);
        let x = rho_hat(&m, &reg).unwrap().rho_squared_raw;
        let y = rho_hat_eigen(&m, &vec![1.0; p], &reg).unwrap().rho_squared_raw;
        worst = worst.max((x - y).abs());
    }
    if worst > 1e-8 {
        failures.push("eigen vs SVD");
    }

    // determinism across thread counts
    let cfg = TestConfig::new(0.08, 0.2, 1, 2, 2).unwrap();
    let run_all = || {
        let t = statistic(&s, &cfg).unwrap().statistic;
        let nq = null_quantile(4, 3, 3, 0.95, 10_000, 5).unwrap();
        let null = NullDistribution::simulate(cfg.n_z(), 2, 2, 10_000, 5).unwrap();
        let boot = mncc::bootstrap::bootstrap_test(&s, &cfg, &BootstrapConfig::new(0.4, 30, 6).unwrap()).unwrap();
        let spec = ModelSpec::new(Model::M3, 0.1, 300).unwrap();
        let pw = power_study(&spec, &cfg.clone().mc(10_000), None, 20, 8)
            .unwrap()
            .rejections;
        (
            t.to_bits(),
            nq.to_bits(),
            null.quantile(0.9).to_bits(),
            boot.p_value.to_bits(),
            pw,
        )
    };
    let in_pool = |k: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(run_all)
    };
    if in_pool(1) != in_pool(4) {
        failures.push("thread-count determinism");
    }

    report(
        "10",
        failures.is_empty(),
        if failures.is_empty() {
            format!("all properties hold (eigen vs SVD max gap {worst:.1e})")
        } else {
            format!("violated: {}", failures.join(", "))
        },
    );
}

#[test]
fn criterion_grid_spacing_calibration() {
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, h, want, tol, seed) in [(10_000, H_10K, 0.16, 0.02, 11), (5000, H_5K, 0.2, 0.04, 12)] {
        match select_h0(n, h, 1000, seed, &H0Options::default()) {
            Ok(sel) => {
                pass &= (sel.h0 - want).abs() <= tol + 1e-12;
                parts.push(format!("n={n}: h0 = {:.2} ({want} ± {tol})", sel.h0));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("n={n}: {e}"));
            }
        }
    }
    report("h0", pass, format!("{} with KS threshold p > 0.05", parts.join(", ")));
}
