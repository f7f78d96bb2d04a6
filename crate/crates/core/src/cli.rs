//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bootstrap::{BootstrapConfig, BootstrapRule};
use crate::error::{MnccError, Result};
use crate::io::{load_csv, report_to_json, Transform};
use crate::nulldist::{NullDistribution, SUMMARY_LEVELS};
use crate::sample::Sample;
use crate::simulate::{power_study, Model, ModelSpec};
use crate::teststat::{run_test as dispatch, Method, TestConfig, TestReport};
use crate::tuning::{calibrate, select_bandwidth, select_h0, H0Options};

#[derive(Debug, Parser)]
#[command(
    name = "mncc",
    version,
    about = "Conditional independence test based on the maximal nonlinear conditional correlation"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test X ⊥ Y | Z on a CSV file.
    Test(TestArgs),
    /// Rejection rate over simulated samples.
    Simulate(SimulateArgs),
    /// Select the bandwidth and grid spacing for a sample size.
    Calibrate(CalibrateArgs),
    /// Quantiles and moments of the null law.
    Nulldist(NullDistArgs),
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0, 1), got {a}"))
    }
}

/// Options shared by every command that runs the test.
#[derive(Debug, Clone, Args)]
pub struct TestOptions {
    /// Total cells of the X basis.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Total cells of the Y basis.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Method::Asymptotic)]
    pub method: Method,
    /// Kernel bandwidth (default: minimizer of the uniform-data criterion).
    #[arg(long)]
    pub h: Option<f64>,
    /// Grid spacing (default: 0.4 for bootstrap, 0.16 for n = 10000,
    /// 0.2 for n = 5000, otherwise calibrated).
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo draws of the null law.
    #[arg(long, default_value_t = crate::nulldist::DEFAULT_MC)]
    pub mc: usize,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = crate::bootstrap::DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, value_enum, default_value_t = BootstrapRule::Quantile)]
    pub rule: BootstrapRule,
    /// Replicates per candidate when the grid spacing is calibrated.
    #[arg(long, default_value_t = 1000)]
    pub ks_reps: usize,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            p: 2,
            q: 2,
            alpha: 0.05,
            method: Method::Asymptotic,
            h: None,
            h0: None,
            seed: 0,
            mc: crate::nulldist::DEFAULT_MC,
            resamples: crate::bootstrap::DEFAULT_RESAMPLES,
            rule: BootstrapRule::Quantile,
            ks_reps: 1000,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV file with columns x1.., y1.., z1..
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub dx: usize,
    #[arg(long, default_value_t = 1)]
    pub dy: usize,
    #[arg(long, default_value_t = 1)]
    pub dz: usize,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    pub transform: Transform,
    #[command(flatten)]
    pub options: TestOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Model::M2)]
    pub model: Model,
    /// Dependence strength.
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub options: TestOptions,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub n: usize,
    /// Replicates per grid-spacing candidate.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// KS p-value a candidate must exceed.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
}

#[derive(Debug, Args)]
pub struct NullDistArgs {
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 5)]
    pub n_z: usize,
    #[arg(long, default_value_t = crate::nulldist::DEFAULT_MC)]
    pub mc: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quantile levels.
    #[arg(long, value_delimiter = ',', default_values_t = SUMMARY_LEVELS.to_vec())]
    pub levels: Vec<f64>,
}

/// Grid spacing used when none is given.
pub fn default_h0(n: usize, method: Method) -> Option<f64> {
    match (method, n) {
        (Method::Bootstrap, _) => Some(0.4),
        (_, 10_000) => Some(0.16),
        (_, 5000) => Some(0.2),
        _ => None,
    }
}

/// Resolve bandwidth and grid spacing and assemble the configurations.
pub fn resolve_config(n: usize, z_dim: usize, opts: &TestOptions) -> Result<(TestConfig, BootstrapConfig)> {
    let h = match opts.h {
        Some(h) => h,
        None => select_bandwidth(n)?,
    };
    let h0 = match opts.h0.or_else(|| default_h0(n, opts.method)) {
        Some(h0) => h0,
        None => {
            let h0_opts = H0Options {
                p: opts.p,
                q: opts.q,
                ..H0Options::default()
            };
            log::info!("calibrating the grid spacing for n = {n}");
            select_h0(n, h, opts.ks_reps, opts.seed, &h0_opts)?.h0
        }
    };
    let cfg = TestConfig::new(h, h0, z_dim, opts.p, opts.q)?
        .alpha(opts.alpha)
        .seed(opts.seed)
        .method(opts.method)
        .mc(opts.mc);
    let bcfg = BootstrapConfig::for_bandwidth(h, opts.resamples, opts.seed)?.rule(opts.rule);
    Ok((cfg, bcfg))
}

pub fn run_test(sample: &Sample, opts: &TestOptions) -> Result<TestReport> {
    let (cfg, bcfg) = resolve_config(sample.n(), sample.dz(), opts)?;
    dispatch(sample, &cfg, Some(&bcfg))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| MnccError::Io(e.to_string()))
}

/// Execute a parsed command line and return the text to print.
pub fn run(cli: Cli) -> Result<String> {
    if let Some(threads) = cli.threads {
        // ignore the error if a pool already exists (e.g. repeated calls in-process)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Test(args) => {
            let sample = load_csv(&args.input, args.dx, args.dy, args.dz, args.transform)?;
            report_to_json(&run_test(&sample, &args.options)?)
        }
        Command::Simulate(args) => {
            let spec = ModelSpec::new(args.model, args.a, args.n)?;
            let (cfg, bcfg) = resolve_config(args.n, 1, &args.options)?;
            let res = power_study(&spec, &cfg, Some(&bcfg), args.reps, args.options.seed)?;
            match args.format {
                Format::Json => to_json(&res),
                Format::Csv => Ok(format!(
                    "model,a,n,method,reps,rejections,failures,rate,seed,runtime_secs\n{:?},{},{},{},{},{},{},{},{},{:.3}\n",
                    res.model_spec.model,
                    res.model_spec.a,
                    res.model_spec.n,
                    res.method,
                    res.reps,
                    res.rejections,
                    res.failures,
                    res.rate,
                    res.seed,
                    res.runtime_secs
                )),
            }
        }
        Command::Calibrate(args) => {
            let opts = H0Options {
                threshold: args.threshold,
                p: args.p,
                q: args.q,
                ..H0Options::default()
            };
            to_json(&calibrate(args.n, args.reps, args.seed, &opts)?)
        }
        Command::Nulldist(args) => {
            let null = NullDistribution::simulate(args.n_z, args.p, args.q, args.mc, args.seed)?;
            to_json(&null.summary(&args.levels))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_validated_by_the_parser() {
        let bad = Cli::try_parse_from(["mncc", "test", "data.csv", "--alpha", "1.2"]);
        assert!(bad.is_err());
        let ok = Cli::try_parse_from(["mncc", "test", "data.csv", "--alpha", "0.1", "--method", "bootstrap"]).unwrap();
        match ok.command {
            Command::Test(a) => {
                assert_eq!(a.options.alpha, 0.1);
                assert_eq!(a.options.method, Method::Bootstrap);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn default_grid_spacing() {
        assert_eq!(default_h0(10_000, Method::Asymptotic), Some(0.16));
        assert_eq!(default_h0(5000, Method::Normal), Some(0.2));
        assert_eq!(default_h0(500, Method::Bootstrap), Some(0.4));
        assert_eq!(default_h0(700, Method::Asymptotic), None);
    }

    #[test]
    fn nulldist_command() {
        let cli = Cli::try_parse_from([
            "mncc", "nulldist", "--n-z", "5", "--mc", "20000", "--levels", "0.5,0.95",
        ])
        .unwrap();
        let out = run(cli).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let q95 = v["quantiles"][1]["value"].as_f64().unwrap();
        assert!((q95 - 11.07).abs() < 0.3);
    }
}
