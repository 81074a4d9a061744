//! Command-line front end.
//!
//! Structured inputs (classes, width sets, check descriptions) are given as
//! inline JSON or as a path to a `.json` or `.toml` file. Results go to
//! stdout, or to a fixed file name inside `--out` when it is set.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::concentration::{check_norm_concentration, check_test_error, DesignSource};
use super::config::ExperimentConfig;
use super::experiment::{run_experiment, run_single, write_outputs};
use crate::classes::{moment_ratio_check, ClassSpec, DesignDistribution, DesignKind, FunctionClass};
use crate::estimator::{Exponent, NoiseModel, RateConstants};
use crate::metric::{local_entropy, EntropyBudget, EntropyKind, EntropyProfile};
use crate::rates::{gaussian_width, solve_eps_star, EpsStarOptions, InnerBudget, WidthSet};

#[derive(Debug, Parser)]
#[command(name = "localent", version, about = "Local entropy, rates and minimax experiments")]
pub struct Cli {
    /// Experiment or check description (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed; overrides `master_seed` in a config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local (or adaptive) entropy profile as CSV.
    Entropy(EntropyArgs),
    /// Fixed-point rate certificate as JSON.
    EpsStar(ProfileArgs),
    /// Fano lower-bound report as JSON.
    CertifyLower(ProfileArgs),
    /// One estimator run with its trace, from an experiment config.
    Estimate(EstimateArgs),
    /// Full sweep: results.csv, summary.csv and manifest.json.
    Experiment,
    /// Gaussian width estimate as JSON.
    Widths(WidthArgs),
    /// Monte Carlo check of the empirical-norm concentration bound.
    CheckConcentration,
    /// Monte Carlo check of the pairwise test's error bound.
    CheckTest,
    /// Moment-ratio check for a linear class.
    MomentCheck(MomentArgs),
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Class spec (JSON or file).
    #[arg(long)]
    pub class: String,
    /// Comma-separated increasing ε values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Localization constant `c`.
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    /// Comma-separated center coordinates for the adaptive profile.
    #[arg(long, value_delimiter = ',')]
    pub center: Option<Vec<f64>>,
    #[arg(long, default_value_t = 256)]
    pub pool: usize,
    /// Sampled centers for the global profile.
    #[arg(long, default_value_t = 16)]
    pub centers: usize,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Entropy profile CSV as written by `entropy`.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub diameter: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample size; defaults to the first entry of `n_grid`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub replicate: usize,
}

#[derive(Debug, Args)]
pub struct WidthArgs {
    /// Width set (JSON or file).
    #[arg(long)]
    pub set: String,
    #[arg(long, default_value_t = 4096)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    /// Linear class spec (JSON or file).
    #[arg(long)]
    pub class: String,
    #[arg(long, value_enum, default_value = "gaussian-isotropic")]
    pub design: DesignArg,
    /// Comma-separated moments `p ≥ 2`.
    #[arg(long, value_delimiter = ',', default_values_t = [4u32])]
    pub p: Vec<u32>,
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum DesignArg {
    GaussianIsotropic,
    RademacherIsotropic,
    UniformCube,
}

impl From<DesignArg> for DesignKind {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::GaussianIsotropic => DesignKind::GaussianIsotropic,
            DesignArg::RademacherIsotropic => DesignKind::RademacherIsotropic,
            DesignArg::UniformCube => DesignKind::UniformCube,
        }
    }
}

/// Input of `check-concentration`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationCheck {
    pub class: ClassSpec,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub n: usize,
    pub big_c: f64,
    pub delta: f64,
    pub trials: usize,
    pub design: DesignSource,
    #[serde(default)]
    pub moment: Option<Exponent>,
}

/// Input of `check-test`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCheck {
    pub class: ClassSpec,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub g_bar: Vec<f64>,
    pub noise: NoiseModel,
    pub n: usize,
    pub constants: RateConstants,
    pub delta: f64,
    pub trials: usize,
    pub design: DesignSource,
}

/// Parses inline JSON, or reads a `.toml`/`.json` file when `arg` is a path.
fn load<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        if path.extension().is_some_and(|e| e == "toml") {
            return toml::from_str(&text).with_context(|| format!("parsing {arg}"));
        }
        return serde_json::from_str(&text).with_context(|| format!("parsing {arg}"));
    }
    serde_json::from_str(arg).with_context(|| format!("parsing `{arg}` as JSON"))
}

fn config_text(cli: &Cli) -> Result<String> {
    let Some(path) = &cli.config else {
        bail!("this command needs --config");
    };
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_toml(&config_text(cli)?)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

/// Writes `body` to `out/name`, or to stdout without `--out`.
fn emit(cli: &Cli, name: &str, body: &str) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), body)?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes") + "\n"
}

fn read_profile(args: &ProfileArgs) -> Result<EntropyProfile> {
    let text = std::fs::read_to_string(&args.profile)
        .with_context(|| format!("reading {}", args.profile.display()))?;
    Ok(EntropyProfile::from_csv(&text)?)
}

/// Report of `certify-lower`.
#[derive(Debug, Serialize)]
struct LowerReport {
    n: usize,
    sigma: f64,
    eps_star: f64,
    lower_eps: Option<f64>,
    lower_bound_risk: Option<f64>,
    upper_rate: f64,
    /// Whether the lower bound sits below the upper rate.
    consistent: bool,
}

/// Runs the parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Entropy(a) => {
            let class = FunctionClass::new(load::<ClassSpec>(&a.class)?)?;
            let kind = match &a.center {
                Some(coords) => EntropyKind::Adaptive {
                    center: class.point(coords.clone())?,
                },
                None => EntropyKind::Global,
            };
            let budget = EntropyBudget {
                pool_size: a.pool,
                center_samples: a.centers,
                ..Default::default()
            };
            let profile = local_entropy(&class, &a.eps, a.c, kind, &budget, seed)?;
            emit(cli, "profile.csv", &profile.to_csv())
        }
        Command::EpsStar(a) => {
            let profile = read_profile(a)?;
            let opts = EpsStarOptions {
                sigma: a.sigma,
                diameter: a.diameter,
                ..Default::default()
            };
            emit(cli, "certificate.json", &json(&solve_eps_star(&profile, a.n, &opts)?))
        }
        Command::CertifyLower(a) => {
            let Some(sigma) = a.sigma else {
                bail!("certify-lower needs --sigma");
            };
            let profile = read_profile(a)?;
            let opts = EpsStarOptions {
                sigma: Some(sigma),
                diameter: a.diameter,
                ..Default::default()
            };
            let cert = solve_eps_star(&profile, a.n, &opts)?;
            let report = LowerReport {
                n: a.n,
                sigma,
                eps_star: cert.eps_star,
                lower_eps: cert.lower_eps,
                lower_bound_risk: cert.lower_bound_risk,
                upper_rate: cert.upper_rate,
                consistent: cert.lower_bound_risk.is_none_or(|l| l <= cert.upper_rate),
            };
            emit(cli, "lower.json", &json(&report))
        }
        Command::Estimate(a) => {
            let cfg = experiment_config(cli)?;
            let n = a.n.unwrap_or(cfg.n_grid[0]);
            emit(cli, "trace.json", &json(&run_single(&cfg, n, a.replicate)?))
        }
        Command::Experiment => {
            let cfg = experiment_config(cli)?;
            let result = run_experiment(&cfg)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let manifest = write_outputs(&result, &dir)?;
            eprintln!("wrote {}", dir.display());
            if let Some(fit) = &manifest.fit {
                eprintln!("slope {:.4} ± {:.4}", fit.slope, fit.slope_stderr);
            }
            Ok(())
        }
        Command::Widths(a) => {
            let set: WidthSet = load(&a.set)?;
            let w = gaussian_width(&set, a.draws, &InnerBudget::default(), seed)?;
            emit(cli, "width.json", &json(&w))
        }
        Command::CheckConcentration => {
            let c: ConcentrationCheck = toml::from_str(&config_text(cli)?)?;
            let class = FunctionClass::new(c.class)?;
            let report = check_norm_concentration(
                &class,
                &class.point(c.f)?,
                &class.point(c.g)?,
                &class.point(c.f_bar)?,
                c.n,
                c.big_c,
                c.delta,
                c.trials,
                &c.design,
                c.moment,
                seed,
            )?;
            emit(cli, "concentration.json", &json(&report))
        }
        Command::CheckTest => {
            let c: TestCheck = toml::from_str(&config_text(cli)?)?;
            let class = FunctionClass::new(c.class)?;
            let report = check_test_error(
                &class,
                &class.point(c.f)?,
                &class.point(c.g)?,
                &class.point(c.f_bar)?,
                &class.point(c.g_bar)?,
                &c.noise,
                c.n,
                &c.constants,
                c.delta,
                c.trials,
                &c.design,
                seed,
            )?;
            emit(cli, "test_error.json", &json(&report))
        }
        Command::MomentCheck(a) => {
            let class = FunctionClass::new(load::<ClassSpec>(&a.class)?)?;
            let design = DesignDistribution::new(a.design.into());
            let report = moment_ratio_check(&class, &design, &a.p, a.pairs, a.draws, seed)?;
            emit(cli, "moments.json", &json(&report))
        }
    }
}
