//! Replicated risk experiments over a grid of sample sizes.
//!
//! Replicate `r` at sample size `n` draws everything from
//! `derive(master_seed, [n, r])`, so any single row of the results can be
//! reproduced in isolation.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProfileConfig, RiskEval};
use super::fit::{fit_rate_slope, SlopeFit};
use super::HarnessError;
use crate::classes::{Design, FunctionClass};
use crate::estimator::{
    run_algorithm1, stage_schedule, ConditionKind, Data, EstimatorOptions, EstimatorTrace,
    RateConstants,
    StageSchedule,
};
use crate::metric::{local_entropy, EntropyBudget, EntropyKind, EntropyProfile, MetricPoint};
use crate::rates::theoretical_rate;
use crate::seed;

/// Points per decade of the closed-form profile grid.
const POWER_LAW_POINTS_PER_DECADE: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub stages: usize,
    pub risk: Option<f64>,
    /// `ok`, or the error that ended the replicate.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub stages: usize,
    pub ok: usize,
    pub failed: usize,
    pub mean_risk: Option<f64>,
    pub se_risk: Option<f64>,
    pub median_risk: Option<f64>,
    pub theory_rate: Option<f64>,
    pub diameter_sq: f64,
    /// Whether this `n` entered the slope fit.
    pub fitted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_digest: String,
    pub rows: Vec<ReplicateRow>,
    pub summary: Vec<SummaryRow>,
    pub fit: Option<SlopeFit>,
    /// Slope of the closed-form rate over the fitted `n`.
    pub theory_fit: Option<SlopeFit>,
    /// Why the fit is missing, when it is.
    pub fit_note: Option<String>,
}

/// Stage count for one `n`: the schedule's `J*`, or the fixed count.
pub fn stages_for(
    config: &ExperimentConfig,
    class: &FunctionClass,
    truth: &MetricPoint,
    constants: &RateConstants,
    n: usize,
) -> Result<(usize, Option<StageSchedule>), HarnessError> {
    let d = class.diameter();
    let kind = config.schedule.condition;
    let c = match kind {
        ConditionKind::Adaptive => 2.0 * constants.c(),
        _ => constants.c(),
    };
    let entropy_kind = match kind {
        ConditionKind::Adaptive => EntropyKind::Adaptive {
            center: truth.clone(),
        },
        _ => EntropyKind::Global,
    };
    let profile = match &config.schedule.profile {
        ProfileConfig::Fixed { stages } => return Ok((*stages, None)),
        ProfileConfig::PowerLaw { coef, exponent } => {
            let decades = 7;
            let k = decades * POWER_LAW_POINTS_PER_DECADE;
            let grid: Vec<f64> = (0..=k)
                .map(|i| d * 4.0 * 10f64.powf(-(decades as f64) + i as f64 / 40.0))
                .collect();
            EntropyProfile::from_fn(&grid, c, entropy_kind, |e| coef * (e / d).powf(-exponent))?
        }
        ProfileConfig::Greedy {
            pool_size,
            center_samples,
            points,
        } => {
            let grid: Vec<f64> = (0..*points)
                .rev()
                .map(|k| d * 2f64.powi(-(k as i32)))
                .collect();
            let budget = EntropyBudget {
                pool_size: *pool_size,
                center_samples: *center_samples,
                ..Default::default()
            };
            let seed = seed::derive(config.master_seed, &[seed::label("profile"), n as u64]);
            local_entropy(class, &grid, c, entropy_kind, &budget, seed)?
        }
    };
    let schedule = stage_schedule(&profile, n, constants, d, kind)?;
    Ok((schedule.j_star, Some(schedule)))
}

/// Shared fresh evaluation design and truth values at one `n`.
struct FreshEval {
    design: Design,
    truth_values: Vec<f64>,
}

/// Everything the replicates at one `n` share.
struct Cell {
    n: usize,
    class: FunctionClass,
    truth: MetricPoint,
    constants: RateConstants,
    stages: usize,
    schedule: Option<StageSchedule>,
    eval: Option<FreshEval>,
}

impl Cell {
    fn build(config: &ExperimentConfig, n: usize, max_n: usize) -> Result<Self, HarnessError> {
        let class = FunctionClass::new(config.class.spec(n)?)?;
        let truth = config.truth.resolve(&class)?;
        let constants = config.rate_constants(&class)?;
        let (stages, schedule) = stages_for(config, &class, &truth, &constants, n)?;
        let eval = match config.risk_eval() {
            RiskEval::Analytic => None,
            RiskEval::FreshSample { m } => {
                let m = m.unwrap_or(10 * max_n);
                let mut rng =
                    seed::rng(seed::derive(config.master_seed, &[seed::label("risk"), n as u64]));
                let design = class.sample_design(&config.design, m, &mut rng)?;
                let truth_values = class.evaluate(&truth.coords, &design)?;
                Some(FreshEval {
                    design,
                    truth_values,
                })
            }
        };
        Ok(Self {
            n,
            class,
            truth,
            constants,
            stages,
            schedule,
            eval,
        })
    }
}

/// One estimator run with its trace, as produced inside an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleRun {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub stages: usize,
    pub schedule: Option<StageSchedule>,
    pub risk: f64,
    pub trace: EstimatorTrace,
}

fn run_replicate(
    config: &ExperimentConfig,
    cell: &Cell,
    r: usize,
) -> Result<(u64, EstimatorTrace, f64), HarnessError> {
    let Cell {
        n,
        class,
        truth,
        constants,
        stages,
        eval,
        ..
    } = cell;
    let rep_seed = seed::derive(config.master_seed, &[*n as u64, r as u64]);
    let mut rng = seed::rng(rep_seed);
    let design = class.sample_design(&config.design, *n, &mut rng)?;
    let data = Data::observe(class, truth, design, &config.noise, &mut rng)?;
    let mut options = EstimatorOptions::new(config.estimator.pool_size);
    options.truth = Some(truth.coords.clone());
    options.inject_truth = config.estimator.inject_truth;
    let trace = run_algorithm1(
        class,
        &data,
        constants,
        *stages,
        &options,
        seed::derive(rep_seed, &[seed::label("packing")]),
    )?;
    let est = trace.estimate();
    let risk = match eval {
        None => class.dist_coords(&est.coords, &truth.coords).powi(2),
        Some(ev) => {
            let vals = class.evaluate(&est.coords, &ev.design)?;
            let m = vals.len() as f64;
            vals.iter()
                .zip(&ev.truth_values)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / m
        }
    };
    Ok((rep_seed, trace, risk))
}

fn replicate(config: &ExperimentConfig, cell: &Cell, r: usize) -> ReplicateRow {
    let (risk, status) = match run_replicate(config, cell, r) {
        Ok((_, _, risk)) => (Some(risk), "ok".to_string()),
        Err(e) => (None, e.to_string()),
    };
    ReplicateRow {
        n: cell.n,
        replicate: r,
        seed: seed::derive(config.master_seed, &[cell.n as u64, r as u64]),
        stages: cell.stages,
        risk,
        status,
    }
}

/// Reruns replicate `r` at sample size `n` exactly as an experiment would.
pub fn run_single(config: &ExperimentConfig, n: usize, r: usize) -> Result<SingleRun, HarnessError> {
    config.validate()?;
    let max_n = config.n_grid.iter().copied().max().unwrap_or(n).max(n);
    let cell = Cell::build(config, n, max_n)?;
    let (seed, trace, risk) = run_replicate(config, &cell, r)?;
    Ok(SingleRun {
        n,
        replicate: r,
        seed,
        stages: cell.stages,
        schedule: cell.schedule.clone(),
        risk,
        trace,
    })
}

/// Runs every replicate at every `n`, summarizes, and fits the rate slope.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let max_n = *config.n_grid.last().expect("validated nonempty");
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &n in &config.n_grid {
        let cell = Cell::build(config, n, max_n)?;
        let theory = config
            .rate_example(&cell.class)
            .and_then(|ex| theoretical_rate(&ex, n).ok())
            .map(|t| t.value);
        let (stages, diameter) = (cell.stages, cell.class.diameter());
        let at_n: Vec<ReplicateRow> = (0..config.replicates)
            .into_par_iter()
            .map(|r| replicate(config, &cell, r))
            .collect();
        let row = summarize(n, stages, &at_n, theory, diameter);
        if row.ok == 0 {
            return Err(HarnessError::InsufficientData(format!(
                "every replicate failed at n = {n}: {}",
                at_n[0].status
            )));
        }
        summary.push(row);
        rows.extend(at_n);
    }
    let (fit, theory_fit, fit_note) = fit_summary(&mut summary);
    Ok(ExperimentResult {
        config: config.clone(),
        config_digest: config.digest(),
        rows,
        summary,
        fit,
        theory_fit,
        fit_note,
    })
}

fn summarize(
    n: usize,
    stages: usize,
    rows: &[ReplicateRow],
    theory_rate: Option<f64>,
    diameter: f64,
) -> SummaryRow {
    let mut risks: Vec<f64> = rows.iter().filter_map(|r| r.risk).collect();
    let k = risks.len();
    let (mean, se, median) = if k == 0 {
        (None, None, None)
    } else {
        let mean = risks.iter().sum::<f64>() / k as f64;
        let se = if k > 1 {
            let var = risks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        risks.sort_by(f64::total_cmp);
        let median = if k % 2 == 1 {
            risks[k / 2]
        } else {
            0.5 * (risks[k / 2 - 1] + risks[k / 2])
        };
        (Some(mean), Some(se), Some(median))
    };
    SummaryRow {
        n,
        stages,
        ok: k,
        failed: rows.len() - k,
        mean_risk: mean,
        se_risk: se,
        median_risk: median,
        theory_rate,
        diameter_sq: diameter * diameter,
        fitted: false,
    }
}

/// Fits over the `n` whose mean risk is not saturated at `d²` (within two
/// standard errors) and is positive.
fn fit_summary(summary: &mut [SummaryRow]) -> (Option<SlopeFit>, Option<SlopeFit>, Option<String>) {
    for row in summary.iter_mut() {
        row.fitted = match (row.mean_risk, row.se_risk) {
            (Some(m), Some(se)) => m > 0.0 && m < row.diameter_sq - 2.0 * se,
            _ => false,
        };
    }
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .filter(|r| r.fitted)
        .map(|r| (r.n as f64, r.mean_risk.expect("fitted rows have a mean")))
        .collect();
    let fit = match fit_rate_slope(&pts) {
        Ok(f) => f,
        Err(e) => return (None, None, Some(e.to_string())),
    };
    let theory: Option<Vec<(f64, f64)>> = summary
        .iter()
        .filter(|r| r.fitted)
        .map(|r| r.theory_rate.map(|t| (r.n as f64, t)))
        .collect();
    let theory_fit = theory.and_then(|t| fit_rate_slope(&t).ok());
    (Some(fit), theory_fit, None)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ExperimentResult {
    pub fn results_csv(&self) -> String {
        let mut out = String::from("n,replicate,seed,stages,risk,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.replicate,
                r.seed,
                r.stages,
                opt(r.risk),
                csv_field(&r.status)
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "n,stages,ok,failed,mean_risk,se_risk,median_risk,theory_rate,diameter_sq,fitted\n",
        );
        for r in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.stages,
                r.ok,
                r.failed,
                opt(r.mean_risk),
                opt(r.se_risk),
                opt(r.median_risk),
                opt(r.theory_rate),
                r.diameter_sq,
                r.fitted
            ));
        }
        out
    }
}

/// Reproducibility record written next to the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub seed_scheme: String,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub fit: Option<SlopeFit>,
    pub theory_fit: Option<SlopeFit>,
    pub fit_note: Option<String>,
    /// SHA-256 of each written file.
    pub files: BTreeMap<String, String>,
}

/// Writes `config.toml`, `results.csv`, `summary.csv` and `manifest.json`.
/// Contents depend only on the config, so reruns are byte-identical.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Manifest, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("config.toml", result.config.to_toml()),
        ("results.csv", result.results_csv()),
        ("summary.csv", result.summary_csv()),
    ];
    let mut hashes = BTreeMap::new();
    for (name, body) in &files {
        std::fs::write(dir.join(name), body)?;
        hashes.insert(name.to_string(), seed::sha256_hex(body.as_bytes()));
    }
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: result.config_digest.clone(),
        master_seed: result.config.master_seed,
        seed_scheme: "derive(master_seed, [n, replicate])".into(),
        n_grid: result.config.n_grid.clone(),
        replicates: result.config.replicates,
        fit: result.fit.clone(),
        theory_fit: result.theory_fit.clone(),
        fit_note: result.fit_note.clone(),
        files: hashes,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
master_seed = 11
n_grid = [32, 64, 128]
replicates = 3

[class]
kind = "monotone_grid"
p = 1
m = 8

[design]
kind = "uniform_cube"

[noise]
kind = "gaussian"
sigma = 0.5

[truth]
kind = "named"
name = "identity"

[estimator]
pool_size = 32

[schedule.profile]
kind = "fixed"
stages = 4
"#,
        )
        .unwrap()
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.results_csv(), b.results_csv());
        assert_eq!(a.rows.len(), 9);
        assert!(a.rows.iter().all(|r| r.status == "ok" && r.stages == 4));
        assert_eq!(a.summary[0].theory_rate, Some(32f64.powf(-2.0 / 3.0)));
    }

    #[test]
    fn single_replicate_reproduces() {
        let cfg = config();
        let full = run_experiment(&cfg).unwrap();
        let row = &full.rows[4];
        let cell = Cell::build(&cfg, row.n, 128).unwrap();
        let again = replicate(&cfg, &cell, row.replicate);
        assert_eq!(&again, row);
    }

    #[test]
    fn power_law_schedule_grows_with_n() {
        let mut cfg = config();
        cfg.schedule.profile = ProfileConfig::PowerLaw {
            coef: 1.0,
            exponent: 1.0,
        };
        cfg.constants.practical_scale = 1e4;
        let class = FunctionClass::new(cfg.class.spec(64).unwrap()).unwrap();
        let truth = cfg.truth.resolve(&class).unwrap();
        let k = cfg.rate_constants(&class).unwrap();
        let j: Vec<usize> = [64, 4096, 262_144]
            .iter()
            .map(|&n| stages_for(&cfg, &class, &truth, &k, n).unwrap().0)
            .collect();
        assert!(j.windows(2).all(|w| w[0] <= w[1]), "{j:?}");
        assert!(j[2] > j[0]);
    }

    #[test]
    fn outputs_are_byte_identical() {
        let cfg = config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let ma = write_outputs(&run_experiment(&cfg).unwrap(), dir_a.path()).unwrap();
        let mb = write_outputs(&run_experiment(&cfg).unwrap(), dir_b.path()).unwrap();
        assert_eq!(ma, mb);
        for f in ["config.toml", "results.csv", "summary.csv", "manifest.json"] {
            assert_eq!(
                std::fs::read(dir_a.path().join(f)).unwrap(),
                std::fs::read(dir_b.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn saturated_points_leave_the_fit() {
        let mk = |n, mean: f64| SummaryRow {
            n,
            stages: 1,
            ok: 5,
            failed: 0,
            mean_risk: Some(mean),
            se_risk: Some(0.01),
            median_risk: Some(mean),
            theory_rate: None,
            diameter_sq: 1.0,
            fitted: false,
        };
        let mut rows = vec![mk(10, 0.995), mk(100, 0.1), mk(1000, 0.01), mk(10_000, 0.001)];
        let (fit, _, _) = fit_summary(&mut rows);
        assert!(!rows[0].fitted);
        assert!((fit.unwrap().slope + 1.0).abs() < 1e-12);
    }
}
