//! Replicated experiments, aggregation and result files.
//!
//! # Output files
//!
//! [`emit_results`] writes three files into the output directory:
//!
//! * `regret.csv`: header `round,mean_cum_regret,std`, then one row per
//!   round `t = 1..T` with the mean and population standard deviation of the
//!   cumulative regret across replications. Reals use Rust's shortest
//!   round-trip formatting.
//! * `summary.json`: the configuration echo, the instance means, and the
//!   final regret mean/std. Deterministic for a fixed configuration.
//! * `runtime.json`: mean total policy time, mean per-round policy time and
//!   the per-replication totals, in seconds. Wall-clock dependent.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::data::ExperimentConfig;
use crate::env::{child_seed, Environment, RunRecord, POLICY_STREAM};
use crate::instance::ProblemInstance;
use crate::policies::{build_policy, Algorithm, PolicyParams};
use crate::{CmabError, Result};

/// Cross-replication statistics of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub config: ExperimentConfig,
    pub means: Vec<f64>,
    /// Mean cumulative regret after each round.
    pub per_round_mean_regret: Vec<f64>,
    /// Population standard deviation of the cumulative regret.
    pub per_round_std: Vec<f64>,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    /// Mean over replications of the total policy time.
    pub runtime_mean_seconds: f64,
    /// `runtime_mean_seconds / T`.
    pub per_round_runtime_seconds: f64,
    pub final_regrets: Vec<f64>,
    pub runtimes_seconds: Vec<f64>,
}

/// Runs replication `run` (1-based) of `config` on `instance`.
///
/// Only the policy's `select` and `update` calls are timed.
pub fn run_replication(
    config: &ExperimentConfig,
    instance: &ProblemInstance<f64>,
    run: usize,
) -> Result<RunRecord<f64>> {
    let seed = child_seed(config.base_seed, run as u64);
    let mut env = Environment::new(instance.clone(), seed);
    let mut policy = build_policy(&PolicyParams {
        algorithm: config.algorithm,
        m: instance.m(),
        k: instance.k(),
        delta: config.delta,
        gamma: config.gamma_exp3m,
        seed: child_seed(seed, POLICY_STREAM),
    })?;
    let mut record = RunRecord::with_capacity(instance, config.horizon as usize);
    let fail = |round: u64, e: CmabError| CmabError::Replication {
        run,
        round,
        source: Box::new(e),
    };
    for t in 1..=config.horizon {
        let start = Instant::now();
        let action = policy.select().map_err(|e| fail(t, e))?;
        let mut elapsed = start.elapsed();
        let feedback = env.step(&action).map_err(|e| fail(t, e))?;
        let start = Instant::now();
        policy.update(&action, &feedback).map_err(|e| fail(t, e))?;
        elapsed += start.elapsed();
        record
            .record_round(instance, &action, elapsed)
            .map_err(|e| fail(t, e))?;
    }
    Ok(record)
}

/// Builds the instance from `config` and runs every replication.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    config.validate()?;
    let instance = config.build_instance()?;
    run_on_instance(config, &instance)
}

/// Runs every replication of `config` against a given instance.
pub fn run_on_instance(
    config: &ExperimentConfig,
    instance: &ProblemInstance<f64>,
) -> Result<AggregateResult> {
    let records = (1..=config.runs)
        .map(|run| run_replication(config, instance, run))
        .collect::<Result<Vec<_>>>()?;
    aggregate(config, instance, &records)
}

/// Mean and population standard deviation across replications, per round.
pub fn aggregate(
    config: &ExperimentConfig,
    instance: &ProblemInstance<f64>,
    records: &[RunRecord<f64>],
) -> Result<AggregateResult> {
    let n = records.len();
    let len = records.first().map_or(0, RunRecord::len);
    if n == 0 || records.iter().any(|r| r.len() != len) {
        return Err(CmabError::input(
            "need at least one record, all of equal length",
        ));
    }
    let nf = n as f64;
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for t in 0..len {
        let mu = records.iter().map(|r| r.cumulative_regret[t]).sum::<f64>() / nf;
        let var = records
            .iter()
            .map(|r| (r.cumulative_regret[t] - mu).powi(2))
            .sum::<f64>()
            / nf;
        mean.push(mu);
        std.push(var.sqrt());
    }
    let runtimes: Vec<f64> = records
        .iter()
        .map(RunRecord::wall_time_total_seconds)
        .collect();
    let runtime_mean = runtimes.iter().sum::<f64>() / nf;
    Ok(AggregateResult {
        config: config.clone(),
        means: instance.means().to_vec(),
        final_regret_mean: mean.last().copied().unwrap_or(0.0),
        final_regret_std: std.last().copied().unwrap_or(0.0),
        per_round_mean_regret: mean,
        per_round_std: std,
        runtime_mean_seconds: runtime_mean,
        per_round_runtime_seconds: if len == 0 {
            0.0
        } else {
            runtime_mean / len as f64
        },
        final_regrets: records.iter().map(RunRecord::final_regret).collect(),
        runtimes_seconds: runtimes,
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    algorithm: Algorithm,
    config: &'a ExperimentConfig,
    means: &'a [f64],
    final_regret_mean: f64,
    final_regret_std: f64,
    final_regrets: &'a [f64],
}

#[derive(Serialize)]
struct Runtime<'a> {
    algorithm: Algorithm,
    runtime_mean_seconds: f64,
    per_round_runtime_seconds: f64,
    runtimes_seconds: &'a [f64],
}

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub regret_csv: PathBuf,
    pub summary_json: PathBuf,
    pub runtime_json: PathBuf,
}

pub fn regret_table(result: &AggregateResult) -> String {
    let mut out = String::from("round,mean_cum_regret,std\n");
    for (t, (mean, std)) in result
        .per_round_mean_regret
        .iter()
        .zip(&result.per_round_std)
        .enumerate()
    {
        writeln!(out, "{},{},{}", t + 1, mean, std).expect("write to string");
    }
    out
}

/// Writes `regret.csv`, `summary.json` and `runtime.json` into `dir`.
pub fn emit_results(result: &AggregateResult, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir)?;
    let files = EmittedFiles {
        regret_csv: dir.join("regret.csv"),
        summary_json: dir.join("summary.json"),
        runtime_json: dir.join("runtime.json"),
    };
    fs::write(&files.regret_csv, regret_table(result))?;
    let summary = Summary {
        algorithm: result.config.algorithm,
        config: &result.config,
        means: &result.means,
        final_regret_mean: result.final_regret_mean,
        final_regret_std: result.final_regret_std,
        final_regrets: &result.final_regrets,
    };
    fs::write(
        &files.summary_json,
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    let runtime = Runtime {
        algorithm: result.config.algorithm,
        runtime_mean_seconds: result.runtime_mean_seconds,
        per_round_runtime_seconds: result.per_round_runtime_seconds,
        runtimes_seconds: &result.runtimes_seconds,
    };
    fs::write(
        &files.runtime_json,
        serde_json::to_string_pretty(&runtime)? + "\n",
    )?;
    Ok(files)
}

/// Policies that can run under the configuration's feedback mode.
pub fn default_algorithms(config: &ExperimentConfig) -> Vec<Algorithm> {
    Algorithm::ALL
        .into_iter()
        .filter(|a| !config.feedback_mode.is_cascade() || a.supports_cascade())
        .collect()
}

/// Runs each algorithm on the same instance with the same base seed, so in
/// every replication all algorithms face identical reward draws.
pub fn compare(
    config: &ExperimentConfig,
    algorithms: &[Algorithm],
) -> Result<Vec<AggregateResult>> {
    if algorithms.is_empty() {
        return Err(CmabError::input("no algorithms to compare"));
    }
    let mut base = config.clone();
    base.algorithm = algorithms[0];
    base.validate()?;
    let instance = base.build_instance()?;
    algorithms
        .iter()
        .map(|&algorithm| {
            let mut c = config.clone();
            c.algorithm = algorithm;
            c.validate()?;
            run_on_instance(&c, &instance)
        })
        .collect()
}

/// Writes per-algorithm results under `dir/<algorithm>/` plus the
/// side-by-side tables `compare.csv` (regret) and `compare_runtime.csv`.
pub fn emit_comparison(results: &[AggregateResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut regret = String::from("algorithm,final_regret_mean,final_regret_std\n");
    let mut runtime = String::from("algorithm,runtime_mean_seconds,per_round_runtime_seconds\n");
    for r in results {
        let name = r.config.algorithm;
        emit_results(r, &dir.join(name.as_str()))?;
        writeln!(
            regret,
            "{name},{},{}",
            r.final_regret_mean, r.final_regret_std
        )
        .expect("write");
        writeln!(
            runtime,
            "{name},{},{}",
            r.runtime_mean_seconds, r.per_round_runtime_seconds
        )
        .expect("write");
    }
    fs::write(dir.join("compare.csv"), regret)?;
    fs::write(dir.join("compare_runtime.csv"), runtime)?;
    Ok(())
}

/// Dimension varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    M,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::M => "m",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepAxis::K),
            "m" => Ok(SweepAxis::M),
            other => Err(CmabError::input(format!(
                "can only vary k or m, not `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: usize,
    pub results: Vec<AggregateResult>,
}

/// Repeats [`compare`] with `k` (or `m`) set to each of `values`.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[usize],
    algorithms: &[Algorithm],
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let mut c = config.clone();
            match axis {
                SweepAxis::K => c.k = value,
                SweepAxis::M => c.m = value,
            }
            Ok(SweepPoint {
                axis,
                value,
                results: compare(&c, algorithms)?,
            })
        })
        .collect()
}

/// Writes each point under `dir/<axis>=<value>/` plus `sweep.csv` and
/// `sweep_runtime.csv`.
pub fn emit_sweep(points: &[SweepPoint], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut regret = String::from("axis,value,algorithm,final_regret_mean,final_regret_std\n");
    let mut runtime =
        String::from("axis,value,algorithm,runtime_mean_seconds,per_round_runtime_seconds\n");
    for p in points {
        let axis = p.axis.as_str();
        emit_comparison(&p.results, &dir.join(format!("{axis}={}", p.value)))?;
        for r in &p.results {
            let name = r.config.algorithm;
            writeln!(
                regret,
                "{axis},{},{name},{},{}",
                p.value, r.final_regret_mean, r.final_regret_std
            )
            .expect("write");
            writeln!(
                runtime,
                "{axis},{},{name},{},{}",
                p.value, r.runtime_mean_seconds, r.per_round_runtime_seconds
            )
            .expect("write");
        }
    }
    fs::write(dir.join("sweep.csv"), regret)?;
    fs::write(dir.join("sweep_runtime.csv"), runtime)?;
    Ok(())
}
