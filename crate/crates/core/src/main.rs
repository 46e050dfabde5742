use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmab::data::{parse_config, ConfigOverrides, ExperimentConfig, MeanSource};
use cmab::harness::{
    compare, default_algorithms, emit_comparison, emit_results, emit_sweep, run_experiment, sweep,
    SweepAxis,
};
use cmab::{Algorithm, CmabError, ExaminationOrder, FeedbackMode, NoClickRule};

/// Combinatorial bandit experiments: regret and runtime of CMOSS, CUCB,
/// EXP3.M and HYBRID.
#[derive(Debug, Parser)]
#[command(name = "cmab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm and write regret.csv, summary.json and runtime.json.
    Run(Common),
    /// Run several algorithms on one instance with shared seeds.
    Compare(Common),
    /// Repeat `compare` while varying k or m.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dimension to vary.
        #[arg(long, value_parser = ["k", "m"])]
        vary: String,
        /// Comma-separated values, e.g. 5,10,15.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (`key = value` lines). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm name; `compare` and `sweep` accept a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    /// Number of base arms.
    #[arg(long)]
    m: Option<usize>,
    /// Cardinality budget.
    #[arg(long)]
    k: Option<usize>,
    /// Number of rounds T.
    #[arg(long)]
    horizon: Option<u64>,
    /// CMOSS confidence parameter.
    #[arg(long)]
    delta: Option<f64>,
    /// EXP3.M mixing coefficient.
    #[arg(long)]
    gamma: Option<f64>,
    /// semi_bandit, cascade_disjunctive or cascade_conjunctive.
    #[arg(long)]
    feedback: Option<FeedbackMode>,
    /// descending, ascending or as_given.
    #[arg(long)]
    order: Option<ExaminationOrder>,
    /// no_op or observe_zeros: what a disjunctive pass without a click reveals.
    #[arg(long)]
    no_click: Option<NoClickRule>,
    /// Mean source, e.g. "uniform(0.5, 0.6)" or "affinity(u.txt, i.txt, low)".
    #[arg(long)]
    means: Option<MeanSource>,
    /// Base seed of all random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, CmabError> {
        let mut config = match &self.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        config.apply(&ConfigOverrides {
            algorithm: self.algorithm.first().copied(),
            m: self.m,
            k: self.k,
            horizon: self.horizon,
            delta: self.delta,
            gamma_exp3m: self.gamma,
            feedback_mode: self.feedback,
            examination_order: self.order,
            no_click: self.no_click,
            mean_source: self.means.clone(),
            base_seed: self.seed,
            runs: self.runs,
            output_path: self.out.clone(),
        });
        Ok(config)
    }

    fn algorithms(&self, config: &ExperimentConfig) -> Vec<Algorithm> {
        if self.algorithm.is_empty() {
            default_algorithms(config)
        } else {
            self.algorithm.clone()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CmabError> {
    match cli.command {
        Command::Run(common) => {
            let config = common.config()?;
            let result = run_experiment(&config)?;
            let files = emit_results(&result, &config.output_path)?;
            println!(
                "{}: final regret {:.3} ± {:.3}, {:.3e} s/round -> {}",
                config.algorithm,
                result.final_regret_mean,
                result.final_regret_std,
                result.per_round_runtime_seconds,
                files.summary_json.display()
            );
        }
        Command::Compare(common) => {
            let config = common.config()?;
            let results = compare(&config, &common.algorithms(&config))?;
            emit_comparison(&results, &config.output_path)?;
            print_table(&results);
        }
        Command::Sweep {
            common,
            vary,
            values,
        } => {
            let config = common.config()?;
            let axis: SweepAxis = vary.parse()?;
            let points = sweep(&config, axis, &values, &common.algorithms(&config))?;
            emit_sweep(&points, &config.output_path)?;
            for p in &points {
                println!("{}={}", axis.as_str(), p.value);
                print_table(&p.results);
            }
        }
    }
    Ok(())
}

fn print_table(results: &[cmab::harness::AggregateResult]) {
    println!(
        "{:<8} {:>14} {:>12} {:>12}",
        "algo", "regret", "std", "runtime(s)"
    );
    for r in results {
        println!(
            "{:<8} {:>14.3} {:>12.3} {:>12.3}",
            r.config.algorithm.as_str(),
            r.final_regret_mean,
            r.final_regret_std,
            r.runtime_mean_seconds
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
