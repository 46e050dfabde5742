//! Instance construction: synthetic means, affinity-score ingestion, and the
//! experiment configuration file.
//!
//! # Configuration format
//!
//! One `key = value` pair per line; blank lines and lines starting with `#`
//! are ignored. Every key is optional and defaults as listed:
//!
//! | key                 | default           | values                                          |
//! |---------------------|-------------------|-------------------------------------------------|
//! | `algorithm`         | `cmoss`           | `cmoss`, `cucb`, `exp3m`, `hybrid`              |
//! | `m`                 | `30`              | positive integer                                |
//! | `k`                 | `10`              | integer in `1..=m`                              |
//! | `horizon`           | `100000`          | positive integer (rounds `T`)                   |
//! | `delta`             | `0.00001`         | real in (0, 1), CMOSS confidence parameter      |
//! | `gamma_exp3m`       | `0.01`            | real in (0, 1], EXP3.M mixing coefficient       |
//! | `feedback_mode`     | `semi_bandit`     | `semi_bandit`, `cascade_disjunctive`, `cascade_conjunctive` |
//! | `examination_order` | `descending`      | `descending`, `ascending`, `as_given`           |
//! | `no_click`          | `no_op`           | `no_op`, `observe_zeros` (disjunctive pass with no success) |
//! | `mean_source`       | `uniform(0, 0.1)` | `uniform(lo, hi)`, `affinity(users, items, low|high[, seed])`, `explicit(mu_1, ..., mu_m)` |
//! | `base_seed`         | `2025`            | unsigned integer                                |
//! | `runs`              | `10`              | positive integer                                |
//! | `output_path`       | `results`         | directory for result files                      |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{child_seed, INSTANCE_STREAM};
use crate::instance::{ExaminationOrder, FeedbackMode, NoClickRule, ProblemInstance};
use crate::policies::Algorithm;
use crate::{CmabError, Real, Result};

/// Seed used to sample arms from an affinity-score pool unless overridden.
pub const DEFAULT_AFFINITY_SEED: u64 = 2025;

/// `m` independent `U(lo, hi)` draws.
pub fn gen_synthetic_means<F: Real>(m: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<F>> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(CmabError::input(format!(
            "uniform range ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| F::lit(rng.gen_range(lo..hi))).collect())
}

/// Target interval of rescaled affinity scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `[0, 0.1]`
    Low,
    /// `[0.5, 0.6]`
    High,
}

impl Regime {
    pub fn offset(self) -> f64 {
        match self {
            Regime::Low => 0.0,
            Regime::High => 0.5,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Low => "low",
            Regime::High => "high",
        })
    }
}

impl FromStr for Regime {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Regime::Low),
            "high" => Ok(Regime::High),
            other => Err(CmabError::input(format!(
                "unknown regime `{other}` (expected low or high)"
            ))),
        }
    }
}

/// Dot products of every user with every item (`scores[u][a]`).
///
/// Vectors that are not unit length are normalized first, with a warning.
pub fn affinity_scores<F: Real>(users: &[Vec<F>], items: &[Vec<F>]) -> Result<Vec<Vec<F>>> {
    let dim = users
        .first()
        .or_else(|| items.first())
        .map(Vec::len)
        .ok_or_else(|| CmabError::input("no feature vectors given"))?;
    let users = normalize_all(users, dim, "user")?;
    let items = normalize_all(items, dim, "item")?;
    Ok(users
        .iter()
        .map(|u| {
            items
                .iter()
                .map(|a| u.iter().zip(a).map(|(&x, &y)| x * y).sum())
                .collect()
        })
        .collect())
}

fn normalize_all<F: Real>(vectors: &[Vec<F>], dim: usize, what: &str) -> Result<Vec<Vec<F>>> {
    let tolerance = F::lit(1e-9).max(F::epsilon() * F::lit(64.0));
    let mut warned = false;
    vectors
        .iter()
        .enumerate()
        .map(|(row, v)| {
            if v.len() != dim {
                return Err(CmabError::input(format!(
                    "{what} vector {row} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            let norm = v.iter().map(|&x| x * x).sum::<F>().sqrt();
            if !(norm > F::zero()) || !norm.is_finite() {
                return Err(CmabError::input(format!(
                    "{what} vector {row} cannot be normalized"
                )));
            }
            if (norm - F::one()).abs() <= tolerance {
                return Ok(v.clone());
            }
            if !warned {
                log::warn!("{what} vectors are not unit length; normalizing (first at row {row})");
                warned = true;
            }
            Ok(v.iter().map(|&x| x / norm).collect())
        })
        .collect()
}

/// Min-max normalizes `scores` and maps them onto `[0, 0.1]` (low) or
/// `[0.5, 0.6]` (high).
pub fn rescale_scores<F: Real>(scores: &[F], regime: Regime) -> Result<Vec<F>> {
    let (min, max) = scores
        .iter()
        .fold((F::infinity(), F::neg_infinity()), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
    if !(max > min) {
        return Err(CmabError::input(
            "cannot rescale scores: all values are equal",
        ));
    }
    let offset = F::lit(regime.offset());
    let width = F::lit(0.1);
    let span = max - min;
    Ok(scores
        .iter()
        .map(|&s| offset + width * ((s - min) / span))
        .collect())
}

/// `m` values drawn without replacement, reproducible from `seed`.
pub fn sample_arms<F: Real>(scores: &[F], m: usize, seed: u64) -> Result<Vec<F>> {
    if scores.len() < m {
        return Err(CmabError::input(format!(
            "need {m} scores to sample from, only {} available",
            scores.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, scores.len(), m)
        .into_iter()
        .map(|i| scores[i])
        .collect())
}

/// Parses whitespace-separated reals, one vector per non-empty line.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(n, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| {
                        CmabError::input(format!("line {}: bad number `{tok}`: {e}", n + 1))
                    })
                })
                .collect()
        })
        .collect()
}

pub fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_vectors(&fs::read_to_string(path)?)
}

/// Where the true arm means come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSource {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Affinity {
        users: PathBuf,
        items: PathBuf,
        regime: Regime,
        seed: u64,
    },
    Explicit(Vec<f64>),
}

impl fmt::Display for MeanSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanSource::Uniform { lo, hi } => write!(f, "uniform({lo}, {hi})"),
            MeanSource::Affinity {
                users,
                items,
                regime,
                seed,
            } => write!(
                f,
                "affinity({}, {}, {regime}, {seed})",
                users.display(),
                items.display()
            ),
            MeanSource::Explicit(means) => {
                let parts: Vec<String> = means.iter().map(|mu| mu.to_string()).collect();
                write!(f, "explicit({})", parts.join(", "))
            }
        }
    }
}

impl FromStr for MeanSource {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| CmabError::input(format!("expected `kind(args)`, got `{s}`")))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| CmabError::input(format!("missing `)` in `{s}`")))?;
        let args: Vec<&str> = args
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .collect();
        let real = |a: &str| {
            a.parse::<f64>()
                .map_err(|e| CmabError::input(format!("bad number `{a}`: {e}")))
        };
        match name.trim() {
            "uniform" => match args.as_slice() {
                [lo, hi] => Ok(MeanSource::Uniform {
                    lo: real(lo)?,
                    hi: real(hi)?,
                }),
                _ => Err(CmabError::input(
                    "uniform takes two arguments: uniform(lo, hi)",
                )),
            },
            "affinity" => match args.as_slice() {
                [users, items, regime] | [users, items, regime, _] => {
                    let seed = match args.get(3) {
                        Some(seed) => seed
                            .parse()
                            .map_err(|e| CmabError::input(format!("bad seed `{seed}`: {e}")))?,
                        None => DEFAULT_AFFINITY_SEED,
                    };
                    Ok(MeanSource::Affinity {
                        users: PathBuf::from(users),
                        items: PathBuf::from(items),
                        regime: regime.parse()?,
                        seed,
                    })
                }
                _ => Err(CmabError::input(
                    "affinity takes affinity(users, items, low|high[, seed])",
                )),
            },
            "explicit" => Ok(MeanSource::Explicit(
                args.iter().map(|a| real(a)).collect::<Result<_>>()?,
            )),
            other => Err(CmabError::input(format!(
                "unknown mean source `{other}` (expected uniform, affinity or explicit)"
            ))),
        }
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub m: usize,
    pub k: usize,
    pub horizon: u64,
    pub delta: f64,
    pub gamma_exp3m: f64,
    pub feedback_mode: FeedbackMode,
    pub examination_order: ExaminationOrder,
    pub no_click: NoClickRule,
    pub mean_source: MeanSource,
    pub base_seed: u64,
    pub runs: usize,
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Cmoss,
            m: 30,
            k: 10,
            horizon: 100_000,
            delta: 1e-5,
            gamma_exp3m: 0.01,
            feedback_mode: FeedbackMode::SemiBandit,
            examination_order: ExaminationOrder::Descending,
            no_click: NoClickRule::NoOp,
            mean_source: MeanSource::Uniform { lo: 0.0, hi: 0.1 },
            base_seed: 2025,
            runs: 10,
            output_path: PathBuf::from("results"),
        }
    }
}

const KEYS: [&str; 13] = [
    "algorithm",
    "m",
    "k",
    "horizon",
    "delta",
    "gamma_exp3m",
    "feedback_mode",
    "examination_order",
    "no_click",
    "mean_source",
    "base_seed",
    "runs",
    "output_path",
];

/// Values that take precedence over the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub algorithm: Option<Algorithm>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub horizon: Option<u64>,
    pub delta: Option<f64>,
    pub gamma_exp3m: Option<f64>,
    pub feedback_mode: Option<FeedbackMode>,
    pub examination_order: Option<ExaminationOrder>,
    pub no_click: Option<NoClickRule>,
    pub mean_source: Option<MeanSource>,
    pub base_seed: Option<u64>,
    pub runs: Option<usize>,
    pub output_path: Option<PathBuf>,
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config = parse_unvalidated(text)?;
    config.validate()?;
    Ok(config)
}

fn parse_unvalidated(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CmabError::parse(
                format!("line {}", n + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| CmabError::parse(key, "unknown key"))?;
        if seen.contains(known) {
            return Err(CmabError::parse(key, "given more than once"));
        }
        seen.push(known);
        config.set(key, value)?;
    }
    Ok(config)
}

fn field<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CmabError::parse(key, format!("invalid value `{value}`: {e}")))
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "algorithm" => self.algorithm = field(key, value)?,
            "m" => self.m = field(key, value)?,
            "k" => self.k = field(key, value)?,
            "horizon" => self.horizon = field(key, value)?,
            "delta" => self.delta = field(key, value)?,
            "gamma_exp3m" => self.gamma_exp3m = field(key, value)?,
            "feedback_mode" => self.feedback_mode = field(key, value)?,
            "examination_order" => self.examination_order = field(key, value)?,
            "no_click" => self.no_click = field(key, value)?,
            "mean_source" => self.mean_source = field(key, value)?,
            "base_seed" => self.base_seed = field(key, value)?,
            "runs" => self.runs = field(key, value)?,
            "output_path" => self.output_path = PathBuf::from(value),
            _ => return Err(CmabError::parse(key, "unknown key")),
        }
        Ok(())
    }

    /// Writes every key in canonical order; `parse_config` reads it back
    /// unchanged.
    pub fn to_config_string(&self) -> String {
        format!(
            "algorithm = {}\nm = {}\nk = {}\nhorizon = {}\ndelta = {}\ngamma_exp3m = {}\n\
             feedback_mode = {}\nexamination_order = {}\nno_click = {}\nmean_source = {}\nbase_seed = {}\n\
             runs = {}\noutput_path = {}\n",
            self.algorithm,
            self.m,
            self.k,
            self.horizon,
            self.delta,
            self.gamma_exp3m,
            self.feedback_mode,
            self.examination_order,
            self.no_click,
            self.mean_source,
            self.base_seed,
            self.runs,
            self.output_path.display()
        )
    }

    pub fn apply(&mut self, overrides: &ConfigOverrides) {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if let Some(v) = &overrides.$f { self.$f = v.clone(); })*
            };
        }
        take!(
            algorithm,
            m,
            k,
            horizon,
            delta,
            gamma_exp3m,
            feedback_mode,
            examination_order,
            no_click,
            mean_source,
            base_seed,
            runs,
            output_path
        );
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(CmabError::parse("m", "must be positive"));
        }
        if self.k == 0 || self.k > self.m {
            return Err(CmabError::parse(
                "k",
                format!("k={} must satisfy 1 <= k <= m (m={})", self.k, self.m),
            ));
        }
        if self.horizon == 0 {
            return Err(CmabError::parse("horizon", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(CmabError::parse("runs", "must be at least 1"));
        }
        if self.algorithm == Algorithm::Cmoss && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CmabError::parse(
                "delta",
                format!("{} is not in (0, 1)", self.delta),
            ));
        }
        if self.algorithm == Algorithm::Exp3m
            && !(self.gamma_exp3m > 0.0 && self.gamma_exp3m <= 1.0)
        {
            return Err(CmabError::parse(
                "gamma_exp3m",
                format!("{} is not in (0, 1]", self.gamma_exp3m),
            ));
        }
        if self.algorithm == Algorithm::Hybrid && self.k == self.m {
            return Err(CmabError::parse("k", "hybrid requires k < m"));
        }
        if self.feedback_mode.is_cascade() && !self.algorithm.supports_cascade() {
            return Err(CmabError::parse(
                "feedback_mode",
                format!("{} needs semi_bandit feedback", self.algorithm),
            ));
        }
        match &self.mean_source {
            MeanSource::Uniform { lo, hi } if !(0.0 <= *lo && lo < hi && *hi <= 1.0) => Err(
                CmabError::parse("mean_source", "uniform(lo, hi) needs 0 <= lo < hi <= 1"),
            ),
            MeanSource::Explicit(means) if means.len() != self.m => Err(CmabError::parse(
                "mean_source",
                format!("explicit list has {} means, m={}", means.len(), self.m),
            )),
            MeanSource::Explicit(means) if means.iter().any(|mu| !(0.0..=1.0).contains(mu)) => Err(
                CmabError::parse("mean_source", "explicit means must lie in [0, 1]"),
            ),
            _ => Ok(()),
        }
    }

    /// Materializes the problem instance. Synthetic means are drawn from the
    /// instance stream of `base_seed`, so every replication faces the same
    /// instance.
    pub fn build_instance(&self) -> Result<ProblemInstance<f64>> {
        let means = match &self.mean_source {
            MeanSource::Uniform { lo, hi } => gen_synthetic_means(
                self.m,
                *lo,
                *hi,
                child_seed(self.base_seed, INSTANCE_STREAM),
            )?,
            MeanSource::Affinity {
                users,
                items,
                regime,
                seed,
            } => {
                let users = read_vectors(users)?;
                let items = read_vectors(items)?;
                let pool: Vec<f64> = affinity_scores(&users, &items)?
                    .into_iter()
                    .flatten()
                    .collect();
                sample_arms(&rescale_scores(&pool, *regime)?, self.m, *seed)?
            }
            MeanSource::Explicit(means) => means.clone(),
        };
        Ok(
            ProblemInstance::new(means, self.k, self.feedback_mode, self.examination_order)?
                .with_no_click(self.no_click),
        )
    }
}
