//! Learning policies sharing the select / update interface.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::{Action, Feedback};
use crate::{CmabError, Real, Result};

pub mod depround;
pub mod exp3m;
pub mod hybrid;
pub mod radius;
pub mod ucb;

pub use depround::{depround, depround_with_stats};
pub use exp3m::{exp3m_alpha, Exp3m};
pub use hybrid::{hybrid_estimator, hybrid_gamma, Hybrid};
pub use radius::{cucb_radius, lnplus, moss_radius};
pub use ucb::{MeanTracker, RadiusRule, UcbPolicy};

/// A combinatorial bandit learner.
///
/// Each round the runner calls [`Policy::select`] once, plays the action, and
/// hands the resulting feedback back through [`Policy::update`].
pub trait Policy<F: Real>: Send {
    fn algorithm(&self) -> Algorithm;

    fn select(&mut self) -> Result<Action>;

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cmoss,
    Cucb,
    Exp3m,
    Hybrid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Cmoss,
        Algorithm::Cucb,
        Algorithm::Exp3m,
        Algorithm::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Cmoss => "cmoss",
            Algorithm::Cucb => "cucb",
            Algorithm::Exp3m => "exp3m",
            Algorithm::Hybrid => "hybrid",
        }
    }

    /// Whether the policy can learn from partially observed (cascading)
    /// actions. EXP3.M and HYBRID need the outcome of every played arm.
    pub fn supports_cascade(self) -> bool {
        matches!(self, Algorithm::Cmoss | Algorithm::Cucb)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cmoss" => Ok(Algorithm::Cmoss),
            "cucb" => Ok(Algorithm::Cucb),
            "exp3m" | "exp3.m" => Ok(Algorithm::Exp3m),
            "hybrid" => Ok(Algorithm::Hybrid),
            other => Err(CmabError::input(format!(
                "unknown algorithm `{other}` (expected cmoss, cucb, exp3m or hybrid)"
            ))),
        }
    }
}

/// Everything needed to instantiate a policy for one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams<F> {
    pub algorithm: Algorithm,
    pub m: usize,
    pub k: usize,
    /// CMOSS confidence parameter.
    pub delta: F,
    /// EXP3.M mixing coefficient.
    pub gamma: F,
    /// Seed of the policy's private RNG (EXP3.M and HYBRID sample actions).
    pub seed: u64,
}

pub fn build_policy<F: Real>(params: &PolicyParams<F>) -> Result<Box<dyn Policy<F>>> {
    let PolicyParams {
        algorithm,
        m,
        k,
        delta,
        gamma,
        seed,
    } = *params;
    Ok(match algorithm {
        Algorithm::Cmoss => Box::new(UcbPolicy::cmoss(m, k, delta)?),
        Algorithm::Cucb => Box::new(UcbPolicy::cucb(m, k)?),
        Algorithm::Exp3m => Box::new(Exp3m::new(m, k, gamma, seed)?),
        Algorithm::Hybrid => Box::new(Hybrid::new(m, k, seed)?),
    })
}

pub(crate) fn check_dims(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || k > m {
        return Err(CmabError::config(format!(
            "need 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    Ok(())
}
