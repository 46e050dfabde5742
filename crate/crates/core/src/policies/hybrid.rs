//! FTRL over the capped simplex with the hybrid regularizer
//! `psi(x) = sum_i -sqrt(x_i) + gamma (1 - x_i) ln(1 - x_i)`.
//!
//! Rewards `X` are mapped to losses `o = -X` in `[-1, 0]`, and actions are
//! drawn from the fractional point by dependent rounding, which preserves
//! the marginals exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Action, Feedback};
use crate::policies::depround::depround;
use crate::policies::{check_dims, Algorithm, Policy};
use crate::solvers::{solve_capped_simplex, SolverOptions};
use crate::{CmabError, Real, Result};

/// `1` when `k <= m/2`, else `min(1, 1/sqrt(log2(m / (m - k))))`.
pub fn hybrid_gamma<F: Real>(m: usize, k: usize) -> Result<F> {
    check_dims(m, k)?;
    if k == m {
        return Err(CmabError::config(
            "hybrid regularizer weight is undefined for k = m",
        ));
    }
    if 2 * k <= m {
        return Ok(F::one());
    }
    let ratio = F::from_usize(m).expect("m") / F::from_usize(m - k).expect("m - k");
    Ok(F::one().min(F::one() / ratio.log2().sqrt()))
}

/// Importance-weighted loss estimate
/// `l_i = (o_i + 1) 1[i in A] / x_i - 1` with `o_i = -X_i`.
pub fn hybrid_estimator<F: Real>(feedback: &Feedback, action: &Action, x: &[F]) -> Result<Vec<F>> {
    let mut estimate = vec![-F::one(); x.len()];
    for &arm in action.arms() {
        if arm >= x.len() {
            return Err(CmabError::input(format!("arm {arm} out of range")));
        }
        let reward = feedback
            .outcome(arm)
            .ok_or_else(|| CmabError::input(format!("no outcome observed for played arm {arm}")))?;
        let xi = x[arm];
        if !(xi > F::zero()) {
            return Err(CmabError::Internal(format!(
                "played arm {arm} has fractional weight {xi}"
            )));
        }
        let loss_plus_one = if reward { F::zero() } else { F::one() };
        estimate[arm] = loss_plus_one / xi - F::one();
    }
    Ok(estimate)
}

/// HYBRID learning state.
#[derive(Debug, Clone)]
pub struct Hybrid<F> {
    cumulative_loss: Vec<F>,
    gamma: F,
    k: usize,
    round: u64,
    rng: ChaCha8Rng,
    options: SolverOptions<F>,
    last_lambda: Option<F>,
    pending: Option<Vec<F>>,
}

impl<F: Real> Hybrid<F> {
    /// State with the regularizer weight chosen by [`hybrid_gamma`].
    pub fn new(m: usize, k: usize, seed: u64) -> Result<Self> {
        let gamma = hybrid_gamma(m, k)?;
        Self::with_gamma(m, k, gamma, seed)
    }

    pub fn with_gamma(m: usize, k: usize, gamma: F, seed: u64) -> Result<Self> {
        check_dims(m, k)?;
        if k == m {
            return Err(CmabError::config("HYBRID needs k < m"));
        }
        if !(gamma > F::zero() && gamma <= F::one()) {
            return Err(CmabError::config(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Hybrid {
            cumulative_loss: vec![F::zero(); m],
            gamma,
            k,
            round: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            options: SolverOptions::default(),
            last_lambda: None,
            pending: None,
        })
    }

    pub fn with_cumulative_loss(mut self, losses: Vec<F>) -> Result<Self> {
        if losses.len() != self.cumulative_loss.len() || losses.iter().any(|l| !l.is_finite()) {
            return Err(CmabError::input(
                "cumulative loss must be finite with length m",
            ));
        }
        self.cumulative_loss = losses;
        Ok(self)
    }

    pub fn cumulative_loss(&self) -> &[F] {
        &self.cumulative_loss
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    pub fn round_index(&self) -> u64 {
        self.round
    }

    /// Advances the round, solves for `x_t` with `eta_t = 1/sqrt(t)` and
    /// samples `A_t`.
    pub fn round(&mut self) -> Result<(Action, Vec<F>)> {
        self.round += 1;
        let eta = F::one() / F::from_count(self.round).sqrt();
        let solution = solve_capped_simplex(
            &self.cumulative_loss,
            eta,
            self.gamma,
            self.k,
            &self.options,
            self.last_lambda,
        )?;
        self.last_lambda = Some(solution.lambda);
        let action = depround(&solution.x, &mut self.rng)?;
        Ok((action, solution.x))
    }

    /// Adds the loss estimate built from `feedback` to the cumulative loss.
    pub fn absorb(&mut self, action: &Action, x: &[F], feedback: &Feedback) -> Result<()> {
        let estimate = hybrid_estimator(feedback, action, x)?;
        for (total, l) in self.cumulative_loss.iter_mut().zip(estimate) {
            *total = *total + l;
        }
        Ok(())
    }
}

impl<F: Real> Policy<F> for Hybrid<F> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Hybrid
    }

    fn select(&mut self) -> Result<Action> {
        let (action, x) = self.round()?;
        self.pending = Some(x);
        Ok(action)
    }

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()> {
        let x = self
            .pending
            .take()
            .ok_or_else(|| CmabError::Internal("update called before select".into()))?;
        self.absorb(action, &x, feedback)
    }
}
