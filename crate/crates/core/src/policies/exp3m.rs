//! EXP3.M: exponential weights over arms with capped weights, mixed with
//! uniform exploration, and dependent rounding to draw exactly `k` arms.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Action, Feedback};
use crate::policies::depround::depround;
use crate::policies::{check_dims, Algorithm, Policy};
use crate::{CmabError, Real, Result};

/// Target share `(1/k - gamma/m) / (1 - gamma)` of a capped weight.
fn cap_share<F: Real>(m: usize, k: usize, gamma: F) -> F {
    let m = F::from_usize(m).expect("m as float");
    let k = F::from_usize(k).expect("k as float");
    (F::one() / k - gamma / m) / (F::one() - gamma)
}

/// Threshold `alpha` such that capping every weight `>= alpha` at `alpha`
/// gives each capped arm the share `(1/k - gamma/m) / (1 - gamma)` of the
/// total capped weight.
///
/// Returns `None` when no weight is large enough to need capping, i.e. when
/// `max w < (1/k - gamma/m) sum w / (1 - gamma)`.
///
/// Weights are sorted in descending order; for each candidate number `n` of
/// capped weights the equation is linear in `alpha`,
/// `alpha = c R_n / (1 - n c)` with `R_n` the sum of the uncapped weights,
/// and the smallest `n` whose solution sits between the `n`-th and
/// `(n+1)`-th largest weights is taken.
pub fn exp3m_alpha<F: Real>(weights: &[F], k: usize, gamma: F) -> Option<F> {
    alpha_and_prefix(weights, k, gamma).map(|(alpha, _)| alpha)
}

fn alpha_and_prefix<F: Real>(weights: &[F], k: usize, gamma: F) -> Option<(F, Vec<usize>)> {
    let m = weights.len();
    if m == 0 || k == 0 || k > m || !(gamma < F::one()) {
        return None;
    }
    let c = cap_share(m, k, gamma);
    let total: F = weights.iter().copied().sum();
    let max = weights.iter().copied().fold(F::neg_infinity(), F::max);
    if max < c * total {
        return None;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sorted: Vec<F> = order.iter().map(|&i| weights[i]).collect();
    // suffix[n] = sum of sorted[n..], accumulated smallest first
    let mut suffix = vec![F::zero(); m + 1];
    for n in (0..m).rev() {
        suffix[n] = suffix[n + 1] + sorted[n];
    }

    let mut best: Option<(F, usize, F)> = None;
    for n in 1..m {
        let denom = F::one() - F::from_usize(n).expect("n as float") * c;
        if !(denom > F::zero()) {
            break;
        }
        let alpha = c * suffix[n] / denom;
        let violation = (alpha - sorted[n - 1]).max(F::zero()) + (sorted[n] - alpha).max(F::zero());
        if violation == F::zero() {
            best = Some((alpha, n, violation));
            break;
        }
        if best.is_none_or(|(_, _, v)| violation < v) {
            best = Some((alpha, n, violation));
        }
    }
    match best {
        Some((alpha, n, _)) => Some((alpha, order[..n].to_vec())),
        // every weight equal to the largest one and k = m
        None => Some((max, order)),
    }
}

/// Sampling probabilities of one EXP3.M round.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3mRound<F> {
    /// `p_i`, summing to `k`; exactly 1 for capped arms.
    pub probabilities: Vec<F>,
    /// Membership in the capped set `S_0`.
    pub capped: Vec<bool>,
    pub alpha: Option<F>,
}

/// `p_i = k ((1 - gamma) w'_i / sum w' + gamma / m)` with `w'` the capped
/// weights.
pub fn exp3m_probabilities<F: Real>(weights: &[F], k: usize, gamma: F) -> Exp3mRound<F> {
    let m = weights.len();
    if k == m {
        return Exp3mRound {
            probabilities: vec![F::one(); m],
            capped: vec![true; m],
            alpha: None,
        };
    }
    let mut capped = vec![false; m];
    let mut effective = weights.to_vec();
    let alpha = alpha_and_prefix(weights, k, gamma).map(|(alpha, prefix)| {
        for i in prefix {
            capped[i] = true;
        }
        for (i, w) in effective.iter_mut().enumerate() {
            if *w >= alpha {
                capped[i] = true;
            }
            if capped[i] {
                *w = alpha;
            }
        }
        alpha
    });

    let kf = F::from_usize(k).expect("k as float");
    let mf = F::from_usize(m).expect("m as float");
    let total: F = effective.iter().copied().sum();
    let floor = gamma / mf;
    let probabilities = effective
        .iter()
        .zip(&capped)
        .map(|(&w, &is_capped)| {
            if is_capped {
                F::one()
            } else {
                (kf * ((F::one() - gamma) * w / total + floor)).min(F::one())
            }
        })
        .collect();
    Exp3mRound {
        probabilities,
        capped,
        alpha,
    }
}

/// EXP3.M learning state.
#[derive(Debug, Clone)]
pub struct Exp3m<F> {
    weights: Vec<F>,
    gamma: F,
    k: usize,
    rng: ChaCha8Rng,
    pending: Option<Exp3mRound<F>>,
}

impl<F: Real> Exp3m<F> {
    pub fn new(m: usize, k: usize, gamma: F, seed: u64) -> Result<Self> {
        check_dims(m, k)?;
        if !(gamma > F::zero() && gamma <= F::one()) {
            return Err(CmabError::config(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Exp3m {
            weights: vec![F::one(); m],
            gamma,
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        })
    }

    /// Replaces the weights, e.g. to probe a specific state.
    pub fn with_weights(mut self, weights: Vec<F>) -> Result<Self> {
        if weights.len() != self.weights.len() {
            return Err(CmabError::input("weight vector has the wrong length"));
        }
        if weights.iter().any(|&w| !(w > F::zero() && w.is_finite())) {
            return Err(CmabError::input("weights must be positive and finite"));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn gamma(&self) -> F {
        self.gamma
    }

    /// Probabilities of the round currently awaiting feedback.
    pub fn pending_round(&self) -> Option<&Exp3mRound<F>> {
        self.pending.as_ref()
    }

    fn overflow_threshold() -> F {
        let cap = F::lit(1e300);
        if cap.is_finite() {
            cap
        } else {
            F::max_value() / F::lit(1e8)
        }
    }

    /// Rescales the weights by their maximum once it exceeds the overflow
    /// threshold. Probabilities depend only on weight ratios.
    fn renormalize(&mut self) {
        let max = self.weights.iter().copied().fold(F::zero(), F::max);
        if max > Self::overflow_threshold() {
            let tiny = F::min_positive_value();
            for w in &mut self.weights {
                *w = (*w / max).max(tiny);
            }
        }
    }

    /// Computes this round's probabilities and draws the action.
    pub fn round(&mut self) -> Result<(Action, Exp3mRound<F>)> {
        self.renormalize();
        let round = exp3m_probabilities(&self.weights, self.k, self.gamma);
        let action = depround(&round.probabilities, &mut self.rng)?;
        Ok((action, round))
    }

    /// Multiplies `w_i` by `exp(k gamma x_hat_i / m)` for every arm outside
    /// the capped set, where `x_hat_i = x_i / p_i` for played arms and 0
    /// otherwise.
    pub fn apply_update(
        &mut self,
        action: &Action,
        round: &Exp3mRound<F>,
        feedback: &Feedback,
    ) -> Result<()> {
        let m = self.weights.len();
        let scale = F::from_usize(self.k).expect("k as float") * self.gamma
            / F::from_usize(m).expect("m as float");
        for &(arm, x) in &feedback.observed {
            if arm >= m || !action.contains(arm) {
                return Err(CmabError::input(format!("feedback for unplayed arm {arm}")));
            }
            if round.capped[arm] || !x {
                continue;
            }
            let p = round.probabilities[arm];
            if !(p > F::zero()) {
                return Err(CmabError::Internal(format!(
                    "played arm {arm} had probability {p}"
                )));
            }
            self.weights[arm] = self.weights[arm] * (scale / p).exp();
        }
        Ok(())
    }
}

impl<F: Real> Policy<F> for Exp3m<F> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Exp3m
    }

    fn select(&mut self) -> Result<Action> {
        let (action, round) = self.round()?;
        self.pending = Some(round);
        Ok(action)
    }

    fn update(&mut self, action: &Action, feedback: &Feedback) -> Result<()> {
        let round = self
            .pending
            .take()
            .ok_or_else(|| CmabError::Internal("update called before select".into()))?;
        self.apply_update(action, &round, feedback)
    }
}
