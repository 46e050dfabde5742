//! Optimistic index policies: CMOSS and CUCB.
//!
//! Both keep per-arm play counts and empirical means (initialized to 1), add a
//! confidence radius, cap the index at 1, and play the `k` arms with the
//! largest index. They differ only in the radius:
//!
//! ```text
//! CMOSS  rho_i = sqrt(ln+(1 / (delta T_i)) / T_i)
//! CUCB   rho_i = sqrt(3 ln t / (2 T_i))
//! ```
//!
//! Under every supported reward form (sum, disjunctive, conjunctive) the
//! reward is monotone in each coordinate of the index vector, so the top-k
//! set is the combinatorial argmax.

use crate::instance::{top_k, Action, Feedback};
use crate::policies::radius::{cucb_radius_scaled, moss_radius_unchecked};
use crate::policies::{check_dims, Algorithm, Policy};
use crate::{CmabError, Real, Result};

/// Play counts and empirical means of every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTracker<F> {
    counts: Vec<u64>,
    means: Vec<F>,
}

impl<F: Real> MeanTracker<F> {
    pub fn new(m: usize) -> Self {
        MeanTracker {
            counts: vec![0; m],
            means: vec![F::one(); m],
        }
    }

    /// Builds a tracker from explicit state, e.g. to replay a snapshot.
    pub fn from_parts(counts: Vec<u64>, means: Vec<F>) -> Result<Self> {
        if counts.len() != means.len() {
            return Err(CmabError::input("counts and means differ in length"));
        }
        if means.iter().any(|&mu| !(mu >= F::zero() && mu <= F::one())) {
            return Err(CmabError::input("empirical means must lie in [0, 1]"));
        }
        Ok(MeanTracker { counts, means })
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[F] {
        &self.means
    }

    /// Incorporates one observation: `T += 1; mu += (x - mu) / T`.
    pub fn observe(&mut self, arm: usize, outcome: bool) {
        self.counts[arm] += 1;
        let x = if outcome { F::one() } else { F::zero() };
        let n = F::from_count(self.counts[arm]);
        let mu = self.means[arm] + (x - self.means[arm]) / n;
        self.means[arm] = mu.max(F::zero()).min(F::one());
    }

    /// Incorporates every triggered arm of `feedback`; others are untouched.
    pub fn update(&mut self, feedback: &Feedback) -> Result<()> {
        for &(arm, x) in &feedback.observed {
            if arm >= self.m() {
                return Err(CmabError::input(format!("feedback for unknown arm {arm}")));
            }
            self.observe(arm, x);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusRule<F> {
    /// CMOSS radius with confidence parameter `delta`.
    Moss { delta: F },
    /// CUCB radius, which depends on the round index.
    Cucb,
}

impl<F: Real> RadiusRule<F> {
    /// Radii of all arms at round `round` (1-based).
    pub fn radii(&self, counts: &[u64], round: u64) -> Vec<F> {
        match *self {
            RadiusRule::Moss { delta } => counts
                .iter()
                .map(|&c| moss_radius_unchecked(c, delta))
                .collect(),
            RadiusRule::Cucb => {
                let scale = F::lit(1.5) * F::from_count(round.max(1)).ln();
                counts
                    .iter()
                    .map(|&c| cucb_radius_scaled(c, scale))
                    .collect()
            }
        }
    }
}

/// `min(mu_hat + rho, 1)` per arm; an infinite radius maps to exactly 1.
pub fn optimistic_index<F: Real>(means: &[F], radii: &[F]) -> Vec<F> {
    means
        .iter()
        .zip(radii)
        .map(|(&mu, &rho)| (mu + rho).min(F::one()))
        .collect()
}

/// The `k` arms with the largest optimistic index, lowest index on ties.
pub fn ucb_select<F: Real>(
    tracker: &MeanTracker<F>,
    rule: &RadiusRule<F>,
    k: usize,
    round: u64,
) -> Action {
    let radii = rule.radii(tracker.counts(), round);
    let index = optimistic_index(tracker.means(), &radii);
    Action::new(top_k(&index, k)).expect("top-k indices are distinct")
}

/// CMOSS or CUCB, depending on the radius rule.
#[derive(Debug, Clone)]
pub struct UcbPolicy<F> {
    tracker: MeanTracker<F>,
    rule: RadiusRule<F>,
    k: usize,
    round: u64,
    index: Vec<F>,
}

impl<F: Real> UcbPolicy<F> {
    pub fn new(m: usize, k: usize, rule: RadiusRule<F>) -> Result<Self> {
        check_dims(m, k)?;
        if let RadiusRule::Moss { delta } = rule {
            if !(delta > F::zero() && delta < F::one()) {
                return Err(CmabError::config(format!(
                    "delta must lie in (0, 1), got {delta}"
                )));
            }
        }
        Ok(UcbPolicy {
            tracker: MeanTracker::new(m),
            rule,
            k,
            round: 0,
            index: vec![F::one(); m],
        })
    }

    pub fn cmoss(m: usize, k: usize, delta: F) -> Result<Self> {
        Self::new(m, k, RadiusRule::Moss { delta })
    }

    pub fn cucb(m: usize, k: usize) -> Result<Self> {
        Self::new(m, k, RadiusRule::Cucb)
    }

    pub fn tracker(&self) -> &MeanTracker<F> {
        &self.tracker
    }

    /// Replaces the learning state, keeping the radius rule.
    pub fn with_tracker(mut self, tracker: MeanTracker<F>, round: u64) -> Result<Self> {
        if tracker.m() != self.tracker.m() {
            return Err(CmabError::input("tracker dimension mismatch"));
        }
        self.tracker = tracker;
        self.round = round;
        Ok(self)
    }

    pub fn rule(&self) -> RadiusRule<F> {
        self.rule
    }

    /// Rounds selected so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Optimistic index used by the most recent selection.
    pub fn last_index(&self) -> &[F] {
        &self.index
    }

    fn fill_index(&mut self, round: u64) {
        let counts = self.tracker.counts();
        let means = self.tracker.means();
        let one = F::one();
        match self.rule {
            RadiusRule::Moss { delta } => {
                for ((slot, &c), &mu) in self.index.iter_mut().zip(counts).zip(means) {
                    *slot = (mu + moss_radius_unchecked(c, delta)).min(one);
                }
            }
            RadiusRule::Cucb => {
                let scale = F::lit(1.5) * F::from_count(round).ln();
                for ((slot, &c), &mu) in self.index.iter_mut().zip(counts).zip(means) {
                    *slot = (mu + cucb_radius_scaled(c, scale)).min(one);
                }
            }
        }
    }
}

impl<F: Real> Policy<F> for UcbPolicy<F> {
    fn algorithm(&self) -> Algorithm {
        match self.rule {
            RadiusRule::Moss { .. } => Algorithm::Cmoss,
            RadiusRule::Cucb => Algorithm::Cucb,
        }
    }

    fn select(&mut self) -> Result<Action> {
        self.round += 1;
        self.fill_index(self.round);
        Action::new(top_k(&self.index, self.k))
    }

    fn update(&mut self, _action: &Action, feedback: &Feedback) -> Result<()> {
        self.tracker.update(feedback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_plays_first_k_arms() {
        let mut p = UcbPolicy::<f64>::cmoss(6, 3, 1e-5).unwrap();
        assert_eq!(p.select().unwrap().arms(), &[0, 1, 2]);
        let mut q = UcbPolicy::<f64>::cucb(6, 3).unwrap();
        assert_eq!(q.select().unwrap().arms(), &[0, 1, 2]);
    }

    #[test]
    fn explicit_index_ordering() {
        let index = optimistic_index(&[0.2f64, 0.8, 0.5], &[0.7, 0.0, 0.1]);
        assert!((index[0] - 0.9).abs() < 1e-15);
        assert_eq!(top_k(&index, 2), vec![0, 1]);
    }

    #[test]
    fn infinite_radius_caps_at_one() {
        let index = optimistic_index(&[0.0f64, 0.4], &[f64::INFINITY, 0.1]);
        assert_eq!(index[0], 1.0);
    }

    #[test]
    fn mean_update_examples() {
        let mut t = MeanTracker::<f64>::new(2);
        t.observe(0, false);
        assert_eq!((t.counts()[0], t.means()[0]), (1, 0.0));

        let mut t = MeanTracker::from_parts(vec![1, 0], vec![1.0f64, 1.0]).unwrap();
        t.observe(0, false);
        assert_eq!((t.counts()[0], t.means()[0]), (2, 0.5));

        let mut t = MeanTracker::<f64>::new(1);
        for x in [true, false, false, true] {
            t.observe(0, x);
        }
        assert_eq!((t.counts()[0], t.means()[0]), (4, 0.5));
    }

    #[test]
    fn update_touches_only_observed_arms() {
        let mut t = MeanTracker::<f64>::new(3);
        t.update(&Feedback::new(vec![(2, false)])).unwrap();
        assert_eq!(t.counts(), &[0, 0, 1]);
        assert_eq!(t.means(), &[1.0, 1.0, 0.0]);
        assert!(t.update(&Feedback::new(vec![(3, true)])).is_err());
    }

    #[test]
    fn invalid_delta_is_a_config_error() {
        assert!(matches!(
            UcbPolicy::<f64>::cmoss(3, 1, 1.5),
            Err(CmabError::Config(_))
        ));
        assert!(UcbPolicy::<f64>::cmoss(3, 4, 0.1).is_err());
    }

    #[test]
    fn cached_index_matches_reference_path() {
        let tracker =
            MeanTracker::from_parts(vec![0, 3, 10, 1, 7], vec![1.0f64, 0.3, 0.55, 0.0, 0.9])
                .unwrap();
        for rule in [RadiusRule::Moss { delta: 1e-3 }, RadiusRule::Cucb] {
            let mut p = UcbPolicy::new(5, 2, rule)
                .unwrap()
                .with_tracker(tracker.clone(), 40)
                .unwrap();
            let fast = p.select().unwrap();
            let reference = ucb_select(&tracker, &rule, 2, 41);
            assert_eq!(fast, reference);
            let radii = rule.radii(tracker.counts(), 41);
            assert_eq!(
                p.last_index(),
                optimistic_index(tracker.means(), &radii).as_slice()
            );
        }
    }
}
