//! Bernoulli environments with semi-bandit or cascading feedback, and the
//! per-replication regret record.

use std::cmp::Ordering;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{
    Action, ExaminationOrder, Feedback, FeedbackMode, NoClickRule, ProblemInstance,
};
use crate::{CmabError, Real, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `base`:
/// `splitmix64(base XOR splitmix64(index))`.
///
/// Replication `r` of an experiment uses `child_seed(base_seed, r)` for its
/// environment, and `child_seed(child_seed(base_seed, r), POLICY_STREAM)` for
/// any randomness inside the policy. Index 0 of the base seed is reserved for
/// instance generation.
pub fn child_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Child index of a replication seed that feeds the policy's own RNG.
pub const POLICY_STREAM: u64 = 0x706f_6c69_6379;

/// Child index of the base seed used to generate the instance means.
pub const INSTANCE_STREAM: u64 = 0;

/// A stochastic environment owned by one replication.
///
/// Every round draws an outcome for *all* `m` arms from the stream before
/// revealing the triggered ones, so the noise sequence is identical for any
/// two policies run with the same seed.
#[derive(Debug, Clone)]
pub struct Environment<F> {
    instance: ProblemInstance<F>,
    rng: ChaCha8Rng,
    round: u64,
    outcomes: Vec<bool>,
}

impl<F: Real> Environment<F> {
    pub fn new(instance: ProblemInstance<F>, seed: u64) -> Self {
        let m = instance.m();
        Environment {
            instance,
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 1,
            outcomes: vec![false; m],
        }
    }

    pub fn instance(&self) -> &ProblemInstance<F> {
        &self.instance
    }

    /// Index of the next round to be played, starting at 1.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Outcomes of every arm in the most recent round.
    pub fn last_outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    fn draw_outcomes(&mut self) {
        let means = self.instance.means();
        for (slot, mu) in self.outcomes.iter_mut().zip(means) {
            let u: f64 = self.rng.gen();
            *slot = u < mu.as_f64();
        }
    }

    /// Plays one round with the feedback model of the instance.
    pub fn step(&mut self, action: &Action) -> Result<Feedback> {
        if self.instance.feedback_mode().is_cascade() {
            self.step_cascading(action)
        } else {
            self.step_semi_bandit(action)
        }
    }

    /// Reveals the outcome of every arm in `action`.
    pub fn step_semi_bandit(&mut self, action: &Action) -> Result<Feedback> {
        self.instance.validate_action(action)?;
        self.draw_outcomes();
        self.round += 1;
        Ok(Feedback::new(
            action
                .arms()
                .iter()
                .map(|&i| (i, self.outcomes[i]))
                .collect(),
        ))
    }

    /// Reveals the examined prefix of `action` under the cascading model.
    pub fn step_cascading(&mut self, action: &Action) -> Result<Feedback> {
        let mode = self.instance.feedback_mode();
        if !mode.is_cascade() {
            return Err(CmabError::Mode {
                expected: "cascading",
                actual: mode.to_string(),
            });
        }
        self.instance.validate_action(action)?;
        self.draw_outcomes();
        self.round += 1;
        let order = examination_sequence(&self.instance, action);
        Ok(cascade_feedback(
            mode,
            self.instance.no_click(),
            &order,
            |i| self.outcomes[i],
        ))
    }
}

/// Order in which a cascading user looks at the arms of `action`.
pub fn examination_sequence<F: Real>(instance: &ProblemInstance<F>, action: &Action) -> Vec<usize> {
    let mut arms = action.arms().to_vec();
    let means = instance.means();
    match instance.examination_order() {
        ExaminationOrder::AsGiven => {}
        ExaminationOrder::Descending => arms.sort_by(|&a, &b| {
            means[b]
                .partial_cmp(&means[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        }),
        ExaminationOrder::Ascending => arms.sort_by(|&a, &b| {
            means[a]
                .partial_cmp(&means[b])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        }),
    }
    arms
}

/// Walks `order` and stops at the first success (disjunctive) or first
/// failure (conjunctive). What a disjunctive pass without any success
/// reveals is governed by `no_click`.
pub fn cascade_feedback(
    mode: FeedbackMode,
    no_click: NoClickRule,
    order: &[usize],
    outcome: impl Fn(usize) -> bool,
) -> Feedback {
    let mut observed = Vec::with_capacity(order.len());
    match mode {
        FeedbackMode::CascadeDisjunctive => {
            for &i in order {
                let x = outcome(i);
                observed.push((i, x));
                if x {
                    return Feedback::new(observed);
                }
            }
            match no_click {
                NoClickRule::NoOp => Feedback::default(),
                NoClickRule::ObserveZeros => Feedback::new(observed),
            }
        }
        FeedbackMode::CascadeConjunctive => {
            for &i in order {
                let x = outcome(i);
                observed.push((i, x));
                if !x {
                    break;
                }
            }
            Feedback::new(observed)
        }
        FeedbackMode::SemiBandit => Feedback::new(order.iter().map(|&i| (i, outcome(i))).collect()),
    }
}

/// Regret trajectory and policy timing of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<F> {
    pub per_round_gap: Vec<F>,
    pub cumulative_regret: Vec<F>,
    pub wall_time_total: Duration,
    optimal_reward: F,
}

impl<F: Real> RunRecord<F> {
    pub fn new(instance: &ProblemInstance<F>) -> Self {
        Self::with_capacity(instance, 0)
    }

    pub fn with_capacity(instance: &ProblemInstance<F>, rounds: usize) -> Self {
        let optimal_reward = instance
            .reward_mean(&instance.optimal_action())
            .expect("optimal action is valid");
        RunRecord {
            per_round_gap: Vec::with_capacity(rounds),
            cumulative_regret: Vec::with_capacity(rounds),
            wall_time_total: Duration::ZERO,
            optimal_reward,
        }
    }

    /// Appends the gap of `action` and the policy time spent on the round.
    pub fn record_round(
        &mut self,
        instance: &ProblemInstance<F>,
        action: &Action,
        elapsed: Duration,
    ) -> Result<()> {
        let gap = (self.optimal_reward - instance.reward_mean(action)?).max(F::zero());
        let total = self.final_regret() + gap;
        self.per_round_gap.push(gap);
        self.cumulative_regret.push(total);
        self.wall_time_total += elapsed;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.per_round_gap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_round_gap.is_empty()
    }

    pub fn final_regret(&self) -> F {
        self.cumulative_regret
            .last()
            .copied()
            .unwrap_or_else(F::zero)
    }

    pub fn wall_time_total_seconds(&self) -> f64 {
        self.wall_time_total.as_secs_f64()
    }

    /// Average policy time per round in seconds.
    pub fn wall_time_per_round(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.wall_time_total_seconds() / self.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(
        means: &[f64],
        k: usize,
        mode: FeedbackMode,
        order: ExaminationOrder,
    ) -> ProblemInstance<f64> {
        ProblemInstance::new(means.to_vec(), k, mode, order).unwrap()
    }

    fn act(arms: &[usize]) -> Action {
        Action::new(arms.to_vec()).unwrap()
    }

    #[test]
    fn degenerate_bernoulli_arms() {
        let inst = ProblemInstance::semi_bandit(vec![1.0, 0.0, 1.0, 0.0], 2).unwrap();
        let mut env = Environment::new(inst, 7);
        for _ in 0..100 {
            let ones = env.step_semi_bandit(&act(&[0, 2])).unwrap();
            assert!(ones.observed.iter().all(|&(_, x)| x));
            let zeros = env.step_semi_bandit(&act(&[1, 3])).unwrap();
            assert!(zeros.observed.iter().all(|&(_, x)| !x));
        }
        assert_eq!(env.round(), 201);
    }

    #[test]
    fn bernoulli_frequency_within_three_sigma() {
        let n = 1_000_000;
        let inst = ProblemInstance::semi_bandit(vec![0.3], 1).unwrap();
        let mut env = Environment::new(inst, 11);
        let a = act(&[0]);
        let hits = (0..n)
            .filter(|_| env.step_semi_bandit(&a).unwrap().observed[0].1)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.3).abs() <= 3.0 * (0.3f64 * 0.7 / n as f64).sqrt());
    }

    #[test]
    fn invalid_arm_is_rejected() {
        let inst = ProblemInstance::semi_bandit(vec![0.5, 0.5], 1).unwrap();
        let mut env = Environment::new(inst, 0);
        assert!(matches!(env.step(&act(&[2])), Err(CmabError::Input(_))));
    }

    #[test]
    fn cascading_needs_cascade_mode() {
        let inst = ProblemInstance::semi_bandit(vec![0.5, 0.5], 1).unwrap();
        let mut env = Environment::new(inst, 0);
        assert!(matches!(
            env.step_cascading(&act(&[0])),
            Err(CmabError::Mode { .. })
        ));
    }

    #[test]
    fn disjunctive_stops_at_first_click() {
        let draws = [false, true, true];
        let fb = cascade_feedback(
            FeedbackMode::CascadeDisjunctive,
            NoClickRule::NoOp,
            &[0, 1, 2],
            |i| draws[i],
        );
        assert_eq!(fb.observed, vec![(0, false), (1, true)]);
    }

    #[test]
    fn disjunctive_without_click_is_empty() {
        let fb = cascade_feedback(
            FeedbackMode::CascadeDisjunctive,
            NoClickRule::NoOp,
            &[0, 1, 2],
            |_| false,
        );
        assert!(fb.is_empty());
    }

    #[test]
    fn disjunctive_without_click_can_reveal_zeros() {
        let fb = cascade_feedback(
            FeedbackMode::CascadeDisjunctive,
            NoClickRule::ObserveZeros,
            &[2, 0],
            |_| false,
        );
        assert_eq!(fb.observed, vec![(2, false), (0, false)]);
    }

    #[test]
    fn conjunctive_runs_to_end_on_all_ones() {
        let fb = cascade_feedback(
            FeedbackMode::CascadeConjunctive,
            NoClickRule::NoOp,
            &[2, 0, 1],
            |_| true,
        );
        assert_eq!(fb.observed, vec![(2, true), (0, true), (1, true)]);
        let draws = [true, false, true];
        let fb = cascade_feedback(
            FeedbackMode::CascadeConjunctive,
            NoClickRule::NoOp,
            &[0, 1, 2],
            |i| draws[i],
        );
        assert_eq!(fb.observed, vec![(0, true), (1, false)]);
    }

    #[test]
    fn examination_orders() {
        let means = [0.2, 0.9, 0.5, 0.9];
        let a = act(&[2, 0, 3, 1]);
        let d = instance(
            &means,
            4,
            FeedbackMode::CascadeDisjunctive,
            ExaminationOrder::Descending,
        );
        assert_eq!(examination_sequence(&d, &a), vec![1, 3, 2, 0]);
        let up = instance(
            &means,
            4,
            FeedbackMode::CascadeDisjunctive,
            ExaminationOrder::Ascending,
        );
        assert_eq!(examination_sequence(&up, &a), vec![0, 2, 1, 3]);
        let g = instance(
            &means,
            4,
            FeedbackMode::CascadeDisjunctive,
            ExaminationOrder::AsGiven,
        );
        assert_eq!(examination_sequence(&g, &a), vec![2, 0, 3, 1]);
    }

    #[test]
    fn disjunctive_prefix_has_at_most_one_click_at_the_end() {
        let inst = instance(
            &[0.3, 0.4, 0.2, 0.6, 0.1],
            4,
            FeedbackMode::CascadeDisjunctive,
            ExaminationOrder::Descending,
        );
        let mut env = Environment::new(inst, 3);
        let a = act(&[0, 1, 2, 3]);
        for _ in 0..5000 {
            let fb = env.step(&a).unwrap();
            fb.validate(&a).unwrap();
            let clicks = fb.observed.iter().filter(|&&(_, x)| x).count();
            assert!(clicks <= 1);
            if clicks == 1 {
                assert!(fb.observed.last().unwrap().1);
            }
        }
    }

    #[test]
    fn noise_is_independent_of_the_action() {
        let inst = ProblemInstance::semi_bandit(vec![0.5; 6], 3).unwrap();
        let mut a = Environment::new(inst.clone(), 99);
        let mut b = Environment::new(inst, 99);
        for _ in 0..200 {
            a.step(&act(&[0, 1, 2])).unwrap();
            b.step(&act(&[3, 4, 5])).unwrap();
            assert_eq!(a.last_outcomes(), b.last_outcomes());
        }
    }

    #[test]
    fn child_seeds_are_distinct_and_stable() {
        assert_eq!(child_seed(2025, 1), child_seed(2025, 1));
        assert_ne!(child_seed(2025, 1), child_seed(2025, 2));
        assert_ne!(child_seed(2025, 1), child_seed(2026, 1));
    }

    #[test]
    fn record_prefix_sums() {
        let inst = ProblemInstance::semi_bandit(vec![0.9f64, 0.7, 0.5], 1).unwrap();
        let mut rec = RunRecord::new(&inst);
        assert!(rec.is_empty());
        rec.record_round(&inst, &act(&[2]), Duration::from_micros(3))
            .unwrap();
        assert_eq!(rec.len(), 1);
        rec.record_round(&inst, &act(&[1]), Duration::from_micros(5))
            .unwrap();
        assert!((rec.per_round_gap[0] - 0.4).abs() < 1e-15);
        assert!((rec.cumulative_regret[1] - 0.6).abs() < 1e-15);
        assert_eq!(rec.wall_time_total, Duration::from_micros(8));
        assert!((rec.wall_time_per_round() - 4e-6).abs() < 1e-18);
    }

    #[test]
    fn optimal_play_has_zero_regret() {
        let inst = ProblemInstance::semi_bandit(vec![0.2, 0.8, 0.6, 0.1], 2).unwrap();
        let mut rec = RunRecord::new(&inst);
        for _ in 0..10 {
            rec.record_round(&inst, &act(&[2, 1]), Duration::ZERO)
                .unwrap();
        }
        assert!(rec.cumulative_regret.iter().all(|&r| r == 0.0));
    }
}
