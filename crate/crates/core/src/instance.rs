//! Problem instances, actions and the regret gap.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{CmabError, Real, Result};

/// What the player observes after pulling an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Every arm of the action is observed; reward is the sum of means.
    SemiBandit,
    /// Arms are examined until the first success; reward is the click
    /// probability `1 - prod(1 - mu_i)`.
    CascadeDisjunctive,
    /// Arms are examined until the first failure; reward is `prod(mu_i)`.
    CascadeConjunctive,
}

impl FeedbackMode {
    pub fn is_cascade(self) -> bool {
        !matches!(self, FeedbackMode::SemiBandit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackMode::SemiBandit => "semi_bandit",
            FeedbackMode::CascadeDisjunctive => "cascade_disjunctive",
            FeedbackMode::CascadeConjunctive => "cascade_conjunctive",
        }
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackMode {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_bandit" => Ok(FeedbackMode::SemiBandit),
            "cascade_disjunctive" => Ok(FeedbackMode::CascadeDisjunctive),
            "cascade_conjunctive" => Ok(FeedbackMode::CascadeConjunctive),
            other => Err(CmabError::input(format!(
                "unknown feedback mode `{other}` (expected semi_bandit, cascade_disjunctive or cascade_conjunctive)"
            ))),
        }
    }
}

/// Order in which a cascading user examines the arms of an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExaminationOrder {
    /// Highest true mean first.
    Descending,
    /// Lowest true mean first.
    Ascending,
    /// The order in which the policy listed the arms.
    AsGiven,
}

impl ExaminationOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            ExaminationOrder::Descending => "descending",
            ExaminationOrder::Ascending => "ascending",
            ExaminationOrder::AsGiven => "as_given",
        }
    }
}

impl fmt::Display for ExaminationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExaminationOrder {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "descending" => Ok(ExaminationOrder::Descending),
            "ascending" => Ok(ExaminationOrder::Ascending),
            "as_given" => Ok(ExaminationOrder::AsGiven),
            other => Err(CmabError::input(format!(
                "unknown examination order `{other}` (expected descending, ascending or as_given)"
            ))),
        }
    }
}

/// What a disjunctive cascade reveals when no examined arm succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoClickRule {
    /// Nothing is observed and the learner's state is left untouched.
    #[default]
    NoOp,
    /// Every examined arm is observed with outcome 0, as in the classical
    /// cascade model.
    ObserveZeros,
}

impl NoClickRule {
    pub fn as_str(self) -> &'static str {
        match self {
            NoClickRule::NoOp => "no_op",
            NoClickRule::ObserveZeros => "observe_zeros",
        }
    }
}

impl fmt::Display for NoClickRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoClickRule {
    type Err = CmabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_op" => Ok(NoClickRule::NoOp),
            "observe_zeros" => Ok(NoClickRule::ObserveZeros),
            other => Err(CmabError::input(format!(
                "unknown no-click rule `{other}` (expected no_op or observe_zeros)"
            ))),
        }
    }
}

/// An ordered set of distinct arm indices played in one round.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    arms: Vec<usize>,
}

impl Action {
    /// Builds an action, rejecting empty lists and duplicate arms.
    pub fn new(arms: Vec<usize>) -> Result<Self> {
        if arms.is_empty() {
            return Err(CmabError::input("an action must contain at least one arm"));
        }
        let mut sorted = arms.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(CmabError::input(format!(
                "duplicate arm in action {arms:?}"
            )));
        }
        Ok(Action { arms })
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.arms.contains(&arm)
    }

    /// The arms in ascending index order.
    pub fn sorted_arms(&self) -> Vec<usize> {
        let mut arms = self.arms.clone();
        arms.sort_unstable();
        arms
    }

    /// Same arm set, ignoring order.
    pub fn same_set(&self, other: &Action) -> bool {
        self.sorted_arms() == other.sorted_arms()
    }
}

/// Outcomes revealed in one round: the triggered arms and their Bernoulli
/// draws.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Feedback {
    pub observed: Vec<(usize, bool)>,
}

impl Feedback {
    pub fn new(observed: Vec<(usize, bool)>) -> Self {
        Feedback { observed }
    }

    /// No arm was triggered.
    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// The triggered set.
    pub fn triggered(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed.iter().map(|&(arm, _)| arm)
    }

    pub fn outcome(&self, arm: usize) -> Option<bool> {
        self.observed
            .iter()
            .find(|&&(a, _)| a == arm)
            .map(|&(_, x)| x)
    }

    /// Checks the feedback against the action that produced it.
    pub fn validate(&self, action: &Action) -> Result<()> {
        let mut seen = Vec::with_capacity(self.observed.len());
        for &(arm, _) in &self.observed {
            if !action.contains(arm) {
                return Err(CmabError::input(format!(
                    "feedback reports arm {arm} which was not played"
                )));
            }
            if seen.contains(&arm) {
                return Err(CmabError::input(format!("arm {arm} observed twice")));
            }
            seen.push(arm);
        }
        Ok(())
    }
}

/// Ground truth of a cardinality-constrained combinatorial bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<F> {
    means: Vec<F>,
    k: usize,
    feedback_mode: FeedbackMode,
    examination_order: ExaminationOrder,
    no_click: NoClickRule,
}

impl<F: Real> ProblemInstance<F> {
    pub fn new(
        means: Vec<F>,
        k: usize,
        feedback_mode: FeedbackMode,
        examination_order: ExaminationOrder,
    ) -> Result<Self> {
        let m = means.len();
        if m == 0 {
            return Err(CmabError::input("instance needs at least one arm"));
        }
        if k == 0 || k > m {
            return Err(CmabError::input(format!(
                "cardinality k={k} must satisfy 1 <= k <= m={m}"
            )));
        }
        if let Some((i, mu)) = means
            .iter()
            .enumerate()
            .find(|(_, &mu)| !(mu >= F::zero() && mu <= F::one()))
        {
            return Err(CmabError::input(format!(
                "mean of arm {i} is {mu}, outside [0, 1]"
            )));
        }
        Ok(ProblemInstance {
            means,
            k,
            feedback_mode,
            examination_order,
            no_click: NoClickRule::NoOp,
        })
    }

    pub fn with_no_click(mut self, rule: NoClickRule) -> Self {
        self.no_click = rule;
        self
    }

    /// Semi-bandit instance with the default (descending) examination order.
    pub fn semi_bandit(means: Vec<F>, k: usize) -> Result<Self> {
        Self::new(
            means,
            k,
            FeedbackMode::SemiBandit,
            ExaminationOrder::Descending,
        )
    }

    pub fn m(&self) -> usize {
        self.means.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn means(&self) -> &[F] {
        &self.means
    }

    pub fn feedback_mode(&self) -> FeedbackMode {
        self.feedback_mode
    }

    pub fn examination_order(&self) -> ExaminationOrder {
        self.examination_order
    }

    pub fn no_click(&self) -> NoClickRule {
        self.no_click
    }

    /// Rejects actions with out-of-range arms or more than `k` arms.
    pub fn validate_action(&self, action: &Action) -> Result<()> {
        if action.len() > self.k {
            return Err(CmabError::input(format!(
                "action has {} arms, cardinality budget is {}",
                action.len(),
                self.k
            )));
        }
        if let Some(&arm) = action.arms().iter().find(|&&a| a >= self.m()) {
            return Err(CmabError::input(format!(
                "arm index {arm} out of range for m={}",
                self.m()
            )));
        }
        Ok(())
    }

    /// Expected reward of `action` under the true means.
    pub fn reward_mean(&self, action: &Action) -> Result<F> {
        self.validate_action(action)?;
        Ok(reward_of(
            self.feedback_mode,
            &self.means,
            action.sorted_arms(),
        ))
    }

    /// The `k` arms with the largest true means, best first, lowest index on
    /// ties.
    pub fn optimal_action(&self) -> Action {
        Action {
            arms: top_k(&self.means, self.k),
        }
    }

    /// `r(A*) - r(A)`, clamped at zero so the optimum has gap exactly 0.
    pub fn gap(&self, action: &Action) -> Result<F> {
        let best = self.reward_mean(&self.optimal_action())?;
        let got = self.reward_mean(action)?;
        Ok((best - got).max(F::zero()))
    }
}

/// Reward of a set of arms under `scores` for the given feedback mode.
///
/// Arms are accumulated in the iteration order given; callers that need
/// order-independent bits pass them sorted.
pub fn reward_of<F: Real>(
    mode: FeedbackMode,
    scores: &[F],
    arms: impl IntoIterator<Item = usize>,
) -> F {
    let arms = arms.into_iter();
    match mode {
        FeedbackMode::SemiBandit => arms.fold(F::zero(), |acc, i| acc + scores[i]),
        FeedbackMode::CascadeDisjunctive => {
            F::one() - arms.fold(F::one(), |acc, i| acc * (F::one() - scores[i]))
        }
        FeedbackMode::CascadeConjunctive => arms.fold(F::one(), |acc, i| acc * scores[i]),
    }
}

/// Indices of the `k` largest scores, in descending score order, ties broken
/// by lowest index. Scores must not be NaN.
pub fn top_k<F: Real>(scores: &[F], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    if k == 0 {
        return Vec::new();
    }
    let by_score = |&a: &usize, &b: &usize| -> Ordering {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_score);
        idx.truncate(k);
    }
    idx.sort_unstable_by(by_score);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(means: &[f64], k: usize, mode: FeedbackMode) -> ProblemInstance<f64> {
        ProblemInstance::new(means.to_vec(), k, mode, ExaminationOrder::Descending).unwrap()
    }

    fn act(arms: &[usize]) -> Action {
        Action::new(arms.to_vec()).unwrap()
    }

    #[test]
    fn reward_means_per_mode() {
        let semi = inst(&[0.3, 0.4, 0.9], 2, FeedbackMode::SemiBandit);
        assert!((semi.reward_mean(&act(&[0, 1])).unwrap() - 0.7).abs() < 1e-15);

        let dis = inst(&[0.5, 0.5, 0.1], 2, FeedbackMode::CascadeDisjunctive);
        assert_eq!(dis.reward_mean(&act(&[0, 1])).unwrap(), 0.75);

        let con = inst(&[0.5, 0.5, 0.1], 2, FeedbackMode::CascadeConjunctive);
        assert_eq!(con.reward_mean(&act(&[0, 1])).unwrap(), 0.25);
    }

    #[test]
    fn reward_rejects_out_of_range_arm() {
        let semi = inst(&[0.3, 0.4, 0.9], 2, FeedbackMode::SemiBandit);
        assert!(matches!(
            semi.reward_mean(&act(&[0, 3])),
            Err(CmabError::Input(_))
        ));
        assert!(semi.reward_mean(&act(&[0, 1, 2])).is_err());
    }

    #[test]
    fn optimal_action_examples() {
        let a = inst(&[0.1, 0.9, 0.5, 0.7], 2, FeedbackMode::SemiBandit);
        assert_eq!(a.optimal_action().sorted_arms(), vec![1, 3]);
        let b = inst(&[0.5, 0.5, 0.5], 2, FeedbackMode::SemiBandit);
        assert_eq!(b.optimal_action().sorted_arms(), vec![0, 1]);
        let c = inst(&[0.03, 0.08, 0.01], 3, FeedbackMode::SemiBandit);
        assert_eq!(c.optimal_action().sorted_arms(), vec![0, 1, 2]);
    }

    #[test]
    fn gap_examples() {
        let a = inst(&[0.9, 0.5, 0.1], 1, FeedbackMode::SemiBandit);
        assert_eq!(a.gap(&a.optimal_action()).unwrap(), 0.0);
        assert!((a.gap(&act(&[2])).unwrap() - 0.8).abs() < 1e-15);
        let d = inst(&[0.9, 0.5, 0.1], 1, FeedbackMode::CascadeDisjunctive);
        assert!((d.gap(&act(&[1])).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn gap_is_zero_for_reordered_optimum() {
        let a = inst(&[0.11, 0.37, 0.73, 0.19, 0.59], 3, FeedbackMode::SemiBandit);
        let mut arms = a.optimal_action().arms().to_vec();
        arms.reverse();
        assert_eq!(a.gap(&Action::new(arms).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn instance_validation() {
        assert!(ProblemInstance::semi_bandit(vec![0.5, 1.2], 1).is_err());
        assert!(ProblemInstance::semi_bandit(vec![0.5, f64::NAN], 1).is_err());
        assert!(ProblemInstance::semi_bandit(vec![0.5, 0.2], 0).is_err());
        assert!(ProblemInstance::semi_bandit(vec![0.5, 0.2], 3).is_err());
        assert!(ProblemInstance::semi_bandit(Vec::<f64>::new(), 1).is_err());
    }

    #[test]
    fn action_rejects_duplicates_and_empty() {
        assert!(Action::new(vec![1, 2, 1]).is_err());
        assert!(Action::new(vec![]).is_err());
    }

    #[test]
    fn feedback_validation() {
        let a = act(&[0, 2]);
        assert!(Feedback::new(vec![(0, true), (2, false)])
            .validate(&a)
            .is_ok());
        assert!(Feedback::new(vec![(1, true)]).validate(&a).is_err());
        assert!(Feedback::new(vec![(0, true), (0, false)])
            .validate(&a)
            .is_err());
    }

    #[test]
    fn top_k_orders_by_score_then_index() {
        assert_eq!(top_k(&[0.2, 0.9, 0.2, 0.9, 0.1], 3), vec![1, 3, 0]);
        assert_eq!(top_k(&[1.0f32, 1.0, 1.0], 2), vec![0, 1]);
    }

    #[test]
    fn works_in_f32() {
        let a = ProblemInstance::<f32>::semi_bandit(vec![0.1, 0.9, 0.5, 0.7], 2).unwrap();
        assert_eq!(a.optimal_action().sorted_arms(), vec![1, 3]);
        assert!((a.gap(&act(&[0, 2])).unwrap() - 1.0).abs() < 1e-6);
    }
}
