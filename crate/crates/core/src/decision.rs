//! Finite decision tasks, best responses and their scoring-rule forms.
//!
//! A [`DecisionTask`] is an ordered list of actions, an ordered list of
//! states and a payoff table `u(a, s)`. Everything downstream indexes actions
//! and states by position; labels exist for I/O only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that a belief sums to one.
pub const BELIEF_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTask", into = "RawTask")]
pub struct DecisionTask {
    actions: Vec<String>,
    states: Vec<String>,
    /// Row per action, column per state.
    utility: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawTask {
    actions: Vec<String>,
    states: Vec<String>,
    utility: Vec<Vec<f64>>,
}

impl TryFrom<RawTask> for DecisionTask {
    type Error = Error;

    fn try_from(raw: RawTask) -> Result<Self> {
        DecisionTask::new(raw.actions, raw.states, raw.utility)
    }
}

impl From<DecisionTask> for RawTask {
    fn from(t: DecisionTask) -> Self {
        RawTask {
            actions: t.actions,
            states: t.states,
            utility: t.utility,
        }
    }
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidTask(format!("{kind} list is empty")));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::InvalidTask(format!("duplicate {kind} label `{l}`")));
        }
    }
    Ok(())
}

impl DecisionTask {
    pub fn new(actions: Vec<String>, states: Vec<String>, utility: Vec<Vec<f64>>) -> Result<Self> {
        check_labels("action", &actions)?;
        check_labels("state", &states)?;
        if utility.len() != actions.len() {
            return Err(Error::InvalidTask(format!(
                "utility has {} rows for {} actions",
                utility.len(),
                actions.len()
            )));
        }
        for (a, row) in utility.iter().enumerate() {
            if row.len() != states.len() {
                return Err(Error::InvalidTask(format!(
                    "utility row for `{}` has {} entries for {} states",
                    actions[a],
                    row.len(),
                    states.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidTask(format!(
                    "non-finite utility {v} for action `{}`",
                    actions[a]
                )));
            }
        }
        Ok(Self {
            actions,
            states,
            utility,
        })
    }

    /// Example medical task: action `1` is a biopsy paying 1 if the disease
    /// is present and 0 otherwise; action `0` pays `eps` regardless.
    pub fn medical(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidTask(format!("eps {eps} must lie in (0, 1)")));
        }
        Self::new(
            vec!["0".into(), "1".into()],
            vec!["0".into(), "1".into()],
            vec![vec![eps, eps], vec![0.0, 1.0]],
        )
    }

    /// Classification accuracy over `n` classes labelled `0..n`: u(a, s) = 1{a = s}.
    pub fn accuracy(n: usize) -> Result<Self> {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let utility = (0..n)
            .map(|a| (0..n).map(|s| if a == s { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(labels.clone(), labels, utility)
    }

    /// Resolves a preset name: `medical`, `medical:<eps>`, `accuracy`, `accuracy:<n>`.
    pub fn preset(name: &str) -> Result<Self> {
        let (base, arg) = match name.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (name, None),
        };
        let bad = |a: &str| Error::InvalidTask(format!("bad preset argument `{a}` in `{name}`"));
        match base {
            "medical" => {
                let eps = match arg {
                    Some(a) => a.parse::<f64>().map_err(|_| bad(a))?,
                    None => 0.5,
                };
                Self::medical(eps)
            }
            "accuracy" => {
                let n = match arg {
                    Some(a) => a.parse::<usize>().map_err(|_| bad(a))?,
                    None => 2,
                };
                Self::accuracy(n)
            }
            _ => Err(Error::InvalidTask(format!("unknown preset `{name}`"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Loads a task from a JSON file, or resolves a preset name when no such
    /// file exists.
    pub fn load(path_or_preset: &str) -> Result<Self> {
        let path = Path::new(path_or_preset);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Self::from_json_str(&text)
        } else {
            Self::preset(path_or_preset)
        }
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn utility(&self, action: usize, state: usize) -> f64 {
        self.utility[action][state]
    }

    pub fn utility_table(&self) -> &[Vec<f64>] {
        &self.utility
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownAction(label.to_string()))
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    fn check_belief(&self, belief: &Belief) -> Result<()> {
        if belief.len() != self.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                got: belief.len(),
            });
        }
        Ok(())
    }

    /// `E_{s ~ belief}[u(action, s)]` by action index.
    pub fn expected_utility_at(&self, action: usize, belief: &Belief) -> f64 {
        self.utility[action]
            .iter()
            .zip(belief.probs())
            .map(|(u, p)| u * p)
            .sum()
    }

    pub fn expected_utility(&self, action: &str, belief: &Belief) -> Result<f64> {
        let a = self.action_index(action)?;
        self.check_belief(belief)?;
        Ok(self.expected_utility_at(a, belief))
    }

    /// Index of the utility-maximizing action; ties go to the lowest index.
    pub fn best_response_index(&self, belief: &Belief) -> usize {
        let mut best = 0;
        let mut best_value = self.expected_utility_at(0, belief);
        for a in 1..self.n_actions() {
            let v = self.expected_utility_at(a, belief);
            if v > best_value {
                best = a;
                best_value = v;
            }
        }
        best
    }

    pub fn best_response(&self, belief: &Belief) -> Result<&str> {
        self.check_belief(belief)?;
        Ok(&self.actions[self.best_response_index(belief)])
    }

    /// The payoff of best-responding to `belief`: `max_a E_{s~belief}[u(a, s)]`.
    pub fn best_expected_utility(&self, belief: &Belief) -> f64 {
        self.expected_utility_at(self.best_response_index(belief), belief)
    }

    pub fn to_proper_scoring_rule(&self) -> ProperScoringRule {
        ProperScoringRule { task: self.clone() }
    }
}

/// A probability vector over the task's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

impl Belief {
    /// Validates entries in `[0, 1]` summing to one within
    /// [`BELIEF_TOLERANCE`], then renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("no states".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p))) {
            return Err(Error::InvalidBelief(format!("entry {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > BELIEF_TOLERANCE {
            return Err(Error::InvalidBelief(format!("entries sum to {total}")));
        }
        Ok(Self(probs.into_iter().map(|p| p / total).collect()))
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidBelief(format!(
                "weights {weights:?} cannot be normalized"
            )));
        }
        Ok(Self(weights.iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        Self(v)
    }

    /// Binary belief with `p(s = 1) = p1`.
    pub fn binary(p1: f64) -> Result<Self> {
        Self::new(vec![1.0 - p1, p1])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }
}

/// The proper scoring rule induced by a task: `û(p, s) = u(argmax_a E_p[u(a, ·)], s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProperScoringRule {
    task: DecisionTask,
}

impl ProperScoringRule {
    pub fn task(&self) -> &DecisionTask {
        &self.task
    }

    pub fn score(&self, report: &Belief, state: usize) -> f64 {
        self.task
            .utility(self.task.best_response_index(report), state)
    }

    /// `E_{s~truth}[û(report, s)]`.
    pub fn expected_score(&self, report: &Belief, truth: &Belief) -> f64 {
        self.task
            .expected_utility_at(self.task.best_response_index(report), truth)
    }
}

/// Binary V-shaped scoring rule with kink `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VShapedRule {
    mu: f64,
}

impl VShapedRule {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidKink(mu));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Score of reporting `p = P(s = 1)` when the realized state is `state`.
    ///
    /// For `mu <= 1/2` this is the piecewise-linear rule with the lower branch
    /// taken at `p <= mu`. For `mu > 1/2` the rule is mirrored through both
    /// the report and the state, `u_mu(p, s) = u_{1-mu}(1 - p, 1 - s)`.
    pub fn score(&self, report: f64, state: bool) -> Result<f64> {
        if !(0.0..=1.0).contains(&report) {
            return Err(Error::ReportOutOfRange(report));
        }
        Ok(self.score_unchecked(report, state))
    }

    pub(crate) fn score_unchecked(&self, report: f64, state: bool) -> f64 {
        if self.mu <= 0.5 {
            kinked(self.mu, report, state)
        } else {
            kinked(1.0 - self.mu, 1.0 - report, !state)
        }
    }

    /// `E_{s~Bern(truth)}[u_mu(report, s)]`.
    pub fn expected_score(&self, report: f64, truth: f64) -> f64 {
        (1.0 - truth) * self.score_unchecked(report, false)
            + truth * self.score_unchecked(report, true)
    }
}

fn kinked(mu: f64, p: f64, state: bool) -> f64 {
    let s = if state { 1.0 } else { 0.0 };
    let slope = 0.5 * (s - mu) / (1.0 - mu);
    if p <= mu {
        0.5 - slope
    } else {
        0.5 + slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn med() -> DecisionTask {
        DecisionTask::medical(0.5).unwrap()
    }

    #[test]
    fn medical_expected_utility() {
        let b = Belief::binary(0.7).unwrap();
        assert!((med().expected_utility("1", &b).unwrap() - 0.7).abs() < 1e-15);
        for p in [0.0, 0.3, 0.9] {
            let b = Belief::binary(p).unwrap();
            assert_eq!(med().expected_utility("0", &b).unwrap(), 0.5);
        }
    }

    #[test]
    fn accuracy_uniform_is_half() {
        let t = DecisionTask::accuracy(2).unwrap();
        let u = Belief::uniform(2);
        assert_eq!(t.expected_utility("0", &u).unwrap(), 0.5);
        assert_eq!(t.expected_utility("1", &u).unwrap(), 0.5);
    }

    #[test]
    fn expected_utility_errors() {
        let t = med();
        assert!(matches!(
            t.expected_utility("2", &Belief::uniform(2)),
            Err(Error::UnknownAction(_))
        ));
        assert!(matches!(
            t.expected_utility("1", &Belief::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn best_response_examples() {
        let t = med();
        assert_eq!(t.best_response(&Belief::binary(0.7).unwrap()).unwrap(), "1");
        assert_eq!(t.best_response(&Belief::binary(0.5).unwrap()).unwrap(), "0");
        let acc = DecisionTask::accuracy(3).unwrap();
        for s in 0..3 {
            let b = Belief::point_mass(3, s);
            assert_eq!(acc.best_response(&b).unwrap(), s.to_string());
        }
    }

    #[test]
    fn medical_scoring_rule_examples() {
        let rule = med().to_proper_scoring_rule();
        let r03 = Belief::binary(0.3).unwrap();
        let r07 = Belief::binary(0.7).unwrap();
        assert_eq!(rule.score(&r03, 0), 0.5);
        assert_eq!(rule.score(&r07, 1), 1.0);
        assert_eq!(rule.score(&r03, 1), 0.5);
    }

    #[test]
    fn v_shaped_examples() {
        let half = VShapedRule::new(0.5).unwrap();
        assert_eq!(half.score(0.7, true).unwrap(), 1.0);
        assert_eq!(half.score(0.3, true).unwrap(), 0.0);
        let quarter = VShapedRule::new(0.25).unwrap();
        assert!((quarter.score(0.1, false).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn v_shaped_half_is_thresholded_accuracy() {
        let half = VShapedRule::new(0.5).unwrap();
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let predict_one = p > 0.5;
            for s in [false, true] {
                let expected = if predict_one == s { 1.0 } else { 0.0 };
                assert_eq!(half.score(p, s).unwrap(), expected);
            }
        }
    }

    #[test]
    fn v_shaped_rejects_bad_inputs() {
        assert!(VShapedRule::new(0.0).is_err());
        assert!(VShapedRule::new(1.0).is_err());
        let r = VShapedRule::new(0.3).unwrap();
        assert!(matches!(r.score(1.2, true), Err(Error::ReportOutOfRange(_))));
    }

    #[test]
    fn v_shaped_scores_in_unit_interval() {
        for m in 1..100 {
            let r = VShapedRule::new(m as f64 / 100.0).unwrap();
            for i in 0..=100 {
                for s in [false, true] {
                    let v = r.score(i as f64 / 100.0, s).unwrap();
                    assert!((0.0..=1.0).contains(&v), "mu={} p={} v={v}", r.mu(), i);
                }
            }
        }
    }

    #[test]
    fn task_validation() {
        assert!(DecisionTask::new(vec![], vec!["0".into()], vec![]).is_err());
        assert!(DecisionTask::new(
            vec!["a".into(), "a".into()],
            vec!["0".into()],
            vec![vec![1.0], vec![1.0]]
        )
        .is_err());
        assert!(DecisionTask::new(vec!["a".into()], vec!["0".into()], vec![vec![f64::NAN]]).is_err());
        assert!(DecisionTask::new(vec!["a".into()], vec!["0".into(), "1".into()], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn task_json_roundtrip() {
        let json = r#"{"actions":["0","1"],"states":["0","1"],"utility":[[0.5,0.5],[0.0,1.0]]}"#;
        let t = DecisionTask::from_json_str(json).unwrap();
        assert_eq!(t, med());
        assert_eq!(serde_json::to_string(&t).unwrap(), json);
        assert!(DecisionTask::from_json_str(r#"{"actions":["0"],"states":["0","0"],"utility":[[1,1]]}"#).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(DecisionTask::preset("medical").unwrap(), med());
        assert_eq!(DecisionTask::preset("medical:0.25").unwrap().utility(0, 1), 0.25);
        assert_eq!(DecisionTask::preset("accuracy:3").unwrap().n_states(), 3);
        assert!(DecisionTask::preset("nope").is_err());
        assert!(DecisionTask::preset("medical:2").is_err());
    }

    #[test]
    fn belief_validation_renormalizes() {
        let b = Belief::new(vec![0.3, 0.7 + 5e-10]).unwrap();
        assert!((b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Belief::new(vec![0.3, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
    }
}
