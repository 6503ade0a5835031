//! Empirical joint distributions over composed signals and states.

use serde::Serialize;

use crate::dataset::EvaluationDataset;
use crate::decision::{Belief, DecisionTask};
use crate::error::{Error, Result};
use crate::signal::{ColumnCoder, Observations, SignalKey, SignalSpec};

/// Discrete joint `p(v, s)` with its state marginal.
///
/// Only signals with positive mass are stored; looking up any other signal
/// yields the prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalJoint {
    spec: SignalSpec,
    /// Sorted ascending.
    keys: Vec<SignalKey>,
    /// Unnormalized weights per (signal, state): counts plus smoothing.
    weights: Vec<Vec<f64>>,
    total: f64,
    n: usize,
    prior: Belief,
    alpha: f64,
}

impl EmpiricalJoint {
    /// Counts `(signal, state)` pairs over `split` (all records when `None`).
    /// Indices may repeat, as in a bootstrap resample. `alpha` is a Laplace
    /// constant added to every cell of every observed signal.
    pub fn fit(obs: &Observations, split: Option<&[usize]>, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("smoothing constant {alpha} must be >= 0")));
        }
        let n_states = obs.n_states();
        let mut dense = vec![vec![0.0f64; n_states]; obs.keys().len()];
        let mut n = 0usize;
        let mut tally = |i: usize| {
            dense[obs.signals()[i]][obs.states()[i]] += 1.0;
            n += 1;
        };
        match split {
            Some(idx) => {
                for &i in idx {
                    if i >= obs.len() {
                        return Err(Error::Config(format!("split index {i} out of range")));
                    }
                    tally(i);
                }
            }
            None => (0..obs.len()).for_each(&mut tally),
        }
        if n == 0 {
            return Err(Error::EmptySplit);
        }
        let mut keys = Vec::new();
        let mut weights = Vec::new();
        for (key, row) in obs.keys().iter().zip(dense) {
            if row.iter().any(|&c| c > 0.0) {
                keys.push(key.clone());
                weights.push(row.into_iter().map(|c| c + alpha).collect::<Vec<_>>());
            }
        }
        Self::assemble(obs.spec().clone(), keys, weights, n, alpha)
    }

    /// Builds a joint from exact probability masses, e.g. an enumerated model.
    pub fn from_masses(spec: SignalSpec, entries: Vec<(SignalKey, Vec<f64>)>) -> Result<Self> {
        let mut entries: Vec<(SignalKey, Vec<f64>)> = entries
            .into_iter()
            .filter(|(_, row)| row.iter().any(|&m| m > 0.0))
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Invariant(format!("duplicate signal {:?}", w[0].0)));
            }
        }
        if entries.is_empty() {
            return Err(Error::EmptySplit);
        }
        let n_states = entries[0].1.len();
        if entries.iter().any(|(_, r)| r.len() != n_states || r.iter().any(|m| !(*m >= 0.0))) {
            return Err(Error::InvalidStochastic("joint masses malformed".into()));
        }
        let (keys, weights): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Self::assemble(spec, keys, weights, 0, 0.0)
    }

    fn assemble(spec: SignalSpec, keys: Vec<SignalKey>, weights: Vec<Vec<f64>>, n: usize, alpha: f64) -> Result<Self> {
        let n_states = weights[0].len();
        let mut state_totals = vec![0.0; n_states];
        for row in &weights {
            for (t, w) in state_totals.iter_mut().zip(row) {
                *t += w;
            }
        }
        let total: f64 = state_totals.iter().sum();
        let prior = Belief::from_weights(&state_totals)?;
        Ok(Self {
            spec,
            keys,
            weights,
            total,
            n,
            prior,
            alpha,
        })
    }

    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    pub fn keys(&self) -> &[SignalKey] {
        &self.keys
    }

    pub fn n_signals(&self) -> usize {
        self.keys.len()
    }

    pub fn n_states(&self) -> usize {
        self.prior.len()
    }

    /// Number of records counted (0 for joints built from masses).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    pub fn counts(&self, signal: usize) -> &[f64] {
        &self.weights[signal]
    }

    /// `p(v, s)`.
    pub fn mass(&self, signal: usize, state: usize) -> f64 {
        self.weights[signal][state] / self.total
    }

    /// `p(v)`.
    pub fn signal_mass(&self, signal: usize) -> f64 {
        self.weights[signal].iter().sum::<f64>() / self.total
    }

    /// `p(· | v)`.
    pub fn posterior(&self, signal: usize) -> Belief {
        Belief::from_weights(&self.weights[signal]).expect("stored signals have positive mass")
    }

    pub fn find(&self, key: &SignalKey) -> Option<usize> {
        self.keys.binary_search(key).ok()
    }

    /// Posterior for `key`, or the prior when the signal was never observed.
    pub fn posterior_for(&self, key: &SignalKey) -> Belief {
        match self.find(key) {
            Some(i) => self.posterior(i),
            None => self.prior.clone(),
        }
    }

    pub(crate) fn check_task(&self, task: &DecisionTask) -> Result<()> {
        if self.n_states() != task.n_states() {
            return Err(Error::StateMismatch {
                joint: self.n_states(),
                task: task.n_states(),
            });
        }
        Ok(())
    }
}

/// Composes `spec` over `dataset` and fits the joint on `split`.
pub fn fit_joint(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    spec: &SignalSpec,
    coder: Option<&dyn ColumnCoder>,
    split: Option<&[usize]>,
) -> Result<EmpiricalJoint> {
    let obs = Observations::compose(dataset, spec, coder, task)?;
    EmpiricalJoint::fit(&obs, split, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(pairs: &[(&str, usize)]) -> Observations {
        let keys = pairs.iter().map(|(k, _)| vec![k.to_string()]).collect();
        let states = pairs.iter().map(|(_, s)| *s).collect();
        Observations::from_keys(SignalSpec::empty(), keys, states, 2).unwrap()
    }

    #[test]
    fn hand_counted_posteriors() {
        let o = obs(&[("a", 0), ("a", 0), ("a", 1), ("b", 1)]);
        let j = EmpiricalJoint::fit(&o, None, 0.0).unwrap();
        let a = j.find(&vec!["a".into()]).unwrap();
        let b = j.find(&vec!["b".into()]).unwrap();
        assert!((j.posterior(a).get(1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(j.posterior(b).get(1), 1.0);
        assert_eq!(j.prior().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn single_signal_posterior_is_prior() {
        let o = obs(&[("a", 0), ("a", 1), ("a", 1)]);
        let j = EmpiricalJoint::fit(&o, None, 0.0).unwrap();
        assert_eq!(&j.posterior(0), j.prior());
    }

    #[test]
    fn unseen_signal_falls_back_to_prior() {
        let o = obs(&[("a", 0), ("a", 1), ("b", 1)]);
        let j = EmpiricalJoint::fit(&o, Some(&[0, 1]), 0.0).unwrap();
        assert_eq!(j.n_signals(), 1);
        assert_eq!(&j.posterior_for(&vec!["b".into()]), j.prior());
        assert_eq!(&j.posterior_for(&vec!["zzz".into()]), j.prior());
    }

    #[test]
    fn empty_split_rejected() {
        let o = obs(&[("a", 0)]);
        assert!(matches!(EmpiricalJoint::fit(&o, Some(&[]), 0.0), Err(Error::EmptySplit)));
    }

    #[test]
    fn smoothing_pulls_toward_uniform() {
        let o = obs(&[("a", 1), ("a", 1)]);
        let j = EmpiricalJoint::fit(&o, None, 1.0).unwrap();
        assert!((j.posterior(0).get(1) - 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn prior_is_exact_state_frequency(pairs in proptest::collection::vec((0u8..5, 0usize..3), 1..200)) {
            let keys = pairs.iter().map(|(k, _)| vec![k.to_string()]).collect();
            let states: Vec<usize> = pairs.iter().map(|(_, s)| *s).collect();
            let o = Observations::from_keys(SignalSpec::empty(), keys, states.clone(), 3).unwrap();
            let j = EmpiricalJoint::fit(&o, None, 0.0).unwrap();
            let n = states.len() as f64;
            for s in 0..3 {
                let freq = states.iter().filter(|&&x| x == s).count() as f64 / n;
                prop_assert_eq!(j.prior().get(s), freq);
            }
            let total: f64 = (0..j.n_signals()).flat_map(|v| (0..3).map(move |s| (v, s))).map(|(v, s)| j.mass(v, s)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
