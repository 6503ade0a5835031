//! Rational-agent benchmark, baseline and value of information.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decision::{Belief, DecisionTask};
use crate::error::{Error, Result};
use crate::joint::EmpiricalJoint;
use crate::numeric::CompensatedSum;
use crate::signal::{SignalKey, SignalSpec};

/// Decision of the rational agent on one signal value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalDecision {
    pub signal: SignalKey,
    pub mass: f64,
    pub posterior: Belief,
    pub action: String,
    pub conditional_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub spec: SignalSpec,
    pub value: f64,
    pub per_signal: Vec<SignalDecision>,
}

/// `R_V = E_v[max_a E_{s|v} u(a, s)]`, exact over the discrete joint.
pub fn rational_benchmark(joint: &EmpiricalJoint, task: &DecisionTask) -> Result<BenchmarkResult> {
    joint.check_task(task)?;
    let mut acc = CompensatedSum::new();
    let per_signal = (0..joint.n_signals())
        .map(|v| {
            let posterior = joint.posterior(v);
            let action = task.best_response_index(&posterior);
            let conditional_utility = task.expected_utility_at(action, &posterior);
            let mass = joint.signal_mass(v);
            acc.add(mass * conditional_utility);
            SignalDecision {
                signal: joint.keys()[v].clone(),
                mass,
                posterior,
                action: task.actions()[action].clone(),
                conditional_utility,
            }
        })
        .collect();
    Ok(BenchmarkResult {
        spec: joint.spec().clone(),
        value: acc.value(),
        per_signal,
    })
}

/// Benchmark value only, without the per-signal table.
pub fn rational_value(joint: &EmpiricalJoint, task: &DecisionTask) -> Result<f64> {
    joint.check_task(task)?;
    let mut acc = CompensatedSum::new();
    for v in 0..joint.n_signals() {
        acc.add(joint.signal_mass(v) * task.best_expected_utility(&joint.posterior(v)));
    }
    Ok(acc.value())
}

/// `R_∅ = max_a E_{s~prior}[u(a, s)]`.
pub fn rational_baseline(joint: &EmpiricalJoint, task: &DecisionTask) -> Result<f64> {
    joint.check_task(task)?;
    Ok(task.best_expected_utility(joint.prior()))
}

/// `R_V − R_∅`.
pub fn value_of_information(joint: &EmpiricalJoint, task: &DecisionTask) -> Result<f64> {
    Ok(rational_value(joint, task)? - rational_baseline(joint, task)?)
}

/// `E_{(v,s)}[u(policy(v), s)]` for a deterministic signal-to-action policy.
pub fn evaluate_policy(
    joint: &EmpiricalJoint,
    task: &DecisionTask,
    policy: &BTreeMap<SignalKey, String>,
) -> Result<f64> {
    joint.check_task(task)?;
    let mut acc = CompensatedSum::new();
    for (v, key) in joint.keys().iter().enumerate() {
        let label = policy
            .get(key)
            .ok_or_else(|| Error::MissingPolicy(format!("{key:?}")))?;
        let a = task.action_index(label)?;
        for s in 0..joint.n_states() {
            acc.add(joint.mass(v, s) * task.utility(a, s));
        }
    }
    Ok(acc.value())
}

/// Scores the rational agent that acts on `train` posteriors against the
/// frequencies of `eval`. Signals unseen in `train` use its prior.
pub fn heldout_value(train: &EmpiricalJoint, eval: &EmpiricalJoint, task: &DecisionTask) -> Result<f64> {
    train.check_task(task)?;
    eval.check_task(task)?;
    let mut acc = CompensatedSum::new();
    for (v, key) in eval.keys().iter().enumerate() {
        let a = task.best_response_index(&train.posterior_for(key));
        for s in 0..eval.n_states() {
            acc.add(eval.mass(v, s) * task.utility(a, s));
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Observations;

    fn two_signal_joint() -> EmpiricalJoint {
        EmpiricalJoint::from_masses(
            SignalSpec::empty(),
            vec![
                (vec!["a".into()], vec![0.4, 0.1]),
                (vec!["b".into()], vec![0.1, 0.4]),
            ],
        )
        .unwrap()
    }

    fn acc() -> DecisionTask {
        DecisionTask::accuracy(2).unwrap()
    }

    fn all_policies(keys: &[SignalKey], n_actions: usize) -> Vec<BTreeMap<SignalKey, String>> {
        let total = n_actions.pow(keys.len() as u32);
        (0..total)
            .map(|mut code| {
                keys.iter()
                    .map(|k| {
                        let a = code % n_actions;
                        code /= n_actions;
                        (k.clone(), a.to_string())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn two_signal_benchmark_matches_brute_force() {
        let j = two_signal_joint();
        let policies = all_policies(j.keys(), 2);
        let values: Vec<f64> = policies.iter().map(|p| evaluate_policy(&j, &acc(), p).unwrap()).collect();
        let best = values.iter().cloned().fold(f64::MIN, f64::max);
        let worst = values.iter().cloned().fold(f64::MAX, f64::min);
        assert!((best - 0.8).abs() < 1e-12);
        assert!((worst - 0.2).abs() < 1e-12);
        let r = rational_benchmark(&j, &acc()).unwrap();
        assert!((r.value - 0.8).abs() < 1e-12);
        assert!((value_of_information(&j, &acc()).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn per_signal_table_sums_to_value() {
        let j = two_signal_joint();
        let r = rational_benchmark(&j, &acc()).unwrap();
        let s: f64 = r.per_signal.iter().map(|d| d.mass * d.conditional_utility).sum();
        assert!((s - r.value).abs() < 1e-12);
        assert_eq!(r.per_signal[0].action, "0");
        assert_eq!(r.per_signal[1].action, "1");
    }

    #[test]
    fn uninformative_and_revealing_signals() {
        let flat = EmpiricalJoint::from_masses(
            SignalSpec::empty(),
            vec![(vec!["a".into()], vec![0.25, 0.25]), (vec!["b".into()], vec![0.25, 0.25])],
        )
        .unwrap();
        assert_eq!(rational_value(&flat, &acc()).unwrap(), rational_baseline(&flat, &acc()).unwrap());
        assert_eq!(value_of_information(&flat, &acc()).unwrap(), 0.0);

        let reveal = EmpiricalJoint::from_masses(
            SignalSpec::empty(),
            vec![(vec!["a".into()], vec![0.5, 0.0]), (vec!["b".into()], vec![0.0, 0.5])],
        )
        .unwrap();
        assert_eq!(rational_value(&reveal, &acc()).unwrap(), 1.0);
        assert_eq!(value_of_information(&reveal, &acc()).unwrap(), 0.5);
    }

    #[test]
    fn baseline_examples() {
        let med = DecisionTask::medical(0.5).unwrap();
        let with_prior = |p1: f64| {
            EmpiricalJoint::from_masses(SignalSpec::empty(), vec![(vec![], vec![1.0 - p1, p1])]).unwrap()
        };
        assert_eq!(rational_baseline(&with_prior(0.5), &acc()).unwrap(), 0.5);
        assert_eq!(rational_baseline(&with_prior(0.3), &med).unwrap(), 0.5);
        assert!((rational_baseline(&with_prior(0.8), &med).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn policy_examples() {
        let j = two_signal_joint();
        let rational: BTreeMap<SignalKey, String> = rational_benchmark(&j, &acc())
            .unwrap()
            .per_signal
            .into_iter()
            .map(|d| (d.signal, d.action))
            .collect();
        assert!((evaluate_policy(&j, &acc(), &rational).unwrap() - 0.8).abs() < 1e-12);
        let constant: BTreeMap<SignalKey, String> = j.keys().iter().map(|k| (k.clone(), "0".to_string())).collect();
        assert!((evaluate_policy(&j, &acc(), &constant).unwrap() - rational_baseline(&j, &acc()).unwrap()).abs() < 1e-12);
        let mut partial = constant.clone();
        partial.remove(&vec!["b".to_string()]);
        assert!(matches!(evaluate_policy(&j, &acc(), &partial), Err(Error::MissingPolicy(_))));
    }

    #[test]
    fn state_mismatch_is_an_error() {
        let j = two_signal_joint();
        let t3 = DecisionTask::accuracy(3).unwrap();
        assert!(matches!(rational_benchmark(&j, &t3), Err(Error::StateMismatch { .. })));
    }

    #[test]
    fn heldout_uses_train_posteriors() {
        let keys = vec![vec!["a".to_string()], vec!["a".to_string()], vec!["b".to_string()], vec!["a".to_string()]];
        let obs = Observations::from_keys(SignalSpec::empty(), keys, vec![1, 1, 0, 0], 2).unwrap();
        let train = EmpiricalJoint::fit(&obs, Some(&[0, 1]), 0.0).unwrap();
        let test = EmpiricalJoint::fit(&obs, Some(&[2, 3]), 0.0).unwrap();
        // train says "a" -> 1 and falls back to the prior (all 1) for "b"; both test states are 0.
        assert_eq!(heldout_value(&train, &test, &acc()).unwrap(), 0.0);
    }
}
