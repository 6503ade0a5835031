//! Percentile bootstrap over evaluation records.
//!
//! Signals are composed once (coarsening fixed) and each replicate only
//! re-counts a resampled index vector. Replicate `b` draws from its own
//! ChaCha8 stream seeded by `(seed, b)`, so results do not depend on thread
//! scheduling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::EvaluationDataset;
use crate::decision::DecisionTask;
use crate::error::{Error, Result};
use crate::estimands::{behavioral_value_against, BehavioralValue, Interval, Quantity, ValueEngine};
use crate::numeric::{compensated_sum, mix_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples == 0 {
            return Err(Error::Config("bootstrap needs at least one resample".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("bootstrap level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

fn replicate_rng(seed: u64, replicate: usize, stratum: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, &[replicate as u64, stratum]))
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_indices(n: usize, seed: u64, replicate: usize) -> Vec<usize> {
    let mut rng = replicate_rng(seed, replicate, 0);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Order-statistic endpoints `r[⌊B·α/2⌋]` and `r[⌈B·(1 − α/2)⌉ − 1]`.
///
/// Sorts `replicates` in place.
pub fn percentile_interval(replicates: &mut [f64], level: f64) -> (f64, f64) {
    assert!(!replicates.is_empty(), "no replicates");
    replicates.sort_by(f64::total_cmp);
    let b = replicates.len();
    let alpha = 1.0 - level;
    let lo = ((b as f64 * alpha / 2.0).floor() as usize).min(b - 1);
    let hi = ((b as f64 * (1.0 - alpha / 2.0)).ceil() as usize).clamp(1, b) - 1;
    (replicates[lo], replicates[hi.max(lo)])
}

/// Replicate values for each quantity, `[quantity][replicate]`.
pub fn replicates(engine: &ValueEngine, quantities: &[Quantity], config: &BootstrapConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let n = engine.n_records();
    let rows: Vec<Vec<f64>> = (0..config.n_resamples)
        .into_par_iter()
        .map(|b| engine.evaluate(quantities, Some(&resample_indices(n, config.seed, b))))
        .collect::<Result<_>>()?;
    Ok((0..quantities.len())
        .map(|q| rows.iter().map(|r| r[q]).collect())
        .collect())
}

/// Interval for each of `quantities`, resampling all of them jointly.
pub fn bootstrap_quantities(
    engine: &ValueEngine,
    quantities: &[Quantity],
    config: &BootstrapConfig,
) -> Result<BTreeMap<String, Interval>> {
    let points = engine.evaluate(quantities, None)?;
    let reps = replicates(engine, quantities, config)?;
    Ok(quantities
        .iter()
        .zip(points)
        .zip(reps)
        .map(|((q, point), mut r)| {
            let (low, high) = percentile_interval(&mut r, config.level);
            (
                q.name.clone(),
                Interval {
                    point,
                    low,
                    high,
                    level: config.level,
                    n_resamples: config.n_resamples,
                },
            )
        })
        .collect())
}

pub fn bootstrap_ci(engine: &ValueEngine, statistic: &str, config: &BootstrapConfig) -> Result<Interval> {
    let q: Quantity = statistic.parse()?;
    let mut out = bootstrap_quantities(engine, std::slice::from_ref(&q), config)?;
    Ok(out.remove(&q.name).expect("requested quantity"))
}

/// Intervals for every quantity the engine supports.
pub fn bootstrap_report(engine: &ValueEngine, config: &BootstrapConfig) -> Result<BTreeMap<String, Interval>> {
    bootstrap_quantities(engine, &engine.available_quantities(), config)
}

/// Behavioral Δ with an interval from resampling within each condition.
pub fn behavioral_with_ci(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    condition: &str,
    control: &str,
    config: &BootstrapConfig,
) -> Result<BehavioralValue> {
    config.validate()?;
    let mut value = behavioral_value_against(dataset, task, condition, control)?;
    let utilities = |label: &str| -> Result<Vec<f64>> {
        dataset
            .records()
            .iter()
            .filter(|r| r.condition.as_deref() == Some(label))
            .map(|r| {
                let a = r.human_action.as_deref().ok_or(Error::MissingHumanAction(1))?;
                Ok(task.utility(task.action_index(a)?, task.state_index(&r.state)?))
            })
            .collect()
    };
    let (with, without) = (utilities(condition)?, utilities(control)?);
    let mean = |u: &[f64], rng: &mut ChaCha8Rng| {
        compensated_sum((0..u.len()).map(|_| u[rng.random_range(0..u.len())])) / u.len() as f64
    };
    let mut reps: Vec<f64> = (0..config.n_resamples)
        .into_par_iter()
        .map(|b| {
            let b_with = mean(&with, &mut replicate_rng(config.seed, b, 1));
            let b_without = mean(&without, &mut replicate_rng(config.seed, b, 2));
            b_with - b_without
        })
        .collect();
    let (low, high) = percentile_interval(&mut reps, config.level);
    value.interval = Some(Interval {
        point: value.delta,
        low,
        high,
        level: config.level,
        n_resamples: config.n_resamples,
    });
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnValue, EvaluationRecord, WITHOUT_EXPLANATION, WITH_EXPLANATION};
    use crate::estimands::ColumnRoles;

    fn acc() -> DecisionTask {
        DecisionTask::accuracy(2).unwrap()
    }

    fn data(n: usize, identical: bool) -> EvaluationDataset {
        let recs = (0..n)
            .map(|i| {
                let s = if identical { 1 } else { (i * 7 % 5) % 2 };
                let x = if identical { 0 } else { (i % 3 == 0) as usize ^ s };
                EvaluationRecord {
                    id: i.to_string(),
                    state: s.to_string(),
                    features: [("x".to_string(), ColumnValue::Discrete(x.to_string()))].into(),
                    ..Default::default()
                }
            })
            .collect();
        EvaluationDataset::new(recs, &acc()).unwrap()
    }

    fn engine(d: &EvaluationDataset) -> ValueEngine {
        let roles = ColumnRoles {
            feature_ai: None,
            ..Default::default()
        };
        ValueEngine::new(d, &acc(), None, &roles).unwrap()
    }

    #[test]
    fn percentile_endpoints_are_order_statistics() {
        let mut r: Vec<f64> = (0..1000).rev().map(f64::from).collect();
        assert_eq!(percentile_interval(&mut r, 0.95), (25.0, 974.0));
        let mut one = vec![3.0];
        assert_eq!(percentile_interval(&mut one, 0.95), (3.0, 3.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let d = data(60, false);
        let e = engine(&d);
        let cfg = BootstrapConfig {
            n_resamples: 200,
            seed: 9,
            ..Default::default()
        };
        let a = bootstrap_ci(&e, "delta_e", &cfg).unwrap();
        let b = bootstrap_ci(&e, "delta_e", &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.low <= a.point && a.point <= a.high);
        let other = bootstrap_ci(&e, "delta_e", &BootstrapConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn identical_records_give_zero_width() {
        let d = data(30, true);
        let i = bootstrap_ci(&engine(&d), "delta_e", &BootstrapConfig::default()).unwrap();
        assert_eq!((i.point, i.low, i.high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn vanishing_state_does_not_crash() {
        // Two records, one per state: many resamples contain a single state.
        let d = data(2, false);
        let cfg = BootstrapConfig {
            n_resamples: 50,
            ..Default::default()
        };
        let report = bootstrap_report(&engine(&d), &cfg).unwrap();
        assert!(report.contains_key("delta_e"));
    }

    #[test]
    fn behavioral_interval_brackets_point() {
        let mut recs = Vec::new();
        for i in 0..40 {
            let s = i % 2;
            for (cond, right) in [(WITH_EXPLANATION, i % 4 != 0), (WITHOUT_EXPLANATION, i % 3 == 0)] {
                recs.push(EvaluationRecord {
                    id: format!("{cond}{i}"),
                    state: s.to_string(),
                    human_action: Some(if right { s } else { 1 - s }.to_string()),
                    condition: Some(cond.into()),
                    ..Default::default()
                });
            }
        }
        let d = EvaluationDataset::new(recs, &acc()).unwrap();
        let cfg = BootstrapConfig::default();
        let v = behavioral_with_ci(&d, &acc(), WITH_EXPLANATION, WITHOUT_EXPLANATION, &cfg).unwrap();
        let i = v.interval.unwrap();
        assert!(i.low <= v.delta && v.delta <= i.high);
        assert_eq!(v, behavioral_with_ci(&d, &acc(), WITH_EXPLANATION, WITHOUT_EXPLANATION, &cfg).unwrap());
    }
}
