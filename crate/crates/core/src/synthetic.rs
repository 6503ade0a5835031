//! Finite synthetic information models and boundedly rational agents.
//!
//! A [`SyntheticSpec`] declares a prior over states, a likelihood `σ(x|s)`, the
//! part of `x` the model sees (`x_ai`), a deterministic prediction and
//! explanation rule on `x_ai`, and a human policy on `x`. Datasets are sampled
//! from it; benchmarks and agent scores are computed from it exactly.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::benchmark::rational_value;
use crate::dataset::{ColumnValue, EvaluationDataset, EvaluationRecord};
use crate::decision::{Belief, DecisionTask, BELIEF_TOLERANCE};
use crate::error::{Error, Result};
use crate::joint::EmpiricalJoint;
use crate::numeric::{compensated_sum, mix_seed, CompensatedSum};
use crate::signal::{SignalColumn, SignalSpec};

/// Noisy one-hot vectors in place of discrete labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default)]
    pub name: String,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub prior: Vec<f64>,
    pub x_signals: Vec<String>,
    /// `σ(x|s)`, one row per state.
    pub likelihood: Vec<Vec<f64>>,
    /// `x_ai` label for each `x` signal; `None` means the model sees all of `x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ai: Option<Vec<String>>,
    /// `x_ai` label → prediction.
    #[serde(default)]
    pub prediction: BTreeMap<String, String>,
    /// Method → (`x_ai` label → explanation label).
    #[serde(default)]
    pub explanations: BTreeMap<String, BTreeMap<String, String>>,
    /// Action distribution for each `x` signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_policy: Option<Vec<Vec<f64>>>,
    /// Condition → action distribution per `x`; records alternate between conditions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub conditions: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
    pub n_records: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Which derived quantity a signal column carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntheticColumn {
    X,
    XAi,
    Prediction,
    Explanation(String),
    Human,
}

fn check_row(row: &[f64], len: usize, what: &str) -> Result<()> {
    if row.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: row.len(),
        });
    }
    let sum = compensated_sum(row.iter().copied());
    if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > BELIEF_TOLERANCE {
        return Err(Error::InvalidStochastic(format!("{what} sums to {sum}")));
    }
    Ok(())
}

const FIXTURES: [(&str, &str); 4] = [
    ("medical-synthetic", include_str!("../../../fixtures/medical-synthetic.spec.json")),
    ("medical-embedded", include_str!("../../../fixtures/medical-embedded.spec.json")),
    ("incomparable-signals", include_str!("../../../fixtures/incomparable-signals.spec.json")),
    ("private-info", include_str!("../../../fixtures/private-info.spec.json")),
];

impl SyntheticSpec {
    pub fn fixture_names() -> Vec<&'static str> {
        FIXTURES.iter().map(|(n, _)| *n).collect()
    }

    /// A bundled fixture spec by name.
    pub fn fixture(name: &str) -> Result<Self> {
        let (_, text) = FIXTURES
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown fixture `{name}`")))?;
        Self::from_json_str(text)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// A fixture name or a path to a spec JSON file.
    pub fn load(path_or_fixture: &str) -> Result<Self> {
        if FIXTURES.iter().any(|(n, _)| *n == path_or_fixture) {
            return Self::fixture(path_or_fixture);
        }
        let text = std::fs::read_to_string(path_or_fixture).map_err(|source| Error::Io {
            path: path_or_fixture.into(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_x(&self) -> usize {
        self.x_signals.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() || self.x_signals.is_empty() || self.actions.is_empty() {
            return Err(Error::Config("spec needs states, actions and x signals".into()));
        }
        check_row(&self.prior, self.n_states(), "prior")?;
        if self.likelihood.len() != self.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                got: self.likelihood.len(),
            });
        }
        for (s, row) in self.likelihood.iter().enumerate() {
            check_row(row, self.n_x(), &format!("likelihood row {s}"))?;
        }
        if let Some(map) = &self.x_ai {
            if map.len() != self.n_x() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_x(),
                    got: map.len(),
                });
            }
        }
        let ai_labels = self.x_ai_labels();
        let covers = |rule: &BTreeMap<String, String>, what: &str| -> Result<()> {
            match ai_labels.iter().find(|l| !rule.contains_key(*l)) {
                Some(l) => Err(Error::Config(format!("{what} has no entry for x_ai `{l}`"))),
                None => Ok(()),
            }
        };
        if !self.prediction.is_empty() {
            covers(&self.prediction, "prediction rule")?;
        }
        for (m, rule) in &self.explanations {
            covers(rule, &format!("explanation rule `{m}`"))?;
        }
        let policies = self.human_policy.iter().map(|p| ("human_policy".to_string(), p));
        let conds = self.conditions.iter().map(|(c, p)| (format!("condition `{c}`"), p));
        for (what, policy) in policies.chain(conds) {
            if policy.len() != self.n_x() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_x(),
                    got: policy.len(),
                });
            }
            for (x, row) in policy.iter().enumerate() {
                check_row(row, self.actions.len(), &format!("{what} row {x}"))?;
            }
        }
        if let Some(e) = &self.embedding {
            if !(e.noise >= 0.0 && e.noise.is_finite()) {
                return Err(Error::Config(format!("embedding noise must be finite and ≥ 0, got {}", e.noise)));
            }
        }
        Ok(())
    }

    fn x_ai_of(&self, x: usize) -> &str {
        match &self.x_ai {
            Some(map) => &map[x],
            None => &self.x_signals[x],
        }
    }

    /// Distinct `x_ai` labels, sorted.
    pub fn x_ai_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.n_x()).map(|x| self.x_ai_of(x).to_string()).collect();
        v.sort();
        v.dedup();
        v
    }

    fn check_task(&self, task: &DecisionTask) -> Result<()> {
        if task.states() != self.states.as_slice() {
            return Err(Error::StateMismatch {
                joint: self.n_states(),
                task: task.n_states(),
            });
        }
        Ok(())
    }

    /// `p(s) σ(x|s)`.
    pub fn mass(&self, x: usize, s: usize) -> f64 {
        self.prior[s] * self.likelihood[s][x]
    }

    fn column_label(&self, column: &SyntheticColumn, x: usize) -> Result<String> {
        let ai = self.x_ai_of(x);
        Ok(match column {
            SyntheticColumn::X => self.x_signals[x].clone(),
            SyntheticColumn::XAi => ai.to_string(),
            SyntheticColumn::Prediction => self
                .prediction
                .get(ai)
                .cloned()
                .ok_or_else(|| Error::MissingColumn("prediction".into()))?,
            SyntheticColumn::Explanation(m) => self
                .explanations
                .get(m)
                .ok_or_else(|| Error::UnknownExplanation(m.clone()))?[ai]
                .clone(),
            SyntheticColumn::Human => unreachable!("human actions are random"),
        })
    }

    /// The exact population joint of the composed columns.
    pub fn exact_joint(&self, columns: &[SyntheticColumn]) -> Result<EmpiricalJoint> {
        let human = columns.contains(&SyntheticColumn::Human);
        let policy = match (human, &self.human_policy) {
            (true, None) => return Err(Error::MissingColumn("human_policy".into())),
            (_, p) => p,
        };
        let mut masses: BTreeMap<Vec<String>, Vec<CompensatedSum>> = BTreeMap::new();
        for x in 0..self.n_x() {
            let actions: Vec<(Option<usize>, f64)> = match (human, policy) {
                (true, Some(p)) => (0..self.actions.len()).map(|a| (Some(a), p[x][a])).collect(),
                _ => vec![(None, 1.0)],
            };
            for (a, pa) in actions {
                if pa == 0.0 {
                    continue;
                }
                let key = columns
                    .iter()
                    .map(|c| match c {
                        SyntheticColumn::Human => Ok(self.actions[a.expect("human column")].clone()),
                        c => self.column_label(c, x),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let row = masses
                    .entry(key)
                    .or_insert_with(|| vec![CompensatedSum::new(); self.n_states()]);
                for (s, acc) in row.iter_mut().enumerate() {
                    acc.add(self.mass(x, s) * pa);
                }
            }
        }
        let spec = SignalSpec::new(columns.iter().map(|c| self.signal_column(c)).collect());
        EmpiricalJoint::from_masses(
            spec,
            masses
                .into_iter()
                .map(|(k, row)| (k, row.iter().map(CompensatedSum::value).collect()))
                .collect(),
        )
    }

    fn signal_column(&self, c: &SyntheticColumn) -> SignalColumn {
        match c {
            SyntheticColumn::X => SignalColumn::Feature("x".into()),
            SyntheticColumn::XAi => SignalColumn::Feature("x_ai".into()),
            SyntheticColumn::Prediction => SignalColumn::Prediction,
            SyntheticColumn::Explanation(m) => SignalColumn::Explanation(m.clone()),
            SyntheticColumn::Human => SignalColumn::HumanAction,
        }
    }

    /// Exact `R_V` for the composed columns.
    pub fn exact_value(&self, columns: &[SyntheticColumn], task: &DecisionTask) -> Result<f64> {
        self.check_task(task)?;
        rational_value(&self.exact_joint(columns)?, task)
    }

    /// Exact `R_∅`.
    pub fn exact_baseline(&self, task: &DecisionTask) -> Result<f64> {
        self.check_task(task)?;
        Ok(task.best_expected_utility(&Belief::new(self.prior.clone())?))
    }

    fn posterior_of_x(&self, x: usize) -> Option<(f64, Belief)> {
        let row: Vec<f64> = (0..self.n_states()).map(|s| self.mass(x, s)).collect();
        let total = compensated_sum(row.iter().copied());
        (total > 0.0).then(|| (total, Belief::from_weights(&row).expect("positive mass")))
    }

    /// Samples `n_records` records.
    pub fn generate(&self) -> Result<EvaluationDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, &[0]));
        let prior = WeightedIndex::new(&self.prior).map_err(|e| Error::InvalidStochastic(e.to_string()))?;
        let likelihood = self
            .likelihood
            .iter()
            .map(|r| WeightedIndex::new(r).map_err(|e| Error::InvalidStochastic(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let policy_samplers = |p: &Vec<Vec<f64>>| {
            p.iter()
                .map(|r| WeightedIndex::new(r).map_err(|e| Error::InvalidStochastic(e.to_string())))
                .collect::<Result<Vec<_>>>()
        };
        let human = self.human_policy.as_ref().map(policy_samplers).transpose()?;
        let conditions: Vec<(String, Vec<WeightedIndex<f64>>)> = self
            .conditions
            .iter()
            .map(|(c, p)| Ok((c.clone(), policy_samplers(p)?)))
            .collect::<Result<_>>()?;
        let z_labels: BTreeMap<&String, Vec<&String>> = self
            .explanations
            .iter()
            .map(|(m, rule)| {
                let mut v: Vec<&String> = rule.values().collect();
                v.sort();
                v.dedup();
                (m, v)
            })
            .collect();
        let noise = match &self.embedding {
            Some(e) if e.noise > 0.0 => Some(Normal::new(0.0, e.noise).expect("validated noise")),
            _ => None,
        };
        let embed = |index: usize, dim: usize, rng: &mut ChaCha8Rng| -> ColumnValue {
            let mut v = vec![0.0; dim];
            v[index] = 1.0;
            if let Some(n) = &noise {
                for c in &mut v {
                    *c += n.sample(rng);
                }
            }
            ColumnValue::Vector(v)
        };

        let mut records = Vec::with_capacity(self.n_records);
        for i in 0..self.n_records {
            let s = prior.sample(&mut rng);
            let x = likelihood[s].sample(&mut rng);
            let ai = self.x_ai_of(x);
            let (condition, action) = if conditions.is_empty() {
                (None, human.as_ref().map(|h| h[x].sample(&mut rng)))
            } else {
                let (c, p) = &conditions[i % conditions.len()];
                (Some(c.clone()), Some(p[x].sample(&mut rng)))
            };
            let mut features = BTreeMap::new();
            let mut explanations = BTreeMap::new();
            if self.embedding.is_some() {
                features.insert("x".to_string(), embed(x, self.n_x(), &mut rng));
                for (m, rule) in &self.explanations {
                    let labels = &z_labels[m];
                    let z = labels.binary_search(&&rule[ai]).expect("label listed");
                    explanations.insert(m.clone(), embed(z, labels.len(), &mut rng));
                }
            } else {
                features.insert("x".to_string(), ColumnValue::Discrete(self.x_signals[x].clone()));
                for (m, rule) in &self.explanations {
                    explanations.insert(m.clone(), ColumnValue::Discrete(rule[ai].clone()));
                }
            }
            features.insert("x_ai".to_string(), ColumnValue::Discrete(ai.to_string()));
            records.push(EvaluationRecord {
                id: format!("r{i}"),
                state: self.states[s].clone(),
                prediction: self.prediction.get(ai).cloned(),
                human_action: action.map(|a| self.actions[a].clone()),
                condition,
                features,
                explanations,
            });
        }
        // Labels only: the dataset checks states and actions against this task.
        let labels = DecisionTask::new(
            self.actions.clone(),
            self.states.clone(),
            vec![vec![0.0; self.n_states()]; self.actions.len()],
        )?;
        EvaluationDataset::new(records, &labels)
    }
}

/// Row-stochastic kernel `Γ` from `x` signals to garbled signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarblingKernel {
    gamma: Vec<Vec<f64>>,
}

impl GarblingKernel {
    pub fn new(gamma: Vec<Vec<f64>>) -> Result<Self> {
        let width = gamma.first().map_or(0, Vec::len);
        if width == 0 {
            return Err(Error::InvalidStochastic("empty kernel".into()));
        }
        for (i, row) in gamma.iter().enumerate() {
            check_row(row, width, &format!("kernel row {i}"))?;
        }
        Ok(Self { gamma })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gamma: (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
        }
    }

    /// Every row the same distribution.
    pub fn constant(n: usize, row: Vec<f64>) -> Result<Self> {
        Self::new(vec![row; n])
    }

    /// Dirichlet(1) rows.
    pub fn random(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        Self {
            gamma: (0..n_in).map(|_| dirichlet_row(n_out, rng)).collect(),
        }
    }

    pub fn gamma(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    pub fn n_in(&self) -> usize {
        self.gamma.len()
    }

    pub fn n_out(&self) -> usize {
        self.gamma[0].len()
    }
}

/// Expected utility, under the true joint, of an agent that sees the garbled
/// signal `x' ~ Γ(·|x)` and best-responds to its posterior under `σ' = Γσ`.
pub fn misinformed_score(spec: &SyntheticSpec, kernel: &GarblingKernel, task: &DecisionTask) -> Result<f64> {
    spec.check_task(task)?;
    if kernel.n_in() != spec.n_x() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_x(),
            got: kernel.n_in(),
        });
    }
    let entries = (0..kernel.n_out())
        .map(|xp| {
            let row = (0..spec.n_states())
                .map(|s| compensated_sum((0..spec.n_x()).map(|x| spec.mass(x, s) * kernel.gamma[x][xp])))
                .collect();
            (vec![xp.to_string()], row)
        })
        .collect();
    let joint = EmpiricalJoint::from_masses(SignalSpec::single(SignalColumn::Feature("x_garbled".into())), entries)?;
    rational_value(&joint, task)
}

/// Expected utility of an agent that knows the true posterior given `x` and
/// picks action `a` with probability `∝ exp(E[u(a, s) | x] / temperature)`.
pub fn misoptimizing_score(spec: &SyntheticSpec, temperature: f64, task: &DecisionTask) -> Result<f64> {
    spec.check_task(task)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidTemperature(temperature));
    }
    let mut acc = CompensatedSum::new();
    for x in 0..spec.n_x() {
        let Some((mass, post)) = spec.posterior_of_x(x) else {
            continue;
        };
        let eu: Vec<f64> = (0..task.n_actions()).map(|a| task.expected_utility_at(a, &post)).collect();
        let top = eu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eu.iter().map(|u| ((u - top) / temperature).exp()).collect();
        let z = compensated_sum(w.iter().copied());
        acc.add(mass * compensated_sum(w.iter().zip(&eu).map(|(w, u)| w * u)) / z);
    }
    Ok(acc.value())
}

/// Expected utility of choosing actions uniformly at random.
pub fn uniform_action_score(spec: &SyntheticSpec, task: &DecisionTask) -> Result<f64> {
    spec.check_task(task)?;
    let prior = Belief::new(spec.prior.clone())?;
    let n = task.n_actions() as f64;
    Ok(compensated_sum((0..task.n_actions()).map(|a| task.expected_utility_at(a, &prior))) / n)
}

fn dirichlet_row(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE).collect();
    let total = compensated_sum(draws.iter().copied());
    draws.iter().map(|d| d / total).collect()
}

/// A random spec with Dirichlet(1) prior, likelihood and human-policy rows.
///
/// Actions coincide with states; `x_ai` is a random coarsening of `x` and the
/// prediction and two explanation rules are random functions of `x_ai`.
pub fn random_spec(seed: u64, max_states: usize, max_x: usize) -> SyntheticSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[1]));
    let n_states = rng.random_range(2..=max_states.max(2));
    let n_x = rng.random_range(1..=max_x.max(1));
    let n_ai = rng.random_range(1..=n_x);
    let states: Vec<String> = (0..n_states).map(|s| s.to_string()).collect();
    let x_signals: Vec<String> = (0..n_x).map(|x| format!("x{x}")).collect();
    let x_ai: Vec<String> = (0..n_x).map(|_| format!("a{}", rng.random_range(0..n_ai))).collect();
    let mut ai_labels = x_ai.clone();
    ai_labels.sort();
    ai_labels.dedup();
    let prediction = ai_labels
        .iter()
        .map(|l| (l.clone(), states[rng.random_range(0..n_states)].clone()))
        .collect();
    let explanations = ["m0", "m1"]
        .iter()
        .map(|m| {
            let k = rng.random_range(1..=ai_labels.len());
            let rule = ai_labels.iter().map(|l| (l.clone(), format!("z{}", rng.random_range(0..k)))).collect();
            (m.to_string(), rule)
        })
        .collect();
    SyntheticSpec {
        name: format!("random-{seed}"),
        actions: states.clone(),
        prior: dirichlet_row(n_states, &mut rng),
        likelihood: (0..n_states).map(|_| dirichlet_row(n_x, &mut rng)).collect(),
        human_policy: Some((0..n_x).map(|_| dirichlet_row(n_states, &mut rng)).collect()),
        states,
        x_signals,
        x_ai: Some(x_ai),
        prediction,
        explanations,
        conditions: BTreeMap::new(),
        embedding: None,
        n_records: 200,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec::from_json_str(
            r#"{
                "states": ["0", "1"], "actions": ["0", "1"], "prior": [0.5, 0.5],
                "x_signals": ["a", "b"], "likelihood": [[0.8, 0.2], [0.2, 0.8]],
                "prediction": {"a": "0", "b": "1"},
                "explanations": {"copy": {"a": "za", "b": "zb"}},
                "human_policy": [[1.0, 0.0], [0.0, 1.0]],
                "n_records": 50, "seed": 3
            }"#,
        )
        .unwrap()
    }

    fn acc() -> DecisionTask {
        DecisionTask::accuracy(2).unwrap()
    }

    #[test]
    fn exact_value_by_hand() {
        let s = small();
        assert!((s.exact_value(&[SyntheticColumn::X], &acc()).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(s.exact_baseline(&acc()).unwrap(), 0.5);
        let h = s.exact_value(&[SyntheticColumn::Human], &acc()).unwrap();
        assert!((h - 0.8).abs() < 1e-15);
    }

    #[test]
    fn generate_edge_cases() {
        let mut s = small();
        s.n_records = 0;
        assert!(s.generate().unwrap().is_empty());
        let mut s = small();
        s.prior = vec![0.0, 1.0];
        assert!(s.generate().unwrap().records().iter().all(|r| r.state == "1"));
        let a = small().generate().unwrap().to_jsonl().unwrap();
        let b = small().generate().unwrap().to_jsonl().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = small();
        s.likelihood[0] = vec![0.5, 0.6];
        assert!(matches!(s.validate(), Err(Error::InvalidStochastic(_))));
        let mut s = small();
        s.explanations.get_mut("copy").unwrap().remove("b");
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn kernel_extremes() {
        let s = small();
        let rx = s.exact_value(&[SyntheticColumn::X], &acc()).unwrap();
        assert_eq!(misinformed_score(&s, &GarblingKernel::identity(2), &acc()).unwrap(), rx);
        let flat = GarblingKernel::constant(2, vec![0.3, 0.7]).unwrap();
        assert!((misinformed_score(&s, &flat, &acc()).unwrap() - 0.5).abs() < 1e-12);
        assert!(GarblingKernel::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(matches!(
            misinformed_score(&s, &GarblingKernel::identity(3), &acc()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn softmax_limits() {
        let s = small();
        assert!((misoptimizing_score(&s, 1e-9, &acc()).unwrap() - 0.8).abs() < 1e-6);
        assert!((misoptimizing_score(&s, 1e9, &acc()).unwrap() - 0.5).abs() < 1e-6);
        assert!(matches!(misoptimizing_score(&s, 0.0, &acc()), Err(Error::InvalidTemperature(_))));
    }

    #[test]
    fn random_specs_are_valid() {
        for seed in 0..20 {
            random_spec(seed, 5, 8).validate().unwrap();
        }
    }
}
