//! Signal columns, their composition into discrete signal ids, and interning.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{EvaluationDataset, EvaluationRecord};
use crate::decision::DecisionTask;
use crate::error::{Error, Result};

/// One observable column of an evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SignalColumn {
    Prediction,
    HumanAction,
    Feature(String),
    Explanation(String),
}

impl FromStr for SignalColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prediction" => Ok(SignalColumn::Prediction),
            "human_action" => Ok(SignalColumn::HumanAction),
            _ => {
                if let Some(n) = s.strip_prefix("features.").filter(|n| !n.is_empty()) {
                    Ok(SignalColumn::Feature(n.to_string()))
                } else if let Some(n) = s.strip_prefix("explanations.").filter(|n| !n.is_empty()) {
                    Ok(SignalColumn::Explanation(n.to_string()))
                } else {
                    Err(Error::Config(format!("unknown signal column `{s}`")))
                }
            }
        }
    }
}

impl TryFrom<String> for SignalColumn {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SignalColumn> for String {
    fn from(c: SignalColumn) -> Self {
        c.to_string()
    }
}

impl fmt::Display for SignalColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalColumn::Prediction => f.write_str("prediction"),
            SignalColumn::HumanAction => f.write_str("human_action"),
            SignalColumn::Feature(n) => write!(f, "features.{n}"),
            SignalColumn::Explanation(n) => write!(f, "explanations.{n}"),
        }
    }
}

/// An ordered list of columns composed into one signal. The empty spec is the
/// prior-only signal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalSpec {
    columns: Vec<SignalColumn>,
}

impl SignalSpec {
    pub fn new(columns: Vec<SignalColumn>) -> Self {
        Self { columns }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(column: SignalColumn) -> Self {
        Self::new(vec![column])
    }

    pub fn columns(&self) -> &[SignalColumn] {
        &self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `self ∪ other`, keeping the order of first appearance.
    pub fn union(&self, other: &SignalSpec) -> SignalSpec {
        let mut columns = self.columns.clone();
        for c in &other.columns {
            if !columns.contains(c) {
                columns.push(c.clone());
            }
        }
        SignalSpec { columns }
    }

    pub fn parse_list(s: &str) -> Result<Self> {
        let columns = s
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        Ok(Self { columns })
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.columns.is_empty() {
            return f.write_str("∅");
        }
        let names: Vec<String> = self.columns.iter().map(ToString::to_string).collect();
        f.write_str(&names.join("+"))
    }
}

/// Composed discrete signal value: one label per column of the spec.
pub type SignalKey = Vec<String>;

/// Maps continuous columns of a record to discrete cluster labels.
pub trait ColumnCoder {
    /// `None` when this coder does not cover `column`.
    fn encode(&self, record: &EvaluationRecord, column: &SignalColumn) -> Option<Result<String>>;
}

/// Composes the discrete signal of `record` under `spec`.
///
/// Discrete columns pass through unchanged; vector columns must be covered by
/// `coder`.
pub fn compose_signal(
    record: &EvaluationRecord,
    spec: &SignalSpec,
    coder: Option<&dyn ColumnCoder>,
) -> Result<SignalKey> {
    spec.columns
        .iter()
        .map(|column| {
            let value = record
                .column(column)
                .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
            if let Some(label) = value.discrete() {
                return Ok(label.to_string());
            }
            match coder.and_then(|c| c.encode(record, column)) {
                Some(r) => r,
                None => Err(Error::Uncoarsened(column.to_string())),
            }
        })
        .collect()
}

/// A dataset reduced to (signal index, state index) pairs for one spec.
///
/// Signal indices follow the lexicographic order of their keys, so they do
/// not depend on record order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    spec: SignalSpec,
    keys: Vec<SignalKey>,
    signal: Vec<usize>,
    state: Vec<usize>,
    n_states: usize,
}

impl Observations {
    pub fn compose(
        dataset: &EvaluationDataset,
        spec: &SignalSpec,
        coder: Option<&dyn ColumnCoder>,
        task: &DecisionTask,
    ) -> Result<Self> {
        let mut raw = Vec::with_capacity(dataset.len());
        let mut state = Vec::with_capacity(dataset.len());
        for r in dataset.records() {
            raw.push(compose_signal(r, spec, coder)?);
            state.push(task.state_index(&r.state)?);
        }
        let mut interned: BTreeMap<&SignalKey, usize> = raw.iter().map(|k| (k, 0)).collect();
        for (i, v) in interned.values_mut().enumerate() {
            *v = i;
        }
        let signal = raw.iter().map(|k| interned[k]).collect();
        let keys = interned.into_keys().cloned().collect();
        Ok(Self {
            spec: spec.clone(),
            keys,
            signal,
            state,
            n_states: task.n_states(),
        })
    }

    /// Builds observations from already-discrete per-record keys.
    pub fn from_keys(spec: SignalSpec, raw: Vec<SignalKey>, state: Vec<usize>, n_states: usize) -> Result<Self> {
        if raw.len() != state.len() {
            return Err(Error::DimensionMismatch {
                expected: raw.len(),
                got: state.len(),
            });
        }
        if let Some(&s) = state.iter().find(|&&s| s >= n_states) {
            return Err(Error::UnknownState(s.to_string()));
        }
        let mut interned: BTreeMap<&SignalKey, usize> = raw.iter().map(|k| (k, 0)).collect();
        for (i, v) in interned.values_mut().enumerate() {
            *v = i;
        }
        let signal = raw.iter().map(|k| interned[k]).collect();
        let keys = interned.into_keys().cloned().collect();
        Ok(Self {
            spec,
            keys,
            signal,
            state,
            n_states,
        })
    }

    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    pub fn keys(&self) -> &[SignalKey] {
        &self.keys
    }

    pub fn signals(&self) -> &[usize] {
        &self.signal
    }

    pub fn states(&self) -> &[usize] {
        &self.state
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub fn key_of(&self, record: usize) -> &SignalKey {
        &self.keys[self.signal[record]]
    }
}
