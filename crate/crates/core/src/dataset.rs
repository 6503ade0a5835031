//! Evaluation records and their JSONL / CSV encodings.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::decision::DecisionTask;
use crate::error::{Error, Result};
use crate::signal::SignalColumn;

/// Control condition label for behavioral data.
pub const WITHOUT_EXPLANATION: &str = "without_explanation";
/// Default treatment condition label for behavioral data.
pub const WITH_EXPLANATION: &str = "with_explanation";

/// A feature or explanation cell: either a raw numeric vector or a discrete id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnValue {
    Vector(Vec<f64>),
    Discrete(String),
}

impl ColumnValue {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            ColumnValue::Vector(v) => Some(v),
            ColumnValue::Discrete(_) => None,
        }
    }

    pub fn as_discrete(&self) -> Option<&str> {
        match self {
            ColumnValue::Discrete(s) => Some(s),
            ColumnValue::Vector(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub id: String,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_action: Option<String>,
    /// Behavioral condition label; `without_explanation` is the control arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default)]
    pub features: BTreeMap<String, ColumnValue>,
    #[serde(default)]
    pub explanations: BTreeMap<String, ColumnValue>,
}

impl EvaluationRecord {
    pub fn column(&self, column: &SignalColumn) -> Option<ColumnRef<'_>> {
        match column {
            SignalColumn::Prediction => self.prediction.as_deref().map(ColumnRef::Label),
            SignalColumn::HumanAction => self.human_action.as_deref().map(ColumnRef::Label),
            SignalColumn::Feature(name) => self.features.get(name).map(ColumnRef::Value),
            SignalColumn::Explanation(name) => self.explanations.get(name).map(ColumnRef::Value),
        }
    }
}

/// Borrowed view of one column of a record.
#[derive(Debug, Clone, Copy)]
pub enum ColumnRef<'a> {
    Label(&'a str),
    Value(&'a ColumnValue),
}

impl<'a> ColumnRef<'a> {
    pub fn discrete(&self) -> Option<&'a str> {
        match *self {
            ColumnRef::Label(s) => Some(s),
            ColumnRef::Value(v) => v.as_discrete(),
        }
    }

    pub fn vector(&self) -> Option<&'a [f64]> {
        match *self {
            ColumnRef::Label(_) => None,
            ColumnRef::Value(v) => v.as_vector(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => Ok(DataFormat::Jsonl),
            Some("csv") => Ok(DataFormat::Csv),
            _ => Err(Error::Config(format!(
                "cannot infer data format from `{}`",
                path.display()
            ))),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataFormat::Jsonl => f.write_str("jsonl"),
            DataFormat::Csv => f.write_str("csv"),
        }
    }
}

/// How a dataset file should be read and which columns must be present.
#[derive(Debug, Clone, Default)]
pub struct DatasetSchema {
    /// Inferred from the file extension when `None`.
    pub format: Option<DataFormat>,
    pub required: Vec<SignalColumn>,
}

/// A validated list of evaluation records.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EvaluationDataset {
    records: Vec<EvaluationRecord>,
}

impl EvaluationDataset {
    /// Validates records against the task's labels and checks that vectors
    /// sharing a column name share a dimension.
    pub fn new(records: Vec<EvaluationRecord>, task: &DecisionTask) -> Result<Self> {
        let mut dims: BTreeMap<String, (usize, bool)> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if task.state_index(&r.state).is_err() {
                return Err(Error::schema(
                    "state",
                    format!("record {} (`{}`): label `{}` is not a task state", i, r.id, r.state),
                ));
            }
            if let Some(a) = &r.human_action {
                if task.action_index(a).is_err() {
                    return Err(Error::schema(
                        "human_action",
                        format!("record {} (`{}`): label `{a}` is not a task action", i, r.id),
                    ));
                }
            }
            let cols = r
                .features
                .iter()
                .map(|(k, v)| (format!("features.{k}"), v))
                .chain(r.explanations.iter().map(|(k, v)| (format!("explanations.{k}"), v)));
            for (name, value) in cols {
                let (dim, is_vec) = match value {
                    ColumnValue::Vector(v) => (v.len(), true),
                    ColumnValue::Discrete(_) => (0, false),
                };
                if let ColumnValue::Vector(v) = value {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::schema(
                            name,
                            format!("record {} (`{}`): non-finite entry", i, r.id),
                        ));
                    }
                }
                match dims.get(&name) {
                    Some(&(_, kind)) if kind != is_vec => {
                        return Err(Error::schema(
                            name,
                            format!("record {} (`{}`) mixes vector and discrete values", i, r.id),
                        ));
                    }
                    Some(&(d, _)) if is_vec && d != dim => {
                        return Err(Error::schema(
                            name,
                            format!("record {} (`{}`): dimension {dim}, expected {d}", i, r.id),
                        ));
                    }
                    Some(_) => {}
                    None => {
                        dims.insert(name, (dim, is_vec));
                    }
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<EvaluationRecord> {
        self.records
    }

    /// Records matching `keep`, in order. Validation carries over.
    pub fn filter(&self, keep: impl Fn(&EvaluationRecord) -> bool) -> Self {
        Self {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Names of explanation methods appearing on any record.
    pub fn explanation_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .records
            .iter()
            .flat_map(|r| r.explanations.keys().cloned())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// First record missing `column`, if any.
    pub fn first_missing(&self, column: &SignalColumn) -> Option<usize> {
        self.records.iter().position(|r| r.column(column).is_none())
    }

    pub fn require(&self, columns: &[SignalColumn]) -> Result<()> {
        for c in columns {
            if let Some(i) = self.first_missing(c) {
                return Err(Error::Schema {
                    field: c.to_string(),
                    message: format!("missing on record {i} (`{}`)", self.records[i].id),
                });
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn load_dataset(path: &Path, schema: &DatasetSchema, task: &DecisionTask) -> Result<EvaluationDataset> {
    let format = match schema.format {
        Some(f) => f,
        None => DataFormat::from_path(path)?,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let records = match format {
        DataFormat::Jsonl => parse_jsonl(reader, path)?,
        DataFormat::Csv => parse_csv(reader, path)?,
    };
    let dataset = EvaluationDataset::new(records, task)?;
    dataset.require(&schema.required)?;
    Ok(dataset)
}

fn scalar_label(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

fn optional_label(obj: &Map<String, Value>, key: &str, path: &Path, line: usize) -> Result<Option<String>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => scalar_label(v)
            .map(Some)
            .ok_or_else(|| parse_err(path, line, format!("field `{key}` must be a scalar"))),
    }
}

fn column_map(
    obj: &Map<String, Value>,
    key: &str,
    path: &Path,
    line: usize,
) -> Result<BTreeMap<String, ColumnValue>> {
    let mut out = BTreeMap::new();
    match obj.get(key) {
        None | Some(Value::Null) => {}
        Some(Value::Object(m)) => {
            for (name, v) in m {
                let value = match v {
                    Value::Null => continue,
                    Value::Array(items) => {
                        let mut vec = Vec::with_capacity(items.len());
                        for item in items {
                            vec.push(item.as_f64().ok_or_else(|| {
                                parse_err(path, line, format!("`{key}.{name}` has a non-numeric entry"))
                            })?);
                        }
                        ColumnValue::Vector(vec)
                    }
                    other => ColumnValue::Discrete(scalar_label(other).ok_or_else(|| {
                        parse_err(path, line, format!("`{key}.{name}` must be a vector or scalar"))
                    })?),
                };
                out.insert(name.clone(), value);
            }
        }
        Some(_) => return Err(parse_err(path, line, format!("field `{key}` must be an object"))),
    }
    Ok(out)
}

fn parse_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Vec<EvaluationRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err(path, lineno, "expected a JSON object"))?;
        let state = optional_label(obj, "state", path, lineno)?
            .ok_or_else(|| parse_err(path, lineno, "missing field `state`"))?;
        let id = optional_label(obj, "id", path, lineno)?.unwrap_or_else(|| format!("r{lineno}"));
        records.push(EvaluationRecord {
            id,
            state,
            prediction: optional_label(obj, "prediction", path, lineno)?,
            human_action: optional_label(obj, "human_action", path, lineno)?,
            condition: optional_label(obj, "condition", path, lineno)?,
            features: column_map(obj, "features", path, lineno)?,
            explanations: column_map(obj, "explanations", path, lineno)?,
        });
    }
    Ok(records)
}

enum CsvTarget {
    Id,
    State,
    Prediction,
    HumanAction,
    Condition,
    Feature(String, Option<usize>),
    Explanation(String, Option<usize>),
}

fn csv_target(header: &str) -> CsvTarget {
    match header {
        "id" => return CsvTarget::Id,
        "state" => return CsvTarget::State,
        "prediction" => return CsvTarget::Prediction,
        "human_action" => return CsvTarget::HumanAction,
        "condition" => return CsvTarget::Condition,
        _ => {}
    }
    let split_index = |s: &str| -> (String, Option<usize>) {
        match s.rsplit_once('.') {
            Some((name, idx)) if idx.parse::<usize>().is_ok() => (name.to_string(), idx.parse().ok()),
            _ => (s.to_string(), None),
        }
    };
    if let Some(rest) = header.strip_prefix("z.") {
        let (name, idx) = split_index(rest);
        CsvTarget::Explanation(name, idx)
    } else {
        let (name, idx) = split_index(header);
        CsvTarget::Feature(name, idx)
    }
}

fn parse_csv<R: BufRead>(reader: R, path: &Path) -> Result<Vec<EvaluationRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let targets: Vec<CsvTarget> = headers.iter().map(csv_target).collect();
    if !headers.iter().any(|h| h == "state") {
        return Err(Error::MissingColumn("state".into()));
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let lineno = i + 2;
        let row = row.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let mut rec = EvaluationRecord {
            id: format!("r{}", i + 1),
            ..Default::default()
        };
        let mut vectors: BTreeMap<(bool, String), BTreeMap<usize, f64>> = BTreeMap::new();
        for (cell, target) in row.iter().zip(&targets) {
            if cell.is_empty() {
                continue;
            }
            match target {
                CsvTarget::Id => rec.id = cell.to_string(),
                CsvTarget::State => rec.state = cell.to_string(),
                CsvTarget::Prediction => rec.prediction = Some(cell.to_string()),
                CsvTarget::HumanAction => rec.human_action = Some(cell.to_string()),
                CsvTarget::Condition => rec.condition = Some(cell.to_string()),
                CsvTarget::Feature(name, None) => {
                    rec.features.insert(name.clone(), ColumnValue::Discrete(cell.to_string()));
                }
                CsvTarget::Explanation(name, None) => {
                    rec.explanations.insert(name.clone(), ColumnValue::Discrete(cell.to_string()));
                }
                CsvTarget::Feature(name, Some(idx)) | CsvTarget::Explanation(name, Some(idx)) => {
                    let is_expl = matches!(target, CsvTarget::Explanation(..));
                    let v: f64 = cell.parse().map_err(|_| {
                        parse_err(path, lineno, format!("non-numeric value `{cell}` in column `{name}.{idx}`"))
                    })?;
                    vectors.entry((is_expl, name.clone())).or_default().insert(*idx, v);
                }
            }
        }
        if rec.state.is_empty() {
            return Err(parse_err(path, lineno, "empty `state`"));
        }
        for ((is_expl, name), entries) in vectors {
            let expected: Vec<usize> = (0..entries.len()).collect();
            if entries.keys().copied().collect::<Vec<_>>() != expected {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("vector column `{name}` has gaps in its indices"),
                ));
            }
            let value = ColumnValue::Vector(entries.into_values().collect());
            if is_expl {
                rec.explanations.insert(name, value);
            } else {
                rec.features.insert(name, value);
            }
        }
        records.push(rec);
    }
    Ok(records)
}
