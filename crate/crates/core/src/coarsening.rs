//! Coarsening of high-dimensional signals by nested clustering.
//!
//! Explanations are clustered first. Records are then grouped into cells by
//! (explanation cluster, prediction) and features are clustered inside each
//! cell, so the feature clustering always refines the explanation and
//! prediction signals. A grid search over cluster counts keeps the point with
//! the best overall rational performance among those whose train/test gap
//! stays under `delta`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::heldout_value;
use crate::dataset::{ColumnValue, EvaluationDataset, EvaluationRecord};
use crate::decision::DecisionTask;
use crate::error::{Error, Result};
use crate::joint::EmpiricalJoint;
use crate::kmeans::{kmeans, nearest, KMeansParams};
use crate::numeric::mix_seed;
use crate::signal::{ColumnCoder, Observations, SignalColumn, SignalSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoarseningConfig {
    pub k_z_grid: Vec<usize>,
    pub k_x_grid: Vec<usize>,
    pub delta: f64,
    pub split_fraction: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub restarts: usize,
    /// Feature column clustered inside each cell.
    pub feature: String,
    /// Explanation methods; empty means every method present in the data.
    pub explanations: Vec<String>,
    /// Further vector feature columns (e.g. `x_ai`) clustered inside each
    /// prediction cell once the grid point is chosen.
    pub auxiliary_features: Vec<String>,
}

impl Default for CoarseningConfig {
    fn default() -> Self {
        Self {
            k_z_grid: (1..=10).map(|i| i * 10).collect(),
            k_x_grid: (5..=50).map(|i| i * 10).collect(),
            delta: 1e-2,
            split_fraction: 0.5,
            seed: 0,
            max_iter: 100,
            restarts: 3,
            feature: "x".into(),
            explanations: Vec::new(),
            auxiliary_features: Vec::new(),
        }
    }
}

impl CoarseningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_z_grid.is_empty() || self.k_x_grid.is_empty() {
            return Err(Error::Config("cluster grids must be non-empty".into()));
        }
        if self.k_z_grid.contains(&0) || self.k_x_grid.contains(&0) {
            return Err(Error::Config("cluster counts must be >= 1".into()));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta {} must be finite and >= 0", self.delta)));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction {} must lie in (0, 1)",
                self.split_fraction
            )));
        }
        Ok(())
    }

    fn kmeans_params(&self) -> KMeansParams {
        KMeansParams {
            max_iter: self.max_iter,
            restarts: self.restarts,
        }
    }
}

/// A fitted assignment rule for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Clustering {
    Centroids { centroids: Vec<Vec<f64>> },
    /// Discrete column: each level is its own cluster.
    Levels { values: Vec<String> },
}

impl Clustering {
    pub fn len(&self) -> usize {
        match self {
            Clustering::Centroids { centroids } => centroids.len(),
            Clustering::Levels { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn assign(&self, value: &ColumnValue, column: &str) -> Result<usize> {
        match (self, value) {
            (Clustering::Centroids { centroids }, ColumnValue::Vector(v)) => {
                let dim = centroids.first().map_or(0, Vec::len);
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                Ok(nearest(centroids, v))
            }
            (Clustering::Levels { values }, ColumnValue::Discrete(s)) => values
                .binary_search(s)
                .map_err(|_| Error::Unassignable(format!("`{column}` level `{s}` unseen during coarsening"))),
            _ => Err(Error::Unassignable(format!(
                "`{column}` changed between vector and discrete"
            ))),
        }
    }

    fn fit(values: &[&ColumnValue], k: usize, seed: u64, params: KMeansParams, column: &str) -> Result<(Self, Vec<usize>)> {
        if values.iter().all(|v| matches!(v, ColumnValue::Discrete(_))) {
            let mut levels: Vec<String> = values.iter().filter_map(|v| v.as_discrete()).map(String::from).collect();
            levels.sort();
            levels.dedup();
            let labels = values
                .iter()
                .map(|v| levels.binary_search(&v.as_discrete().unwrap().to_string()).unwrap())
                .collect();
            return Ok((Clustering::Levels { values: levels }, labels));
        }
        let points: Vec<&[f64]> = values
            .iter()
            .map(|v| {
                v.as_vector()
                    .ok_or_else(|| Error::schema(column, "mixes vector and discrete values"))
            })
            .collect::<Result<_>>()?;
        let fit = kmeans(&points, k, seed, params);
        Ok((Clustering::Centroids { centroids: fit.centroids }, fit.labels))
    }
}

/// Feature clustering of one (explanation cluster, prediction) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellClustering {
    /// Explanation cluster id per method, in method order.
    pub z: Vec<usize>,
    pub prediction: String,
    /// Global id of this cell's first feature cluster.
    pub offset: usize,
    pub clustering: Clustering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k_z: usize,
    pub k_x: usize,
    /// Requested feature clusters per cell, `k_x / (k_z * |S_ŷ|)`.
    pub per_cell: usize,
    /// Feature clusters actually produced across cells.
    pub x_clusters: usize,
    pub r_all: f64,
    pub r_train: f64,
    pub r_test: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningResult {
    pub feature: String,
    pub explanations: Vec<String>,
    pub prediction_values: Vec<String>,
    pub seed: u64,
    pub delta: f64,
    pub k_z_star: usize,
    pub k_x_star: usize,
    /// `R_all` of the selected point: training posteriors scored on all records.
    pub r_star: f64,
    pub r_train: f64,
    pub r_test: f64,
    pub c_z: BTreeMap<String, Clustering>,
    pub c_x: Vec<CellClustering>,
    pub auxiliary: BTreeMap<String, Vec<CellClustering>>,
    pub diagnostics: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Alg1Outcome {
    Selected(Box<CoarseningResult>),
    /// No grid point met the overfitting constraint.
    Infeasible { delta: f64, diagnostics: Vec<GridPoint> },
}

impl Alg1Outcome {
    pub fn selected(self) -> Option<CoarseningResult> {
        match self {
            Alg1Outcome::Selected(r) => Some(*r),
            Alg1Outcome::Infeasible { .. } => None,
        }
    }
}

fn lookup_cell<'a>(cells: &'a [CellClustering], z: &[usize], prediction: &str) -> Option<&'a CellClustering> {
    cells
        .binary_search_by(|c| (c.z.as_slice(), c.prediction.as_str()).cmp(&(z, prediction)))
        .ok()
        .map(|i| &cells[i])
}

impl CoarseningResult {
    pub fn n_x_clusters(&self) -> usize {
        self.c_x.iter().map(|c| c.clustering.len()).sum()
    }

    /// Explanation cluster ids (one per method) and the global feature
    /// cluster id of `record`. Never creates new ids.
    pub fn apply(&self, record: &EvaluationRecord) -> Result<(Vec<usize>, usize)> {
        let z = self.z_ids(record)?;
        let prediction = record
            .prediction
            .as_deref()
            .ok_or_else(|| Error::MissingColumn("prediction".into()))?;
        let cell = lookup_cell(&self.c_x, &z, prediction).ok_or_else(|| {
            Error::Unassignable(format!("cell (z={z:?}, prediction={prediction}) unseen during coarsening"))
        })?;
        let value = record
            .features
            .get(&self.feature)
            .ok_or_else(|| Error::MissingColumn(format!("features.{}", self.feature)))?;
        let local = cell.clustering.assign(value, &self.feature)?;
        Ok((z, cell.offset + local))
    }

    fn z_ids(&self, record: &EvaluationRecord) -> Result<Vec<usize>> {
        self.explanations
            .iter()
            .map(|m| {
                let v = record
                    .explanations
                    .get(m)
                    .ok_or_else(|| Error::MissingColumn(format!("explanations.{m}")))?;
                self.c_z[m].assign(v, m)
            })
            .collect()
    }

    fn auxiliary_id(&self, name: &str, record: &EvaluationRecord) -> Result<usize> {
        let cells = &self.auxiliary[name];
        let prediction = record
            .prediction
            .as_deref()
            .ok_or_else(|| Error::MissingColumn("prediction".into()))?;
        let cell = lookup_cell(cells, &[], prediction)
            .ok_or_else(|| Error::Unassignable(format!("prediction `{prediction}` unseen for `{name}`")))?;
        let value = record
            .features
            .get(name)
            .ok_or_else(|| Error::MissingColumn(format!("features.{name}")))?;
        Ok(cell.offset + cell.clustering.assign(value, name)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Diagnostics table as CSV.
    pub fn diagnostics_csv(&self) -> String {
        diagnostics_csv(&self.diagnostics)
    }
}

pub fn diagnostics_csv(points: &[GridPoint]) -> String {
    let mut out = String::from("k_z,k_x,per_cell,x_clusters,r_all,r_train,r_test,feasible\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.k_z, p.k_x, p.per_cell, p.x_clusters, p.r_all, p.r_train, p.r_test, p.feasible
        ));
    }
    out
}

impl ColumnCoder for CoarseningResult {
    fn encode(&self, record: &EvaluationRecord, column: &SignalColumn) -> Option<Result<String>> {
        match column {
            SignalColumn::Feature(n) if *n == self.feature => {
                Some(self.apply(record).map(|(_, x)| x.to_string()))
            }
            SignalColumn::Feature(n) if self.auxiliary.contains_key(n) => {
                Some(self.auxiliary_id(n, record).map(|x| x.to_string()))
            }
            SignalColumn::Explanation(n) => self.c_z.get(n).map(|c| {
                let v = record
                    .explanations
                    .get(n)
                    .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
                c.assign(v, n).map(|i| i.to_string())
            }),
            _ => None,
        }
    }
}

/// Seeded split of `0..n` stratified by state. Both parts are non-empty when
/// `n >= 2`; both are returned sorted.
pub fn stratified_split(states: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0]));
    let n_states = states.iter().copied().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in 0..n_states {
        let mut idx: Vec<usize> = (0..states.len()).filter(|&i| states[i] == s).collect();
        idx.shuffle(&mut rng);
        let cut = (fraction * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    if test.is_empty() && train.len() >= 2 {
        test.push(train.pop().unwrap());
    } else if train.is_empty() && test.len() >= 2 {
        train.push(test.pop().unwrap());
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Combines several explanation methods into one column: vectors are
/// concatenated in method order, discrete ids are joined into a
/// cross-product id.
pub fn multi_explanation_compose(dataset: &EvaluationDataset, methods: &[String]) -> Result<Vec<ColumnValue>> {
    if methods.is_empty() {
        return Err(Error::Config("no explanation methods to compose".into()));
    }
    dataset
        .records()
        .iter()
        .map(|r| {
            let parts: Vec<&ColumnValue> = methods
                .iter()
                .map(|m| {
                    r.explanations
                        .get(m)
                        .ok_or_else(|| Error::MissingColumn(format!("explanations.{m}")))
                })
                .collect::<Result<_>>()?;
            if parts.len() == 1 {
                return Ok(parts[0].clone());
            }
            if parts.iter().all(|p| p.as_vector().is_some()) {
                Ok(ColumnValue::Vector(
                    parts.iter().flat_map(|p| p.as_vector().unwrap().iter().copied()).collect(),
                ))
            } else if parts.iter().all(|p| p.as_discrete().is_some()) {
                let ids: Vec<&str> = parts.iter().map(|p| p.as_discrete().unwrap()).collect();
                Ok(ColumnValue::Discrete(ids.join("|")))
            } else {
                Err(Error::Config(format!(
                    "record `{}` mixes discrete and vector explanations across {methods:?}",
                    r.id
                )))
            }
        })
        .collect()
}

struct Prepared<'a> {
    methods: Vec<String>,
    z_values: Vec<Vec<&'a ColumnValue>>,
    x_values: Vec<&'a ColumnValue>,
    predictions: Vec<&'a str>,
    prediction_values: Vec<String>,
    states: Vec<usize>,
}

fn prepare<'a>(dataset: &'a EvaluationDataset, task: &DecisionTask, config: &CoarseningConfig) -> Result<Prepared<'a>> {
    let methods = if config.explanations.is_empty() {
        dataset.explanation_names()
    } else {
        config.explanations.clone()
    };
    let mut required = vec![SignalColumn::Prediction, SignalColumn::Feature(config.feature.clone())];
    required.extend(methods.iter().cloned().map(SignalColumn::Explanation));
    required.extend(config.auxiliary_features.iter().cloned().map(SignalColumn::Feature));
    dataset.require(&required)?;
    let records = dataset.records();
    let z_values = methods
        .iter()
        .map(|m| records.iter().map(|r| &r.explanations[m]).collect())
        .collect();
    let x_values = records.iter().map(|r| &r.features[&config.feature]).collect();
    let predictions: Vec<&str> = records.iter().map(|r| r.prediction.as_deref().unwrap()).collect();
    let mut prediction_values: Vec<String> = predictions.iter().map(|p| p.to_string()).collect();
    prediction_values.sort();
    prediction_values.dedup();
    let states = records
        .iter()
        .map(|r| task.state_index(&r.state))
        .collect::<Result<_>>()?;
    Ok(Prepared {
        methods,
        z_values,
        x_values,
        predictions,
        prediction_values,
        states,
    })
}

/// Nested feature clustering for one grid point: cells in sorted order with
/// global offsets, plus the global feature-cluster id of every record.
fn cluster_cells(
    cells: &BTreeMap<(Vec<usize>, &str), Vec<usize>>,
    values: &[&ColumnValue],
    per_cell: usize,
    seed: u64,
    params: KMeansParams,
    column: &str,
) -> Result<(Vec<CellClustering>, Vec<usize>)> {
    let mut out = Vec::with_capacity(cells.len());
    let mut ids = vec![0usize; values.len()];
    let mut offset = 0;
    for (ci, ((z, pred), members)) in cells.iter().enumerate() {
        let cell_values: Vec<&ColumnValue> = members.iter().map(|&i| values[i]).collect();
        let (clustering, labels) =
            Clustering::fit(&cell_values, per_cell, mix_seed(seed, &[ci as u64]), params, column)?;
        for (&i, l) in members.iter().zip(labels) {
            ids[i] = offset + l;
        }
        let len = clustering.len();
        out.push(CellClustering {
            z: z.clone(),
            prediction: pred.to_string(),
            offset,
            clustering,
        });
        offset += len;
    }
    Ok((out, ids))
}

struct Scored {
    point: GridPoint,
    cells: Vec<CellClustering>,
}

fn score_point(
    x_ids: &[usize],
    states: &[usize],
    train: &[usize],
    test: &[usize],
    task: &DecisionTask,
    delta: f64,
) -> Result<(f64, f64, f64, bool)> {
    let keys = x_ids.iter().map(|x| vec![x.to_string()]).collect();
    let obs = Observations::from_keys(SignalSpec::empty(), keys, states.to_vec(), task.n_states())?;
    let train_joint = EmpiricalJoint::fit(&obs, Some(train), 0.0)?;
    let all_joint = EmpiricalJoint::fit(&obs, None, 0.0)?;
    let test_joint = EmpiricalJoint::fit(&obs, Some(test), 0.0)?;
    let r_all = heldout_value(&train_joint, &all_joint, task)?;
    let r_train = heldout_value(&train_joint, &train_joint, task)?;
    let r_test = heldout_value(&train_joint, &test_joint, task)?;
    Ok((r_all, r_train, r_test, r_train - r_test < delta))
}

/// Grid search over explanation and feature cluster counts.
///
/// Returns [`Alg1Outcome::Infeasible`] when no grid point keeps the
/// train/test gap below `delta`.
pub fn run_alg1(dataset: &EvaluationDataset, task: &DecisionTask, config: &CoarseningConfig) -> Result<Alg1Outcome> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::Config("coarsening needs at least two records".into()));
    }
    let prep = prepare(dataset, task, config)?;
    let (train, test) = stratified_split(&prep.states, config.split_fraction, config.seed);
    let n_pred = prep.prediction_values.len();
    let params = config.kmeans_params();

    let mut k_z_grid = config.k_z_grid.clone();
    k_z_grid.sort_unstable();
    k_z_grid.dedup();
    let mut k_x_grid = config.k_x_grid.clone();
    k_x_grid.sort_unstable();
    k_x_grid.dedup();

    let mut diagnostics = Vec::new();
    let mut best: Option<(Scored, BTreeMap<String, Clustering>)> = None;

    for &k_z in &k_z_grid {
        let mut c_z = BTreeMap::new();
        let mut z_labels: Vec<Vec<usize>> = vec![Vec::with_capacity(prep.methods.len()); dataset.len()];
        for (mi, m) in prep.methods.iter().enumerate() {
            let seed = mix_seed(config.seed, &[1, k_z as u64, mi as u64]);
            let (clustering, labels) = Clustering::fit(&prep.z_values[mi], k_z, seed, params, m)?;
            for (row, l) in z_labels.iter_mut().zip(labels) {
                row.push(l);
            }
            c_z.insert(m.clone(), clustering);
        }
        let mut cells: BTreeMap<(Vec<usize>, &str), Vec<usize>> = BTreeMap::new();
        for (i, z) in z_labels.iter().enumerate() {
            cells.entry((z.clone(), prep.predictions[i])).or_default().push(i);
        }

        let candidates: Vec<usize> = k_x_grid
            .iter()
            .copied()
            .filter(|k_x| k_x % (n_pred * k_z) == 0)
            .collect();
        let scored: Vec<Scored> = candidates
            .par_iter()
            .map(|&k_x| {
                let per_cell = k_x / (k_z * n_pred);
                let seed = mix_seed(config.seed, &[2, k_z as u64, k_x as u64]);
                let (cell_models, x_ids) =
                    cluster_cells(&cells, &prep.x_values, per_cell, seed, params, &config.feature)?;
                let (r_all, r_train, r_test, feasible) =
                    score_point(&x_ids, &prep.states, &train, &test, task, config.delta)?;
                Ok(Scored {
                    point: GridPoint {
                        k_z,
                        k_x,
                        per_cell,
                        x_clusters: cell_models.iter().map(|c| c.clustering.len()).sum(),
                        r_all,
                        r_train,
                        r_test,
                        feasible,
                    },
                    cells: cell_models,
                })
            })
            .collect::<Result<_>>()?;

        for s in scored {
            diagnostics.push(s.point);
            let better = s.point.feasible
                && best.as_ref().is_none_or(|(b, _)| s.point.r_all > b.point.r_all);
            if better {
                best = Some((s, c_z.clone()));
            }
        }
    }

    let Some((chosen, c_z)) = best else {
        return Ok(Alg1Outcome::Infeasible {
            delta: config.delta,
            diagnostics,
        });
    };

    let records = dataset.records();
    let mut auxiliary = BTreeMap::new();
    for (ai, name) in config.auxiliary_features.iter().enumerate() {
        let values: Vec<&ColumnValue> = records.iter().map(|r| &r.features[name]).collect();
        let mut cells: BTreeMap<(Vec<usize>, &str), Vec<usize>> = BTreeMap::new();
        for (i, p) in prep.predictions.iter().enumerate() {
            cells.entry((Vec::new(), *p)).or_default().push(i);
        }
        let per_cell = (chosen.point.k_x / n_pred).max(1);
        let seed = mix_seed(config.seed, &[3, ai as u64]);
        let (models, _) = cluster_cells(&cells, &values, per_cell, seed, params, name)?;
        auxiliary.insert(name.clone(), models);
    }

    Ok(Alg1Outcome::Selected(Box::new(CoarseningResult {
        feature: config.feature.clone(),
        explanations: prep.methods,
        prediction_values: prep.prediction_values,
        seed: config.seed,
        delta: config.delta,
        k_z_star: chosen.point.k_z,
        k_x_star: chosen.point.k_x,
        r_star: chosen.point.r_all,
        r_train: chosen.point.r_train,
        r_test: chosen.point.r_test,
        c_z,
        c_x: chosen.cells,
        auxiliary,
        diagnostics,
    })))
}
