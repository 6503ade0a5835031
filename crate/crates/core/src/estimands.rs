//! Value-of-explanation estimands.
//!
//! Every estimand is a difference of two rational benchmarks `R_V` computed
//! on the same records:
//!
//! | quantity            | definition            |
//! |---------------------|-----------------------|
//! | `delta_e`           | `R_X − R_∅`           |
//! | `delta_ind_e:<e>`   | `R_Z − R_∅`           |
//! | `delta_cont_e:<e>`  | `R_X − R_Z`           |
//! | `delta_compl`       | `R_X − R_{A^H}`       |
//! | `delta_ind_compl:<e>` | `R_{A^H∪Z} − R_{A^H}` |
//! | `delta_cont_compl:<e>` | `R_X − R_{A^H∪Z}`  |
//!
//! Benchmarks are snapped to a [`PayoffGrid`] before differencing so the
//! decompositions add up exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmark::rational_value;
use crate::dataset::{EvaluationDataset, WITHOUT_EXPLANATION};
use crate::decision::DecisionTask;
use crate::error::{Error, Result};
use crate::joint::EmpiricalJoint;
use crate::numeric::{CompensatedSum, PayoffGrid};
use crate::signal::{ColumnCoder, Observations, SignalColumn, SignalSpec};

/// Which dataset columns play which role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnRoles {
    /// Feature column standing for X.
    pub feature: String,
    /// Feature column holding what the model sees, if recorded.
    pub feature_ai: Option<String>,
    /// Explanation methods; empty means all present in the data.
    pub explanations: Vec<String>,
}

impl Default for ColumnRoles {
    fn default() -> Self {
        Self {
            feature: "x".into(),
            feature_ai: Some("x_ai".into()),
            explanations: Vec::new(),
        }
    }
}

/// A rational benchmark `R_V` by signal role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bench {
    Baseline,
    Features,
    Prediction,
    Explanation(String),
    Human,
    HumanExplanation(String),
    FeaturesAi,
    FeaturesAiHuman,
}

impl Bench {
    pub fn name(&self) -> String {
        match self {
            Bench::Baseline => "r_baseline".into(),
            Bench::Features => "r_x".into(),
            Bench::Prediction => "r_yhat".into(),
            Bench::Explanation(e) => format!("r_z:{e}"),
            Bench::Human => "r_ah".into(),
            Bench::HumanExplanation(e) => format!("r_ah_z:{e}"),
            Bench::FeaturesAi => "r_xai".into(),
            Bench::FeaturesAiHuman => "r_xai_ah".into(),
        }
    }

    fn spec(&self, roles: &ColumnRoles) -> Result<SignalSpec> {
        let x = || SignalColumn::Feature(roles.feature.clone());
        let xai = || {
            roles
                .feature_ai
                .clone()
                .map(SignalColumn::Feature)
                .ok_or_else(|| Error::MissingColumn("features.x_ai (no AI feature column declared)".into()))
        };
        Ok(match self {
            Bench::Baseline => SignalSpec::empty(),
            Bench::Features => SignalSpec::single(x()),
            Bench::Prediction => SignalSpec::single(SignalColumn::Prediction),
            Bench::Explanation(e) => SignalSpec::single(SignalColumn::Explanation(e.clone())),
            Bench::Human => SignalSpec::single(SignalColumn::HumanAction),
            Bench::HumanExplanation(e) => {
                SignalSpec::new(vec![SignalColumn::HumanAction, SignalColumn::Explanation(e.clone())])
            }
            Bench::FeaturesAi => SignalSpec::single(xai()?),
            Bench::FeaturesAiHuman => SignalSpec::new(vec![xai()?, SignalColumn::HumanAction]),
        })
    }
}

/// A named report quantity: a benchmark, or the difference of two.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub name: String,
    pub plus: Bench,
    pub minus: Option<Bench>,
}

impl Quantity {
    fn bench(b: Bench) -> Self {
        Self {
            name: b.name(),
            plus: b,
            minus: None,
        }
    }

    fn diff(name: impl Into<String>, plus: Bench, minus: Bench) -> Self {
        Self {
            name: name.into(),
            plus,
            minus: Some(minus),
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, arg) = match s.split_once(':') {
            Some((b, a)) => (b, Some(a.to_string())),
            None => (s, None),
        };
        let need = |a: Option<String>| a.ok_or_else(|| Error::Config(format!("quantity `{s}` needs `:<explanation>`")));
        let q = match base {
            "r_baseline" => Quantity::bench(Bench::Baseline),
            "r_x" => Quantity::bench(Bench::Features),
            "r_yhat" => Quantity::bench(Bench::Prediction),
            "r_z" => Quantity::bench(Bench::Explanation(need(arg)?)),
            "r_ah" => Quantity::bench(Bench::Human),
            "r_ah_z" => Quantity::bench(Bench::HumanExplanation(need(arg)?)),
            "r_xai" => Quantity::bench(Bench::FeaturesAi),
            "r_xai_ah" => Quantity::bench(Bench::FeaturesAiHuman),
            "delta_e" => Quantity::diff(s, Bench::Features, Bench::Baseline),
            "delta_yhat" => Quantity::diff(s, Bench::Prediction, Bench::Baseline),
            "delta_ind_e" => {
                let e = need(arg)?;
                Quantity::diff(s, Bench::Explanation(e), Bench::Baseline)
            }
            "delta_cont_e" => {
                let e = need(arg)?;
                Quantity::diff(s, Bench::Features, Bench::Explanation(e))
            }
            "delta_compl" => Quantity::diff(s, Bench::Features, Bench::Human),
            "delta_ind_compl" => {
                let e = need(arg)?;
                Quantity::diff(s, Bench::HumanExplanation(e), Bench::Human)
            }
            "delta_cont_compl" => {
                let e = need(arg)?;
                Quantity::diff(s, Bench::Features, Bench::HumanExplanation(e))
            }
            _ => return Err(Error::Config(format!("unknown quantity `{s}`"))),
        };
        Ok(q)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Percentile bootstrap interval around a point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationValues {
    pub r_z: f64,
    pub delta_ind_e: f64,
    pub delta_cont_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_ah_z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_ind_compl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_cont_compl: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complementary {
    pub r_ah: f64,
    pub delta_compl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateInfo {
    pub sufficient: bool,
    pub r_xai: f64,
    pub r_xai_ah: f64,
}

/// Mean realized utility with and without an explanation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralValue {
    pub condition: String,
    pub b: f64,
    pub b_without: f64,
    pub delta: f64,
    pub n_with: usize,
    pub n_without: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub r_baseline: f64,
    pub r_x: f64,
    pub delta_e: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_yhat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_yhat: Option<f64>,
    pub explanations: BTreeMap<String, ExplanationValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complementary: Option<Complementary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub private_info: Option<PrivateInfo>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub behavioral: Vec<BehavioralValue>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub intervals: BTreeMap<String, Interval>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ValueReport {
    /// Every scalar quantity by name, in a fixed order.
    pub fn quantities(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("r_baseline".to_string(), self.r_baseline),
            ("r_x".to_string(), self.r_x),
            ("delta_e".to_string(), self.delta_e),
        ];
        if let (Some(r), Some(d)) = (self.r_yhat, self.delta_yhat) {
            out.push(("r_yhat".into(), r));
            out.push(("delta_yhat".into(), d));
        }
        if let Some(c) = &self.complementary {
            out.push(("r_ah".into(), c.r_ah));
            out.push(("delta_compl".into(), c.delta_compl));
        }
        if let Some(p) = &self.private_info {
            out.push(("r_xai".into(), p.r_xai));
            out.push(("r_xai_ah".into(), p.r_xai_ah));
        }
        for (e, v) in &self.explanations {
            out.push((format!("r_z:{e}"), v.r_z));
            out.push((format!("delta_ind_e:{e}"), v.delta_ind_e));
            out.push((format!("delta_cont_e:{e}"), v.delta_cont_e));
            if let (Some(r), Some(i), Some(c)) = (v.r_ah_z, v.delta_ind_compl, v.delta_cont_compl) {
                out.push((format!("r_ah_z:{e}"), r));
                out.push((format!("delta_ind_compl:{e}"), i));
                out.push((format!("delta_cont_compl:{e}"), c));
            }
        }
        out
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Flat `(quantity, value, ci_low, ci_high)` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value,ci_low,ci_high\n");
        let mut row = |name: &str, value: f64, ci: Option<&Interval>| {
            let (lo, hi) = ci.map_or((String::new(), String::new()), |c| (c.low.to_string(), c.high.to_string()));
            out.push_str(&format!("{name},{value},{lo},{hi}\n"));
        };
        for (name, value) in self.quantities() {
            row(&name, value, self.intervals.get(&name));
        }
        for b in &self.behavioral {
            row(&format!("b:{}", b.condition), b.b, None);
            row(&format!("b_without:{}", b.condition), b.b_without, None);
            row(&format!("delta_behavioral:{}", b.condition), b.delta, b.interval.as_ref());
        }
        out
    }

    /// Long-format span table per explanation, ordered
    /// `R_∅ → R_Z → R_{A^H} → R_{A^H∪Z} → R_X`.
    pub fn plot_rows(&self) -> Vec<SpanRow> {
        let mut rows = Vec::new();
        for (e, v) in &self.explanations {
            let mut spans: Vec<(&str, String, f64)> = vec![
                ("baseline", "r_baseline".into(), self.r_baseline),
                ("explanation", format!("r_z:{e}"), v.r_z),
            ];
            if let Some(c) = &self.complementary {
                spans.push(("human", "r_ah".into(), c.r_ah));
            }
            if let Some(r) = v.r_ah_z {
                spans.push(("human_explanation", format!("r_ah_z:{e}"), r));
            }
            spans.push(("features", "r_x".into(), self.r_x));
            for (position, (level, quantity, value)) in spans.into_iter().enumerate() {
                let ci = self.intervals.get(&quantity);
                rows.push(SpanRow {
                    explanation: e.clone(),
                    position,
                    level: level.to_string(),
                    quantity,
                    value,
                    ci_low: ci.map(|c| c.low),
                    ci_high: ci.map(|c| c.high),
                });
            }
        }
        rows
    }

    pub fn plot_csv(&self) -> String {
        let mut out = String::from("explanation,position,level,quantity,value,ci_low,ci_high\n");
        for r in self.plot_rows() {
            let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.explanation,
                r.position,
                r.level,
                r.quantity,
                r.value,
                f(r.ci_low),
                f(r.ci_high)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanRow {
    pub explanation: String,
    pub position: usize,
    pub level: String,
    pub quantity: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Pre-composed signals for every benchmark the data supports.
///
/// Composition (and any coarsening lookup) happens once; reports on any
/// split or resample only re-count.
#[derive(Debug, Clone)]
pub struct ValueEngine {
    task: DecisionTask,
    grid: PayoffGrid,
    explanations: Vec<String>,
    observations: BTreeMap<Bench, Observations>,
    n: usize,
    notes: Vec<String>,
}

impl ValueEngine {
    pub fn new(
        dataset: &EvaluationDataset,
        task: &DecisionTask,
        coder: Option<&dyn ColumnCoder>,
        roles: &ColumnRoles,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptySplit);
        }
        let explanations = if roles.explanations.is_empty() {
            dataset.explanation_names()
        } else {
            roles.explanations.clone()
        };
        let mut notes = Vec::new();
        let mut benches = vec![Bench::Baseline, Bench::Features];
        let has = |c: SignalColumn| dataset.first_missing(&c).is_none();

        if has(SignalColumn::Prediction) {
            benches.push(Bench::Prediction);
        }
        for e in &explanations {
            if !has(SignalColumn::Explanation(e.clone())) {
                return Err(Error::MissingColumn(format!("explanations.{e}")));
            }
            benches.push(Bench::Explanation(e.clone()));
        }
        let human = has(SignalColumn::HumanAction);
        if human {
            benches.push(Bench::Human);
            benches.extend(explanations.iter().cloned().map(Bench::HumanExplanation));
        } else {
            notes.push(
                "complementary values omitted: human_action is missing on some records".to_string(),
            );
        }
        match &roles.feature_ai {
            Some(ai) if has(SignalColumn::Feature(ai.clone())) => {
                if human {
                    benches.push(Bench::FeaturesAi);
                    benches.push(Bench::FeaturesAiHuman);
                }
            }
            Some(ai) => notes.push(format!(
                "private-information check skipped: features.{ai} is missing on some records"
            )),
            None => {}
        }

        let mut observations = BTreeMap::new();
        for b in benches {
            let spec = b.spec(roles)?;
            observations.insert(b, Observations::compose(dataset, &spec, coder, task)?);
        }
        let max_abs = task
            .utility_table()
            .iter()
            .flatten()
            .fold(0.0f64, |m, u| m.max(u.abs()));
        Ok(Self {
            task: task.clone(),
            grid: PayoffGrid::for_scale(max_abs),
            explanations,
            observations,
            n: dataset.len(),
            notes,
        })
    }

    pub fn task(&self) -> &DecisionTask {
        &self.task
    }

    pub fn n_records(&self) -> usize {
        self.n
    }

    pub fn explanations(&self) -> &[String] {
        &self.explanations
    }

    pub fn grid(&self) -> PayoffGrid {
        self.grid
    }

    pub fn observations(&self, bench: &Bench) -> Option<&Observations> {
        self.observations.get(bench)
    }

    pub fn has(&self, bench: &Bench) -> bool {
        self.observations.contains_key(bench)
    }

    /// Every quantity this engine can evaluate.
    pub fn available_quantities(&self) -> Vec<Quantity> {
        let mut names = vec!["r_baseline", "r_x", "delta_e"].into_iter().map(String::from).collect::<Vec<_>>();
        if self.has(&Bench::Prediction) {
            names.extend(["r_yhat".into(), "delta_yhat".into()]);
        }
        if self.has(&Bench::Human) {
            names.extend(["r_ah".into(), "delta_compl".into()]);
        }
        if self.has(&Bench::FeaturesAi) {
            names.extend(["r_xai".into(), "r_xai_ah".into()]);
        }
        for e in &self.explanations {
            names.extend([format!("r_z:{e}"), format!("delta_ind_e:{e}"), format!("delta_cont_e:{e}")]);
            if self.has(&Bench::Human) {
                names.extend([
                    format!("r_ah_z:{e}"),
                    format!("delta_ind_compl:{e}"),
                    format!("delta_cont_compl:{e}"),
                ]);
            }
        }
        names.iter().map(|n| n.parse().expect("known quantity names")).collect()
    }

    /// Snapped `R_V` for one benchmark over `split` (all records when `None`).
    pub fn benchmark(&self, bench: &Bench, split: Option<&[usize]>) -> Result<f64> {
        let obs = self
            .observations
            .get(bench)
            .ok_or_else(|| Error::MissingColumn(format!("signals for {}", bench.name())))?;
        let joint = EmpiricalJoint::fit(obs, split, 0.0)?;
        Ok(self.grid.snap(rational_value(&joint, &self.task)?))
    }

    /// Evaluates `quantities`, computing each benchmark once.
    pub fn evaluate(&self, quantities: &[Quantity], split: Option<&[usize]>) -> Result<Vec<f64>> {
        let mut cache: BTreeMap<Bench, f64> = BTreeMap::new();
        let mut get = |b: &Bench| -> Result<f64> {
            if let Some(v) = cache.get(b) {
                return Ok(*v);
            }
            let v = self.benchmark(b, split)?;
            cache.insert(b.clone(), v);
            Ok(v)
        };
        quantities
            .iter()
            .map(|q| {
                let plus = get(&q.plus)?;
                Ok(match &q.minus {
                    Some(m) => plus - get(m)?,
                    None => plus,
                })
            })
            .collect()
    }

    pub fn report(&self, split: Option<&[usize]>) -> Result<ValueReport> {
        let quantities = self.available_quantities();
        let values = self.evaluate(&quantities, split)?;
        let v: BTreeMap<&str, f64> = quantities.iter().map(|q| q.name.as_str()).zip(values).collect();
        let mut notes = self.notes.clone();

        let complementary = self.has(&Bench::Human).then(|| Complementary {
            r_ah: v["r_ah"],
            delta_compl: v["delta_compl"],
        });
        if let Some(c) = &complementary {
            if c.delta_compl < 0.0 {
                notes.push(format!(
                    "delta_compl = {} is negative: human decisions carry information beyond the features",
                    c.delta_compl
                ));
            }
        }
        let private_info = self.has(&Bench::FeaturesAi).then(|| {
            let (r_xai, r_xai_ah) = (v["r_xai"], v["r_xai_ah"]);
            PrivateInfo {
                sufficient: !(r_xai_ah > r_xai + PRIVATE_INFO_TOLERANCE),
                r_xai,
                r_xai_ah,
            }
        });
        if let Some(p) = &private_info {
            if !p.sufficient {
                notes.push(format!(
                    "AI features are not sufficient: R_(X_AI ∪ A^H) = {} exceeds R_(X_AI) = {}; \
                     use R_(X_AI ∪ A^H) as the upper bound in place of R_X",
                    p.r_xai_ah, p.r_xai
                ));
            }
        }
        let explanations = self
            .explanations
            .iter()
            .map(|e| {
                let get = |k: String| v.get(k.as_str()).copied();
                (
                    e.clone(),
                    ExplanationValues {
                        r_z: v[format!("r_z:{e}").as_str()],
                        delta_ind_e: v[format!("delta_ind_e:{e}").as_str()],
                        delta_cont_e: v[format!("delta_cont_e:{e}").as_str()],
                        r_ah_z: get(format!("r_ah_z:{e}")),
                        delta_ind_compl: get(format!("delta_ind_compl:{e}")),
                        delta_cont_compl: get(format!("delta_cont_compl:{e}")),
                    },
                )
            })
            .collect();
        Ok(ValueReport {
            r_baseline: v["r_baseline"],
            r_x: v["r_x"],
            delta_e: v["delta_e"],
            r_yhat: v.get("r_yhat").copied(),
            delta_yhat: v.get("delta_yhat").copied(),
            explanations,
            complementary,
            private_info,
            behavioral: Vec::new(),
            intervals: BTreeMap::new(),
            notes,
        })
    }
}

/// Margin by which `R_(X_AI ∪ A^H)` must exceed `R_(X_AI)` to count as
/// private human information.
pub const PRIVATE_INFO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticValue {
    pub delta_e: f64,
    pub r_x: f64,
    pub r_baseline: f64,
}

fn engine_for(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
    benches: &[Bench],
) -> Result<(PayoffGrid, Vec<f64>)> {
    let max_abs = task.utility_table().iter().flatten().fold(0.0f64, |m, u| m.max(u.abs()));
    let grid = PayoffGrid::for_scale(max_abs);
    let values = benches
        .iter()
        .map(|b| {
            let obs = Observations::compose(dataset, &b.spec(roles)?, coder, task)?;
            let joint = EmpiricalJoint::fit(&obs, None, 0.0)?;
            Ok(grid.snap(rational_value(&joint, task)?))
        })
        .collect::<Result<_>>()?;
    Ok((grid, values))
}

/// `Δ_E = R_X − R_∅`.
pub fn theoretic_value(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
) -> Result<TheoreticValue> {
    let (_, v) = engine_for(dataset, task, coder, roles, &[Bench::Features, Bench::Baseline])?;
    Ok(TheoreticValue {
        delta_e: v[0] - v[1],
        r_x: v[0],
        r_baseline: v[1],
    })
}

fn check_explanation(dataset: &EvaluationDataset, name: &str) -> Result<()> {
    if dataset.first_missing(&SignalColumn::Explanation(name.into())).is_some() {
        return Err(Error::UnknownExplanation(name.into()));
    }
    Ok(())
}

fn check_human(dataset: &EvaluationDataset) -> Result<()> {
    let missing = dataset.records().iter().filter(|r| r.human_action.is_none()).count();
    if missing > 0 {
        return Err(Error::MissingHumanAction(missing));
    }
    Ok(())
}

/// `(Δ_ind-E, Δ_cont-E) = (R_Z − R_∅, R_X − R_Z)`.
pub fn decompose_theoretic(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
    explanation: &str,
) -> Result<(f64, f64)> {
    check_explanation(dataset, explanation)?;
    let (_, v) = engine_for(
        dataset,
        task,
        coder,
        roles,
        &[Bench::Features, Bench::Explanation(explanation.into()), Bench::Baseline],
    )?;
    Ok((v[1] - v[2], v[0] - v[1]))
}

/// `(Δ_E_compl, R_{A^H}) = (R_X − R_{A^H}, R_{A^H})`.
pub fn complementary_value(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
) -> Result<(f64, f64)> {
    check_human(dataset)?;
    let (_, v) = engine_for(dataset, task, coder, roles, &[Bench::Features, Bench::Human])?;
    Ok((v[0] - v[1], v[1]))
}

/// `(Δ_ind-E_compl, Δ_cont-E_compl) = (R_{A^H∪Z} − R_{A^H}, R_X − R_{A^H∪Z})`.
pub fn decompose_complementary(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
    explanation: &str,
) -> Result<(f64, f64)> {
    check_human(dataset)?;
    check_explanation(dataset, explanation)?;
    let (_, v) = engine_for(
        dataset,
        task,
        coder,
        roles,
        &[Bench::Features, Bench::HumanExplanation(explanation.into()), Bench::Human],
    )?;
    Ok((v[1] - v[2], v[0] - v[1]))
}

/// Whether the AI features already capture everything in human decisions.
pub fn private_info_check(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    coder: Option<&dyn ColumnCoder>,
    roles: &ColumnRoles,
) -> Result<PrivateInfo> {
    check_human(dataset)?;
    let (_, v) = engine_for(dataset, task, coder, roles, &[Bench::FeaturesAi, Bench::FeaturesAiHuman])?;
    Ok(PrivateInfo {
        sufficient: !(v[1] > v[0] + PRIVATE_INFO_TOLERANCE),
        r_xai: v[0],
        r_xai_ah: v[1],
    })
}

/// Mean utility of the recorded human actions per condition.
fn condition_mean(dataset: &EvaluationDataset, task: &DecisionTask, condition: &str) -> Result<(f64, usize)> {
    let mut acc = CompensatedSum::new();
    let mut n = 0;
    let mut missing = 0;
    for r in dataset.records().iter().filter(|r| r.condition.as_deref() == Some(condition)) {
        let Some(a) = &r.human_action else {
            missing += 1;
            continue;
        };
        acc.add(task.utility(task.action_index(a)?, task.state_index(&r.state)?));
        n += 1;
    }
    if missing > 0 {
        return Err(Error::MissingHumanAction(missing));
    }
    if n == 0 {
        return Err(Error::EmptyCondition(condition.into()));
    }
    Ok((acc.value() / n as f64, n))
}

/// Difference in mean realized utility between `condition` and
/// `control` (normally `without_explanation`).
pub fn behavioral_value_against(
    dataset: &EvaluationDataset,
    task: &DecisionTask,
    condition: &str,
    control: &str,
) -> Result<BehavioralValue> {
    let (b, n_with) = condition_mean(dataset, task, condition)?;
    let (b_without, n_without) = condition_mean(dataset, task, control)?;
    Ok(BehavioralValue {
        condition: condition.into(),
        b,
        b_without,
        delta: b - b_without,
        n_with,
        n_without,
        interval: None,
    })
}

pub fn behavioral_value(dataset: &EvaluationDataset, task: &DecisionTask, condition: &str) -> Result<BehavioralValue> {
    behavioral_value_against(dataset, task, condition, WITHOUT_EXPLANATION)
}

/// Treatment condition labels present in the data (everything but `control`).
pub fn explanation_conditions(dataset: &EvaluationDataset, control: &str) -> Result<Vec<String>> {
    let mut labels: Vec<String> = dataset.records().iter().filter_map(|r| r.condition.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::MissingColumn("condition".into()));
    }
    if !labels.iter().any(|l| l == control) {
        return Err(Error::EmptyCondition(control.into()));
    }
    let treatments: Vec<String> = labels.into_iter().filter(|l| l != control).collect();
    if treatments.is_empty() {
        return Err(Error::EmptyCondition("with_explanation (any explanation condition)".into()));
    }
    Ok(treatments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnValue, EvaluationRecord, WITH_EXPLANATION};

    fn acc() -> DecisionTask {
        DecisionTask::accuracy(2).unwrap()
    }

    struct Row {
        s: usize,
        x: &'static str,
        z: &'static str,
        ah: Option<usize>,
    }

    fn dataset(rows: &[Row]) -> EvaluationDataset {
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, r)| EvaluationRecord {
                id: i.to_string(),
                state: r.s.to_string(),
                prediction: Some("p".into()),
                human_action: r.ah.map(|a| a.to_string()),
                features: [("x".to_string(), ColumnValue::Discrete(r.x.into()))].into(),
                explanations: [("e".to_string(), ColumnValue::Discrete(r.z.into()))].into(),
                ..Default::default()
            })
            .collect();
        EvaluationDataset::new(recs, &acc()).unwrap()
    }

    fn roles() -> ColumnRoles {
        ColumnRoles {
            feature_ai: None,
            ..Default::default()
        }
    }

    fn revealing(z_copy: bool) -> EvaluationDataset {
        let mut rows = Vec::new();
        for i in 0..8 {
            let s = i % 2;
            let x = if s == 0 { "a" } else { "b" };
            rows.push(Row {
                s,
                x,
                z: if z_copy { x } else { "k" },
                ah: Some(if z_copy { s } else { 0 }),
            });
        }
        dataset(&rows)
    }

    #[test]
    fn revealing_features_give_half() {
        let d = revealing(true);
        let t = theoretic_value(&d, &acc(), None, &roles()).unwrap();
        assert_eq!(t.delta_e, 0.5);
        assert_eq!(t.r_x, 1.0);
    }

    #[test]
    fn independent_features_give_zero() {
        let rows: Vec<Row> = (0..8)
            .map(|i| Row {
                s: i % 2,
                x: if i < 4 { "a" } else { "b" },
                z: "k",
                ah: None,
            })
            .collect();
        let t = theoretic_value(&dataset(&rows), &acc(), None, &roles()).unwrap();
        assert_eq!(t.delta_e, 0.0);
    }

    #[test]
    fn copy_and_constant_explanations() {
        let d = revealing(true);
        let (ind, cont) = decompose_theoretic(&d, &acc(), None, &roles(), "e").unwrap();
        assert_eq!((ind, cont), (0.5, 0.0));
        let d = revealing(false);
        let (ind, cont) = decompose_theoretic(&d, &acc(), None, &roles(), "e").unwrap();
        assert_eq!((ind, cont), (0.0, 0.5));
        assert!(matches!(
            decompose_theoretic(&d, &acc(), None, &roles(), "nope"),
            Err(Error::UnknownExplanation(_))
        ));
    }

    #[test]
    fn complementary_examples() {
        // Humans best-respond to x: nothing left to complement.
        let d = revealing(true);
        let (dc, r_ah) = complementary_value(&d, &acc(), None, &roles()).unwrap();
        assert_eq!((dc, r_ah), (0.0, 1.0));
        let (ind, cont) = decompose_complementary(&d, &acc(), None, &roles(), "e").unwrap();
        assert_eq!((ind, cont), (0.0, 0.0));
        // Constant human action: complementary value equals the theoretic value.
        let d = revealing(false);
        let (dc, _) = complementary_value(&d, &acc(), None, &roles()).unwrap();
        assert_eq!(dc, theoretic_value(&d, &acc(), None, &roles()).unwrap().delta_e);
        let (ind, _) = decompose_complementary(&d, &acc(), None, &roles(), "e").unwrap();
        assert_eq!(ind, 0.0);
    }

    #[test]
    fn complementary_requires_human_actions() {
        let rows = [Row { s: 0, x: "a", z: "k", ah: None }, Row { s: 1, x: "b", z: "k", ah: Some(1) }];
        assert!(matches!(
            complementary_value(&dataset(&rows), &acc(), None, &roles()),
            Err(Error::MissingHumanAction(1))
        ));
    }

    #[test]
    fn private_information_detected() {
        let mut recs = Vec::new();
        for i in 0..20 {
            let s = i % 2;
            recs.push(EvaluationRecord {
                id: i.to_string(),
                state: s.to_string(),
                prediction: Some("p".into()),
                human_action: Some(s.to_string()),
                features: [
                    ("x".to_string(), ColumnValue::Discrete("k".into())),
                    ("x_ai".to_string(), ColumnValue::Discrete(((i / 2) % 2).to_string())),
                ]
                .into(),
                ..Default::default()
            });
        }
        let d = EvaluationDataset::new(recs, &acc()).unwrap();
        let p = private_info_check(&d, &acc(), None, &ColumnRoles::default()).unwrap();
        assert!(!p.sufficient);
        assert_eq!(p.r_xai_ah, 1.0);

        // Actions determined by x_ai: sufficient.
        let recs: Vec<EvaluationRecord> = d
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.human_action = Some(r.features["x_ai"].as_discrete().unwrap().to_string());
                r
            })
            .collect();
        let d = EvaluationDataset::new(recs, &acc()).unwrap();
        let p = private_info_check(&d, &acc(), None, &ColumnRoles::default()).unwrap();
        assert!(p.sufficient);
        assert!(matches!(
            private_info_check(&d, &acc(), None, &roles()),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn report_telescopes_and_flattens() {
        let d = revealing(false);
        let e = ValueEngine::new(&d, &acc(), None, &roles()).unwrap();
        let r = e.report(None).unwrap();
        let ex = &r.explanations["e"];
        assert_eq!(ex.delta_ind_e + ex.delta_cont_e, r.delta_e);
        let c = r.complementary.unwrap();
        assert_eq!(ex.delta_ind_compl.unwrap() + ex.delta_cont_compl.unwrap(), c.delta_compl);
        assert_eq!(r.quantity("delta_cont_e:e"), Some(0.5));
        assert!(r.to_csv().starts_with("quantity,value,ci_low,ci_high\nr_baseline,0.5,,\n"));
        let rows = r.plot_rows();
        let levels: Vec<&str> = rows.iter().map(|r| r.level.as_str()).collect();
        assert_eq!(levels, ["baseline", "explanation", "human", "human_explanation", "features"]);
    }

    #[test]
    fn report_without_humans_states_reason() {
        let rows: Vec<Row> = (0..4).map(|i| Row { s: i % 2, x: "a", z: "k", ah: None }).collect();
        let r = ValueEngine::new(&dataset(&rows), &acc(), None, &roles()).unwrap().report(None).unwrap();
        assert!(r.complementary.is_none());
        assert!(r.notes.iter().any(|n| n.contains("human_action")));
    }

    #[test]
    fn quantity_names_parse() {
        for n in ["r_x", "delta_e", "delta_ind_e:lime", "r_ah_z:lime", "delta_cont_compl:e"] {
            assert_eq!(n.parse::<Quantity>().unwrap().name, n);
        }
        assert!("delta_ind_e".parse::<Quantity>().is_err());
        assert!("bogus".parse::<Quantity>().is_err());
    }

    fn behavioral_rows(with_correct: bool, without_correct: bool) -> EvaluationDataset {
        let mut recs = Vec::new();
        for i in 0..10 {
            let s = i % 2;
            for (cond, correct) in [(WITH_EXPLANATION, with_correct), (WITHOUT_EXPLANATION, without_correct)] {
                recs.push(EvaluationRecord {
                    id: format!("{cond}{i}"),
                    state: s.to_string(),
                    human_action: Some(if correct { s } else { 1 - s }.to_string()),
                    condition: Some(cond.into()),
                    ..Default::default()
                });
            }
        }
        EvaluationDataset::new(recs, &acc()).unwrap()
    }

    #[test]
    fn behavioral_examples() {
        let d = behavioral_rows(true, false);
        let b = behavioral_value(&d, &acc(), WITH_EXPLANATION).unwrap();
        assert_eq!((b.b, b.b_without, b.delta), (1.0, 0.0, 1.0));
        let d = behavioral_rows(true, true);
        assert_eq!(behavioral_value(&d, &acc(), WITH_EXPLANATION).unwrap().delta, 0.0);
        let only_with = d.filter(|r| r.condition.as_deref() == Some(WITH_EXPLANATION));
        assert!(matches!(
            behavioral_value(&only_with, &acc(), WITH_EXPLANATION),
            Err(Error::EmptyCondition(_))
        ));
        assert!(explanation_conditions(&only_with, WITHOUT_EXPLANATION).is_err());
        assert_eq!(explanation_conditions(&d, WITHOUT_EXPLANATION).unwrap(), vec![WITH_EXPLANATION.to_string()]);
    }
}
