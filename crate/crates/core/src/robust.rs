//! Worst case over V-shaped scoring rules and the Blackwell order.
//!
//! For a binary state the agent reports its posterior `q = P(s = 1 | v)` and
//! is paid by `u_μ`. Minimizing a value difference over a grid of kinks gives
//! a conclusion that holds for every proper scoring rule up to the grid.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision::VShapedRule;
use crate::error::{Error, Result};
use crate::estimands::{Bench, Quantity, ValueEngine};
use crate::joint::EmpiricalJoint;
use crate::numeric::{CompensatedSum, PayoffGrid};

/// Blackwell comparisons allow this much slack per kink.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

/// Ascending kinks strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MuGrid(Vec<f64>);

impl MuGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("μ grid is empty".into()));
        }
        if let Some(&bad) = values.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return Err(Error::InvalidKink(bad));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("μ grid must be strictly ascending".into()));
        }
        Ok(Self(values))
    }

    /// `{step, 2·step, …}` below 1.
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::Config(format!("μ grid step must lie in (0, 1), got {step}")));
        }
        let n = (1.0 / step).round() as usize;
        let values = (1..n).map(|i| i as f64 * step).filter(|m| *m < 1.0).collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for MuGrid {
    fn default() -> Self {
        Self((1..100).map(|i| i as f64 / 100.0).collect())
    }
}

impl TryFrom<Vec<f64>> for MuGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MuGrid> for Vec<f64> {
    fn from(g: MuGrid) -> Self {
        g.0
    }
}

fn check_binary(joint: &EmpiricalJoint) -> Result<()> {
    if joint.n_states() != 2 {
        return Err(Error::NonBinaryStates(joint.n_states()));
    }
    Ok(())
}

fn truthful(rule: &VShapedRule, q: f64) -> f64 {
    rule.expected_score(q, q)
}

/// `R^{u_μ}_V`: posterior reports scored by `u_μ`, averaged over signals.
pub fn v_shaped_value(joint: &EmpiricalJoint, mu: f64) -> Result<f64> {
    check_binary(joint)?;
    let rule = VShapedRule::new(mu)?;
    let mut acc = CompensatedSum::new();
    for v in 0..joint.n_signals() {
        acc.add(joint.signal_mass(v) * truthful(&rule, joint.posterior(v).get(1)));
    }
    Ok(PayoffGrid::for_scale(1.0).snap(acc.value()))
}

/// `R^{u_μ}_∅`: the prior reported and scored.
pub fn v_shaped_baseline(joint: &EmpiricalJoint, mu: f64) -> Result<f64> {
    check_binary(joint)?;
    let rule = VShapedRule::new(mu)?;
    Ok(PayoffGrid::for_scale(1.0).snap(truthful(&rule, joint.prior().get(1))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRow {
    pub mu: f64,
    /// `R^{u_μ}_V` keyed by benchmark name (`r_baseline`, `r_x`, …).
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustDelta {
    pub quantity: String,
    pub min: f64,
    pub argmin_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub grid: MuGrid,
    pub per_mu: Vec<MuRow>,
    pub deltas: Vec<RobustDelta>,
}

impl RobustReport {
    pub fn delta(&self, quantity: &str) -> Option<&RobustDelta> {
        self.deltas.iter().find(|d| d.quantity == quantity)
    }

    /// Long `(mu, spec, value)` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,spec,value\n");
        for row in &self.per_mu {
            for (spec, value) in &row.values {
                out.push_str(&format!("{},{spec},{value}\n", row.mu));
            }
        }
        out
    }
}

/// Per-kink benchmarks and the minimum of every available Δ over the grid.
pub fn robust_values(engine: &ValueEngine, grid: &MuGrid, split: Option<&[usize]>) -> Result<RobustReport> {
    if engine.task().n_states() != 2 {
        return Err(Error::NonBinaryStates(engine.task().n_states()));
    }
    let deltas: Vec<Quantity> = engine
        .available_quantities()
        .into_iter()
        .filter(|q| q.minus.is_some())
        .collect();
    let mut benches: Vec<Bench> = deltas
        .iter()
        .flat_map(|q| [Some(q.plus.clone()), q.minus.clone()])
        .flatten()
        .collect();
    benches.sort();
    benches.dedup();

    let joints: Vec<(String, EmpiricalJoint)> = benches
        .iter()
        .map(|b| {
            let obs = engine.observations(b).expect("available benchmark");
            Ok((b.name(), EmpiricalJoint::fit(obs, split, 0.0)?))
        })
        .collect::<Result<_>>()?;

    let per_mu: Vec<MuRow> = grid
        .values()
        .par_iter()
        .map(|&mu| {
            let values = joints
                .iter()
                .map(|(name, j)| {
                    let v = if name == "r_baseline" {
                        v_shaped_baseline(j, mu)?
                    } else {
                        v_shaped_value(j, mu)?
                    };
                    Ok((name.clone(), v))
                })
                .collect::<Result<_>>()?;
            Ok(MuRow { mu, values })
        })
        .collect::<Result<_>>()?;

    let deltas = deltas
        .iter()
        .map(|q| {
            let plus = q.plus.name();
            let minus = q.minus.as_ref().expect("difference").name();
            let (mut min, mut argmin_mu) = (f64::INFINITY, f64::NAN);
            for row in &per_mu {
                let d = row.values[&plus] - row.values[&minus];
                if d < min {
                    min = d;
                    argmin_mu = row.mu;
                }
            }
            RobustDelta {
                quantity: q.name.clone(),
                min,
                argmin_mu,
            }
        })
        .collect();
    Ok(RobustReport {
        grid: grid.clone(),
        per_mu,
        deltas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub dominates: bool,
    /// A kink where the first signal scores strictly worse.
    pub witness_mu: Option<f64>,
}

/// Whether `first` scores at least as well as `second` under every grid kink.
pub fn blackwell_dominates(first: &EmpiricalJoint, second: &EmpiricalJoint, grid: &MuGrid) -> Result<Dominance> {
    check_binary(first)?;
    check_binary(second)?;
    for &mu in grid.values() {
        if v_shaped_value(first, mu)? < v_shaped_value(second, mu)? - DOMINANCE_TOLERANCE {
            return Ok(Dominance {
                dominates: false,
                witness_mu: Some(mu),
            });
        }
    }
    Ok(Dominance {
        dominates: true,
        witness_mu: None,
    })
}
