//! Decision-theoretic evaluation of model explanations.
//!
//! The crate estimates discrete information models from evaluation data and
//! computes rational-agent benchmarks on them: the value an idealized agent
//! could extract from features, predictions, explanations or human decisions,
//! alongside the behavioral effect of showing explanations to people.
//!
//! Module map:
//! - [`decision`]: tasks, beliefs, best responses, scoring rules
//! - [`dataset`], [`signal`], [`joint`]: records, signal composition, empirical joints
//! - [`benchmark`]: `R_V`, `R_∅`, value of information
//! - [`coarsening`]: nested clustering with an overfitting-gap grid search
//! - [`estimands`]: value-of-explanation quantities and the value report
//! - [`robust`], [`bootstrap`]: V-shaped worst case, Blackwell test, percentile intervals
//! - [`synthetic`]: exact information models and boundedly rational agents

pub mod benchmark;
pub mod bootstrap;
pub mod coarsening;
pub mod dataset;
pub mod estimands;
pub mod decision;
pub mod error;
pub mod joint;
pub mod kmeans;
pub mod numeric;
pub mod robust;
pub mod signal;
pub mod synthetic;

pub use error::{Error, Result};
