use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xvalue::bootstrap::BootstrapConfig;
use xvalue::coarsening::CoarseningConfig;
use xvalue::dataset::DataFormat;
use xvalue::estimands::ColumnRoles;
use xvalue::robust::MuGrid;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stimuli {
    /// Participants saw the same coarsened signals the benchmarks use.
    #[default]
    Coarsened,
    /// Participants saw raw inputs; behavioral and rational values are not directly comparable.
    Raw,
}

/// Everything one run needs. Loaded from JSON; command-line flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Task JSON path or preset (`medical`, `medical:<eps>`, `accuracy`, `accuracy:<n>`).
    pub task: String,
    pub dataset: Option<PathBuf>,
    pub format: Option<DataFormat>,
    pub columns: ColumnRoles,
    pub coarsening: CoarseningConfig,
    pub mu_grid: Option<MuGrid>,
    pub bootstrap: BootstrapConfig,
    /// Control condition label for behavioral comparisons.
    pub control: String,
    /// What participants were shown in the behavioral study.
    pub behavioral_stimuli: Stimuli,
    pub output_dir: PathBuf,
    /// The single seed for the run; copied into coarsening and bootstrap.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: "medical".into(),
            dataset: None,
            format: None,
            columns: ColumnRoles::default(),
            coarsening: CoarseningConfig::default(),
            mu_grid: None,
            bootstrap: BootstrapConfig::default(),
            control: xvalue::dataset::WITHOUT_EXPLANATION.into(),
            behavioral_stimuli: Stimuli::Coarsened,
            output_dir: PathBuf::from("xvalue-out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Propagates the run seed and checks cross-field consistency.
    pub fn finalize(mut self) -> Result<Self, CliError> {
        self.coarsening.seed = self.seed;
        self.bootstrap.seed = self.seed;
        if self.coarsening.feature != self.columns.feature {
            self.coarsening.feature = self.columns.feature.clone();
        }
        if self.coarsening.explanations.is_empty() {
            self.coarsening.explanations = self.columns.explanations.clone();
        }
        self.coarsening.validate().map_err(CliError::from)?;
        self.bootstrap.validate().map_err(CliError::from)?;
        Ok(self)
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::config("no dataset given (set `dataset` or pass --dataset)"))
    }

    pub fn stimuli_note(&self) -> Option<String> {
        (self.behavioral_stimuli == Stimuli::Raw).then(|| {
            "behavioral study declares raw (uncoarsened) stimuli; behavioral values are not on the \
             same signal space as the rational benchmarks"
                .to_string()
        })
    }

    pub fn mu_grid(&self) -> MuGrid {
        self.mu_grid.clone().unwrap_or_default()
    }
}
