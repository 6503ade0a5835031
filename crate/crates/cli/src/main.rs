//! `xvalue`: decision-theoretic evaluation of model explanations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 coarsening
//! infeasible, 5 internal invariant violation.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "xvalue", version, about = "Value-of-explanation estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Task JSON file or preset (medical, medical:<eps>, accuracy, accuracy:<n>).
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Feature column standing for X.
    #[arg(long)]
    feature: Option<String>,
    /// Feature column with what the model sees; `none` disables the check.
    #[arg(long)]
    feature_ai: Option<String>,
    /// Comma-separated explanation methods.
    #[arg(long, value_delimiter = ',')]
    explanations: Option<Vec<String>>,
    /// Largest allowed train/test benchmark gap during coarsening.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    k_z_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k_x_grid: Option<Vec<usize>>,
    #[arg(long)]
    n_resamples: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    /// Step of the V-shaped kink grid.
    #[arg(long)]
    mu_step: Option<f64>,
    /// Control condition label for behavioral comparisons.
    #[arg(long)]
    control: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.task {
            c.task = v.clone();
        }
        if let Some(v) = &self.dataset {
            c.dataset = Some(v.clone());
        }
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.feature {
            c.columns.feature = v.clone();
        }
        if let Some(v) = &self.feature_ai {
            c.columns.feature_ai = (v != "none").then(|| v.clone());
        }
        if let Some(v) = &self.explanations {
            c.columns.explanations = v.clone();
            c.coarsening.explanations = v.clone();
        }
        if let Some(v) = self.delta {
            c.coarsening.delta = v;
        }
        if let Some(v) = &self.k_z_grid {
            c.coarsening.k_z_grid = v.clone();
        }
        if let Some(v) = &self.k_x_grid {
            c.coarsening.k_x_grid = v.clone();
        }
        if let Some(v) = self.n_resamples {
            c.bootstrap.n_resamples = v;
        }
        if let Some(v) = self.level {
            c.bootstrap.level = v;
        }
        if let Some(v) = self.mu_step {
            c.mu_grid = Some(xvalue::robust::MuGrid::with_step(v)?);
        }
        if let Some(v) = &self.control {
            c.control = v.clone();
        }
        c.finalize()
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the signal coarsening and write coarsening.json.
    Coarsen(#[command(flatten)] Common),
    /// Compute the value report.
    Values {
        #[command(flatten)]
        common: Common,
        /// Coarsening artifact; defaults to coarsening.json in the output directory.
        #[arg(long)]
        coarsening: Option<PathBuf>,
        /// Also compute the worst case over V-shaped scoring rules.
        #[arg(long)]
        robust: bool,
        /// Skip bootstrap intervals.
        #[arg(long)]
        no_bootstrap: bool,
    },
    /// Worst case over V-shaped scoring rules.
    Robust {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        coarsening: Option<PathBuf>,
    },
    /// Behavioral value per explanation condition.
    Behavioral(#[command(flatten)] Common),
    /// Sample a dataset from a synthetic spec file or bundled fixture name.
    Simulate {
        #[arg(long)]
        spec: String,
        /// Output JSONL path.
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        n_records: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render report.md from the artifacts in the output directory.
    Report(#[command(flatten)] Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let files = match cli.command {
        Command::Coarsen(common) => commands::coarsen(&common.resolve()?)?,
        Command::Values {
            common,
            coarsening,
            robust,
            no_bootstrap,
        } => commands::values(&common.resolve()?, coarsening.as_deref(), robust, !no_bootstrap)?,
        Command::Robust { common, coarsening } => commands::robust(&common.resolve()?, coarsening.as_deref())?,
        Command::Behavioral(common) => commands::behavioral(&common.resolve()?)?,
        Command::Simulate {
            spec,
            out,
            n_records,
            seed,
        } => commands::simulate(&spec, &out, n_records, seed)?,
        Command::Report(common) => commands::report(&common.resolve()?)?,
    };
    for (name, hash) in files {
        eprintln!("wrote {name} sha256:{hash}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xvalue: {e}");
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
