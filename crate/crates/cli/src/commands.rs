use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xvalue::bootstrap::{behavioral_with_ci, bootstrap_report};
use xvalue::coarsening::{run_alg1, Alg1Outcome, CoarseningConfig, CoarseningResult};
use xvalue::dataset::{load_dataset, DatasetSchema, EvaluationDataset, WITHOUT_EXPLANATION};
use xvalue::decision::DecisionTask;
use xvalue::estimands::{explanation_conditions, BehavioralValue, ValueEngine, ValueReport};
use xvalue::robust::{robust_values, RobustReport};
use xvalue::signal::ColumnCoder;
use xvalue::synthetic::SyntheticSpec;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sha256_file, sha256_hex, OutputDir};

pub const COARSENING_FILE: &str = "coarsening.json";
pub const VALUES_FILE: &str = "values.json";
pub const ROBUST_FILE: &str = "robust.json";
pub const BEHAVIORAL_FILE: &str = "behavioral.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoarseningArtifact {
    pub dataset_sha256: String,
    pub seed: u64,
    pub config: CoarseningConfig,
    pub result: CoarseningResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValuesArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset_sha256: String,
    pub coarsening_sha256: Option<String>,
    pub report: ValueReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset_sha256: String,
    pub coarsening_sha256: Option<String>,
    pub robust: RobustReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehavioralArtifact {
    pub config: RunConfig,
    pub seed: u64,
    pub dataset_sha256: String,
    pub control: String,
    pub values: Vec<BehavioralValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn load_task(config: &RunConfig) -> Result<DecisionTask, CliError> {
    DecisionTask::load(&config.task).map_err(|e| CliError::config(format!("task `{}`: {e}", config.task)))
}

fn load_data(config: &RunConfig, task: &DecisionTask) -> Result<(EvaluationDataset, String), CliError> {
    let path = config.dataset_path()?;
    let schema = DatasetSchema {
        format: config.format,
        required: Vec::new(),
    };
    let dataset = load_dataset(path, &schema, task)?;
    Ok((dataset, sha256_file(path)?))
}

pub fn coarsen(config: &RunConfig) -> Result<BTreeMap<String, String>, CliError> {
    let task = load_task(config)?;
    let (dataset, dataset_sha256) = load_data(config, &task)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    match run_alg1(&dataset, &task, &config.coarsening)? {
        Alg1Outcome::Selected(result) => {
            out.write("coarsening_diagnostics.csv", result.diagnostics_csv().as_bytes())?;
            let artifact = CoarseningArtifact {
                dataset_sha256,
                seed: config.seed,
                config: config.coarsening.clone(),
                result: *result,
            };
            out.write_json(COARSENING_FILE, &artifact)?;
            println!(
                "selected K_z* = {}, K_x* = {} (R_train - R_test = {})",
                artifact.result.k_z_star,
                artifact.result.k_x_star,
                artifact.result.r_train - artifact.result.r_test
            );
            out.finish()
        }
        Alg1Outcome::Infeasible { delta, diagnostics } => {
            out.write(
                "coarsening_diagnostics.csv",
                xvalue::coarsening::diagnostics_csv(&diagnostics).as_bytes(),
            )?;
            out.finish()?;
            Err(CliError::infeasible(delta))
        }
    }
}

/// The coarsening to use: an explicit path, else one already in the output
/// directory, else none.
fn load_coarsening(
    config: &RunConfig,
    explicit: Option<&Path>,
    dataset_sha256: &str,
) -> Result<Option<(CoarseningResult, String)>, CliError> {
    let default = config.output_dir.join(COARSENING_FILE);
    let path: PathBuf = match explicit {
        Some(p) => p.to_path_buf(),
        None if default.exists() => default,
        None => return Ok(None),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::data(format!("cannot read coarsening {}: {e}", path.display())))?;
    let artifact: CoarseningArtifact = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("coarsening {}: {e}", path.display())))?;
    if artifact.dataset_sha256 != dataset_sha256 {
        return Err(CliError::data(format!(
            "coarsening {} was fit on a different dataset (sha256 {} vs {})",
            path.display(),
            artifact.dataset_sha256,
            dataset_sha256
        )));
    }
    if artifact.result.feature != config.columns.feature {
        return Err(CliError::config(format!(
            "coarsening clusters feature `{}` but the run declares `{}`",
            artifact.result.feature, config.columns.feature
        )));
    }
    Ok(Some((artifact.result, sha256_hex(text.as_bytes()))))
}

struct Prepared {
    task: DecisionTask,
    dataset: EvaluationDataset,
    dataset_sha256: String,
    coarsening: Option<(CoarseningResult, String)>,
}

impl Prepared {
    fn load(config: &RunConfig, coarsening: Option<&Path>) -> Result<Self, CliError> {
        let task = load_task(config)?;
        let (dataset, dataset_sha256) = load_data(config, &task)?;
        let coarsening = load_coarsening(config, coarsening, &dataset_sha256)?;
        Ok(Self {
            task,
            dataset,
            dataset_sha256,
            coarsening,
        })
    }

    fn engine(&self, config: &RunConfig) -> Result<ValueEngine, CliError> {
        let coder = self.coarsening.as_ref().map(|(c, _)| c as &dyn ColumnCoder);
        Ok(ValueEngine::new(&self.dataset, &self.task, coder, &config.columns)?)
    }

    fn coarsening_sha256(&self) -> Option<String> {
        self.coarsening.as_ref().map(|(_, h)| h.clone())
    }
}

fn behavioral_block(
    config: &RunConfig,
    dataset: &EvaluationDataset,
    task: &DecisionTask,
) -> Result<Vec<BehavioralValue>, CliError> {
    let control = if config.control.is_empty() {
        WITHOUT_EXPLANATION
    } else {
        &config.control
    };
    explanation_conditions(dataset, control)?
        .iter()
        .map(|c| Ok(behavioral_with_ci(dataset, task, c, control, &config.bootstrap)?))
        .collect()
}

pub fn values(
    config: &RunConfig,
    coarsening: Option<&Path>,
    robust: bool,
    bootstrap: bool,
) -> Result<BTreeMap<String, String>, CliError> {
    let prepared = Prepared::load(config, coarsening)?;
    let engine = prepared.engine(config)?;
    let mut report = engine.report(None)?;
    if bootstrap {
        report.intervals = bootstrap_report(&engine, &config.bootstrap)?;
    }
    if prepared.dataset.records().iter().any(|r| r.condition.is_some()) {
        report.behavioral = behavioral_block(config, &prepared.dataset, &prepared.task)?;
        report.notes.extend(config.stimuli_note());
    }
    check_report(&report)?;
    let robust = if robust {
        Some(robust_values(&engine, &config.mu_grid(), None)?)
    } else {
        None
    };

    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("values.csv", report.to_csv().as_bytes())?;
    out.write("values_plot.csv", report.plot_csv().as_bytes())?;
    if let Some(r) = &robust {
        out.write("robust.csv", r.to_csv().as_bytes())?;
        out.write_json(
            ROBUST_FILE,
            &RobustArtifact {
                config: config.clone(),
                seed: config.seed,
                dataset_sha256: prepared.dataset_sha256.clone(),
                coarsening_sha256: prepared.coarsening_sha256(),
                robust: r.clone(),
            },
        )?;
    }
    println!("{}", summary(&report));
    for note in &report.notes {
        println!("note: {note}");
    }
    out.write_json(
        VALUES_FILE,
        &ValuesArtifact {
            config: config.clone(),
            seed: config.seed,
            dataset_sha256: prepared.dataset_sha256.clone(),
            coarsening_sha256: prepared.coarsening_sha256(),
            report,
            robust,
        },
    )?;
    out.finish()
}

/// Re-checks the exact decomposition identities before anything is written.
fn check_report(report: &ValueReport) -> Result<(), CliError> {
    for (e, v) in &report.explanations {
        if v.delta_ind_e + v.delta_cont_e != report.delta_e {
            return Err(CliError::invariant(format!("theoretic decomposition for `{e}` does not add up")));
        }
        if let (Some(c), Some(i), Some(k)) = (&report.complementary, v.delta_ind_compl, v.delta_cont_compl) {
            if i + k != c.delta_compl {
                return Err(CliError::invariant(format!(
                    "complementary decomposition for `{e}` does not add up"
                )));
            }
        }
    }
    Ok(())
}

fn summary(report: &ValueReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "R_baseline = {:.6}  R_X = {:.6}  delta_E = {:.6}",
        report.r_baseline, report.r_x, report.delta_e
    );
    if let Some(c) = &report.complementary {
        let _ = write!(s, "  R_AH = {:.6}  delta_compl = {:.6}", c.r_ah, c.delta_compl);
    }
    s
}

pub fn robust(config: &RunConfig, coarsening: Option<&Path>) -> Result<BTreeMap<String, String>, CliError> {
    let prepared = Prepared::load(config, coarsening)?;
    let engine = prepared.engine(config)?;
    let report = robust_values(&engine, &config.mu_grid(), None)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("robust.csv", report.to_csv().as_bytes())?;
    for d in &report.deltas {
        println!("robust {} = {:.6} at mu = {}", d.quantity, d.min, d.argmin_mu);
    }
    out.write_json(
        ROBUST_FILE,
        &RobustArtifact {
            config: config.clone(),
            seed: config.seed,
            dataset_sha256: prepared.dataset_sha256.clone(),
            coarsening_sha256: prepared.coarsening_sha256(),
            robust: report,
        },
    )?;
    out.finish()
}

pub fn behavioral_csv(values: &[BehavioralValue]) -> String {
    let mut out = String::from("condition,b,b_without,delta,ci_low,ci_high,n_with,n_without\n");
    for v in values {
        let (lo, hi) = v
            .interval
            .map_or((String::new(), String::new()), |i| (i.low.to_string(), i.high.to_string()));
        let _ = writeln!(
            out,
            "{},{},{},{},{lo},{hi},{},{}",
            v.condition, v.b, v.b_without, v.delta, v.n_with, v.n_without
        );
    }
    out
}

pub fn behavioral(config: &RunConfig) -> Result<BTreeMap<String, String>, CliError> {
    let task = load_task(config)?;
    let (dataset, dataset_sha256) = load_data(config, &task)?;
    let values = behavioral_block(config, &dataset, &task)?;
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("behavioral.csv", behavioral_csv(&values).as_bytes())?;
    for v in &values {
        let i = v.interval.expect("bootstrap interval");
        println!(
            "{}: B = {:.4}, B_without = {:.4}, delta = {:.4} [{:.4}, {:.4}]",
            v.condition, v.b, v.b_without, v.delta, i.low, i.high
        );
    }
    out.write_json(
        BEHAVIORAL_FILE,
        &BehavioralArtifact {
            config: config.clone(),
            seed: config.seed,
            dataset_sha256,
            control: config.control.clone(),
            values,
            notes: config.stimuli_note().into_iter().collect(),
        },
    )?;
    out.finish()
}

pub fn simulate(
    spec: &str,
    out_path: &Path,
    n_records: Option<usize>,
    seed: Option<u64>,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut spec = SyntheticSpec::load(spec).map_err(|e| CliError::config(format!("spec `{spec}`: {e}")))?;
    if let Some(n) = n_records {
        spec.n_records = n;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let dataset = spec.generate().map_err(|e| CliError::config(e.to_string()))?;
    let dir = out_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = out_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::config(format!("bad output path {}", out_path.display())))?;
    let mut out = OutputDir::create(dir)?;
    out.write(name, dataset.to_jsonl()?.as_bytes())?;
    println!("wrote {} records to {}", dataset.len(), out_path.display());
    out.finish()
}

fn fmt_ci(intervals: &BTreeMap<String, xvalue::estimands::Interval>, name: &str) -> String {
    intervals
        .get(name)
        .map(|i| format!(" [{:.4}, {:.4}]", i.low, i.high))
        .unwrap_or_default()
}

/// Markdown summary of whatever artifacts exist in the output directory.
pub fn report(config: &RunConfig) -> Result<BTreeMap<String, String>, CliError> {
    let read = |name: &str| -> Result<Option<String>, CliError> {
        let path = config.output_dir.join(name);
        match std::fs::read_to_string(&path) {
            Ok(t) => Ok(Some(t)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::data(format!("cannot read {}: {e}", path.display()))),
        }
    };
    let parse_err = |name: &str, e: serde_json::Error| CliError::data(format!("{name}: {e}"));
    let mut md = String::from("# Value of explanation report\n\n");
    let mut any = false;

    if let Some(text) = read(COARSENING_FILE)? {
        let a: CoarseningArtifact = serde_json::from_str(&text).map_err(|e| parse_err(COARSENING_FILE, e))?;
        any = true;
        let _ = writeln!(md, "## Coarsening\n");
        let _ = writeln!(
            md,
            "K_z* = {}, K_x* = {}, R_train = {:.4}, R_test = {:.4}, delta = {}, seed = {}\n",
            a.result.k_z_star, a.result.k_x_star, a.result.r_train, a.result.r_test, a.result.delta, a.seed
        );
    }
    if let Some(text) = read(VALUES_FILE)? {
        let a: ValuesArtifact = serde_json::from_str(&text).map_err(|e| parse_err(VALUES_FILE, e))?;
        any = true;
        let r = &a.report;
        let _ = writeln!(md, "## Theoretic and complementary values\n");
        let _ = writeln!(md, "| quantity | value | 95% CI |\n|---|---|---|");
        for (name, value) in r.quantities() {
            let _ = writeln!(md, "| {name} | {value:.4} |{} |", fmt_ci(&r.intervals, &name));
        }
        if let Some(p) = &r.private_info {
            let _ = writeln!(
                md,
                "\nAI features sufficient: {} (R_xai = {:.4}, R_xai_ah = {:.4})",
                p.sufficient, p.r_xai, p.r_xai_ah
            );
        }
        for n in &r.notes {
            let _ = writeln!(md, "\n> {n}");
        }
        let _ = writeln!(md, "\nseed = {}, dataset sha256 = {}\n", a.seed, a.dataset_sha256);
    }
    if let Some(text) = read(ROBUST_FILE)? {
        let a: RobustArtifact = serde_json::from_str(&text).map_err(|e| parse_err(ROBUST_FILE, e))?;
        any = true;
        let _ = writeln!(md, "## Robust values over V-shaped scoring rules\n");
        let _ = writeln!(md, "| quantity | min over mu | argmin mu |\n|---|---|---|");
        for d in &a.robust.deltas {
            let _ = writeln!(md, "| {} | {:.4} | {} |", d.quantity, d.min, d.argmin_mu);
        }
        md.push('\n');
    }
    if let Some(text) = read(BEHAVIORAL_FILE)? {
        let a: BehavioralArtifact = serde_json::from_str(&text).map_err(|e| parse_err(BEHAVIORAL_FILE, e))?;
        any = true;
        let _ = writeln!(md, "## Behavioral values (control: {})\n", a.control);
        let _ = writeln!(md, "| condition | B | B without | delta | 95% CI |\n|---|---|---|---|---|");
        for v in &a.values {
            let ci = v.interval.map(|i| format!("[{:.2}, {:.2}]", i.low, i.high)).unwrap_or_default();
            let _ = writeln!(
                md,
                "| {} | {:.4} | {:.4} | {:.2} | {ci} |",
                v.condition, v.b, v.b_without, v.delta
            );
        }
        md.push('\n');
    }
    if !any {
        return Err(CliError::data(format!(
            "no artifacts in {}; run coarsen, values, robust or behavioral first",
            config.output_dir.display()
        )));
    }
    let mut out = OutputDir::create(&config.output_dir)?;
    out.write("report.md", md.as_bytes())?;
    print!("{md}");
    out.finish()
}
