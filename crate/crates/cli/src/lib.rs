//! Scenario-driven orchestration of the Beltrami lab: TOML scenarios in, JSON
//! reports, CSV summaries and CSV field dumps out.

// range checks are written `!(x < max)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod runner;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::ScenarioConfig;
pub use report::{emit_report, Format, Status, VerificationReport};
pub use runner::{run_scenario, run_with_artifacts, Artifacts};

/// Environment variable holding the default output root.
pub const OUTPUT_ENV: &str = "BELTRAMI_LAB_OUT";
/// Output root used when neither `--output`, the scenario, nor the environment set one.
pub const DEFAULT_OUTPUT: &str = "lab-out";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lab(#[from] beltrami_core::LabError),
}

impl RunError {
    pub(crate) fn config(e: impl std::fmt::Display) -> Self {
        RunError::Config(e.to_string())
    }
}

/// Exit code for a set of runs: config errors dominate, then convergence
/// failures, then verification failures.
pub fn combined_exit_code(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes
        .into_iter()
        .max_by_key(|&c| match c {
            2 => 3,
            3 => 2,
            1 => 1,
            _ => 0,
        })
        .unwrap_or(0)
}

/// Output root: explicit flag, then the scenario's own setting, then the environment.
pub fn output_root(flag: Option<&Path>, cfg: Option<&ScenarioConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg.and_then(|c| c.output.directory.clone()) {
        return p;
    }
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Write the named fields as CSV dumps under `dir/fields/`; returns the paths written.
pub fn dump_fields(artifacts: &Artifacts, names: &[String], dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    if names.is_empty() {
        return Ok(Vec::new());
    }
    let fields_dir = dir.join("fields");
    fs::create_dir_all(&fields_dir)?;
    let mut written = Vec::new();
    for name in names {
        if let Some(field) = artifacts.fields.get(name.as_str()) {
            let path = fields_dir.join(format!("{name}.csv"));
            field.save_csv(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Run one scenario file and write its report, summary and configured dumps
/// under `<root>/<name>/`.
pub fn run_file(path: &Path, seed: Option<u64>, output: Option<&Path>) -> (VerificationReport, PathBuf) {
    let loaded = ScenarioConfig::load(path).map(|mut cfg| {
        if let Some(s) = seed {
            cfg.override_seed(s);
        }
        cfg
    });
    let (report, artifacts, root) = match loaded {
        Ok(cfg) => {
            let root = output_root(output, Some(&cfg));
            let (report, artifacts) = run_with_artifacts(&cfg);
            (report, artifacts, root)
        }
        Err(e) => (config_failure(path, &e), Artifacts::default(), output_root(output, None)),
    };
    let dir = root.join(&report.scenario.name);
    (write_outputs(&report, &artifacts, &dir), dir)
}

fn write_outputs(report: &VerificationReport, artifacts: &Artifacts, dir: &Path) -> VerificationReport {
    let mut report = report.clone();
    let result = emit_report(&report, Format::Json, dir)
        .and_then(|_| emit_report(&report, Format::CsvSummary, dir))
        .and_then(|_| dump_fields(artifacts, &report.scenario.output.dump, dir));
    if let Err(e) = result {
        report.status = Status::ConfigError;
        report.exit_code = Status::ConfigError.exit_code();
        report.failed_stage = Some("output".into());
        report.error = Some(e.to_string());
    }
    report
}

/// A report for a scenario file that could not be loaded.
pub fn config_failure(path: &Path, e: &RunError) -> VerificationReport {
    use report::Fragment;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    const REASON: &str = "configuration error";
    VerificationReport {
        scenario: placeholder_config(name),
        status: Status::ConfigError,
        exit_code: Status::ConfigError.exit_code(),
        failed_stage: Some("config".into()),
        error: Some(e.to_string()),
        solver: Fragment::skipped(REASON),
        theorem_1_2: Fragment::skipped(REASON),
        chain_rule: Fragment::skipped(REASON),
        components: Fragment::skipped(REASON),
        adjoint: Fragment::skipped(REASON),
        reverse_holder: Fragment::skipped(REASON),
        zero_measure: Fragment::skipped(REASON),
        rules: Vec::new(),
        timings_ms: Default::default(),
    }
}

fn placeholder_config(name: String) -> ScenarioConfig {
    use config::*;
    ScenarioConfig {
        name,
        description: String::new(),
        grid: GridConfig {
            n: 0,
            side: 0.0,
            origin: [0.0, 0.0],
        },
        equation: EquationConfig::Zero,
        family: FamilyConfig::IdentityPartner { partner: [0.0, 1.0] },
        solver: SolverConfig::default(),
        verification: VerificationConfig::default(),
        output: OutputConfig::default(),
    }
}

/// Scenario files (`*.toml`) in `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Run every scenario in `dir` in name order and write `<root>/summary.csv`.
pub fn run_batch(dir: &Path, seed: Option<u64>, output: Option<&Path>) -> Result<Vec<VerificationReport>, RunError> {
    let files = scenario_files(dir)?;
    let root = output_root(output, None);
    let reports: Vec<VerificationReport> = files
        .iter()
        .map(|f| run_file(f, seed, Some(&root)).0)
        .collect();
    fs::create_dir_all(&root)?;
    report::write_summary(&reports, fs::File::create(root.join("summary.csv"))?)?;
    Ok(reports)
}
