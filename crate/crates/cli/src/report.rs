//! Report schema and writers.
//!
//! The JSON layout is stable: top-level keys appear in declaration order, and every
//! fragment is either populated or `{"skipped": "<reason>"}`. Only `timings_ms` varies
//! between runs with the same configuration and seeds.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use beltrami_core::family::SignReport;
use beltrami_core::solver::ComponentReport;
use serde::Serialize;

use crate::config::{Pair, ScenarioConfig};
use crate::RunError;

/// A report section that either ran or was skipped for a stated reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Fragment<T> {
    Done(T),
    Skipped { skipped: String },
}

impl<T> Fragment<T> {
    pub fn skipped(reason: impl Into<String>) -> Self {
        Fragment::Skipped { skipped: reason.into() }
    }

    pub fn done(&self) -> Option<&T> {
        match self {
            Fragment::Done(t) => Some(t),
            Fragment::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    VerificationFailure,
    ConfigError,
    ConvergenceFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::VerificationFailure => 1,
            Status::ConfigError => 2,
            Status::ConvergenceFailure => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::VerificationFailure => "verification-failure",
            Status::ConfigError => "config-error",
            Status::ConvergenceFailure => "convergence-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    /// `"phi"` or `"psi"`.
    pub role: &'static str,
    /// `"solved"`, `"explicit"`, `"identity"` or `"scaled"`.
    pub source: &'static str,
    pub linear: Pair,
    pub conj_linear: Option<Pair>,
    pub iterations: Option<usize>,
    pub solver_residual: Option<f64>,
    pub equation_residual: f64,
    pub reduced_residual: Option<f64>,
    pub nonpositive_jacobian_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub kind: &'static str,
    pub error: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverFragment {
    pub k: f64,
    pub quasiconformality: f64,
    pub members: Vec<MemberReport>,
    pub oracle: Fragment<OracleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroFraction {
    /// Relative threshold.
    pub tau: f64,
    /// Absolute threshold `tau·scale`.
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyFragment {
    pub pairing_min: f64,
    pub pairing_max: f64,
    pub pairing_sup: f64,
    /// Scale the `tau` list is relative to.
    pub tau_scale: f64,
    pub zero_fractions: Vec<ZeroFraction>,
    /// Real `(a, b)` with `aΦ + bΨ ≈ 0`, if the pair is linearly dependent.
    pub degenerate: Option<Pair>,
    pub lambda_sign: SignReport,
    /// `"nondegenerate"`, `"degenerate"` or `"not-a-family"`.
    pub branch: &'static str,
    pub sign_violation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRuleFragment {
    pub residual: f64,
    pub masked_fraction: f64,
    pub lambda_sup: f64,
    pub k_prime_bound: f64,
    pub factorized_reduced_residual: f64,
    pub im_fw_min: f64,
    pub im_fw_max: f64,
    pub im_fw_negative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentFragment {
    pub member: &'static str,
    #[serde(flatten)]
    pub report: ComponentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointFragment {
    pub k_ell: f64,
    pub bumps: usize,
    pub weak_residual: f64,
    pub adjoint_residual: f64,
    pub bridge_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusC0 {
    pub multiple: usize,
    pub radius: f64,
    pub c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower_edge: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReverseHolderFragment {
    /// Sign applied to `u_y` before clipping.
    pub orientation: f64,
    pub disks: usize,
    pub skipped_disks: usize,
    pub c0_empirical: f64,
    pub c0_by_radius: Vec<RadiusC0>,
    pub min_ratio: f64,
    pub lower_bound: f64,
    pub ratios_histogram: Vec<HistogramBin>,
    pub clipped_negative_fraction: f64,
    pub significant_negative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroMeasureFragment {
    pub field: &'static str,
    pub zero_fractions: Vec<ZeroFraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: ScenarioConfig,
    pub status: Status,
    pub exit_code: i32,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub solver: Fragment<SolverFragment>,
    pub theorem_1_2: Fragment<DichotomyFragment>,
    pub chain_rule: Fragment<ChainRuleFragment>,
    pub components: Fragment<Vec<ComponentFragment>>,
    pub adjoint: Fragment<AdjointFragment>,
    pub reverse_holder: Fragment<ReverseHolderFragment>,
    pub zero_measure: Fragment<ZeroMeasureFragment>,
    pub rules: Vec<Rule>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with `timings_ms` removed, for reproducibility comparisons.
    pub fn to_json_without_timings(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings_ms");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Fixed column set of the CSV summary.
pub const SUMMARY_COLUMNS: &[&str] = &[
    "scenario",
    "status",
    "exit_code",
    "failed_stage",
    "max_equation_residual",
    "oracle_error",
    "pairing_min",
    "pairing_max",
    "zero_fraction_smallest_tau",
    "branch",
    "lambda_sign_verdict",
    "chain_rule_residual",
    "weak_residual",
    "adjoint_residual",
    "bridge_residual",
    "c0_empirical",
    "rules_passed",
    "rules_total",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

/// One summary row, aligned with [`SUMMARY_COLUMNS`].
pub fn summary_row(r: &VerificationReport) -> Vec<String> {
    let solver = r.solver.done();
    let dich = r.theorem_1_2.done();
    let adj = r.adjoint.done();
    vec![
        r.scenario.name.clone(),
        r.status.as_str().to_string(),
        r.exit_code.to_string(),
        r.failed_stage.clone().unwrap_or_default(),
        opt(solver.map(|s| s.members.iter().map(|m| m.equation_residual).fold(0.0, f64::max))),
        opt(solver.and_then(|s| s.oracle.done()).map(|o| o.error)),
        opt(dich.map(|d| d.pairing_min)),
        opt(dich.map(|d| d.pairing_max)),
        opt(dich.and_then(|d| d.zero_fractions.last()).map(|z| z.fraction)),
        dich.map(|d| d.branch.to_string()).unwrap_or_default(),
        dich.map(|d| verdict_name(&d.lambda_sign)).unwrap_or_default(),
        opt(r.chain_rule.done().map(|c| c.residual)),
        opt(adj.map(|a| a.weak_residual)),
        opt(adj.map(|a| a.adjoint_residual)),
        opt(adj.map(|a| a.bridge_residual)),
        opt(r.reverse_holder.done().map(|h| h.c0_empirical)),
        r.rules.iter().filter(|x| x.passed).count().to_string(),
        r.rules.len().to_string(),
    ]
}

pub(crate) fn verdict_name(s: &SignReport) -> String {
    serde_json::to_value(s.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Write the CSV summary, one row per report.
pub fn write_summary<W: Write>(reports: &[VerificationReport], mut out: W) -> Result<(), RunError> {
    writeln!(out, "{}", SUMMARY_COLUMNS.join(","))?;
    for r in reports {
        let row: Vec<String> = summary_row(r).into_iter().map(|f| csv_escape(&f)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Output formats of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvSummary,
}

/// Write `report.json` or `summary.csv` into `dir` and return the path written.
pub fn emit_report(report: &VerificationReport, format: Format, dir: &Path) -> Result<PathBuf, RunError> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Json => {
            let path = dir.join("report.json");
            fs::write(&path, report.to_json() + "\n")?;
            Ok(path)
        }
        Format::CsvSummary => {
            let path = dir.join("summary.csv");
            write_summary(std::slice::from_ref(report), fs::File::create(&path)?)?;
            Ok(path)
        }
    }
}
