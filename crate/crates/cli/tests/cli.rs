use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use beltrami_cli::report::{emit_report, Format, SUMMARY_COLUMNS};
use beltrami_cli::{run_scenario, ScenarioConfig, Status};
use serde_json::Value;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenarios().join(format!("{name}.toml"))).unwrap()
}

fn json(cfg: &ScenarioConfig) -> Value {
    serde_json::to_value(run_scenario(cfg)).unwrap()
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_beltrami"));
    cmd.env_remove("BELTRAMI_LAB_OUT");
    cmd
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, format!("name = \"{name}\"\n{body}")).unwrap();
    path
}

const SMALL: &str = r#"
[grid]
n = 64
[equation]
kind = "constant_reduced"
lambda = [0.4, 0.0]
[family]
kind = "identity_partner"
[verification]
disk_multiples = [4, 8]
"#;

#[test]
fn identity_conformal_has_unit_pairing_and_passes() {
    let v = json(&load("identity_conformal"));
    assert_eq!(v["status"], "pass");
    assert_eq!(v["exit_code"], 0);
    let t = &v["theorem_1_2"];
    assert_eq!(t["pairing_min"].as_f64().unwrap(), -1.0);
    assert_eq!(t["pairing_max"].as_f64().unwrap(), -1.0);
    assert_eq!(t["lambda_sign"]["verdict"], "all-negative");
    // one entry per configured threshold
    assert_eq!(t["zero_fractions"].as_array().unwrap().len(), 3);
    assert!(v["adjoint"]["weak_residual"].as_f64().unwrap() < 1e-5);
}

#[test]
fn report_keys_are_stable() {
    let text = run_scenario(&load("reduced_zero")).to_json();
    // top-level keys are the lines indented by exactly two spaces
    let keys: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") )
        .map(|l| l[3..].split('"').next().unwrap())
        .collect();
    assert_eq!(
        keys,
        [
            "scenario",
            "status",
            "exit_code",
            "failed_stage",
            "error",
            "solver",
            "theorem_1_2",
            "chain_rule",
            "components",
            "adjoint",
            "reverse_holder",
            "zero_measure",
            "rules",
            "timings_ms"
        ]
    );
}

#[test]
fn degenerate_pair_skips_reverse_holder() {
    let v = json(&load("degenerate_pair"));
    assert_eq!(v["status"], "pass");
    assert_eq!(v["theorem_1_2"]["branch"], "degenerate");
    for z in v["theorem_1_2"]["zero_fractions"].as_array().unwrap() {
        assert_eq!(z["fraction"].as_f64().unwrap(), 1.0);
    }
    assert_eq!(v["reverse_holder"], serde_json::json!({"skipped": "degenerate family"}));
}

#[test]
fn counterexample_is_not_a_family() {
    let v = json(&load("counterexample_z_squared"));
    assert_eq!(v["theorem_1_2"]["lambda_sign"]["verdict"], "mixed");
    assert_eq!(v["theorem_1_2"]["branch"], "not-a-family");
    assert_eq!(v["reverse_holder"]["skipped"], "not a linear family");
}

#[test]
fn radial_stretch_meets_oracle() {
    let v = json(&load("radial_stretch_k033"));
    let o = &v["solver"]["oracle"];
    assert_eq!(o["kind"], "radial_stretch");
    assert!(o["error"].as_f64().unwrap() <= 5e-2);
    assert_eq!(v["exit_code"], 0);
}

#[test]
fn reruns_are_identical_apart_from_timings() {
    let cfg = load("reduced_constant_affine");
    let a = run_scenario(&cfg);
    let b = run_scenario(&cfg);
    assert_eq!(a.to_json_without_timings(), b.to_json_without_timings());
    assert!(!a.timings_ms.is_empty());
}

#[test]
fn emit_report_writes_json_and_fixed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&load("reduced_zero"));
    let j = emit_report(&report, Format::Json, dir.path()).unwrap();
    let back: Value = serde_json::from_str(&fs::read_to_string(j).unwrap()).unwrap();
    assert_eq!(back["scenario"]["name"], "reduced_zero");
    let s = emit_report(&report, Format::CsvSummary, dir.path()).unwrap();
    let text = fs::read_to_string(s).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), SUMMARY_COLUMNS.len());
    assert_eq!(row[0], "reduced_zero");
    assert!(lines.next().is_none());
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let report = run_scenario(&load("reduced_zero"));
    assert!(emit_report(&report, Format::Json, &blocker.join("sub")).is_err());
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = |path: &Path| {
        bin()
            .args(["--output", out.to_str().unwrap(), "run", path.to_str().unwrap()])
            .status()
            .unwrap()
            .code()
            .unwrap()
    };
    let ok = write_scenario(dir.path(), "ok", SMALL);
    assert_eq!(run(&ok), 0);

    let bad_grid = write_scenario(dir.path(), "bad_grid", &SMALL.replace("n = 64", "n = 48"));
    assert_eq!(run(&bad_grid), 2);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("bad_grid/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "config-error");
    assert_eq!(report["failed_stage"], "config");

    let elliptic = write_scenario(dir.path(), "elliptic", &SMALL.replace("[0.4, 0.0]", "[1.2, 0.0]"));
    assert_eq!(run(&elliptic), 2);

    let stuck = write_scenario(
        dir.path(),
        "stuck",
        &format!("{SMALL}[solver]\nmax_iter = 1\ntol = 1e-14\n").replace("kind = \"constant_reduced\"\nlambda = [0.4, 0.0]", "kind = \"smooth_bump_reduced\"\nlambda = { amplitude = [0.6, 0.0], radius = 1.0 }"),
    );
    assert_eq!(run(&stuck), 3);

    let wrong = write_scenario(
        dir.path(),
        "wrong",
        &format!("{SMALL}[verification.expect]\nverdict = \"mixed\"\n"),
    );
    assert_eq!(run(&wrong), 1);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("wrong/report.json")).unwrap()).unwrap();
    let failed: Vec<&Value> = report["rules"].as_array().unwrap().iter().filter(|r| r["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "lambda_sign.expected_mixed");

    // batch: config error dominates
    let status = bin()
        .args(["--output", out.to_str().unwrap(), "batch", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 5);
}

#[test]
fn env_var_sets_output_root_and_flag_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "envcase", SMALL);
    let env_root = dir.path().join("from_env");
    let status = bin()
        .env("BELTRAMI_LAB_OUT", &env_root)
        .args(["run", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(env_root.join("envcase/report.json").exists());

    let flag_root = dir.path().join("from_flag");
    let status = bin()
        .env("BELTRAMI_LAB_OUT", &env_root)
        .args(["--output", flag_root.to_str().unwrap(), "run", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_root.join("envcase/report.json").exists());
}

#[test]
fn seed_and_threads_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "seeded", SMALL);
    let read = |root: &Path| {
        let text = fs::read_to_string(root.join("seeded/report.json")).unwrap();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    let go = |root: &Path, extra: &[&str]| {
        let mut args = vec!["--output", root.to_str().unwrap()];
        args.extend_from_slice(extra);
        args.extend(["run", path.to_str().unwrap()]);
        assert!(bin().args(&args).status().unwrap().success());
        read(root)
    };
    let one = go(&dir.path().join("a"), &["--threads", "1"]);
    let many = go(&dir.path().join("b"), &["--threads", "3"]);
    assert_eq!(one, many);
    let seeded = go(&dir.path().join("c"), &["--seed", "99"]);
    assert_eq!(seeded["scenario"]["verification"]["lambda_seed"], 99);
    assert_eq!(seeded["scenario"]["verification"]["disk_seed"], 99);
}

#[test]
fn dump_fields_round_trip_through_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = r#"
[grid]
n = 64
[equation]
kind = "smooth_bump_reduced"
lambda = { amplitude = [0.3, 0.2], center = [0.1, 0.0], radius = 1.5, twist = 0.5 }
[family]
kind = "identity_partner"
[verification]
disk_multiples = [4, 8]
[output]
dump = ["lambda", "psi"]
"#;
    let path = write_scenario(dir.path(), "source", body);
    let status = bin()
        .args(["--output", out.to_str().unwrap(), "dump-fields", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let lambda_csv = out.join("source/fields/lambda.csv");
    assert!(lambda_csv.exists());
    assert!(out.join("source/fields/psi.csv").exists());
    assert!(!out.join("source/fields/mu.csv").exists());

    // a scenario reading λ back from the dump reproduces the original run
    let from_csv = body.replace(
        "kind = \"smooth_bump_reduced\"\nlambda = { amplitude = [0.3, 0.2], center = [0.1, 0.0], radius = 1.5, twist = 0.5 }",
        &format!("kind = \"csv_reduced\"\nlambda = {:?}", lambda_csv.to_str().unwrap()),
    );
    let copy = write_scenario(dir.path(), "source_copy", &from_csv);
    let a = run_scenario(&ScenarioConfig::load(&path).unwrap());
    let b = run_scenario(&ScenarioConfig::load(&copy).unwrap());
    assert_eq!(a.status, Status::Pass);
    assert_eq!(b.status, Status::Pass);
    let strip = |r: &beltrami_cli::VerificationReport| {
        let mut v = serde_json::to_value(r).unwrap();
        let o = v.as_object_mut().unwrap();
        o.remove("timings_ms");
        o.remove("scenario");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn missing_csv_is_a_config_error() {
    let cfg = ScenarioConfig::from_toml(
        "name = \"m\"\n[grid]\nn = 32\n[equation]\nkind = \"csv_reduced\"\nlambda = \"/nonexistent/l.csv\"\n[family]\nkind = \"identity_partner\"\n",
    )
    .unwrap();
    let r = run_scenario(&cfg);
    assert_eq!(r.status, Status::ConfigError);
    assert_eq!(r.failed_stage.as_deref(), Some("coefficients"));
}

#[test]
fn every_bundled_scenario_parses() {
    let files = beltrami_cli::scenario_files(&scenarios()).unwrap();
    assert!(files.len() >= 8);
    for f in files {
        let cfg = ScenarioConfig::load(&f).unwrap();
        assert_eq!(f.file_stem().unwrap().to_str().unwrap(), cfg.name);
    }
}
