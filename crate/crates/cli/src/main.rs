use std::path::PathBuf;
use std::process::ExitCode;

use beltrami_cli::{combined_exit_code, dump_fields, output_root, run_batch, run_file, run_with_artifacts, ScenarioConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beltrami", version, about = "Numerical lab for planar Beltrami equations")]
struct Cli {
    /// Override every seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the data-parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root; defaults to the scenario's output.directory, then $BELTRAMI_LAB_OUT, then ./lab-out.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report.
    Run { scenario: PathBuf },
    /// Run every *.toml scenario in a directory.
    Batch { dir: PathBuf },
    /// Run a scenario and write its fields as CSV (all fields unless the scenario lists some).
    DumpFields { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let code = match cli.command {
        Command::Run { scenario } => {
            let (report, dir) = run_file(&scenario, cli.seed, cli.output.as_deref());
            print_line(&report);
            println!("  report: {}", dir.join("report.json").display());
            report.exit_code
        }
        Command::Batch { dir } => match run_batch(&dir, cli.seed, cli.output.as_deref()) {
            Ok(reports) => {
                reports.iter().for_each(print_line);
                combined_exit_code(reports.iter().map(|r| r.exit_code))
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::DumpFields { scenario } => dump(&scenario, cli.seed, cli.output),
    };
    ExitCode::from(code as u8)
}

fn print_line(r: &beltrami_cli::VerificationReport) {
    let passed = r.rules.iter().filter(|x| x.passed).count();
    print!("{:<32} {:<22} rules {passed}/{}", r.scenario.name, r.status.as_str(), r.rules.len());
    match (&r.failed_stage, &r.error) {
        (Some(stage), Some(err)) => println!("  [{stage}] {err}"),
        _ => println!(),
    }
}

fn dump(path: &std::path::Path, seed: Option<u64>, output: Option<PathBuf>) -> i32 {
    let mut cfg = match ScenarioConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(s) = seed {
        cfg.override_seed(s);
    }
    let root = output_root(output.as_deref(), Some(&cfg));
    let (report, artifacts) = run_with_artifacts(&cfg);
    let names: Vec<String> = if cfg.output.dump.is_empty() {
        artifacts.fields.keys().map(|k| k.to_string()).collect()
    } else {
        cfg.output.dump.clone()
    };
    match dump_fields(&artifacts, &names, &root.join(&cfg.name)) {
        Ok(paths) => {
            for p in &paths {
                println!("{}", p.display());
            }
            if let (Some(stage), Some(err)) = (&report.failed_stage, &report.error) {
                eprintln!("stage {stage} failed: {err}");
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
