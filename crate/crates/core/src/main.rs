use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sidiff::experiments::{self, ExperimentConfig, ExperimentKind};
use sidiff::oracle;
use sidiff::potential::{osc_chi, CatalogId, CatalogParams, Potential};

#[derive(Parser)]
#[command(name = "sidiff", version, about = "Self-interacting diffusions under annealing schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; exits 0 iff every criterion passes.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// List potentials, schedule families and experiment kinds.
    Catalog,
    /// Recompute the brute-force reference values into a goldens directory.
    Oracle {
        #[arg(long, default_value = "goldens")]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    ExperimentConfig::from_json(&text)
}

fn report_errors(errors: &[String]) {
    for e in errors {
        eprintln!("error: {e}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(errors) => {
                    report_errors(&errors);
                    return ExitCode::from(2);
                }
            };
            let validation = cfg.validate();
            if !validation.is_ok() {
                report_errors(&validation.errors);
                return ExitCode::from(2);
            }
            for w in &validation.warnings {
                eprintln!("warning: {w}");
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.as_str()));
            let output = match experiments::execute(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Err(e) = output.write(&dir) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            for c in &output.verdict.criteria {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
            }
            println!(
                "{} in {:.1} s, artifacts in {}",
                if output.verdict.passed { "passed" } else { "failed" },
                output.verdict.wall_clock_seconds,
                dir.display()
            );
            if output.verdict.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                let v = cfg.validate();
                report_errors(&v.errors);
                for w in &v.warnings {
                    eprintln!("warning: {w}");
                }
                if v.is_ok() {
                    println!("ok: {}", cfg.experiment.as_str());
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(errors) => {
                report_errors(&errors);
                ExitCode::from(2)
            }
        },
        Command::Catalog => {
            println!("potentials:");
            for id in CatalogId::ALL {
                let p = Potential::from_catalog(id.as_str(), &CatalogParams::default())
                    .expect("catalog defaults are valid");
                let osc = osc_chi(&p);
                println!(
                    "  {:<15} d={} osc(χ)={:.4} threshold={:.4}  {}",
                    id.as_str(),
                    p.dim(),
                    osc,
                    (2.0 * osc).max(p.dim() as f64 / 4.0),
                    id.describe()
                );
            }
            println!("schedules:");
            println!("  constant        g ≡ g0");
            println!("  logarithmic     g(t) = k log(shift + t); give one of k, k_effective, k_relative");
            println!("experiments:");
            for kind in ExperimentKind::ALL {
                println!("  {:<19} criteria: {}", kind.as_str(), experiments::criterion_ids(kind).join(", "));
            }
            ExitCode::SUCCESS
        }
        Command::Oracle { out } => match oracle::write_goldens(&out) {
            Ok(names) => {
                for n in names {
                    println!("{}", out.join(n).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
