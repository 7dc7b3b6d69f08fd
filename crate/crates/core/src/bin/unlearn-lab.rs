use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use unlearn_lab::harness::{self, ExperimentConfig, ExperimentKind, EXIT_CONFIG};
use unlearn_lab::LabError;

/// Runs one unlearning experiment and writes a CSV plus a JSON summary.
#[derive(Parser, Debug)]
#[command(name = "unlearn-lab", version)]
struct Args {
    /// verify-theorems | sweep-nt | sweep-overlap | classifier-demo | sweep-alpha
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// CSV path; the summary goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    tolerance: Option<f64>,
}

fn load(args: &Args) -> Result<ExperimentConfig, LabError> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let mut cfg = ExperimentConfig::load(&args.config)?;
    match cfg.experiment {
        Some(k) if k != kind => {
            return Err(LabError::InvalidConfig(format!(
                "config is for '{k}' but '{kind}' was requested"
            )))
        }
        _ => cfg.experiment = Some(kind),
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(tol) = args.tolerance {
        if !(tol >= 0.0) {
            return Err(LabError::InvalidConfig(format!("tolerance {tol} must be nonnegative")));
        }
        cfg.tolerance = cfg.tolerance.with_override(tol);
    }
    if let Some(out) = &args.out {
        cfg.output_path = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let outcome = load(&args).and_then(|cfg| {
        let out = harness::run(&cfg)?;
        let path = cfg
            .output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", out.experiment.name())));
        let (csv, json) = out.write(&path)?;
        eprintln!("wrote {} and {}", csv.display(), json.display());
        Ok(out)
    });
    match outcome {
        Ok(out) => {
            for f in &out.failures {
                eprintln!("FAIL {f}");
            }
            println!("{} {}", out.experiment.name(), if out.pass() { "pass" } else { "fail" });
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                LabError::InvalidConfig(_) | LabError::Json(_) => EXIT_CONFIG,
                _ => harness::EXIT_NUMERICAL,
            };
            ExitCode::from(code as u8)
        }
    }
}
