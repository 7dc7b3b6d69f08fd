//! Runs any experiment from a JSON config and writes CSV plus summary.
//!
//! cargo run --release --example run_config -- config.json out.csv

use std::path::PathBuf;

use unlearn_lab::harness::{self, ExperimentConfig};

fn main() -> unlearn_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| "config.json".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "out.csv".into());
    let cfg = ExperimentConfig::load(&config)?;
    let result = harness::run(&cfg)?;
    let (csv, json) = result.write(&out)?;
    println!("{} rows -> {} and {}", result.table.rows.len(), csv.display(), json.display());
    std::process::exit(result.exit_code);
}
