//! Runs the theorem verification suite on a few seeds and prints a tally per
//! (theorem, model, option).
//!
//! cargo run --release --example verify_theorems -- 0 1 2

use unlearn_lab::harness::{self, ExperimentConfig, ExperimentKind};

fn main() -> unlearn_lab::Result<()> {
    let mut cfg = ExperimentConfig::for_experiment(ExperimentKind::VerifyTheorems);
    let seeds: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    let out = harness::run(&cfg)?;
    println!("{:<12} {:<18} {:<22} {:>8} {:>12} {:>12}", "theorem", "model", "option", "passed", "max abs", "max rel");
    for t in out.summary["results"].as_array().into_iter().flatten() {
        println!(
            "{:<12} {:<18} {:<22} {:>4}/{:<3} {:>12.3e} {:>12.3e}",
            t["theorem"].as_str().unwrap_or(""),
            t["model"].as_str().unwrap_or(""),
            t["option"].as_str().unwrap_or(""),
            t["passed"],
            t["checked"],
            t["max_abs_gap"].as_f64().unwrap_or(f64::NAN),
            t["max_rel_gap"].as_f64().unwrap_or(f64::NAN),
        );
    }
    println!("exit code {}", out.exit_code);
    Ok(())
}
