//! Losses of plain and edited fine-tuning as the fine-tuning subset grows.

use unlearn_lab::harness::linear::sweep_points;
use unlearn_lab::scenario::{gen_scenario, Distribution, FeatureLayout};

fn main() -> unlearn_lab::Result<()> {
    for layout in [FeatureLayout::distinct(20, 20), FeatureLayout::new(16, 8, 16)] {
        let s = gen_scenario(30, 10, layout, 0, Distribution::StandardNormal)?;
        println!("layout {layout}");
        println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "n_t", "ft_ul", "gold_ul", "A_rl", "A_ul", "B_rl", "B_ul");
        for p in sweep_points(&s, (1..30).step_by(4))? {
            println!(
                "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                p.n_t, p.ft.ul, p.golden.ul, p.retain.rl, p.retain.ul, p.discard.rl, p.discard.ul
            );
        }
        println!();
    }
    Ok(())
}
