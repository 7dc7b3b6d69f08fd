//! Median remaining loss after discarding the overlap block, as the overlap
//! grows at fixed total dimension.

use unlearn_lab::oracle::predict_thm3;
use unlearn_lab::scenario::{gen_scenario, Distribution, FeatureLayout};
use unlearn_lab::solvers::EditOption;

fn main() -> unlearn_lab::Result<()> {
    let (dim, n_t) = (40, 15);
    for lap in [0, 2, 4, 6, 8] {
        let layout = FeatureLayout::new((dim - lap) / 2, lap, (dim - lap) / 2);
        let mut rl = Vec::new();
        let mut ul = Vec::new();
        for seed in 0..50 {
            let s = gen_scenario(30, 10, layout, seed, Distribution::StandardNormal)?;
            let p = predict_thm3(&s, EditOption::OverlapDiscard, n_t)?;
            rl.push(p.rl_edit.unwrap_or(f64::NAN));
            ul.push(p.ul_edit.unwrap_or(f64::NAN));
        }
        println!("d_lap {lap:>2}: median RL {:.4}, median UL {:.4}", median(&mut rl), median(&mut ul));
    }
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] }
}
