//! Compares plain fine-tuning with fine-tuning from an edited pretrained
//! model, against the closed-form predictions.

use unlearn_lab::metrics::{LossReport, ModelTag};
use unlearn_lab::oracle::predict_thm3;
use unlearn_lab::scenario::{fine_tune_subset, gen_scenario, Distribution, FeatureLayout};
use unlearn_lab::solvers::{edit_pretrained, fine_tune_unlearn, retrain_golden, train_original, EditOption};

fn main() -> unlearn_lab::Result<()> {
    let s = gen_scenario(30, 10, FeatureLayout::new(16, 8, 16), 3, Distribution::StandardNormal)?;
    let n_t = 12;
    let (x_t, y_t) = fine_tune_subset(&s, n_t)?;
    let w_o = train_original(&s)?;

    let golden = LossReport::measure(&retrain_golden(&s)?, &s, ModelTag::Golden, None)?;
    let plain = LossReport::measure(&fine_tune_unlearn(&w_o, &x_t, &y_t)?, &s, ModelTag::FineTuned, Some(n_t))?;
    println!("golden      RL {:.6} UL {:.6}", golden.rl, golden.ul);
    println!("fine-tuned  RL {:.6} UL {:.6}", plain.rl, plain.ul);

    for opt in [EditOption::OverlapRetain, EditOption::OverlapDiscard] {
        let w = fine_tune_unlearn(&edit_pretrained(&w_o, &s.layout, opt)?, &x_t, &y_t)?;
        let m = LossReport::measure(&w, &s, ModelTag::EditedFineTuned, Some(n_t))?;
        let p = predict_thm3(&s, opt, n_t)?;
        println!(
            "{:<15} RL {:.6} (predicted {:.6}) UL {:.6} (predicted {:.6})",
            opt.name(),
            m.rl,
            p.rl_edit.unwrap_or(f64::NAN),
            m.ul,
            p.ul_edit.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
