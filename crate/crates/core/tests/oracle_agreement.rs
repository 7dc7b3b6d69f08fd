mod common;

use rand::Rng;

use common::{reference_overlap, keep, rng, seminorm};
use unlearn_lab::metrics::{gap_report, LossReport, ModelTag, TolerancePolicy};
use unlearn_lab::oracle::{self, edit_forms_exact};
use unlearn_lab::scenario::{fine_tune_subset, gen_scenario, Distribution, FeatureLayout, SyntheticScenario};
use unlearn_lab::solvers::{self, EditOption};

/// Scenario with `n_r ≥ d_r + d_lap`, where every closed form is exact.
fn exact_regime_scenario(r: &mut impl Rng, seed: u64) -> SyntheticScenario {
    let d_r = r.random_range(2..=10);
    let d_lap = r.random_range(0..=6);
    let d_f = r.random_range(2..=12);
    let layout = FeatureLayout::new(d_r, d_lap, d_f);
    let n_r = r.random_range(d_r + d_lap..layout.dim());
    let n_f = r.random_range(1..=layout.dim() - n_r);
    let dist = if r.random_bool(0.5) { Distribution::StandardNormal } else { Distribution::Uniform };
    gen_scenario(n_r, n_f, layout, seed, dist).unwrap()
}

#[test]
fn two_hundred_random_scenarios_agree_with_the_closed_forms() {
    let policy = TolerancePolicy::default();
    let mut r = rng(200);
    for seed in 0..200 {
        let s = exact_regime_scenario(&mut r, seed);
        assert!(edit_forms_exact(&s, 1e-9).unwrap(), "seed {seed} layout {}", s.layout);
        let w_o = solvers::train_original(&s).unwrap();
        let w_g = solvers::retrain_golden(&s).unwrap();
        let plain = if s.layout.is_distinct() { oracle::predict_thm1(&s) } else { oracle::predict_thm2(&s) }.unwrap();
        let golden = LossReport::measure(&w_g, &s, ModelTag::Golden, None).unwrap();
        assert!(gap_report(&golden, &plain, &policy).unwrap().pass, "golden seed {seed}");

        let n_ts = [1, r.random_range(1..s.n_r()), s.n_r() - 1].into_iter().filter(|&n| n >= 1);
        for n_t in n_ts {
            let (x_t, y_t) = fine_tune_subset(&s, n_t).unwrap();
            let w_t = solvers::fine_tune_unlearn(&w_o, &x_t, &y_t).unwrap();
            let ft = LossReport::measure(&w_t, &s, ModelTag::FineTuned, Some(n_t)).unwrap();
            assert!(gap_report(&ft, &plain, &policy).unwrap().pass, "fine-tune seed {seed} n_t {n_t}");
            for opt in EditOption::for_layout(&s.layout) {
                let edited = solvers::edit_pretrained(&w_o, &s.layout, opt).unwrap();
                let w = solvers::fine_tune_unlearn(&edited, &x_t, &y_t).unwrap();
                let measured = LossReport::measure(&w, &s, ModelTag::EditedFineTuned, Some(n_t)).unwrap();
                let predicted = oracle::predict_thm3(&s, opt, n_t).unwrap();
                let gap = gap_report(&measured, &predicted, &policy).unwrap();
                assert!(gap.pass, "seed {seed} layout {} {opt} n_t {n_t}: {gap:?}", s.layout);
            }
        }
    }
}

#[test]
fn both_golden_forms_agree_on_overlapping_layouts() {
    for seed in 0..20 {
        let s = reference_overlap(seed);
        let stated = oracle::predict_thm2(&s).unwrap().ul_gold;
        let expanded = oracle::thm2_expanded_ul_gold(&s).unwrap();
        assert!((stated - expanded).abs() <= 1e-8 * stated.abs(), "seed {seed}: {stated} vs {expanded}");
    }
}

#[test]
fn distinct_golden_ul_is_the_forget_coefficient_seminorm() {
    let mut r = rng(3);
    for seed in 0..50 {
        let d_r = r.random_range(2..10);
        let d_f = r.random_range(2..10);
        let n_r = r.random_range(1..=d_r);
        let n_f = r.random_range(1..=d_f);
        let s = gen_scenario(n_r, n_f, FeatureLayout::distinct(d_r, d_f), seed, Distribution::StandardNormal).unwrap();
        let w_f = keep(&s.w_star, s.layout.forget_block());
        let expected = seminorm(&w_f, &s.x_f);
        let predicted = oracle::predict_thm1(&s).unwrap().ul_gold;
        assert!((predicted - expected).abs() <= 1e-12 * (1.0 + expected));
    }
}

#[test]
fn closed_form_fine_tune_matches_the_solver() {
    for seed in 0..10 {
        let s = common::reference_distinct(seed);
        let w_o = solvers::train_original(&s).unwrap();
        for n_t in [1, 10, 29] {
            let (x_t, y_t) = fine_tune_subset(&s, n_t).unwrap();
            let w_t = solvers::fine_tune_unlearn(&w_o, &x_t, &y_t).unwrap();
            let closed = solvers::closed_form_wt_distinct(&s, n_t).unwrap();
            assert!((w_t - closed).amax() < 1e-9);
        }
    }
}

#[test]
fn discard_edit_loses_remaining_fit_until_the_subset_spans_the_support() {
    for seed in 0..10 {
        let s = reference_overlap(seed);
        let span = s.layout.remaining_only + s.layout.overlap;
        let w_o = solvers::train_original(&s).unwrap();
        let edited = solvers::edit_pretrained(&w_o, &s.layout, EditOption::OverlapDiscard).unwrap();
        for n_t in 1..s.n_r() {
            let (x_t, y_t) = fine_tune_subset(&s, n_t).unwrap();
            let w = solvers::fine_tune_unlearn(&edited, &x_t, &y_t).unwrap();
            let rl = common::mse(&w, &s.x_r, &s.y_r);
            if n_t < span {
                assert!(rl > 1e-9, "seed {seed} n_t {n_t}: {rl}");
            } else {
                assert!(rl < 1e-9, "seed {seed} n_t {n_t}: {rl}");
            }
        }
    }
}

#[test]
fn median_discard_remaining_loss_grows_with_overlap() {
    let (dim, n_r, n_f, n_t) = (40, 30, 10, 15);
    let mut medians = Vec::new();
    for lap in [0, 2, 4, 6, 8] {
        let rest = dim - lap;
        let layout = FeatureLayout::new(rest / 2, lap, rest / 2);
        let mut losses: Vec<f64> = (0..50)
            .map(|seed| {
                let s = gen_scenario(n_r, n_f, layout, seed, Distribution::StandardNormal).unwrap();
                oracle::predict_thm3(&s, EditOption::OverlapDiscard, n_t).unwrap().rl_edit.unwrap()
            })
            .collect();
        losses.sort_by(f64::total_cmp);
        medians.push((losses[24] + losses[25]) / 2.0);
    }
    assert_eq!(medians[0], 0.0);
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
}
