//! Linear-regression experiments: theorem verification, fine-tuning subset
//! sweeps and overlap sweeps.

use std::time::Instant;

use crate::error::Result;
use crate::linalg::WeightVector;
use crate::metrics::{gap_report, FieldGap, GapReport, LossReport, ModelTag, TolerancePolicy};
use crate::oracle::{self, TheoremPrediction, TheoremTag};
use crate::scenario::{fine_tune_subset, gen_scenario, FeatureLayout, SyntheticScenario};
use crate::solvers::{self, EditOption};

use super::config::ExperimentConfig;
use super::table::Cell;

pub const VERIFY_COLUMNS: &[&str] = &[
    "experiment",
    "seed",
    "d_r",
    "d_lap",
    "d_f",
    "n_t",
    "theorem",
    "option",
    "model",
    "form",
    "measured_rl",
    "measured_ul",
    "predicted_rl",
    "predicted_ul",
    "abs_gap_rl",
    "abs_gap_ul",
    "rel_gap_rl",
    "rel_gap_ul",
    "pass",
    "runtime_seconds",
];

pub const SWEEP_NT_COLUMNS: &[&str] = &[
    "experiment",
    "seed",
    "d_r",
    "d_lap",
    "d_f",
    "n_t",
    "ft_rl",
    "ft_ul",
    "golden_rl",
    "golden_ul",
    "retain_rl",
    "retain_ul",
    "discard_rl",
    "discard_ul",
    "runtime_seconds",
];

pub const SWEEP_OVERLAP_COLUMNS: &[&str] = &[
    "experiment",
    "seed",
    "d_r",
    "d_lap",
    "d_f",
    "n_t",
    "golden_ul",
    "retain_rl",
    "retain_ul",
    "discard_rl",
    "discard_ul",
    "predicted_discard_rl",
    "runtime_seconds",
];

/// One verification outcome, before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub seed: u64,
    pub layout: FeatureLayout,
    /// `None` for models that do not depend on the fine-tuning subset.
    pub n_t: Option<usize>,
    pub theorem: TheoremTag,
    pub option: Option<EditOption>,
    pub model: ModelTag,
    /// Which closed form produced the prediction.
    pub form: &'static str,
    pub gap: GapReport,
    pub runtime_seconds: f64,
}

impl VerifyRow {
    pub fn pass(&self) -> bool {
        self.gap.pass
    }

    fn failed(seed: u64, layout: FeatureLayout, n_t: Option<usize>, theorem: TheoremTag, err: &str) -> Self {
        log::warn!("seed {seed} layout {layout}: {err}");
        let nan = |f: &str| FieldGap {
            field: f.into(),
            measured: f64::NAN,
            predicted: f64::NAN,
            absolute: f64::NAN,
            relative: f64::NAN,
            pass: false,
        };
        VerifyRow {
            seed,
            layout,
            n_t,
            theorem,
            option: None,
            model: ModelTag::FineTuned,
            form: "error",
            gap: GapReport { model_tag: ModelTag::FineTuned, fields: vec![nan("rl"), nan("ul")], pass: false },
            runtime_seconds: 0.0,
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let rl = &self.gap.fields[0];
        let ul = &self.gap.fields[1];
        vec![
            "verify-theorems".into(),
            self.seed.into(),
            self.layout.remaining_only.into(),
            self.layout.overlap.into(),
            self.layout.forget_only.into(),
            self.n_t.map_or(Cell::from("all"), Cell::from),
            self.theorem.name().into(),
            self.option.map_or("none", |o| o.name()).into(),
            self.model.name().into(),
            self.form.into(),
            rl.measured.into(),
            ul.measured.into(),
            rl.predicted.into(),
            ul.predicted.into(),
            rl.absolute.into(),
            ul.absolute.into(),
            rl.relative.into(),
            ul.relative.into(),
            self.pass().into(),
            self.runtime_seconds.into(),
        ]
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let started = Instant::now();
    let out = f()?;
    Ok((out, started.elapsed().as_secs_f64()))
}

/// Golden-model check. Without overlap the distinct-feature form is used;
/// with overlap the stated form is tried first and the block-expanded form
/// second, and the row records which one agreed.
fn verify_golden(
    s: &SyntheticScenario,
    w_g: &WeightVector,
    runtime: f64,
    policy: &TolerancePolicy,
) -> Result<VerifyRow> {
    let measured = LossReport::measure(w_g, s, ModelTag::Golden, None)?;
    let (prediction, mut form) = if s.layout.is_distinct() {
        (oracle::predict_thm1(s)?, "stated")
    } else {
        (oracle::predict_thm2(s)?, "stated")
    };
    let mut gap = gap_report(&measured, &prediction, policy)?;
    if !gap.pass && !s.layout.is_distinct() {
        let expanded = TheoremPrediction { ul_gold: oracle::thm2_expanded_ul_gold(s)?, ..prediction.clone() };
        let alt = gap_report(&measured, &expanded, policy)?;
        log::warn!(
            "seed {} layout {}: stated golden UL {:.6e} disagrees with measured {:.6e}; expanded form gives {:.6e}",
            s.seed,
            s.layout,
            prediction.ul_gold,
            measured.ul,
            expanded.ul_gold
        );
        if alt.pass {
            gap = alt;
            form = "expanded";
        }
    }
    Ok(VerifyRow {
        seed: s.seed,
        layout: s.layout,
        n_t: None,
        theorem: prediction.tag,
        option: None,
        model: ModelTag::Golden,
        form,
        gap,
        runtime_seconds: runtime,
    })
}

fn verify_scenario(s: &SyntheticScenario, cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let policy = cfg.tolerance;
    let w_o = solvers::train_original(s)?;
    let (w_g, golden_time) = timed(|| solvers::retrain_golden(s))?;
    let mut rows = vec![verify_golden(s, &w_g, golden_time, &policy)?];

    let plain = if s.layout.is_distinct() { oracle::predict_thm1(s)? } else { oracle::predict_thm2(s)? };
    for n_t in cfg.n_t_range() {
        let (x_t, y_t) = fine_tune_subset(s, n_t)?;
        let (w_t, t) = timed(|| solvers::fine_tune_unlearn(&w_o, &x_t, &y_t))?;
        let measured = LossReport::measure(&w_t, s, ModelTag::FineTuned, Some(n_t))?;
        rows.push(VerifyRow {
            seed: s.seed,
            layout: s.layout,
            n_t: Some(n_t),
            theorem: plain.tag,
            option: None,
            model: ModelTag::FineTuned,
            form: "stated",
            gap: gap_report(&measured, &plain, &policy)?,
            runtime_seconds: t,
        });

        for opt in EditOption::for_layout(&s.layout) {
            let (w_e, t) = timed(|| {
                let edited = solvers::edit_pretrained(&w_o, &s.layout, opt)?;
                solvers::fine_tune_unlearn(&edited, &x_t, &y_t)
            })?;
            let measured = LossReport::measure(&w_e, s, ModelTag::EditedFineTuned, Some(n_t))?;
            let prediction = oracle::predict_thm3(s, opt, n_t)?;
            rows.push(VerifyRow {
                seed: s.seed,
                layout: s.layout,
                n_t: Some(n_t),
                theorem: prediction.tag,
                option: Some(opt),
                model: ModelTag::EditedFineTuned,
                form: "stated",
                gap: gap_report(&measured, &prediction, &policy)?,
                runtime_seconds: t,
            });
        }
    }
    Ok(rows)
}

/// All verification rows for one seed, across every configured layout.
pub fn verify_seed(cfg: &ExperimentConfig, seed: u64) -> Vec<VerifyRow> {
    let sc = &cfg.scenario;
    let mut rows = Vec::new();
    for &layout in &sc.layouts {
        let tag = if layout.is_distinct() { TheoremTag::T1 } else { TheoremTag::T2 };
        let outcome = gen_scenario(sc.n_r, sc.n_f, layout, seed, sc.dist)
            .and_then(|s| verify_scenario(&s, cfg));
        match outcome {
            Ok(r) => rows.extend(r),
            Err(e) => rows.push(VerifyRow::failed(seed, layout, None, tag, &e.to_string())),
        }
    }
    rows
}

/// Measured losses of the plain and both edited fine-tuning pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct NtPoint {
    pub n_t: usize,
    pub ft: LossReport,
    pub golden: LossReport,
    pub retain: LossReport,
    pub discard: LossReport,
    pub runtime_seconds: f64,
}

pub fn sweep_points(s: &SyntheticScenario, n_ts: impl IntoIterator<Item = usize>) -> Result<Vec<NtPoint>> {
    let w_o = solvers::train_original(s)?;
    let w_g = solvers::retrain_golden(s)?;
    let golden = LossReport::measure(&w_g, s, ModelTag::Golden, None)?;
    let retain_anchor = solvers::edit_pretrained(&w_o, &s.layout, EditOption::OverlapRetain)?;
    let discard_anchor = solvers::edit_pretrained(&w_o, &s.layout, EditOption::OverlapDiscard)?;
    n_ts.into_iter()
        .map(|n_t| {
            let (x_t, y_t) = fine_tune_subset(s, n_t)?;
            let (w_t, t) = timed(|| solvers::fine_tune_unlearn(&w_o, &x_t, &y_t))?;
            let w_a = solvers::fine_tune_unlearn(&retain_anchor, &x_t, &y_t)?;
            let w_b = solvers::fine_tune_unlearn(&discard_anchor, &x_t, &y_t)?;
            let tag = ModelTag::EditedFineTuned;
            Ok(NtPoint {
                n_t,
                ft: LossReport::measure(&w_t, s, ModelTag::FineTuned, Some(n_t))?,
                golden: golden.clone(),
                retain: LossReport::measure(&w_a, s, tag, Some(n_t))?,
                discard: LossReport::measure(&w_b, s, tag, Some(n_t))?,
                runtime_seconds: t,
            })
        })
        .collect()
}

pub fn sweep_nt_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Vec<Cell>>> {
    let sc = &cfg.scenario;
    let mut rows = Vec::new();
    for &layout in &sc.layouts {
        let s = gen_scenario(sc.n_r, sc.n_f, layout, seed, sc.dist)?;
        for p in sweep_points(&s, cfg.n_t_range())? {
            rows.push(vec![
                "sweep-nt".into(),
                seed.into(),
                layout.remaining_only.into(),
                layout.overlap.into(),
                layout.forget_only.into(),
                p.n_t.into(),
                p.ft.rl.into(),
                p.ft.ul.into(),
                p.golden.rl.into(),
                p.golden.ul.into(),
                p.retain.rl.into(),
                p.retain.ul.into(),
                p.discard.rl.into(),
                p.discard.ul.into(),
                p.runtime_seconds.into(),
            ]);
        }
    }
    Ok(rows)
}

pub fn sweep_overlap_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Vec<Cell>>> {
    let sc = &cfg.scenario;
    let n_t = cfg.sweep.overlap_n_t;
    let mut rows = Vec::new();
    for layout in cfg.overlap_layouts()? {
        let s = gen_scenario(sc.n_r, sc.n_f, layout, seed, sc.dist)?;
        let p = sweep_points(&s, [n_t])?.remove(0);
        let predicted = oracle::predict_thm3(&s, EditOption::OverlapDiscard, n_t)?;
        rows.push(vec![
            "sweep-overlap".into(),
            seed.into(),
            layout.remaining_only.into(),
            layout.overlap.into(),
            layout.forget_only.into(),
            n_t.into(),
            p.golden.ul.into(),
            p.retain.rl.into(),
            p.retain.ul.into(),
            p.discard.rl.into(),
            p.discard.ul.into(),
            predicted.rl_edit.unwrap_or(f64::NAN).into(),
            p.runtime_seconds.into(),
        ]);
    }
    Ok(rows)
}
