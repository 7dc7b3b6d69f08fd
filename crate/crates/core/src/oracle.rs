//! Closed-form predictions of the remaining loss (RL) and unlearning loss
//! (UL) of the fine-tuned, retrained and edited-then-fine-tuned models.
//!
//! Every loss is a weighted seminorm `‖v‖²` with weight `(1/n)·X·Xᵀ`, the
//! same normalization as [`crate::metrics::mse_loss`]. The closed forms are
//! evaluated exactly as written; agreement with direct measurement is left
//! to the callers (see [`crate::metrics::gap_report`]).
//!
//! The two overlapping-feature edit predictions substitute `P·w*` for the
//! surviving block of the pretrained model. That substitution is exact when
//! the remaining samples span every remaining-only and overlapping
//! coordinate (`n_r ≥ d_r + d_lap` with generic data);
//! [`edit_forms_exact`] reports whether a scenario is in that regime.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, weighted_seminorm_sq, DenseMatrix};
use crate::scenario::{decompose_w_star, fine_tune_subset, SyntheticScenario};
use crate::solvers::EditOption;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    /// Distinct features, plain fine-tuning vs retraining.
    T1,
    /// Overlapping features, plain fine-tuning vs retraining.
    T2,
    T3Distinct,
    /// Edit keeping the overlap block.
    T3A,
    /// Edit discarding the overlap block.
    T3B,
}

impl TheoremTag {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremTag::T1 => "T1",
            TheoremTag::T2 => "T2",
            TheoremTag::T3Distinct => "T3-distinct",
            TheoremTag::T3A => "T3-A",
            TheoremTag::T3B => "T3-B",
        }
    }

    pub fn for_edit(opt: EditOption) -> Self {
        match opt {
            EditOption::DistinctZeroForget => TheoremTag::T3Distinct,
            EditOption::OverlapRetain => TheoremTag::T3A,
            EditOption::OverlapDiscard => TheoremTag::T3B,
        }
    }
}

/// Identifies which scenario (and fine-tuning subset) a number belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub layout: crate::scenario::FeatureLayout,
    pub n_t: Option<usize>,
}

impl Provenance {
    pub fn of(s: &SyntheticScenario, n_t: Option<usize>) -> Self {
        Provenance { seed: s.seed, layout: s.layout, n_t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremPrediction {
    pub tag: TheoremTag,
    pub provenance: Provenance,
    pub rl_ft: f64,
    pub ul_ft: f64,
    pub rl_gold: f64,
    pub ul_gold: f64,
    pub rl_edit: Option<f64>,
    pub ul_edit: Option<f64>,
}

fn forget_loss(v: &DVector<f64>, s: &SyntheticScenario) -> Result<f64> {
    weighted_seminorm_sq(v, &s.x_f, s.n_f())
}

fn remaining_loss(v: &DVector<f64>, s: &SyntheticScenario) -> Result<f64> {
    weighted_seminorm_sq(v, &s.x_r, s.n_r())
}

pub fn predict_thm1(s: &SyntheticScenario) -> Result<TheoremPrediction> {
    if !s.layout.is_distinct() {
        return Err(LabError::LayoutMismatch(format!(
            "distinct-feature prediction on overlapping layout {}",
            s.layout
        )));
    }
    let parts = decompose_w_star(s);
    Ok(TheoremPrediction {
        tag: TheoremTag::T1,
        provenance: Provenance::of(s, None),
        rl_ft: 0.0,
        ul_ft: 0.0,
        rl_gold: 0.0,
        ul_gold: forget_loss(&parts.forget, s)?,
        rl_edit: None,
        ul_edit: None,
    })
}

/// Golden UL as `‖P_r(w_r + w_lap) − (w_f + w_lap)‖²` in the forget seminorm.
pub fn predict_thm2(s: &SyntheticScenario) -> Result<TheoremPrediction> {
    let parts = decompose_w_star(s);
    let p_r = linalg::projector(&s.x_r, None)?;
    let shared = &parts.remaining + &parts.overlap;
    let v = p_r.apply(&shared) - (&parts.forget + &parts.overlap);
    Ok(TheoremPrediction {
        tag: TheoremTag::T2,
        provenance: Provenance::of(s, None),
        rl_ft: 0.0,
        ul_ft: 0.0,
        rl_gold: 0.0,
        ul_gold: forget_loss(&v, s)?,
        rl_edit: None,
        ul_edit: None,
    })
}

/// Golden UL through the block expansion
/// `X_fᵀP_r·w = L₂ᵀL₁(RᵀR + L₁ᵀL₁)⁺(Rᵀw_r + L₁ᵀw_lap)`.
///
/// The Gram matrix `X_rᵀX_r` is singular whenever `n_r > d_r + d_lap`, so the
/// inverse is taken as a pseudoinverse with a relative cutoff suited to a
/// squared condition number.
pub fn thm2_expanded_ul_gold(s: &SyntheticScenario) -> Result<f64> {
    const GRAM_RELATIVE_CUTOFF: f64 = 1e-10;
    let layout = s.layout;
    let parts = decompose_w_star(s);
    let ov = layout.overlap_block();
    let rem = layout.remaining_block();
    let fb = layout.forget_block();

    let r = s.x_r.rows(rem.start, rem.len());
    let l1 = s.x_r.rows(ov.start, ov.len());
    let l2 = s.x_f.rows(ov.start, ov.len());
    let f = s.x_f.rows(fb.start, fb.len());

    let gram: DenseMatrix = r.transpose() * r + l1.transpose() * l1;
    let sigma = linalg::svd(&gram)?.largest();
    let gram_pinv = linalg::pseudoinverse(&gram, Some(GRAM_RELATIVE_CUTOFF * sigma))?;

    let w_r = parts.remaining.rows(rem.start, rem.len());
    let w_lap = parts.overlap.rows(ov.start, ov.len());
    let w_f = parts.forget.rows(fb.start, fb.len());

    let inner = r.transpose() * w_r + l1.transpose() * w_lap;
    let golden_pred = l2.transpose() * (l1 * (gram_pinv * inner));
    let truth = l2.transpose() * w_lap + f.transpose() * w_f;
    Ok((golden_pred - truth).norm_squared() / s.n_f() as f64)
}

/// Whether the edit predictions' implicit substitution holds: the full-data
/// projector acts as the identity on the remaining-only and overlap blocks.
pub fn edit_forms_exact(s: &SyntheticScenario, tol: f64) -> Result<bool> {
    let p = linalg::projector(&s.x(), None)?;
    let support = s.layout.remaining_support();
    let block = p.matrix().view((support.start, support.start), (support.len(), support.len()));
    let id = DenseMatrix::identity(support.len(), support.len());
    Ok(linalg::max_abs(&(block - id)) <= tol)
}

pub fn predict_thm3(s: &SyntheticScenario, opt: EditOption, n_t: usize) -> Result<TheoremPrediction> {
    if !opt.valid_for(&s.layout) {
        return Err(LabError::LayoutMismatch(format!(
            "{opt} is not applicable to layout {}",
            s.layout
        )));
    }
    let golden = predict_thm2(s)?;
    let parts = decompose_w_star(s);
    let (rl_edit, ul_edit) = match opt {
        EditOption::DistinctZeroForget => (0.0, forget_loss(&parts.forget, s)?),
        EditOption::OverlapRetain => {
            let p = linalg::projector(&s.x(), None)?;
            let v = p.apply(&(&parts.remaining + &parts.overlap)) - (&parts.forget + &parts.overlap);
            (0.0, forget_loss(&v, s)?)
        }
        EditOption::OverlapDiscard => {
            let (x_t, _) = fine_tune_subset(s, n_t)?;
            let p = linalg::projector(&s.x(), None)?;
            let p_t = linalg::projector(&x_t, None)?;
            let residual_overlap = p_t.complement().apply(&parts.overlap);
            let v = p.apply(&parts.remaining) + p_t.apply(&parts.overlap)
                - (&parts.forget + &parts.overlap);
            (remaining_loss(&residual_overlap, s)?, forget_loss(&v, s)?)
        }
    };
    Ok(TheoremPrediction {
        tag: TheoremTag::for_edit(opt),
        provenance: Provenance::of(s, Some(n_t)),
        rl_ft: 0.0,
        ul_ft: 0.0,
        rl_gold: golden.rl_gold,
        ul_gold: golden.ul_gold,
        rl_edit: Some(rl_edit),
        ul_edit: Some(ul_edit),
    })
}
