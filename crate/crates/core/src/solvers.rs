//! Original training, fine-tuning unlearning, retraining from scratch and
//! editing of the pretrained model before fine-tuning.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, DenseMatrix, WeightVector};
use crate::scenario::{decompose_w_star, fine_tune_subset, mask_to, FeatureLayout, SyntheticScenario};

/// How the pretrained model is edited before fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOption {
    /// Distinct features: keep only the remaining-only block.
    DistinctZeroForget,
    /// Keep the remaining-only and overlapping blocks.
    OverlapRetain,
    /// Keep only the remaining-only block, discarding the overlap.
    OverlapDiscard,
}

impl EditOption {
    pub const ALL: [EditOption; 3] =
        [EditOption::DistinctZeroForget, EditOption::OverlapRetain, EditOption::OverlapDiscard];

    pub fn name(&self) -> &'static str {
        match self {
            EditOption::DistinctZeroForget => "distinct_zero_forget",
            EditOption::OverlapRetain => "overlap_retain",
            EditOption::OverlapDiscard => "overlap_discard",
        }
    }

    pub fn valid_for(&self, layout: &FeatureLayout) -> bool {
        !matches!(self, EditOption::DistinctZeroForget) || layout.is_distinct()
    }

    /// Options verified for a layout family: the distinct edit without
    /// overlap, both overlap edits otherwise. On a distinct layout the two
    /// overlap edits coincide with the distinct one.
    pub fn for_layout(layout: &FeatureLayout) -> Vec<EditOption> {
        if layout.is_distinct() {
            vec![EditOption::DistinctZeroForget]
        } else {
            vec![EditOption::OverlapRetain, EditOption::OverlapDiscard]
        }
    }
}

impl std::fmt::Display for EditOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Minimum-norm interpolant of the full data set.
pub fn train_original(s: &SyntheticScenario) -> Result<WeightVector> {
    linalg::min_norm_solve(&s.x(), &s.y())
}

/// Closest interpolant of the fine-tuning data to the pretrained model.
pub fn fine_tune_unlearn(
    w_o: &WeightVector,
    x_t: &DenseMatrix,
    y_t: &DVector<f64>,
) -> Result<WeightVector> {
    linalg::min_norm_anchor_solve(x_t, y_t, w_o)
}

/// Minimum-norm interpolant of the remaining data only.
pub fn retrain_golden(s: &SyntheticScenario) -> Result<WeightVector> {
    linalg::min_norm_solve(&s.x_r, &s.y_r)
}

/// Zeroes the coordinates tied to the forgetting data. Blocks come from the
/// layout, never from the zero pattern of `w_o`.
pub fn edit_pretrained(
    w_o: &WeightVector,
    layout: &FeatureLayout,
    opt: EditOption,
) -> Result<WeightVector> {
    if w_o.len() != layout.dim() {
        return Err(LabError::LayoutMismatch(format!(
            "model has {} coordinates but layout {layout} has {}",
            w_o.len(),
            layout.dim()
        )));
    }
    if !opt.valid_for(layout) {
        return Err(LabError::LayoutMismatch(format!(
            "{opt} requires a layout without overlap, got {layout}"
        )));
    }
    let keep = match opt {
        EditOption::DistinctZeroForget | EditOption::OverlapDiscard => layout.remaining_block(),
        EditOption::OverlapRetain => layout.remaining_support(),
    };
    Ok(mask_to(w_o, keep))
}

/// `P·w_r + (P − P_t)·w_f` for a distinct-feature scenario.
pub fn closed_form_wt_distinct(s: &SyntheticScenario, n_t: usize) -> Result<WeightVector> {
    if !s.layout.is_distinct() {
        return Err(LabError::LayoutMismatch(format!(
            "closed form needs distinct features, got layout {}",
            s.layout
        )));
    }
    let (x_t, _) = fine_tune_subset(s, n_t)?;
    let p = linalg::projector(&s.x(), None)?;
    let p_t = linalg::projector(&x_t, None)?;
    let parts = decompose_w_star(s);
    Ok(p.matrix() * &parts.remaining + (p.matrix() - p_t.matrix()) * &parts.forget)
}

/// Full-batch gradient descent on `(1/n)‖Xᵀw − y‖²` from `init`.
///
/// With a step below `2/L` this converges to the interpolant closest to
/// `init`, so it serves as an independent check on the closed forms.
pub fn descend_mse(
    x: &DenseMatrix,
    y: &DVector<f64>,
    init: &WeightVector,
    step: f64,
    iterations: usize,
) -> WeightVector {
    let n = x.ncols() as f64;
    let xt = x.transpose();
    let mut w = init.clone();
    for _ in 0..iterations {
        let residual = &xt * &w - y;
        let grad = x * residual * (2.0 / n);
        w -= grad * step;
    }
    w
}

/// `1/L` for the MSE objective, `L = 2σ_max²/n`.
pub fn mse_step_size(x: &DenseMatrix) -> Result<f64> {
    let sigma = linalg::svd(x)?.largest();
    if sigma == 0.0 {
        return Ok(1.0);
    }
    Ok(x.ncols() as f64 / (2.0 * sigma * sigma))
}
