//! Loss measurement for the linear models, accuracy metrics for the
//! classifier, and measured-vs-predicted gap reports.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::classifier::{LabeledSet, SoftmaxClassifier};
use crate::error::{LabError, Result};
use crate::linalg::{DenseMatrix, WeightVector};
use crate::oracle::{Provenance, TheoremPrediction};
use crate::scenario::SyntheticScenario;

/// `(1/|D|)·‖Xᵀw − y‖²`
pub fn mse_loss(w: &WeightVector, x: &DenseMatrix, y: &DVector<f64>) -> Result<f64> {
    if x.nrows() != w.len() || x.ncols() != y.len() {
        return Err(LabError::DimensionMismatch(format!(
            "model of length {} against {}x{} data with {} labels",
            w.len(),
            x.nrows(),
            x.ncols(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(LabError::EmptySet("loss over an empty data set".into()));
    }
    Ok((x.transpose() * w - y).norm_squared() / y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Original,
    FineTuned,
    Golden,
    EditedFineTuned,
}

impl ModelTag {
    pub fn name(&self) -> &'static str {
        match self {
            ModelTag::Original => "original",
            ModelTag::FineTuned => "fine_tuned",
            ModelTag::Golden => "golden",
            ModelTag::EditedFineTuned => "edited_fine_tuned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub rl: f64,
    pub ul: f64,
    pub model_tag: ModelTag,
    pub provenance: Provenance,
}

impl LossReport {
    /// Measures RL on the remaining set and UL on the forgetting set.
    pub fn measure(
        w: &WeightVector,
        s: &SyntheticScenario,
        model_tag: ModelTag,
        n_t: Option<usize>,
    ) -> Result<Self> {
        Ok(LossReport {
            rl: mse_loss(w, &s.x_r, &s.y_r)?,
            ul: mse_loss(w, &s.x_f, &s.y_f)?,
            model_tag,
            provenance: Provenance::of(s, n_t),
        })
    }
}

/// Pass iff `|measured − predicted| ≤ max(absolute, relative·|predicted|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy { relative: 1e-8, absolute: 1e-10 }
    }
}

impl TolerancePolicy {
    /// Override used by `--tolerance`: sets the relative tolerance and caps
    /// the absolute floor at the same value.
    pub fn with_override(self, tol: f64) -> Self {
        TolerancePolicy { relative: tol, absolute: self.absolute.min(tol) }
    }

    pub fn accepts(&self, measured: f64, predicted: f64) -> bool {
        (measured - predicted).abs() <= self.absolute.max(self.relative * predicted.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGap {
    pub field: String,
    pub measured: f64,
    pub predicted: f64,
    pub absolute: f64,
    /// Absolute gap divided by `|predicted|`; infinite when the prediction
    /// is zero and the measurement is not.
    pub relative: f64,
    pub pass: bool,
}

impl FieldGap {
    pub fn new(field: &str, measured: f64, predicted: f64, policy: &TolerancePolicy) -> Self {
        let absolute = (measured - predicted).abs();
        let relative = if absolute == 0.0 {
            0.0
        } else if predicted == 0.0 {
            f64::INFINITY
        } else {
            absolute / predicted.abs()
        };
        FieldGap {
            field: field.to_string(),
            measured,
            predicted,
            absolute,
            relative,
            pass: measured.is_finite() && policy.accepts(measured, predicted),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub model_tag: ModelTag,
    pub fields: Vec<FieldGap>,
    pub pass: bool,
}

impl GapReport {
    pub fn field(&self, name: &str) -> Option<&FieldGap> {
        self.fields.iter().find(|f| f.field == name)
    }
}

pub fn gap_report(
    measured: &LossReport,
    predicted: &TheoremPrediction,
    policy: &TolerancePolicy,
) -> Result<GapReport> {
    let (m, p) = (measured.provenance, predicted.provenance);
    let n_t_clash = matches!((m.n_t, p.n_t), (Some(a), Some(b)) if a != b);
    if m.seed != p.seed || m.layout != p.layout || n_t_clash {
        return Err(LabError::ProvenanceMismatch(format!(
            "measured {m:?} against predicted {p:?}"
        )));
    }
    let (rl, ul) = match measured.model_tag {
        // the pretrained model interpolates every sample
        ModelTag::Original => (0.0, 0.0),
        ModelTag::FineTuned => (predicted.rl_ft, predicted.ul_ft),
        ModelTag::Golden => (predicted.rl_gold, predicted.ul_gold),
        ModelTag::EditedFineTuned => match (predicted.rl_edit, predicted.ul_edit) {
            (Some(rl), Some(ul)) => (rl, ul),
            _ => {
                return Err(LabError::ProvenanceMismatch(format!(
                    "{} prediction carries no edited-model losses",
                    predicted.tag.name()
                )))
            }
        },
    };
    let fields = vec![
        FieldGap::new("rl", measured.rl, rl, policy),
        FieldGap::new("ul", measured.ul, ul, policy),
    ];
    let pass = fields.iter().all(|f| f.pass);
    Ok(GapReport { model_tag: measured.model_tag, fields, pass })
}

/// Unlearning, remaining and test accuracy. Fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ua: f64,
    pub ra: f64,
    pub ta: f64,
    pub runtime_seconds: f64,
}

pub fn accuracy(model: &SoftmaxClassifier, set: &LabeledSet) -> Result<f64> {
    if set.is_empty() {
        return Err(LabError::EmptySet("accuracy over an empty set".into()));
    }
    let predictions = model.predict(&set.features);
    let correct = predictions.iter().zip(&set.labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / set.len() as f64)
}

pub fn classifier_metrics(
    model: &SoftmaxClassifier,
    forget_set: &LabeledSet,
    remain_set: &LabeledSet,
    test_set: &LabeledSet,
    runtime_seconds: f64,
) -> Result<Metrics> {
    Ok(Metrics {
        ua: 1.0 - accuracy(model, forget_set)?,
        ra: accuracy(model, remain_set)?,
        ta: accuracy(model, test_set)?,
        runtime_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::FeatureLayout;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn mse_examples() {
        let x = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0];
        let w = dvector![1.0, 2.0, 0.0];
        let y = x.transpose() * &w;
        assert_eq!(mse_loss(&w, &x, &y).unwrap(), 0.0);
        let zero = DVector::zeros(3);
        assert!((mse_loss(&zero, &x, &y).unwrap() - y.norm_squared() / 2.0).abs() < 1e-15);
        assert!(mse_loss(&dvector![1.0], &x, &y).is_err());
    }

    fn provenance() -> Provenance {
        Provenance { seed: 1, layout: FeatureLayout::distinct(2, 2), n_t: Some(1) }
    }

    fn prediction(ul_gold: f64) -> TheoremPrediction {
        TheoremPrediction {
            tag: crate::oracle::TheoremTag::T1,
            provenance: provenance(),
            rl_ft: 0.0,
            ul_ft: 0.0,
            rl_gold: 0.0,
            ul_gold,
            rl_edit: None,
            ul_edit: None,
        }
    }

    fn report(tag: ModelTag, rl: f64, ul: f64) -> LossReport {
        LossReport { rl, ul, model_tag: tag, provenance: provenance() }
    }

    #[test]
    fn identical_values_pass() {
        let g = gap_report(&report(ModelTag::Golden, 0.0, 0.3), &prediction(0.3), &Default::default())
            .unwrap();
        assert!(g.pass);
        assert!(g.fields.iter().all(|f| f.absolute == 0.0 && f.relative == 0.0));
    }

    #[test]
    fn absolute_floor() {
        let g = gap_report(&report(ModelTag::FineTuned, 1e-12, 0.0), &prediction(1.0), &Default::default())
            .unwrap();
        assert!(g.pass);
    }

    #[test]
    fn relative_gap_fails() {
        let g = gap_report(&report(ModelTag::Golden, 0.0, 0.6), &prediction(0.5), &Default::default())
            .unwrap();
        assert!(!g.pass);
        assert!((g.field("ul").unwrap().relative - 0.2).abs() < 1e-12);
    }

    #[test]
    fn provenance_checked() {
        let mut m = report(ModelTag::Golden, 0.0, 0.5);
        m.provenance.seed = 2;
        assert!(matches!(
            gap_report(&m, &prediction(0.5), &Default::default()),
            Err(LabError::ProvenanceMismatch(_))
        ));
        let edited = report(ModelTag::EditedFineTuned, 0.0, 0.5);
        assert!(gap_report(&edited, &prediction(0.5), &Default::default()).is_err());
    }

    #[test]
    fn zero_tolerance_requires_exact_match() {
        let policy = TolerancePolicy::default().with_override(0.0);
        assert!(policy.accepts(0.5, 0.5));
        assert!(!policy.accepts(0.5 + 1e-16, 0.5));
    }
}
