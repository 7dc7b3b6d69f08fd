//! Toy-scale softmax classifier with naive and regularized fine-tuning
//! objectives for class-wise unlearning.
//!
//! All training is full-batch gradient descent with hand-written gradients,
//! so a fixed configuration always yields the same parameter trajectory.
//!
//! Objectives, with `CE` the mean cross-entropy, `KL` the mean divergence
//! from the one-hot relabeled target, and `Y'` the shifted forget labels:
//!
//! | variant  | objective                        |
//! |----------|----------------------------------|
//! | NaiveFT  | CE(remain)                       |
//! | KL-FT    | CE(remain) + α·KL(forget, Y')    |
//! | CE-FT    | CE(forget, Y') + α·CE(remain)    |
//! | ICE-FT   | CE(remain) + α·CE(forget, Y')    |

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::metrics::{classifier_metrics, Metrics};

const MAX_STEP_HALVINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    /// `num_classes × feature_dim`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl SoftmaxClassifier {
    pub fn zeros(num_classes: usize, feature_dim: usize) -> Self {
        SoftmaxClassifier {
            weights: DMatrix::zeros(num_classes, feature_dim),
            bias: DVector::zeros(num_classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Logits for `features` (`feature_dim × m`), one column per sample.
    pub fn logits(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights * features;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }

    pub fn probabilities(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        softmax_columns(&self.logits(features))
    }

    /// Argmax class per sample, ties to the lowest index.
    pub fn predict(&self, features: &DMatrix<f64>) -> Vec<usize> {
        self.logits(features).column_iter().map(|c| argmax(c.iter().copied())).collect()
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

fn log_sum_exp(col: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = col.clone().fold(f64::NEG_INFINITY, f64::max);
    max + col.map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax_columns(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = logits.clone();
    for mut col in p.column_iter_mut() {
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        col.apply(|v| *v = (*v - max).exp());
        let total = col.sum();
        col /= total;
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    /// `feature_dim × m`
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledSet {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.ncols() != labels.len() {
            return Err(LabError::DimensionMismatch(format!(
                "{} samples but {} labels",
                features.ncols(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(LabError::OutOfRange(format!("label {bad} with {num_classes} classes")));
        }
        Ok(LabeledSet { features, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            features: self.features.select_columns(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Splits into (samples of `class`, all other samples), keeping order.
    pub fn split_class(&self, class: usize) -> (LabeledSet, LabeledSet) {
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            (0..self.len()).partition(|&i| self.labels[i] == class);
        (self.select(&inside), self.select(&outside))
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<LabeledSet> {
        LabeledSet::new(self.features.clone(), labels, self.num_classes)
    }
}

/// Gaussian class blobs centred at `sep/√2 · e_c`, so any two class means
/// are `sep` apart. Returns `(train, test)`, each with `per_class` samples
/// of every class in class-major order.
pub fn gen_class_task(
    num_classes: usize,
    per_class: usize,
    feature_dim: usize,
    sep: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet)> {
    if num_classes < 2 || per_class == 0 {
        return Err(LabError::OutOfRange(format!(
            "need at least two classes and one sample per class, got {num_classes} x {per_class}"
        )));
    }
    if feature_dim < num_classes {
        return Err(LabError::OutOfRange(format!(
            "feature_dim {feature_dim} smaller than num_classes {num_classes}"
        )));
    }
    if !(sep > 0.0 && sep.is_finite()) {
        return Err(LabError::OutOfRange(format!("class separation must be positive, got {sep}")));
    }
    let offset = sep / std::f64::consts::SQRT_2;
    let draw = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let m = num_classes * per_class;
        let mut features = DMatrix::zeros(feature_dim, m);
        let mut labels = Vec::with_capacity(m);
        for j in 0..m {
            let class = j / per_class;
            for i in 0..feature_dim {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features[(i, j)] = noise + if i == class { offset } else { 0.0 };
            }
            labels.push(class);
        }
        LabeledSet { features, labels, num_classes }
    };
    Ok((draw(0), draw(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtVariant {
    NaiveFt,
    KlFt,
    CeFt,
    IceFt,
}

impl FtVariant {
    pub const ALL: [FtVariant; 4] = [FtVariant::NaiveFt, FtVariant::KlFt, FtVariant::CeFt, FtVariant::IceFt];

    pub fn name(&self) -> &'static str {
        match self {
            FtVariant::NaiveFt => "naive_ft",
            FtVariant::KlFt => "kl_ft",
            FtVariant::CeFt => "ce_ft",
            FtVariant::IceFt => "ice_ft",
        }
    }

    pub fn is_regularized(&self) -> bool {
        !matches!(self, FtVariant::NaiveFt)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelScheme {
    /// `(label + 1) mod C`
    #[default]
    ShiftByOne,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtConfig {
    pub variant: FtVariant,
    pub alpha: f64,
    pub epochs: usize,
    pub step_size: f64,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub relabel: RelabelScheme,
}

impl Default for FtConfig {
    fn default() -> Self {
        FtConfig {
            variant: FtVariant::NaiveFt,
            alpha: 0.5,
            epochs: 500,
            step_size: 0.1,
            batch: BatchMode::Full,
            seed: 0,
            relabel: RelabelScheme::ShiftByOne,
        }
    }
}

impl FtConfig {
    pub fn with_variant(self, variant: FtVariant, alpha: f64) -> Self {
        FtConfig { variant, alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(LabError::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.variant.is_regularized() && !(0.0..=1.0).contains(&self.alpha) {
            return Err(LabError::InvalidConfig(format!(
                "alpha must lie in [0, 1] for {}, got {}",
                self.variant.name(),
                self.alpha
            )));
        }
        Ok(())
    }
}

pub fn relabel_forget(labels: &[usize], num_classes: usize, scheme: RelabelScheme) -> Result<Vec<usize>> {
    if num_classes < 2 {
        return Err(LabError::OutOfRange(format!(
            "relabeling needs at least two classes, got {num_classes}"
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(LabError::OutOfRange(format!("label {bad} with {num_classes} classes")));
    }
    Ok(match scheme {
        RelabelScheme::ShiftByOne => labels.iter().map(|l| (l + 1) % num_classes).collect(),
    })
}

/// Gradient of an objective with respect to the classifier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Gradient {
    fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        self.weights += &other.weights * scale;
        self.bias += &other.bias * scale;
    }
}

#[derive(Clone, Copy)]
enum LossFamily {
    CrossEntropy,
    /// `KL(onehot(y) ‖ softmax)`
    KlOneHot,
}

/// Mean loss and its gradient on one labeled batch.
fn batch_loss(model: &SoftmaxClassifier, set: &LabeledSet, family: LossFamily) -> (f64, Gradient) {
    let logits = model.logits(&set.features);
    let m = set.len() as f64;
    let mut total = 0.0;
    let mut dlogits = DMatrix::zeros(logits.nrows(), logits.ncols());
    for (j, col) in logits.column_iter().enumerate() {
        let label = set.labels[j];
        let lse = log_sum_exp(col.iter().copied());
        total += match family {
            LossFamily::CrossEntropy => lse - col[label],
            LossFamily::KlOneHot => {
                // Σ_k t_k (ln t_k − ln p_k), with 0·ln 0 = 0
                let mut kl = 0.0;
                for (k, &z) in col.iter().enumerate() {
                    let t: f64 = if k == label { 1.0 } else { 0.0 };
                    if t > 0.0 {
                        kl += t * (t.ln() - (z - lse));
                    }
                }
                kl
            }
        };
        for (k, &z) in col.iter().enumerate() {
            let t = if k == label { 1.0 } else { 0.0 };
            dlogits[(k, j)] = ((z - lse).exp() - t) / m;
        }
    }
    let grad = Gradient {
        weights: &dlogits * set.features.transpose(),
        bias: dlogits.column_sum(),
    };
    (total / m, grad)
}

/// A training objective: a main term plus `alpha` times a regularizer.
pub struct Objective<'a> {
    main: (&'a LabeledSet, LossFamily),
    regularizer: Option<(&'a LabeledSet, LossFamily)>,
    alpha: f64,
}

impl<'a> Objective<'a> {
    /// Plain cross-entropy, used for pretraining and retraining.
    pub fn cross_entropy(set: &'a LabeledSet) -> Self {
        Objective { main: (set, LossFamily::CrossEntropy), regularizer: None, alpha: 0.0 }
    }

    /// Fine-tuning objective; `forget` must already carry the relabeled targets.
    pub fn fine_tune(
        variant: FtVariant,
        alpha: f64,
        remain: &'a LabeledSet,
        forget: &'a LabeledSet,
    ) -> Self {
        use LossFamily::*;
        let (main, regularizer) = match variant {
            FtVariant::NaiveFt => ((remain, CrossEntropy), None),
            FtVariant::KlFt => ((remain, CrossEntropy), Some((forget, KlOneHot))),
            FtVariant::CeFt => ((forget, CrossEntropy), Some((remain, CrossEntropy))),
            FtVariant::IceFt => ((remain, CrossEntropy), Some((forget, CrossEntropy))),
        };
        Objective { main, regularizer, alpha }
    }

    pub fn value_and_gradient(&self, model: &SoftmaxClassifier) -> (f64, Gradient) {
        let (mut value, mut grad) = batch_loss(model, self.main.0, self.main.1);
        if let Some((set, family)) = self.regularizer {
            let (reg, reg_grad) = batch_loss(model, set, family);
            value += self.alpha * reg;
            grad.add_scaled(&reg_grad, self.alpha);
        }
        (value, grad)
    }

    pub fn value(&self, model: &SoftmaxClassifier) -> f64 {
        self.value_and_gradient(model).0
    }

    /// Only the main term; equals [`Self::value`] when `alpha` is zero.
    pub fn main_value(&self, model: &SoftmaxClassifier) -> f64 {
        batch_loss(model, self.main.0, self.main.1).0
    }
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub model: SoftmaxClassifier,
    /// Objective value before each update.
    pub losses: Vec<f64>,
    pub step_size: f64,
}

fn descend(
    init: &SoftmaxClassifier,
    objective: &Objective<'_>,
    epochs: usize,
    step_size: f64,
) -> Result<TrainTrace> {
    let mut step = step_size;
    for _ in 0..=MAX_STEP_HALVINGS {
        match descend_once(init, objective, epochs, step) {
            Err(LabError::Divergence { epoch, .. }) => {
                log::debug!("diverged at epoch {epoch} with step {step}; halving");
                step /= 2.0;
            }
            other => return other,
        }
    }
    Err(LabError::Divergence { epoch: 0, step_size: step })
}

fn descend_once(
    init: &SoftmaxClassifier,
    objective: &Objective<'_>,
    epochs: usize,
    step: f64,
) -> Result<TrainTrace> {
    let mut model = init.clone();
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grad) = objective.value_and_gradient(&model);
        if !loss.is_finite() {
            return Err(LabError::Divergence { epoch, step_size: step });
        }
        losses.push(loss);
        model.weights -= grad.weights * step;
        model.bias -= grad.bias * step;
    }
    if !model.is_finite() {
        return Err(LabError::Divergence { epoch: epochs, step_size: step });
    }
    Ok(TrainTrace { model, losses, step_size: step })
}

/// Cross-entropy training from zero parameters, keeping the loss history.
pub fn pretrain_traced(train: &LabeledSet, cfg: &FtConfig) -> Result<TrainTrace> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(LabError::EmptySet("pretraining set".into()));
    }
    let init = SoftmaxClassifier::zeros(train.num_classes, train.feature_dim());
    descend(&init, &Objective::cross_entropy(train), cfg.epochs, cfg.step_size)
}

pub fn pretrain(train: &LabeledSet, cfg: &FtConfig) -> Result<SoftmaxClassifier> {
    pretrain_traced(train, cfg).map(|t| t.model)
}

/// Fine-tunes `model`. For regularized variants `forget` must carry the
/// relabeled targets (see [`relabel_forget`]).
pub fn unlearn_ft_traced(
    model: &SoftmaxClassifier,
    remain: &LabeledSet,
    forget: &LabeledSet,
    cfg: &FtConfig,
) -> Result<TrainTrace> {
    cfg.validate()?;
    if remain.is_empty() || (cfg.variant.is_regularized() && forget.is_empty()) {
        return Err(LabError::EmptySet("fine-tuning set".into()));
    }
    let objective = Objective::fine_tune(cfg.variant, cfg.alpha, remain, forget);
    descend(model, &objective, cfg.epochs, cfg.step_size)
}

pub fn unlearn_ft(
    model: &SoftmaxClassifier,
    remain: &LabeledSet,
    forget: &LabeledSet,
    cfg: &FtConfig,
) -> Result<SoftmaxClassifier> {
    unlearn_ft_traced(model, remain, forget, cfg).map(|t| t.model)
}

/// Class-wise unlearning task parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassTaskSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub feature_dim: usize,
    pub sep: f64,
    pub forget_class: usize,
}

impl Default for ClassTaskSpec {
    fn default() -> Self {
        ClassTaskSpec { num_classes: 5, per_class: 100, feature_dim: 20, sep: 6.0, forget_class: 0 }
    }
}

/// Data, pretrained model and retrained reference for one seed.
#[derive(Debug, Clone)]
pub struct PreparedTask {
    pub forget: LabeledSet,
    pub remain: LabeledSet,
    /// Test samples of the remaining classes.
    pub test: LabeledSet,
    pub pretrained: SoftmaxClassifier,
    pub retrained: SoftmaxClassifier,
    pub retrained_metrics: Metrics,
}

pub fn prepare_task(spec: &ClassTaskSpec, seed: u64, train_cfg: &FtConfig) -> Result<PreparedTask> {
    if spec.forget_class >= spec.num_classes {
        return Err(LabError::OutOfRange(format!(
            "forget class {} with {} classes",
            spec.forget_class, spec.num_classes
        )));
    }
    let (train, test) =
        gen_class_task(spec.num_classes, spec.per_class, spec.feature_dim, spec.sep, seed)?;
    let (forget, remain) = train.split_class(spec.forget_class);
    let (_, test) = test.split_class(spec.forget_class);
    let pretrained = pretrain(&train, train_cfg)?;
    let started = Instant::now();
    let retrained = pretrain(&remain, train_cfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let retrained_metrics = classifier_metrics(&retrained, &forget, &remain, &test, elapsed)?;
    Ok(PreparedTask { forget, remain, test, pretrained, retrained, retrained_metrics })
}

/// Relabels the forget set, fine-tunes the pretrained model and measures
/// UA/RA/TA. The runtime covers the fine-tuning call only.
pub fn run_unlearning(task: &PreparedTask, cfg: &FtConfig) -> Result<(SoftmaxClassifier, Metrics)> {
    let relabeled = task.forget.with_labels(relabel_forget(
        &task.forget.labels,
        task.forget.num_classes,
        cfg.relabel,
    )?)?;
    let started = Instant::now();
    let model = unlearn_ft(&task.pretrained, &task.remain, &relabeled, cfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let metrics = classifier_metrics(&model, &task.forget, &task.remain, &task.test, elapsed)?;
    Ok((model, metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: FtVariant,
    pub alpha: f64,
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub variant: FtVariant,
    pub alpha: f64,
    pub mean: Metrics,
    /// Sample standard deviation (zero for a single seed).
    pub std: Metrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<SweepSummary>,
}

impl SweepTable {
    pub fn summary(&self, variant: FtVariant, alpha: f64) -> Option<&SweepSummary> {
        self.summaries.iter().find(|s| s.variant == variant && s.alpha == alpha)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(variant: FtVariant, alpha: f64, rows: &[&SweepRow]) -> SweepSummary {
    let pick = |f: fn(&Metrics) -> f64| mean_std(&rows.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let (ua, ua_s) = pick(|m| m.ua);
    let (ra, ra_s) = pick(|m| m.ra);
    let (ta, ta_s) = pick(|m| m.ta);
    let (rt, rt_s) = pick(|m| m.runtime_seconds);
    SweepSummary {
        variant,
        alpha,
        mean: Metrics { ua, ra, ta, runtime_seconds: rt },
        std: Metrics { ua: ua_s, ra: ra_s, ta: ta_s, runtime_seconds: rt_s },
    }
}

/// Runs every `(alpha, seed)` pair for one variant. Rows are ordered by
/// alpha, then seed; one summary per alpha.
pub fn alpha_sweep(
    spec: &ClassTaskSpec,
    base: &FtConfig,
    variant: FtVariant,
    alphas: &[f64],
    seeds: &[u64],
) -> Result<SweepTable> {
    if alphas.is_empty() || seeds.is_empty() {
        return Err(LabError::EmptySet("alpha sweep needs at least one alpha and one seed".into()));
    }
    let tasks = seeds
        .iter()
        .map(|&seed| prepare_task(spec, seed, &FtConfig { seed, ..*base }))
        .collect::<Result<Vec<_>>>()?;
    let mut table = SweepTable::default();
    for &alpha in alphas {
        let start = table.rows.len();
        for (task, &seed) in tasks.iter().zip(seeds) {
            let cfg = FtConfig { variant, alpha, seed, ..*base };
            let (_, metrics) = run_unlearning(task, &cfg)?;
            table.rows.push(SweepRow { variant, alpha, seed, metrics });
        }
        let rows: Vec<&SweepRow> = table.rows[start..].iter().collect();
        table.summaries.push(summarize(variant, alpha, &rows));
    }
    Ok(table)
}
