use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassTaskSpec, FtConfig, FtVariant};
use crate::error::{LabError, Result};
use crate::metrics::TolerancePolicy;
use crate::scenario::{Distribution, FeatureLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyTheorems,
    SweepNt,
    SweepOverlap,
    ClassifierDemo,
    SweepAlpha,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::VerifyTheorems,
        ExperimentKind::SweepNt,
        ExperimentKind::SweepOverlap,
        ExperimentKind::ClassifierDemo,
        ExperimentKind::SweepAlpha,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyTheorems => "verify-theorems",
            ExperimentKind::SweepNt => "sweep-nt",
            ExperimentKind::SweepOverlap => "sweep-overlap",
            ExperimentKind::ClassifierDemo => "classifier-demo",
            ExperimentKind::SweepAlpha => "sweep-alpha",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub n_r: usize,
    pub n_f: usize,
    /// Layout families to run; each entry is `(d_r, d_lap, d_f)`.
    pub layouts: Vec<FeatureLayout>,
    pub dist: Distribution,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            n_r: 30,
            n_f: 10,
            layouts: vec![FeatureLayout::distinct(20, 20), FeatureLayout::new(16, 8, 16)],
            dist: Distribution::StandardNormal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub n_t_min: usize,
    /// Defaults to `n_r − 1`.
    pub n_t_max: Option<usize>,
    /// Overlap sizes for `sweep-overlap`; the rest of `overlap_dim` is split
    /// evenly between the two distinct blocks.
    pub overlaps: Vec<usize>,
    pub overlap_dim: usize,
    pub overlap_n_t: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            n_t_min: 1,
            n_t_max: None,
            overlaps: vec![0, 2, 4, 6, 8],
            overlap_dim: 40,
            overlap_n_t: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    pub task: ClassTaskSpec,
    pub pretrain_epochs: usize,
    pub epochs: usize,
    pub step_size: f64,
    pub variants: Vec<FtVariant>,
    /// Used by `classifier-demo`.
    pub alpha: f64,
    /// Used by `sweep-alpha`.
    pub alphas: Vec<f64>,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            task: ClassTaskSpec::default(),
            pretrain_epochs: 500,
            epochs: 500,
            step_size: 0.1,
            variants: FtVariant::ALL.to_vec(),
            alpha: 0.5,
            alphas: vec![0.1, 0.2, 0.4, 0.6, 0.8],
        }
    }
}

impl ClassifierParams {
    pub fn pretrain_config(&self) -> FtConfig {
        FtConfig { epochs: self.pretrain_epochs, step_size: self.step_size, ..FtConfig::default() }
    }

    pub fn unlearn_config(&self, variant: FtVariant, alpha: f64, seed: u64) -> FtConfig {
        FtConfig {
            variant,
            alpha,
            epochs: self.epochs,
            step_size: self.step_size,
            seed,
            ..FtConfig::default()
        }
    }
}

/// A single JSON document describing one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub scenario: ScenarioParams,
    pub sweep: SweepParams,
    pub classifier: ClassifierParams,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub tolerance: TolerancePolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            scenario: ScenarioParams::default(),
            sweep: SweepParams::default(),
            classifier: ClassifierParams::default(),
            seeds: (0..20).collect(),
            output_path: None,
            tolerance: TolerancePolicy::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        ExperimentConfig { experiment: Some(kind), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| LabError::InvalidConfig("no experiment selected".into()))
    }

    pub fn n_t_range(&self) -> std::ops::RangeInclusive<usize> {
        let max = self.sweep.n_t_max.unwrap_or(self.scenario.n_r.saturating_sub(1));
        self.sweep.n_t_min..=max
    }

    /// Layouts swept by `sweep-overlap`.
    pub fn overlap_layouts(&self) -> Result<Vec<FeatureLayout>> {
        self.sweep
            .overlaps
            .iter()
            .map(|&lap| {
                let rest = self.sweep.overlap_dim.checked_sub(lap).filter(|r| r % 2 == 0);
                rest.map(|r| FeatureLayout::new(r / 2, lap, r / 2)).ok_or_else(|| {
                    LabError::InvalidConfig(format!(
                        "overlap {lap} does not split dimension {} evenly",
                        self.sweep.overlap_dim
                    ))
                })
            })
            .collect()
    }

    /// Fills derived defaults so the echoed config is self-describing.
    pub fn materialize(mut self) -> Self {
        if self.sweep.n_t_max.is_none() {
            self.sweep.n_t_max = Some(self.scenario.n_r.saturating_sub(1));
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        let bad = |msg: String| Err(LabError::InvalidConfig(msg));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        let tol = self.tolerance;
        if !(tol.relative >= 0.0 && tol.absolute >= 0.0) {
            return bad(format!("tolerances must be nonnegative, got {tol:?}"));
        }
        let sc = &self.scenario;
        let check_layout = |layout: &FeatureLayout| -> Result<()> {
            if sc.n_r == 0 || sc.n_f == 0 {
                return bad("n_r and n_f must be positive".into());
            }
            if sc.n_r + sc.n_f > layout.dim() {
                return bad(format!(
                    "n = {} exceeds d = {} for layout {layout}",
                    sc.n_r + sc.n_f,
                    layout.dim()
                ));
            }
            if layout.remaining_only + layout.overlap == 0 || layout.overlap + layout.forget_only == 0 {
                return bad(format!("layout {layout} leaves a data set without features"));
            }
            Ok(())
        };
        match kind {
            ExperimentKind::VerifyTheorems | ExperimentKind::SweepNt => {
                if sc.layouts.is_empty() {
                    return bad("layout list is empty".into());
                }
                sc.layouts.iter().try_for_each(check_layout)?;
                let range = self.n_t_range();
                if range.is_empty() || *range.start() < 1 || *range.end() > sc.n_r.saturating_sub(1) {
                    return bad(format!(
                        "n_t range {}..={} outside 1..={}",
                        range.start(),
                        range.end(),
                        sc.n_r.saturating_sub(1)
                    ));
                }
            }
            ExperimentKind::SweepOverlap => {
                let layouts = self.overlap_layouts()?;
                if layouts.is_empty() {
                    return bad("overlap list is empty".into());
                }
                layouts.iter().try_for_each(check_layout)?;
                let n_t = self.sweep.overlap_n_t;
                if n_t < 1 || n_t >= sc.n_r {
                    return bad(format!("overlap_n_t {n_t} outside 1..={}", sc.n_r - 1));
                }
            }
            ExperimentKind::ClassifierDemo | ExperimentKind::SweepAlpha => {
                let c = &self.classifier;
                if c.variants.is_empty() {
                    return bad("variant list is empty".into());
                }
                let alphas: &[f64] = if kind == ExperimentKind::SweepAlpha {
                    &c.alphas
                } else {
                    std::slice::from_ref(&c.alpha)
                };
                if alphas.is_empty() {
                    return bad("alpha list is empty".into());
                }
                c.pretrain_config().validate()?;
                for &variant in &c.variants {
                    for &alpha in alphas {
                        c.unlearn_config(variant, alpha, 0).validate()?;
                    }
                }
                if c.task.forget_class >= c.task.num_classes {
                    return bad("forget_class out of range".into());
                }
            }
        }
        Ok(())
    }
}
