//! Synthetic over-parameterized regression scenarios with a controlled split
//! of feature coordinates into remaining-only, overlapping and
//! forgetting-only blocks.
//!
//! Coordinates are laid out in that order: `0..d_r` belong to the remaining
//! data only, `d_r..d_r+d_lap` are shared, and the tail belongs to the
//! forgetting data only. Remaining samples carry zeros on the tail block and
//! forgetting samples carry zeros on the head block.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{DenseMatrix, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub remaining_only: usize,
    pub overlap: usize,
    pub forget_only: usize,
}

impl FeatureLayout {
    pub fn new(remaining_only: usize, overlap: usize, forget_only: usize) -> Self {
        FeatureLayout { remaining_only, overlap, forget_only }
    }

    /// Layout with no shared coordinates.
    pub fn distinct(remaining_only: usize, forget_only: usize) -> Self {
        Self::new(remaining_only, 0, forget_only)
    }

    pub fn dim(&self) -> usize {
        self.remaining_only + self.overlap + self.forget_only
    }

    pub fn is_distinct(&self) -> bool {
        self.overlap == 0
    }

    pub fn remaining_block(&self) -> Range<usize> {
        0..self.remaining_only
    }

    pub fn overlap_block(&self) -> Range<usize> {
        self.remaining_only..self.remaining_only + self.overlap
    }

    pub fn forget_block(&self) -> Range<usize> {
        self.remaining_only + self.overlap..self.dim()
    }

    /// Coordinates a remaining sample may be nonzero on.
    pub fn remaining_support(&self) -> Range<usize> {
        0..self.remaining_only + self.overlap
    }

    /// Coordinates a forgetting sample may be nonzero on.
    pub fn forget_support(&self) -> Range<usize> {
        self.remaining_only..self.dim()
    }
}

impl std::fmt::Display for FeatureLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.remaining_only, self.overlap, self.forget_only)
    }
}

/// Entry distribution for the data blocks and the true coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    StandardNormal,
    /// Uniform on (−1, 1).
    Uniform,
}

impl Distribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Distribution::StandardNormal => StandardNormal.sample(rng),
            Distribution::Uniform => {
                let u = Uniform::new(-1.0, 1.0).expect("valid uniform bounds");
                rng.sample(u)
            }
        }
    }
}

// One independent ChaCha stream per generated block.
#[derive(Clone, Copy)]
enum Stream {
    Remaining = 0,
    OverlapRemaining = 1,
    OverlapForget = 2,
    Forget = 3,
    Coefficients = 4,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn fill_block(
    m: &mut DMatrix<f64>,
    rows: Range<usize>,
    seed: u64,
    stream: Stream,
    dist: Distribution,
) {
    let mut rng = stream_rng(seed, stream);
    // sample by sample
    for j in 0..m.ncols() {
        for i in rows.clone() {
            m[(i, j)] = dist.sample(&mut rng);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub layout: FeatureLayout,
    /// `d × n_r`
    pub x_r: DenseMatrix,
    /// `d × n_f`
    pub x_f: DenseMatrix,
    pub y_r: DVector<f64>,
    pub y_f: DVector<f64>,
    pub w_star: WeightVector,
    pub seed: u64,
    pub dist: Distribution,
}

impl SyntheticScenario {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn n_r(&self) -> usize {
        self.x_r.ncols()
    }

    pub fn n_f(&self) -> usize {
        self.x_f.ncols()
    }

    /// `[X_r | X_f]`
    pub fn x(&self) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(self.dim(), self.n_r() + self.n_f());
        x.columns_mut(0, self.n_r()).copy_from(&self.x_r);
        x.columns_mut(self.n_r(), self.n_f()).copy_from(&self.x_f);
        x
    }

    /// `[y_r ; y_f]`
    pub fn y(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.n_r() + self.n_f());
        y.rows_mut(0, self.n_r()).copy_from(&self.y_r);
        y.rows_mut(self.n_r(), self.n_f()).copy_from(&self.y_f);
        y
    }
}

pub fn gen_scenario(
    n_r: usize,
    n_f: usize,
    layout: FeatureLayout,
    seed: u64,
    dist: Distribution,
) -> Result<SyntheticScenario> {
    let d = layout.dim();
    if n_r == 0 || n_f == 0 {
        return Err(LabError::OutOfRange(
            "both the remaining and the forgetting set need at least one sample".into(),
        ));
    }
    if layout.remaining_only + layout.overlap == 0 || layout.overlap + layout.forget_only == 0 {
        return Err(LabError::LayoutMismatch(format!(
            "layout {layout} leaves one of the data sets without features"
        )));
    }
    let n = n_r + n_f;
    if n > d {
        return Err(LabError::RegimeViolation { n, d });
    }

    let mut x_r = DenseMatrix::zeros(d, n_r);
    fill_block(&mut x_r, layout.remaining_block(), seed, Stream::Remaining, dist);
    fill_block(&mut x_r, layout.overlap_block(), seed, Stream::OverlapRemaining, dist);

    let mut x_f = DenseMatrix::zeros(d, n_f);
    fill_block(&mut x_f, layout.overlap_block(), seed, Stream::OverlapForget, dist);
    fill_block(&mut x_f, layout.forget_block(), seed, Stream::Forget, dist);

    let mut rng = stream_rng(seed, Stream::Coefficients);
    let w_star = DVector::from_fn(d, |_, _| dist.sample(&mut rng));

    let y_r = x_r.transpose() * &w_star;
    let y_f = x_f.transpose() * &w_star;
    Ok(SyntheticScenario { layout, x_r, x_f, y_r, y_f, w_star, seed, dist })
}

/// Block split of the true coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct WStarDecomposition {
    pub remaining: WeightVector,
    pub overlap: WeightVector,
    pub forget: WeightVector,
}

pub fn mask_to(v: &DVector<f64>, keep: Range<usize>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| if keep.contains(&i) { v[i] } else { 0.0 })
}

pub fn decompose_w_star(s: &SyntheticScenario) -> WStarDecomposition {
    WStarDecomposition {
        remaining: mask_to(&s.w_star, s.layout.remaining_block()),
        overlap: mask_to(&s.w_star, s.layout.overlap_block()),
        forget: mask_to(&s.w_star, s.layout.forget_block()),
    }
}

/// The first `n_t` remaining samples and their labels.
pub fn fine_tune_subset(s: &SyntheticScenario, n_t: usize) -> Result<(DenseMatrix, DVector<f64>)> {
    if n_t == 0 || n_t > s.n_r() {
        return Err(LabError::OutOfRange(format!(
            "fine-tune subset size {n_t} outside 1..={}",
            s.n_r()
        )));
    }
    Ok((s.x_r.columns(0, n_t).into_owned(), s.y_r.rows(0, n_t).into_owned()))
}

/// JSON form of a scenario: matrices as nested row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub layout: FeatureLayout,
    pub seed: u64,
    pub dist: Distribution,
    pub x_r: Vec<Vec<f64>>,
    pub x_f: Vec<Vec<f64>>,
    pub y_r: Vec<f64>,
    pub y_f: Vec<f64>,
    pub w_star: Vec<f64>,
}

fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], nrows: usize, what: &str) -> Result<DenseMatrix> {
    if rows.len() != nrows {
        return Err(LabError::DimensionMismatch(format!(
            "{what} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LabError::DimensionMismatch(format!("{what} has ragged rows")));
    }
    Ok(DenseMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&SyntheticScenario> for ScenarioDocument {
    fn from(s: &SyntheticScenario) -> Self {
        ScenarioDocument {
            layout: s.layout,
            seed: s.seed,
            dist: s.dist,
            x_r: to_rows(&s.x_r),
            x_f: to_rows(&s.x_f),
            y_r: s.y_r.iter().copied().collect(),
            y_f: s.y_f.iter().copied().collect(),
            w_star: s.w_star.iter().copied().collect(),
        }
    }
}

impl TryFrom<ScenarioDocument> for SyntheticScenario {
    type Error = LabError;

    fn try_from(doc: ScenarioDocument) -> Result<Self> {
        let d = doc.layout.dim();
        let x_r = from_rows(&doc.x_r, d, "x_r")?;
        let x_f = from_rows(&doc.x_f, d, "x_f")?;
        if doc.y_r.len() != x_r.ncols() || doc.y_f.len() != x_f.ncols() || doc.w_star.len() != d {
            return Err(LabError::DimensionMismatch(
                "label or coefficient lengths do not match the matrices".into(),
            ));
        }
        let s = SyntheticScenario {
            layout: doc.layout,
            x_r,
            x_f,
            y_r: DVector::from_vec(doc.y_r),
            y_f: DVector::from_vec(doc.y_f),
            w_star: DVector::from_vec(doc.w_star),
            seed: doc.seed,
            dist: doc.dist,
        };
        crate::linalg::ensure_finite(&s.x_r, "x_r")?;
        crate::linalg::ensure_finite(&s.x_f, "x_f")?;
        Ok(s)
    }
}

impl SyntheticScenario {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScenarioDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}
