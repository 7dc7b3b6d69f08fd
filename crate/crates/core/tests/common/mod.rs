#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use unlearn_lab::scenario::{gen_scenario, Distribution, FeatureLayout, SyntheticScenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// `X (XᵀX)⁻¹ Xᵀ` through an explicit Gram inverse. Needs full column rank.
pub fn gram_projector(x: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = x.transpose() * x;
    let inv = gram.try_inverse().expect("full column rank");
    x * inv * x.transpose()
}

/// `A (AᵀA)⁻¹ B` for the block formulas.
pub fn gram_block(a: &DMatrix<f64>, gram: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * gram.clone().try_inverse().expect("invertible Gram block") * b.transpose()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Keeps `range`, zeroes the rest.
pub fn keep(v: &DVector<f64>, range: std::ops::Range<usize>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| if range.contains(&i) { v[i] } else { 0.0 })
}

/// `(1/n)‖Xᵀv‖²`
pub fn seminorm(v: &DVector<f64>, x: &DMatrix<f64>) -> f64 {
    (x.transpose() * v).norm_squared() / x.ncols() as f64
}

pub fn mse(w: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * w - y).norm_squared() / y.len() as f64
}

pub fn reference_distinct(seed: u64) -> SyntheticScenario {
    gen_scenario(30, 10, FeatureLayout::distinct(20, 20), seed, Distribution::StandardNormal).unwrap()
}

pub fn reference_overlap(seed: u64) -> SyntheticScenario {
    gen_scenario(30, 10, FeatureLayout::new(16, 8, 16), seed, Distribution::StandardNormal).unwrap()
}

/// Random scenario where every data block has full column rank on its
/// support, so the literal `(XᵀX)⁻¹` formulas apply. Sample counts stay at
/// most half of each support so the Gram inverses are well conditioned.
pub fn full_rank_scenario(rng: &mut ChaCha8Rng, with_overlap: bool) -> SyntheticScenario {
    let d_lap = if with_overlap { rng.random_range(1..=6) } else { 0 };
    let d_r = rng.random_range(3..=12);
    let d_f = rng.random_range(3..=12);
    let n_r = rng.random_range(1..=(d_r + d_lap) / 2);
    let n_f = rng.random_range(1..=(d_f + d_lap) / 2);
    let layout = FeatureLayout::new(d_r, d_lap, d_f);
    gen_scenario(n_r, n_f, layout, rng.random(), Distribution::StandardNormal).unwrap()
}
