//! Gradient descent from zero lands on the minimum-norm interpolant.

use nalgebra::{DMatrix, DVector};
use unlearn_lab::linalg::min_norm_solve;
use unlearn_lab::solvers::{descend_mse, mse_step_size};

fn main() -> unlearn_lab::Result<()> {
    let x = DMatrix::from_fn(12, 5, |i, j| ((3 * i + 7 * j) % 11) as f64 / 5.0 - 1.0);
    let y = DVector::from_fn(5, |i, _| i as f64 - 2.0);
    let w = min_norm_solve(&x, &y)?;
    let step = mse_step_size(&x)?;
    for iterations in [10, 100, 1_000, 10_000] {
        let gd = descend_mse(&x, &y, &DVector::zeros(12), step, iterations);
        println!("{iterations:>6} iterations: max |w_gd - w| = {:.3e}", (gd - &w).amax());
    }
    Ok(())
}
