//! Orthogonal projectors from the SVD, on a rank-deficient matrix.

use nalgebra::DMatrix;
use unlearn_lab::linalg::{max_abs, projector, pseudoinverse, svd};

fn main() -> unlearn_lab::Result<()> {
    // 6 x 4 with rank 2
    let a = DMatrix::from_fn(6, 2, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 2.0);
    let b = DMatrix::from_fn(2, 4, |i, j| (i as f64 - j as f64).sin());
    let x = &a * &b;

    let dec = svd(&x)?;
    println!("singular values {:?}", dec.singular_values);
    let p = projector(&x, None)?;
    println!("rank {}", p.rank());
    println!("|P - P^T|      {:.2e}", p.symmetry_error());
    println!("|P^2 - P|      {:.2e}", p.idempotence_error());
    println!("|(I - P) X|    {:.2e}", max_abs(&(p.complement().matrix() * &x)));
    let g = pseudoinverse(&x, None)?;
    println!("|X X+ X - X|   {:.2e}", max_abs(&(&x * &g * &x - &x)));
    Ok(())
}
