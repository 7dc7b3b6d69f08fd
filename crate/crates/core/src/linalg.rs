//! Dense linear-algebra kernels: SVD, pseudoinverse, orthogonal projectors,
//! minimum-norm and anchored minimum-norm least-squares solutions.
//!
//! Matrices follow the data convention used throughout the crate: a data
//! matrix `X` is `d × n`, one sample per column, and a linear model `w`
//! predicts `Xᵀw`.

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type WeightVector = DVector<f64>;

/// Symmetry tolerance for produced projectors.
pub const TOL_SYM: f64 = 1e-10;
/// Idempotence tolerance for produced projectors.
pub const TOL_IDEM: f64 = 1e-10;


/// Consistency tolerance for a system with right-hand side `y`.
pub fn tol_consist(y: &DVector<f64>) -> f64 {
    1e-8 * (1.0 + y.norm())
}

/// Thin singular value decomposition `A = U·diag(S)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn largest(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `cutoff`.
    pub fn rank_above(&self, cutoff: f64) -> usize {
        self.singular_values.iter().take_while(|&&s| s > cutoff).count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

pub(crate) fn ensure_finite(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LabError::InvalidMatrix(format!("{what} has non-finite entries")))
    }
}

pub(crate) fn ensure_finite_vec(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LabError::InvalidMatrix(format!("{what} has non-finite entries")))
    }
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    ensure_finite(a, "svd input")?;
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: DenseMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(cols, 0),
        });
    }
    let dense = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let dec = dense.thin_svd().map_err(|_| LabError::SvdFailure)?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    Ok(Svd {
        u: DenseMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| s[j]).collect(),
        v: DenseMatrix::from_fn(cols, k, |i, j| v[(i, order[j])]),
    })
}

/// Default singular-value cutoff `max(rows, cols)·eps·σ_max`.
pub fn default_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

fn resolve_cutoff(a: &DenseMatrix, dec: &Svd, sv_cutoff: Option<f64>) -> Result<f64> {
    match sv_cutoff {
        Some(c) if c < 0.0 || !c.is_finite() => Err(LabError::OutOfRange(format!(
            "singular value cutoff must be finite and nonnegative, got {c}"
        ))),
        Some(c) => Ok(c),
        None => Ok(default_cutoff(a.nrows(), a.ncols(), dec.largest())),
    }
}

/// Moore–Penrose pseudoinverse. Singular values at or below the cutoff are
/// treated as zero; `None` selects the default cutoff.
pub fn pseudoinverse(a: &DenseMatrix, sv_cutoff: Option<f64>) -> Result<DenseMatrix> {
    let dec = svd(a)?;
    let cutoff = resolve_cutoff(a, &dec, sv_cutoff)?;
    let r = dec.rank_above(cutoff);
    let mut v_scaled = dec.v.columns(0, r).into_owned();
    for j in 0..r {
        v_scaled.column_mut(j).scale_mut(1.0 / dec.singular_values[j]);
    }
    Ok(v_scaled * dec.u.columns(0, r).transpose())
}

/// Orthogonal projector onto the column space of a `d × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: DenseMatrix,
    rank: usize,
}

impl Projector {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// `I − P`, the projector onto the orthogonal complement.
    pub fn complement(&self) -> Projector {
        let d = self.dim();
        Projector {
            matrix: DenseMatrix::identity(d, d) - &self.matrix,
            rank: d - self.rank,
        }
    }

    /// `max |P − Pᵀ|`
    pub fn symmetry_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.transpose()))
    }

    /// `max |P² − P|`
    pub fn idempotence_error(&self) -> f64 {
        max_abs(&(&self.matrix * &self.matrix - &self.matrix))
    }

    /// Builds the projector from the span of given orthonormal columns.
    fn from_orthonormal(basis: DenseMatrix) -> Self {
        let rank = basis.ncols();
        let matrix = &basis * basis.transpose();
        Projector { matrix, rank }
    }
}

pub fn projector(x: &DenseMatrix, sv_cutoff: Option<f64>) -> Result<Projector> {
    let dec = svd(x)?;
    let cutoff = resolve_cutoff(x, &dec, sv_cutoff)?;
    let r = dec.rank_above(cutoff);
    if r < x.nrows().min(x.ncols()) {
        log::debug!(
            "projector: {}x{} matrix is rank deficient (rank {r})",
            x.nrows(),
            x.ncols()
        );
    }
    Ok(Projector::from_orthonormal(dec.u.columns(0, r).into_owned()))
}

pub fn max_abs(a: &DenseMatrix) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_system(x: &DenseMatrix, y: &DVector<f64>) -> Result<()> {
    if x.ncols() != y.len() {
        return Err(LabError::DimensionMismatch(format!(
            "data matrix has {} samples but {} labels were given",
            x.ncols(),
            y.len()
        )));
    }
    ensure_finite(x, "data matrix")?;
    ensure_finite_vec(y, "labels")
}

/// `(Xᵀ)⁺·rhs` computed from the SVD of `X`.
fn transpose_pinv_apply(x: &DenseMatrix, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let dec = svd(x)?;
    let cutoff = default_cutoff(x.nrows(), x.ncols(), dec.largest());
    let r = dec.rank_above(cutoff);
    // Xᵀ = V·S·Uᵀ, so (Xᵀ)⁺ = U·S⁺·Vᵀ.
    let mut coeffs = dec.v.columns(0, r).transpose() * rhs;
    for j in 0..r {
        coeffs[j] /= dec.singular_values[j];
    }
    Ok(dec.u.columns(0, r) * coeffs)
}

fn ensure_consistent(x: &DenseMatrix, w: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
    let residual = (x.transpose() * w - y).norm();
    let tolerance = tol_consist(y);
    if residual > tolerance {
        return Err(LabError::InconsistentSystem { residual, tolerance });
    }
    Ok(())
}

/// Minimum-norm solution of `Xᵀw = y`.
pub fn min_norm_solve(x: &DenseMatrix, y: &DVector<f64>) -> Result<WeightVector> {
    check_system(x, y)?;
    let w = transpose_pinv_apply(x, y)?;
    ensure_consistent(x, &w, y)?;
    Ok(w)
}

/// Solution of `Xᵀw = y` closest to the anchor `w_anchor`:
/// `w_anchor + (Xᵀ)⁺(y − Xᵀ·w_anchor)`.
pub fn min_norm_anchor_solve(
    x: &DenseMatrix,
    y: &DVector<f64>,
    w_anchor: &WeightVector,
) -> Result<WeightVector> {
    check_system(x, y)?;
    if w_anchor.len() != x.nrows() {
        return Err(LabError::DimensionMismatch(format!(
            "anchor has length {} but data has {} features",
            w_anchor.len(),
            x.nrows()
        )));
    }
    ensure_finite_vec(w_anchor, "anchor")?;
    let gap = y - x.transpose() * w_anchor;
    let w = w_anchor + transpose_pinv_apply(x, &gap)?;
    ensure_consistent(x, &w, y)?;
    Ok(w)
}

/// `‖v‖²_A` with `A = (1/n)·X·Xᵀ`, evaluated as `(1/n)·‖Xᵀv‖²`.
pub fn weighted_seminorm_sq(v: &DVector<f64>, x: &DenseMatrix, n: usize) -> Result<f64> {
    if v.len() != x.nrows() {
        return Err(LabError::DimensionMismatch(format!(
            "vector has length {} but weighting matrix has {} rows",
            v.len(),
            x.nrows()
        )));
    }
    if n == 0 {
        return Err(LabError::OutOfRange("seminorm normalizer must be at least 1".into()));
    }
    Ok((x.transpose() * v).norm_squared() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    #[test]
    fn svd_of_diagonal_is_sorted() {
        let a = dmatrix![2.0, 0.0; 0.0, 3.0];
        let dec = svd(&a).unwrap();
        assert!((dec.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((dec.singular_values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let dec = svd(&DenseMatrix::zeros(2, 2)).unwrap();
        assert_eq!(dec.singular_values, vec![0.0, 0.0]);
    }

    #[test]
    fn svd_rejects_nan() {
        let a = dmatrix![1.0, f64::NAN; 0.0, 1.0];
        assert!(matches!(svd(&a), Err(LabError::InvalidMatrix(_))));
        assert!(matches!(pseudoinverse(&a, None), Err(LabError::InvalidMatrix(_))));
        assert!(matches!(projector(&a, None), Err(LabError::InvalidMatrix(_))));
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        let a = DenseMatrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) as f64).sin() + 0.1 * j as f64);
        let dec = svd(&a).unwrap();
        assert!(max_abs(&(dec.reconstruct() - &a)) < 1e-12);
    }

    #[test]
    fn pseudoinverse_examples() {
        let p = pseudoinverse(&dmatrix![2.0, 0.0; 0.0, 0.0], None).unwrap();
        assert!(max_abs(&(p - dmatrix![0.5, 0.0; 0.0, 0.0])) < 1e-15);

        let i3 = DenseMatrix::identity(3, 3);
        assert!(max_abs(&(pseudoinverse(&i3, None).unwrap() - &i3)) < 1e-15);

        // (AᵀA)⁻¹Aᵀ = [1, 1] / 2
        let col = dmatrix![1.0; 1.0];
        let p = pseudoinverse(&col, None).unwrap();
        assert_eq!(p.shape(), (1, 2));
        assert!(max_abs(&(p - dmatrix![0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn pseudoinverse_rejects_negative_cutoff() {
        assert!(pseudoinverse(&DenseMatrix::identity(2, 2), Some(-1.0)).is_err());
    }

    #[test]
    fn cutoff_drops_values_equal_to_it() {
        let a = dmatrix![2.0, 0.0; 0.0, 1.0];
        let p = projector(&a, Some(1.0)).unwrap();
        assert_eq!(p.rank(), 1);
        let pinv = pseudoinverse(&a, Some(1.0)).unwrap();
        assert_eq!(pinv[(1, 1)], 0.0);
    }

    #[test]
    fn projector_examples() {
        let p = projector(&dmatrix![1.0; 0.0], None).unwrap();
        assert!(max_abs(&(p.matrix() - dmatrix![1.0, 0.0; 0.0, 0.0])) < 1e-15);
        assert_eq!(p.rank(), 1);

        let full = dmatrix![1.0, 2.0; 3.0, 4.0];
        let p = projector(&full, None).unwrap();
        assert!(max_abs(&(p.matrix() - DenseMatrix::identity(2, 2))) < 1e-14);

        let p = projector(&dmatrix![1.0; 1.0], None).unwrap();
        assert!(max_abs(&(p.matrix() - dmatrix![0.5, 0.5; 0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn min_norm_examples() {
        let w = min_norm_solve(&dmatrix![1.0; 0.0], &dvector![3.0]).unwrap();
        assert!(max_abs_vec(&(w - dvector![3.0, 0.0])) < 1e-15);

        // one equation w1 + w2 = 2 has minimum-norm solution (1, 1)
        let w = min_norm_solve(&dmatrix![1.0; 1.0], &dvector![2.0]).unwrap();
        assert!(max_abs_vec(&(w - dvector![1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn min_norm_rejects_inconsistent() {
        // two samples at the same point with different labels
        let x = dmatrix![1.0, 1.0; 0.0, 0.0];
        let err = min_norm_solve(&x, &dvector![1.0, 2.0]).unwrap_err();
        assert!(matches!(err, LabError::InconsistentSystem { .. }));
    }

    #[test]
    fn min_norm_rejects_label_count_mismatch() {
        let err = min_norm_solve(&dmatrix![1.0; 0.0], &dvector![1.0, 2.0]).unwrap_err();
        assert!(matches!(err, LabError::DimensionMismatch(_)));
    }

    #[test]
    fn anchor_solve_edge_cases() {
        let x = dmatrix![1.0, 0.0; 1.0, 1.0; 0.0, 2.0];
        let y = dvector![1.0, -1.0];
        let zero = DVector::zeros(3);
        let a = min_norm_anchor_solve(&x, &y, &zero).unwrap();
        let b = min_norm_solve(&x, &y).unwrap();
        assert!(max_abs_vec(&(a - b)) < 1e-14);

        let w_o = dvector![0.3, -0.7, 1.1];
        let y_o = x.transpose() * &w_o;
        let w = min_norm_anchor_solve(&x, &y_o, &w_o).unwrap();
        assert!(max_abs_vec(&(w - w_o)) < 1e-14);
    }

    #[test]
    fn seminorm_examples() {
        let x = DenseMatrix::identity(3, 3);
        assert_eq!(weighted_seminorm_sq(&DVector::zeros(3), &x, 3).unwrap(), 0.0);
        let v = dvector![1.0, 2.0, 2.0];
        assert!((weighted_seminorm_sq(&v, &x, 3).unwrap() - 3.0).abs() < 1e-15);

        // v in the null space of Xᵀ
        let x = dmatrix![1.0; 1.0; 0.0];
        let v = dvector![1.0, -1.0, 0.0];
        assert_eq!(weighted_seminorm_sq(&v, &x, 1).unwrap(), 0.0);

        assert!(weighted_seminorm_sq(&dvector![1.0], &x, 1).is_err());
        assert!(weighted_seminorm_sq(&v, &x, 0).is_err());
    }
}
