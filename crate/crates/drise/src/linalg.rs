//! Dense-matrix primitives for the filter recursions.
//!
//! Covariance propagation only ever needs a handful of numerically delicate
//! operations beyond plain matrix arithmetic: a symmetric PSD square root, a
//! guarded SPD solve, and PSD predicates for invariant checking. Everything
//! here works on `DMatrix<f64>` and treats near-zero eigenvalues explicitly
//! instead of letting them poison downstream inverses.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Relative tolerance for the symmetry check: `max |S_ij - S_ji| <= tol * (1 + max|S|)`.
pub const SYMMETRY_RTOL: f64 = 1e-10;
/// Relative floor for eigenvalues in the PSD check: `lambda_min >= -tol * (1 + spectral radius)`.
pub const PSD_EIG_RTOL: f64 = 1e-9;
/// Eigenvalues below `tol * trace` are treated as exact zeros when factoring.
pub const EIG_CLAMP_RTOL: f64 = 1e-12;
/// A Cholesky pivot below `tol * trace / dim` aborts the solve.
pub const SOLVE_PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e} below floor {floor:.3e}")]
    NotPsd { min_eigenvalue: f64, floor: f64 },
    #[error("matrix is numerically singular: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },
}

/// `(S + S^T) / 2`. Covariance updates re-symmetrize after assembly so that
/// floating-point non-commutativity cannot accumulate into asymmetry.
pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (s + s.transpose())
}

/// Largest absolute entry-wise asymmetry `max |S_ij - S_ji|`.
pub fn max_asymmetry(s: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst
}

fn symmetry_tolerance(s: &DMatrix<f64>, rtol: f64) -> f64 {
    rtol * (1.0 + s.amax())
}

fn check_symmetric(s: &DMatrix<f64>, rtol: f64) -> Result<(), LinalgError> {
    if s.nrows() != s.ncols() {
        return Err(LinalgError::ShapeMismatch {
            context: "symmetry check",
            expected: (s.nrows(), s.nrows()),
            actual: (s.nrows(), s.ncols()),
        });
    }
    let tolerance = symmetry_tolerance(s, rtol);
    let max_asymmetry = max_asymmetry(s);
    if max_asymmetry > tolerance {
        return Err(LinalgError::NotSymmetric {
            max_asymmetry,
            tolerance,
        });
    }
    Ok(())
}

/// True iff `s` is symmetric within `tol` and its smallest eigenvalue is at
/// least `-tol * (1 + spectral radius)`. Pure predicate, never errors.
pub fn is_psd(s: &DMatrix<f64>, tol: f64) -> bool {
    if s.nrows() != s.ncols() || s.iter().any(|v| !v.is_finite()) {
        return false;
    }
    if max_asymmetry(s) > tol * (1.0 + s.amax()) {
        return false;
    }
    if s.nrows() == 0 {
        return true;
    }
    let eigenvalues = symmetrize(s).symmetric_eigenvalues();
    let spectral_radius = eigenvalues.amax();
    eigenvalues.min() >= -tol * (1.0 + spectral_radius)
}

/// Eigendecomposition of a symmetric PSD matrix with the near-zero part of the
/// spectrum clamped to exact zeros. One factorization serves the square root,
/// its pseudo-inverse, and the pseudo-inverse of the matrix itself, so the
/// zero/nonzero split is identical across all three.
pub struct PsdFactor {
    vectors: DMatrix<f64>,
    /// Eigenvalues after clamping: entries below `EIG_CLAMP_RTOL * trace` are zero.
    eigenvalues: DVector<f64>,
}

impl PsdFactor {
    pub fn new(s: &DMatrix<f64>) -> Result<Self, LinalgError> {
        check_symmetric(s, SYMMETRY_RTOL)?;
        let eig = symmetrize(s).symmetric_eigen();
        let spectral_radius = eig.eigenvalues.amax();
        let floor = -PSD_EIG_RTOL * (1.0 + spectral_radius);
        let min_eigenvalue = if s.nrows() == 0 { 0.0 } else { eig.eigenvalues.min() };
        if min_eigenvalue < floor {
            return Err(LinalgError::NotPsd {
                min_eigenvalue,
                floor,
            });
        }
        let clamp = EIG_CLAMP_RTOL * s.trace();
        let eigenvalues = eig.eigenvalues.map(|v| if v <= clamp { 0.0 } else { v });
        Ok(Self {
            vectors: eig.eigenvectors,
            eigenvalues,
        })
    }

    fn rebuild(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped = self.eigenvalues.map(f);
        let scaled = &self.vectors * DMatrix::from_diagonal(&mapped);
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// Symmetric PSD `M` with `M * M = S` (zero eigenvalues stay zero).
    pub fn sqrt(&self) -> DMatrix<f64> {
        self.rebuild(f64::sqrt)
    }

    /// Moore-Penrose pseudo-inverse; directions in the clamped null space map to zero.
    pub fn pinv(&self) -> DMatrix<f64> {
        self.rebuild(|v| if v > 0.0 { 1.0 / v } else { 0.0 })
    }

    /// Pseudo-inverse of the square root (the whitening transform).
    pub fn pinv_sqrt(&self) -> DMatrix<f64> {
        self.rebuild(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
    }

    /// Number of eigenvalues treated as exactly zero.
    pub fn null_space_dim(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v == 0.0).count()
    }
}

/// Symmetric PSD square root via eigendecomposition.
///
/// Eigenvalues below `EIG_CLAMP_RTOL * trace(S)` are treated as zero, which
/// keeps the root well-defined for the rank-deficient covariances produced by
/// the input-estimation step.
pub fn sym_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    Ok(PsdFactor::new(s)?.sqrt())
}

/// Solves `S * X = B` for symmetric positive definite `S` via an unpivoted
/// Cholesky factorization. A pivot below `SOLVE_PIVOT_RTOL * trace(S) / dim`
/// aborts with [`LinalgError::SingularMatrix`] rather than silently
/// regularizing; the filter equations only invert matrices that are positive
/// definite when the model assumptions hold, so a small pivot means the model
/// is inconsistent, not that a pseudo-inverse is wanted.
pub fn spd_solve(s: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    check_symmetric(s, SYMMETRY_RTOL)?;
    let n = s.nrows();
    if b.nrows() != n {
        return Err(LinalgError::ShapeMismatch {
            context: "spd_solve right-hand side",
            expected: (n, b.ncols()),
            actual: (b.nrows(), b.ncols()),
        });
    }
    if n == 0 {
        return Ok(b.clone());
    }

    let threshold = SOLVE_PIVOT_RTOL * s.trace() / n as f64;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = s[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= threshold {
            return Err(LinalgError::SingularMatrix { pivot, threshold });
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut acc = s[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / root;
        }
    }

    // L y = B, then L^T x = y, column by column.
    let mut x = b.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for k in (i + 1)..n {
                acc -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}

/// Inverse of a symmetric positive definite matrix, re-symmetrized.
pub fn spd_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let identity = DMatrix::identity(s.nrows(), s.nrows());
    Ok(symmetrize(&spd_solve(s, &identity)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn sym_sqrt_identity() {
        let s = DMatrix::identity(3, 3);
        let m = sym_sqrt(&s).unwrap();
        assert_relative_eq!(m, s, epsilon = 1e-12);
    }

    #[test]
    fn sym_sqrt_diagonal() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let m = sym_sqrt(&s).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert_relative_eq!(m, expected, epsilon = 1e-12);
    }

    #[test]
    fn sym_sqrt_reconstructs_input() {
        let s = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let m = sym_sqrt(&s).unwrap();
        assert!(((&m * &m) - &s).amax() <= 1e-8 * s.amax());
        assert!(is_psd(&m, 1e-8));
    }

    #[test]
    fn sym_sqrt_rejects_asymmetric() {
        let s = mat(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            sym_sqrt(&s),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn sym_sqrt_rejects_indefinite() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(sym_sqrt(&s), Err(LinalgError::NotPsd { .. })));
    }

    #[test]
    fn sym_sqrt_of_singular_matrix_keeps_null_space() {
        // rank-1 PSD: eigenvalues {2, 0}
        let s = mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = PsdFactor::new(&s).unwrap();
        assert_eq!(f.null_space_dim(), 1);
        let m = f.sqrt();
        assert!(((&m * &m) - &s).amax() <= 1e-10);
        // pinv * s acts as identity on the range
        let p = f.pinv();
        assert!(((&p * &s * &p) - &p).amax() <= 1e-10);
    }

    #[test]
    fn spd_solve_identity() {
        let s = DMatrix::identity(2, 2);
        let b = mat(2, 1, &[3.0, 7.0]);
        assert_relative_eq!(spd_solve(&s, &b).unwrap(), b, epsilon = 1e-14);
    }

    #[test]
    fn spd_solve_diagonal_inverse() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = spd_solve(&s, &DMatrix::identity(2, 2)).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]));
        assert_relative_eq!(x, expected, epsilon = 1e-14);
    }

    #[test]
    fn spd_solve_residual_is_tiny() {
        let s = mat(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = mat(2, 1, &[1.0, 0.0]);
        let x = spd_solve(&s, &b).unwrap();
        let residual = (&s * &x) - &b;
        assert!(residual.amax() <= 1e-10 * (1.0 + b.amax()));
    }

    #[test]
    fn spd_solve_rejects_singular() {
        let s = mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = mat(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            spd_solve(&s, &b),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn spd_solve_rejects_bad_shape() {
        let s = DMatrix::identity(2, 2);
        let b = DMatrix::identity(3, 3);
        assert!(matches!(
            spd_solve(&s, &b),
            Err(LinalgError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn is_psd_examples() {
        assert!(is_psd(&DMatrix::identity(4, 4), 1e-9));
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(!is_psd(&neg, 1e-9));
        // symmetric but indefinite: characteristic polynomial (1-l)^2 - 4 has roots 3 and -1
        let indefinite = mat(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!is_psd(&indefinite, 1e-9));
    }

    #[test]
    fn is_psd_rejects_nonsquare_and_nonfinite() {
        assert!(!is_psd(&DMatrix::zeros(2, 3), 1e-9));
        let mut s = DMatrix::identity(2, 2);
        s[(0, 0)] = f64::NAN;
        assert!(!is_psd(&s, 1e-9));
    }

    prop_compose! {
        /// Random PSD matrix built as L L^T + delta I, well conditioned by construction.
        fn arb_psd(max_dim: usize)(dim in 1..=max_dim)(
            entries in proptest::collection::vec(-1.0f64..1.0, dim * dim),
            dim in Just(dim),
        ) -> DMatrix<f64> {
            let l = DMatrix::from_vec(dim, dim, entries);
            &l * l.transpose() + DMatrix::identity(dim, dim) * 0.1
        }
    }

    proptest! {
        #[test]
        fn sqrt_round_trip(s in arb_psd(6)) {
            let m = sym_sqrt(&s).unwrap();
            let err = ((&m * &m) - &s).amax();
            prop_assert!(err <= 1e-8 * (1.0 + s.amax()));
            prop_assert!(is_psd(&m, 1e-8));
        }

        #[test]
        fn solve_recovers_solution(
            s in arb_psd(6),
            raw in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let x0 = DMatrix::from_vec(s.nrows(), 1, raw[..s.nrows()].to_vec());
            let b = &s * &x0;
            let x = spd_solve(&s, &b).unwrap();
            prop_assert!((x - &x0).amax() <= 1e-8 * (1.0 + x0.amax()));
        }

        #[test]
        fn pinv_sqrt_squares_to_pinv(s in arb_psd(6)) {
            let f = PsdFactor::new(&s).unwrap();
            let via_sqrt = f.pinv_sqrt() * f.pinv_sqrt();
            prop_assert!((via_sqrt - f.pinv()).amax() <= 1e-8 * (1.0 + f.pinv().amax()));
        }
    }
}
