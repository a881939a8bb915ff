//! Dense linear-algebra helpers on top of `nalgebra`.

mod eigen;

pub use eigen::{eigen_decompose, EigenDecomposition};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Solves `a · x = b` by LU with partial pivoting. `None` when `a` is
/// singular.
pub fn solve(a: DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.lu().solve(b)
}

/// Inverse of a complex matrix, `None` when singular.
pub fn inverse_complex(a: DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    a.try_inverse()
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
