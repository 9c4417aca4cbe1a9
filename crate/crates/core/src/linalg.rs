//! Small dense linear-algebra helpers shared by the model conversions.

use nalgebra::{DMatrix, SymmetricEigen};

/// Largest condition number accepted when inverting a precision block.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Orthonormal basis (as columns) of the subspace `{c : sum(c) = 0}` in `R^d`.
///
/// Helmert construction: column `k` is `(1, .., 1, -(k+1), 0, ..) / sqrt((k+1)(k+2))`.
pub fn zero_sum_basis(d: usize) -> DMatrix<f64> {
    let mut basis = DMatrix::zeros(d, d.saturating_sub(1));
    for k in 0..d.saturating_sub(1) {
        let len = (k + 1) as f64;
        let norm = (len * (len + 1.0)).sqrt();
        for i in 0..=k {
            basis[(i, k)] = 1.0 / norm;
        }
        basis[(k + 1, k)] = -len / norm;
    }
    basis
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values
}

/// Spectral condition number of a symmetric matrix; `inf` when it is not
/// positive definite.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let values = sym_eigenvalues(m);
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor, refusing matrices whose condition estimate exceeds `limit`.
///
/// On failure returns the condition estimate that triggered the refusal.
pub fn spd_inverse(m: &DMatrix<f64>, limit: f64) -> std::result::Result<DMatrix<f64>, f64> {
    let condition = spd_condition(m);
    if !(condition <= limit) {
        return Err(condition);
    }
    match m.clone().cholesky() {
        Some(chol) => {
            let inv = chol.inverse();
            Ok((&inv + inv.transpose()) * 0.5)
        }
        None => Err(f64::INFINITY),
    }
}

/// Copy of `m` with row and column `skip` removed.
pub fn drop_row_col(m: &DMatrix<f64>, skip: usize) -> DMatrix<f64> {
    m.clone().remove_row(skip).remove_column(skip)
}
