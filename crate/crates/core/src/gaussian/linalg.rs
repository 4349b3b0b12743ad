//! Dense symmetric linear algebra helpers.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest condition number accepted for a conditioning block.
pub const CONDITION_CAP: f64 = 1e12;

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = eigenvalues(m);
    (ev[0], ev[ev.len() - 1])
}

/// Maximum absolute row sum, an upper bound on every eigenvalue.
pub fn max_abs_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Cholesky factor of a block that is positive definite and within the
/// condition-number cap.
pub fn checked_cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let (lo, hi) = eigen_extremes(m);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite { lambda_min: lo });
    }
    let condition = hi / lo;
    if condition > CONDITION_CAP {
        return Err(Error::IllConditioned { condition, lambda_min: lo });
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite { lambda_min: lo })
}

/// Regression coefficients `Σ_AB Σ_B^{-1}` and conditional covariance
/// `Σ_A − Σ_AB Σ_B^{-1} Σ_BA` for positions `a`, `b` of `m`.
pub fn conditional(
    m: &DMatrix<f64>,
    a: &[usize],
    b: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let saa = submatrix(m, a, a);
    if b.is_empty() {
        return Ok((DMatrix::zeros(a.len(), 0), saa));
    }
    let sbb = submatrix(m, b, b);
    let sba = submatrix(m, b, a);
    let chol = checked_cholesky(&sbb)?;
    let coeff = chol.solve(&sba).transpose();
    let mut cond = saa - &coeff * sba;
    cond = (&cond + cond.transpose()) * 0.5;
    Ok((coeff, cond))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_conditional_variance() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let (c, v) = conditional(&m, &[0], &[1]).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((v[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn singular_block_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(conditional(&m, &[0], &[0, 1]).is_err());
    }
}
