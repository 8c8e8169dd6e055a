//! Dense symmetric helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SlsError};

/// Eigenvalues below this (relative to the largest magnitude) count as zero.
pub(crate) const PSD_TOL: f64 = 1e-10;

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for k in 0..j {
            let v = 0.5 * (m[(j, k)] + m[(k, j)]);
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
}

pub(crate) fn eigenvalue_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s).eigenvalues;
    (eig.min(), eig.max())
}

pub(crate) fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalue_range(m).0
}

/// Symmetric PSD square root; small negative eigenvalues are clamped to zero,
/// larger ones are an error.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -PSD_TOL * scale {
            return Err(SlsError::Numerical(format!("matrix is not positive semi-definite (eigenvalue {l:e})")));
        }
        roots[i] = l.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Solves `A x = b` for symmetric positive-definite `A`, refusing matrices
/// whose smallest eigenvalue is at or below `min_eig`.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>, min_eig: f64, what: &str) -> Result<DMatrix<f64>> {
    let lo = smallest_eigenvalue(a);
    if !(lo > min_eig) {
        return Err(SlsError::Singular(format!("{what}: smallest eigenvalue {lo:e} ≤ {min_eig:e}")));
    }
    let mut s = a.clone();
    symmetrize(&mut s);
    let chol = s.cholesky().ok_or_else(|| SlsError::Singular(format!("{what}: Cholesky factorization failed")))?;
    Ok(chol.solve(b))
}

pub(crate) fn select_rows(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&j| v[j]))
}

pub(crate) fn select_cols(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    m.select_columns(idx)
}

pub(crate) fn sub_square(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}
