//! Graph Laplacians of signed adjacency matrices.
//!
//! The raw Laplacian is `L = D − A` with `A` the signed adjacency, so that
//!
//! ```text
//! b'Lb = Σ_{j<k} |a_jk| (b_j − s_jk b_k)²  ≥ 0.
//! ```
//!
//! The normalized form is `I − D^{-1/2} A D^{-1/2}`; isolated vertices get an
//! all-zero row so that λ2 never shrinks them.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Design, StandardizedDataset};
use crate::error::{Result, SlsError};
use crate::graph::AdjacencyMatrix;
use crate::linalg;
use crate::sparse::SparseSym;

#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: SparseSym,
    normalized: bool,
}

impl Laplacian {
    pub fn zeros(p: usize) -> Self {
        Laplacian { matrix: SparseSym::zeros(p), normalized: false }
    }

    /// Wraps an explicit symmetric matrix (e.g. read from a file). Only
    /// symmetry is enforced here.
    pub fn from_sparse(matrix: SparseSym, normalized: bool) -> Self {
        Laplacian { matrix, normalized }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.matrix
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.matrix.get(j, k)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }

    pub fn mul_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.matrix.mul_vec(b)
    }

    /// `b'Lb`.
    pub fn quadratic(&self, b: &DVector<f64>) -> Result<f64> {
        if b.len() != self.dim() {
            return Err(SlsError::dims("Laplacian quadratic", self.dim(), b.len()));
        }
        Ok(self.matrix.quadratic(b.as_slice()))
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }
}

pub fn build_laplacian(adj: &AdjacencyMatrix, normalized: bool) -> Laplacian {
    let p = adj.p();
    let d = adj.degrees();
    let signed = adj.signed_matrix();
    let trip = (0..p).flat_map(|j| signed.row(j).filter(move |&(k, _)| k > j).map(move |(k, v)| (j, k, v)));
    let matrix = if normalized {
        let diag = d.iter().map(|&dj| if dj > 0.0 { 1.0 } else { 0.0 }).collect();
        SparseSym::from_triplets(diag, trip.map(|(j, k, v)| (j, k, -v / (d[j] * d[k]).sqrt())).collect::<Vec<_>>())
    } else {
        SparseSym::from_triplets(d.iter().copied().collect(), trip.map(|(j, k, v)| (j, k, -v)).collect::<Vec<_>>())
    };
    Laplacian { matrix, normalized }
}

pub fn laplacian_quadratic(lap: &Laplacian, b: &DVector<f64>) -> Result<f64> {
    lap.quadratic(b)
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components(adj: &AdjacencyMatrix) -> Vec<Vec<usize>> {
    let p = adj.p();
    let mut seen = vec![false; p];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..p {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(j) = queue.pop_front() {
            comp.push(j);
            for (k, _, _) in adj.neighbours(j) {
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(k);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UnbiasedCheck {
    pub unbiased: bool,
    /// `‖L_O β_O‖∞`.
    pub residual: f64,
}

/// Checks `L_O β_O = 0` on the principal block indexed by `support`.
pub fn is_unbiased(lap: &Laplacian, support: &[usize], beta: &DVector<f64>, tol: f64) -> Result<UnbiasedCheck> {
    if support.is_empty() {
        return Err(SlsError::invalid("support must be nonempty"));
    }
    if beta.len() != lap.dim() {
        return Err(SlsError::dims("coefficient vector", lap.dim(), beta.len()));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= lap.dim()) {
        return Err(SlsError::invalid(format!("support index {j} out of range")));
    }
    let mut in_support = vec![false; lap.dim()];
    for &j in support {
        in_support[j] = true;
    }
    let residual = support
        .iter()
        .map(|&j| {
            let off: f64 = lap.matrix.row(j).filter(|&(k, _)| in_support[k]).map(|(k, v)| v * beta[k]).sum();
            (lap.matrix.diag(j) * beta[j] + off).abs()
        })
        .fold(0.0, f64::max);
    Ok(UnbiasedCheck { unbiased: residual <= tol, residual })
}

/// Stacked design `X̃ = [X; (nλ2L)^{1/2}]`, `ỹ = [y; 0]` with `X̃'X̃/n = X'X/n + λ2L`
/// and `X̃'ỹ = X'y`.
#[derive(Debug, Clone)]
pub struct AugmentedData {
    pub x_tilde: DMatrix<f64>,
    pub y_tilde: DVector<f64>,
    pub lambda2: f64,
    /// Sample size of the original data; the loss divisor.
    pub n: usize,
}

impl AugmentedData {
    pub fn design(&self) -> Design<'_> {
        Design::with_divisor(&self.x_tilde, &self.y_tilde, self.n as f64)
    }
}

pub fn augment(ds: &StandardizedDataset, lap: &Laplacian, lambda2: f64) -> Result<AugmentedData> {
    augment_design(&ds.design(), lap, lambda2)
}

pub fn augment_design(design: &Design<'_>, lap: &Laplacian, lambda2: f64) -> Result<AugmentedData> {
    design.check()?;
    let p = design.p();
    if lap.dim() != p {
        return Err(SlsError::dims("Laplacian", p, lap.dim()));
    }
    if !(lambda2 >= 0.0) || !lambda2.is_finite() {
        return Err(SlsError::param("lambda2", format!("must be finite and ≥ 0, got {lambda2}")));
    }
    let n = design.x.nrows();
    let root = linalg::psd_sqrt(&(lap.to_dense() * (design.n * lambda2)))?;
    let mut x_tilde = DMatrix::zeros(n + p, p);
    x_tilde.rows_mut(0, n).copy_from(design.x);
    x_tilde.rows_mut(n, p).copy_from(&root);
    let mut y_tilde = DVector::zeros(n + p);
    y_tilde.rows_mut(0, n).copy_from(design.y);
    Ok(AugmentedData { x_tilde, y_tilde, lambda2, n: design.n as usize })
}
