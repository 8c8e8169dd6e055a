//! V-fold cross-validation over a (λ1, λ2) grid.
//!
//! Folds are dealt round-robin from a seeded shuffle. Each training portion
//! is re-standardized on its own statistics and the held-out rows are mapped
//! with those statistics. The Laplacian is built once, on the full data, and
//! shared by all folds. For every λ2 the λ1 grid is traversed from the top
//! with warm starts.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{standardize, RawDataset, StandardizedDataset};
use crate::error::{Result, SlsError};
use crate::laplacian::Laplacian;
use crate::penalty::PenaltyConfig;
use crate::solver::{fit_path, FitOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

/// Base-2 exponents `0, −0.5, …, −8` for λ1 (relative to λ_max).
pub fn default_lambda1_exponents() -> Vec<f64> {
    (0..=16).map(|k| -0.5 * k as f64).collect()
}

/// Base-2 exponents `−4, −3.5, …, 4` for λ2.
pub fn default_lambda2_exponents() -> Vec<f64> {
    (0..=16).map(|k| -4.0 + 0.5 * k as f64).collect()
}

impl Grid {
    pub fn from_exponents(lambda_max: f64, lambda1_exps: &[f64], lambda2_exps: &[f64]) -> Self {
        Grid {
            lambda1: lambda1_exps.iter().map(|&e| lambda_max * 2f64.powf(e)).collect(),
            lambda2: lambda2_exps.iter().map(|&e| 2f64.powf(e)).collect(),
        }
    }

    /// λ1 strictly descending and λ2 descending, duplicates removed.
    fn canonical(&self) -> Result<Grid> {
        let sort_desc = |v: &[f64], name: &'static str| -> Result<Vec<f64>> {
            if v.is_empty() {
                return Err(SlsError::param(name, "grid is empty"));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(SlsError::param(name, "grid values must be finite and ≥ 0"));
            }
            let mut s = v.to_vec();
            s.sort_by(|a, b| b.total_cmp(a));
            s.dedup();
            Ok(s)
        };
        Ok(Grid { lambda1: sort_desc(&self.lambda1, "lambda1_grid")?, lambda2: sort_desc(&self.lambda2, "lambda2_grid")? })
    }
}

pub fn default_grid(ds: &StandardizedDataset) -> Grid {
    Grid::from_exponents(ds.lambda_max(), &default_lambda1_exponents(), &default_lambda2_exponents())
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Penalty family and γ; its λ1 is replaced by the grid values.
    pub penalty: PenaltyConfig,
    pub options: FitOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    /// `(λ1, λ2)` pairs, λ2-major, both descending.
    pub grid: Vec<(f64, f64)>,
    pub cv_errors: Vec<f64>,
    pub se: Vec<f64>,
    pub best: (f64, f64),
    pub best_index: usize,
    pub fold_assignment: Vec<usize>,
    pub seed: u64,
}

impl CvResult {
    /// Tab-separated surface: `lambda1 lambda2 cv_error se`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lambda1\tlambda2\tcv_error\tse\n");
        for ((l1, l2), (e, s)) in self.grid.iter().zip(self.cv_errors.iter().zip(&self.se)) {
            out.push_str(&format!("{l1:.10e}\t{l2:.10e}\t{e:.10e}\t{s:.10e}\n"));
        }
        out
    }
}

/// Fold id per observation: shuffle `0..n` with `seed`, then deal round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![0; n];
    for (i, &obs) in perm.iter().enumerate() {
        out[obs] = i % folds;
    }
    out
}

struct Fold {
    train: StandardizedDataset,
    test_x: DMatrix<f64>,
    test_y: DVector<f64>,
}

fn make_fold(ds: &StandardizedDataset, assignment: &[usize], fold: usize) -> Result<Fold> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.n()).partition(|&i| assignment[i] == fold);
    let rows = |idx: &[usize]| ds.x().select_rows(idx);
    let ys = |idx: &[usize]| DVector::from_iterator(idx.len(), idx.iter().map(|&i| ds.y()[i]));
    let raw = RawDataset::new(ys(&train), rows(&train), ds.column_names().to_vec())?;
    let train_ds = standardize(&raw).map_err(|e| SlsError::invalid(format!("fold {fold}: {e}")))?;
    Ok(Fold { train: train_ds, test_x: rows(&test), test_y: ys(&test) })
}

pub fn cv_select(ds: &StandardizedDataset, lap: &Laplacian, grid: &Grid, cfg: &CvConfig) -> Result<CvResult> {
    let v = cfg.folds;
    if v < 2 {
        return Err(SlsError::param("folds", format!("need at least 2 folds, got {v}")));
    }
    if v > ds.n() {
        return Err(SlsError::param("folds", format!("{v} folds exceed n = {}", ds.n())));
    }
    if lap.dim() != ds.p() {
        return Err(SlsError::dims("Laplacian", ds.p(), lap.dim()));
    }
    cfg.penalty.validate()?;
    let grid = grid.canonical()?;
    let assignment = fold_assignment(ds.n(), v, cfg.seed);
    let folds: Vec<Fold> = (0..v).map(|f| make_fold(ds, &assignment, f)).collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..v).flat_map(|f| (0..grid.lambda2.len()).map(move |k| (f, k))).collect();
    // errors[(fold, λ2)] = held-out MSE along the λ1 grid
    let per_task: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(f, k)| {
            let fold = &folds[f];
            let path = fit_path(&fold.train.design(), lap, &grid.lambda1, grid.lambda2[k], cfg.penalty, &cfg.options)?;
            path.fits
                .iter()
                .map(|fit| {
                    let pred = fold.train.predict(&fit.beta, &fold.test_x)?;
                    Ok((pred - &fold.test_y).norm_squared() / fold.test_y.len() as f64)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let n1 = grid.lambda1.len();
    let n2 = grid.lambda2.len();
    let mut pairs = Vec::with_capacity(n1 * n2);
    let mut cv_errors = Vec::with_capacity(n1 * n2);
    let mut se = Vec::with_capacity(n1 * n2);
    for k in 0..n2 {
        for (i, &l1) in grid.lambda1.iter().enumerate() {
            let errs: Vec<f64> = (0..v).map(|f| per_task[f * n2 + k][i]).collect();
            let mean = errs.iter().sum::<f64>() / v as f64;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (v - 1) as f64;
            pairs.push((l1, grid.lambda2[k]));
            cv_errors.push(mean);
            se.push((var / v as f64).sqrt());
        }
    }

    // smallest error; ties go to the larger λ1, then the larger λ2
    let best_index = (0..pairs.len())
        .min_by(|&a, &b| {
            cv_errors[a].total_cmp(&cv_errors[b]).then(pairs[b].0.total_cmp(&pairs[a].0)).then(pairs[b].1.total_cmp(&pairs[a].1))
        })
        .expect("grid is nonempty");

    Ok(CvResult { best: pairs[best_index], grid: pairs, cv_errors, se, best_index, fold_assignment: assignment, seed: cfg.seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let l1 = default_lambda1_exponents();
        let l2 = default_lambda2_exponents();
        assert_eq!((l1.len(), l2.len()), (17, 17));
        let g = Grid::from_exponents(2.0, &l1, &l2);
        assert_eq!(g.lambda1[0], 2.0);
        assert_eq!(g.lambda2[0], 1.0 / 16.0);
        assert_eq!(*g.lambda2.last().unwrap(), 16.0);
        for w in g.lambda1.windows(2) {
            assert!((w[1] / w[0] - 0.5f64.sqrt()).abs() < 1e-15);
        }
        for w in g.lambda2.windows(2) {
            assert!((w[0] / w[1] - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        for (n, v) in [(10, 3), (23, 5), (10, 10)] {
            let a = fold_assignment(n, v, 42);
            let mut counts = vec![0; v];
            for &f in &a {
                counts[f] += 1;
            }
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            assert_eq!(a, fold_assignment(n, v, 42));
        }
        assert_ne!(fold_assignment(50, 5, 1), fold_assignment(50, 5, 2));
    }
}
