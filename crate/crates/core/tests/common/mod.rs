//! Helpers shared by the integration tests: random problems and small
//! reference implementations that do not go through the library solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sls_core::dataset::{standardize, RawDataset, StandardizedDataset};
use sls_core::graph::AdjacencyMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// AR(1)-correlated Gaussian columns, `y = Xβ + noise` with `β ~ U(−1, 1)`,
/// standardized.
pub fn random_dataset(n: usize, p: usize, rho: f64, noise: f64, rng: &mut ChaCha8Rng) -> StandardizedDataset {
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for k in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            prev = if k == 0 { z } else { rho * prev + innov * z };
            x[(i, k)] = prev;
        }
    }
    let beta = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
    let mut y = &x * beta;
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += noise * e;
    }
    standardize(&RawDataset::unnamed(y, x).unwrap()).unwrap()
}

/// Random signed graph: each pair is an edge with probability `density`.
pub fn random_graph(p: usize, density: f64, signed: bool, rng: &mut ChaCha8Rng) -> AdjacencyMatrix {
    let mut edges = Vec::new();
    for j in 0..p {
        for k in j + 1..p {
            if rng.random_bool(density) {
                let s = if signed && rng.random_bool(0.5) { -1 } else { 1 };
                edges.push((j, k, rng.random_range(0.1..1.0), s));
            }
        }
    }
    AdjacencyMatrix::from_edges(p, edges).unwrap()
}

/// Dense `D − A` with signed `A`, built entry by entry.
pub fn dense_laplacian(adj: &AdjacencyMatrix) -> DMatrix<f64> {
    let p = adj.p();
    let mut l = DMatrix::zeros(p, p);
    for (j, k, w, s) in adj.edges() {
        l[(j, k)] -= s as f64 * w;
        l[(k, j)] -= s as f64 * w;
        l[(j, j)] += w;
        l[(k, k)] += w;
    }
    l
}

/// MCP value written out directly.
pub fn mcp(t: f64, lambda: f64, gamma: f64) -> f64 {
    let a = t.abs();
    if a < gamma * lambda {
        lambda * a - a * a / (2.0 * gamma)
    } else {
        0.5 * gamma * lambda * lambda
    }
}

/// Plain cyclic coordinate descent for MCP-penalized least squares, with the
/// residual recomputed from scratch for every coordinate.
pub fn reference_mcp(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, gamma: f64) -> DVector<f64> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut b = DVector::zeros(p);
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for j in 0..p {
            let r = y - x * &b;
            let v = x.column(j).norm_squared() / nf;
            let z = x.column(j).dot(&r) / nf + v * b[j];
            let new = if z.abs() <= v * gamma * lambda {
                let s = (z.abs() - lambda).max(0.0) * z.signum();
                s / (v - 1.0 / gamma)
            } else {
                z / v
            };
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < 1e-14 {
            break;
        }
    }
    b
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}
