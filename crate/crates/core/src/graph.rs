//! Signed adjacency matrices over the predictors.
//!
//! Four correlation-based schemes are supported, plus an explicit partition
//! into cliques:
//!
//! | scheme            | weight `|a_jk|`          | sign `s_jk`   |
//! |-------------------|--------------------------|---------------|
//! | `Threshold`       | `1{r_jk > r}`            | `+1`          |
//! | `SignedThreshold` | `1{|r_jk| > r}`          | `sgn(r_jk)`   |
//! | `Power`           | `max(0, r_jk)^α`         | `+1`          |
//! | `SignedPower`     | `|r_jk|^α`               | `sgn(r_jk)`   |
//! | `Partition`       | `1/v_g` inside block `g` | `+1`          |
//!
//! Threshold cutoffs may be given on the correlation scale or on the normal
//! scale of the Fisher-transformed correlation, see [`fisher_cutoff`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::StandardizedDataset;
use crate::error::{Result, SlsError};
use crate::sparse::SparseSym;

/// Weights below this are not stored by the power schemes.
pub const DEFAULT_SPARSITY_FLOOR: f64 = 1e-8;
pub const DEFAULT_THRESHOLD_C: f64 = 3.09;
pub const DEFAULT_SIGNED_THRESHOLD_C: f64 = 3.29;
pub const DEFAULT_POWER: f64 = 6.0;

/// Pearson correlations of the predictors, with the sample size they came from.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    r: DMatrix<f64>,
    n: usize,
}

impl CorrelationMatrix {
    /// Wraps a user-supplied correlation matrix; checks symmetry, range and the
    /// unit diagonal.
    pub fn new(r: DMatrix<f64>, n: usize) -> Result<Self> {
        if !r.is_square() {
            return Err(SlsError::invalid("correlation matrix must be square"));
        }
        let p = r.nrows();
        for j in 0..p {
            if r[(j, j)] != 1.0 {
                return Err(SlsError::invalid(format!("correlation diagonal at {j} is {}, not 1", r[(j, j)])));
            }
            for k in 0..j {
                let v = r[(j, k)];
                if !(-1.0..=1.0).contains(&v) || v != r[(k, j)] {
                    return Err(SlsError::invalid(format!("correlation ({j}, {k}) invalid or asymmetric")));
                }
            }
        }
        Ok(CorrelationMatrix { r, n })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.r[(j, k)]
    }

    pub fn p(&self) -> usize {
        self.r.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `r_jk = x_j'x_k / n`, exact for standardized columns.
pub fn correlations(ds: &StandardizedDataset) -> CorrelationMatrix {
    let p = ds.p();
    let mut r = ds.design().gram();
    for j in 0..p {
        r[(j, j)] = 1.0;
        for k in 0..j {
            let v = (0.5 * (r[(j, k)] + r[(k, j)])).clamp(-1.0, 1.0);
            r[(j, k)] = v;
            r[(k, j)] = v;
        }
    }
    CorrelationMatrix { r, n: ds.n() }
}

/// Correlation threshold matching a normal-scale cutoff `c` for
/// `√(n−3)·atanh(r)`: `r = tanh(c/√(n−3))`.
pub fn fisher_cutoff(c: f64, n: usize) -> Result<f64> {
    if n <= 3 {
        return Err(SlsError::param("n", format!("Fisher cutoff needs n ≥ 4, got {n}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(SlsError::param("c", format!("cutoff must be positive and finite, got {c}")));
    }
    // (e^{2u} − 1)/(e^{2u} + 1) == tanh(u)
    Ok((c / ((n - 3) as f64).sqrt()).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// Normal-scale cutoff, converted with [`fisher_cutoff`].
    Normal(f64),
    /// Threshold directly on the correlation scale, in (0, 1).
    Correlation(f64),
}

impl Cutoff {
    pub fn resolve(self, n: usize) -> Result<f64> {
        match self {
            Cutoff::Normal(c) => fisher_cutoff(c, n),
            Cutoff::Correlation(r) if r > 0.0 && r < 1.0 => Ok(r),
            Cutoff::Correlation(r) => Err(SlsError::param("r", format!("correlation threshold must lie in (0,1), got {r}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AdjacencyScheme {
    Threshold { cutoff: Cutoff },
    SignedThreshold { cutoff: Cutoff },
    Power { alpha: f64 },
    SignedPower { alpha: f64 },
    Partition { blocks: Vec<Vec<usize>> },
}

impl AdjacencyScheme {
    pub fn n1() -> Self {
        AdjacencyScheme::Threshold { cutoff: Cutoff::Normal(DEFAULT_THRESHOLD_C) }
    }

    pub fn n2() -> Self {
        AdjacencyScheme::SignedThreshold { cutoff: Cutoff::Normal(DEFAULT_SIGNED_THRESHOLD_C) }
    }

    pub fn n3() -> Self {
        AdjacencyScheme::Power { alpha: DEFAULT_POWER }
    }

    pub fn n4() -> Self {
        AdjacencyScheme::SignedPower { alpha: DEFAULT_POWER }
    }

    /// Looks up `n1`..`n4` by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "n1" | "n.1" | "threshold" => Some(Self::n1()),
            "n2" | "n.2" | "signed-threshold" => Some(Self::n2()),
            "n3" | "n.3" | "power" => Some(Self::n3()),
            "n4" | "n.4" | "signed-power" => Some(Self::n4()),
            _ => None,
        }
    }
}

/// Symmetric signed adjacency: nonnegative weights `|a_jk|`, signs `s_jk` on
/// their support, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    // stores s_jk·|a_jk|; weight and sign are recovered as |v| and sgn(v)
    signed: SparseSym,
    degrees: DVector<f64>,
}

impl AdjacencyMatrix {
    pub fn empty(p: usize) -> Self {
        AdjacencyMatrix { signed: SparseSym::zeros(p), degrees: DVector::zeros(p) }
    }

    /// Builds from undirected edges `(j, k, weight, sign)`. Self-loops,
    /// negative or non-finite weights, bad signs and repeated pairs are
    /// rejected; zero weights are skipped.
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize, f64, i8)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut trip = Vec::new();
        for (j, k, w, s) in edges {
            if j >= p || k >= p {
                return Err(SlsError::invalid(format!("edge ({j}, {k}) out of range for p = {p}")));
            }
            if j == k {
                return Err(SlsError::invalid(format!("self-loop at vertex {j}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(SlsError::invalid(format!("edge ({j}, {k}) has invalid weight {w}")));
            }
            if s != 1 && s != -1 {
                return Err(SlsError::invalid(format!("edge ({j}, {k}) has sign {s}, expected ±1")));
            }
            if !seen.insert((j.min(k), j.max(k))) {
                return Err(SlsError::invalid(format!("edge ({j}, {k}) listed twice")));
            }
            if w > 0.0 {
                trip.push((j, k, f64::from(s) * w));
            }
        }
        Ok(Self::from_signed(SparseSym::from_triplets(vec![0.0; p], trip)))
    }

    fn from_signed(signed: SparseSym) -> Self {
        let p = signed.dim();
        let degrees = DVector::from_iterator(p, (0..p).map(|j| signed.row(j).map(|(_, v)| v.abs()).sum()));
        AdjacencyMatrix { signed, degrees }
    }

    pub fn p(&self) -> usize {
        self.signed.dim()
    }

    /// `d_j = Σ_k |a_jk|`.
    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.signed.get(j, k).abs()
    }

    /// `s_jk`, or `None` off the support.
    pub fn sign(&self, j: usize, k: usize) -> Option<i8> {
        let v = self.signed.get(j, k);
        (j != k && v != 0.0).then_some(if v > 0.0 { 1 } else { -1 })
    }

    /// Neighbours of `j` as `(k, |a_jk|, s_jk)`.
    pub fn neighbours(&self, j: usize) -> impl Iterator<Item = (usize, f64, i8)> + '_ {
        self.signed.row(j).map(|(k, v)| (k, v.abs(), if v > 0.0 { 1 } else { -1 }))
    }

    /// Each undirected edge once, `j < k`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64, i8)> + '_ {
        (0..self.p()).flat_map(move |j| self.neighbours(j).filter(move |&(k, _, _)| k > j).map(move |(k, w, s)| (j, k, w, s)))
    }

    pub fn n_edges(&self) -> usize {
        self.signed.nnz_offdiag() / 2
    }

    /// Signed adjacency `s_jk|a_jk|` as sparse storage.
    pub fn signed_matrix(&self) -> &SparseSym {
        &self.signed
    }

    /// `a_j'b = Σ_k s_jk|a_jk| b_k`.
    pub fn signed_row_dot(&self, j: usize, b: &[f64]) -> f64 {
        self.signed.row_dot(j, b)
    }

    /// `Σ_{j<k} |a_jk|(b_j − s_jk b_k)²`.
    pub fn pairwise_quadratic(&self, b: &[f64]) -> f64 {
        self.edges().map(|(j, k, w, s)| w * (b[j] - f64::from(s) * b[k]).powi(2)).sum()
    }

    /// Keeps only edges whose endpoints satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(usize, usize) -> bool) -> AdjacencyMatrix {
        let trip: Vec<_> = self.edges().filter(|&(j, k, _, _)| keep(j, k)).map(|(j, k, w, s)| (j, k, f64::from(s) * w)).collect();
        Self::from_signed(SparseSym::from_triplets(vec![0.0; self.p()], trip))
    }
}

pub fn build_adjacency(corr: &CorrelationMatrix, scheme: &AdjacencyScheme) -> Result<AdjacencyMatrix> {
    build_adjacency_with_floor(corr, scheme, DEFAULT_SPARSITY_FLOOR)
}

pub fn build_adjacency_with_floor(corr: &CorrelationMatrix, scheme: &AdjacencyScheme, floor: f64) -> Result<AdjacencyMatrix> {
    let p = corr.p();
    let rule: Box<dyn Fn(f64) -> f64> = match scheme {
        AdjacencyScheme::Threshold { cutoff } => {
            let t = cutoff.resolve(corr.n())?;
            Box::new(move |r| if r > t { 1.0 } else { 0.0 })
        }
        AdjacencyScheme::SignedThreshold { cutoff } => {
            let t = cutoff.resolve(corr.n())?;
            Box::new(move |r: f64| if r.abs() > t { r.signum() } else { 0.0 })
        }
        AdjacencyScheme::Power { alpha } => {
            let a = check_alpha(*alpha)?;
            Box::new(move |r: f64| r.max(0.0).powf(a))
        }
        AdjacencyScheme::SignedPower { alpha } => {
            let a = check_alpha(*alpha)?;
            Box::new(move |r: f64| r.signum() * r.abs().powf(a))
        }
        AdjacencyScheme::Partition { blocks } => return partition_adjacency(p, blocks),
    };
    let mut trip = Vec::new();
    for j in 0..p {
        for k in (j + 1)..p {
            let v = rule(corr.get(j, k));
            if v.abs() > floor {
                trip.push((j, k, v));
            }
        }
    }
    Ok(AdjacencyMatrix::from_signed(SparseSym::from_triplets(vec![0.0; p], trip)))
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(SlsError::param("alpha", format!("power must be positive, got {alpha}")))
    }
}

/// Clique adjacency with weight `1/v_g` between members of each block of size
/// `v_g`. The raw Laplacian of this graph equals `I − 1_g1_g'/v_g` on each
/// block.
pub fn partition_adjacency(p: usize, blocks: &[Vec<usize>]) -> Result<AdjacencyMatrix> {
    let mut owner = vec![usize::MAX; p];
    for (g, block) in blocks.iter().enumerate() {
        for &j in block {
            if j >= p {
                return Err(SlsError::invalid(format!("block {g} contains index {j} ≥ p = {p}")));
            }
            if owner[j] != usize::MAX {
                return Err(SlsError::invalid(format!("index {j} appears in blocks {} and {g}", owner[j])));
            }
            owner[j] = g;
        }
    }
    if let Some(j) = owner.iter().position(|&g| g == usize::MAX) {
        return Err(SlsError::invalid(format!("index {j} is not covered by any block")));
    }
    let mut trip = Vec::new();
    for block in blocks {
        let w = 1.0 / block.len() as f64;
        for (a, &j) in block.iter().enumerate() {
            for &k in &block[a + 1..] {
                trip.push((j, k, w));
            }
        }
    }
    Ok(AdjacencyMatrix::from_signed(SparseSym::from_triplets(vec![0.0; p], trip)))
}

/// Splits `0..p` into consecutive blocks of `size` (the last may be shorter).
pub fn consecutive_blocks(p: usize, size: usize) -> Vec<Vec<usize>> {
    (0..p).step_by(size.max(1)).map(|s| (s..(s + size).min(p)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standardize, RawDataset};

    fn corr2(r: f64, n: usize) -> CorrelationMatrix {
        CorrelationMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]), n).unwrap()
    }

    #[test]
    fn fisher_cutoff_matches_high_precision_values() {
        // mpmath, 40 digits: (exp(2c/√97) − 1)/(exp(2c/√97) + 1)
        assert!((fisher_cutoff(3.09, 100).unwrap() - 0.303_837_464_595_870_6).abs() < 1e-15);
        assert!((fisher_cutoff(3.29, 100).unwrap() - 0.322_154_177_613_026).abs() < 1e-15);
        assert!(fisher_cutoff(1e-12, 100).unwrap() < 1e-12);
        assert!(fisher_cutoff(3.0, 3).is_err());
        assert!(fisher_cutoff(0.0, 100).is_err());
    }

    #[test]
    fn fisher_cutoff_monotone() {
        let a = fisher_cutoff(2.0, 50).unwrap();
        assert!(fisher_cutoff(2.5, 50).unwrap() > a);
        assert!(fisher_cutoff(2.0, 80).unwrap() < a);
    }

    #[test]
    fn correlations_of_special_columns() {
        let x = DMatrix::from_column_slice(
            4,
            4,
            &[
                1.0, -1.0, 1.0, -1.0, //
                1.0, 1.0, -1.0, -1.0, //
                1.0, -1.0, 1.0, -1.0, //
                -1.0, 1.0, -1.0, 1.0,
            ],
        );
        let raw = RawDataset::unnamed(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]), x).unwrap();
        let c = correlations(&standardize(&raw).unwrap());
        assert!(c.get(0, 1).abs() < 1e-15);
        assert_eq!(c.get(0, 2), 1.0);
        assert_eq!(c.get(0, 3), -1.0);
        assert_eq!(c.get(2, 2), 1.0);
    }

    #[test]
    fn threshold_rules() {
        let pos = corr2(0.5, 100);
        let neg = corr2(-0.5, 100);
        let n1 = AdjacencyScheme::Threshold { cutoff: Cutoff::Correlation(0.3038) };
        let a = build_adjacency(&pos, &n1).unwrap();
        assert_eq!((a.weight(0, 1), a.sign(0, 1)), (1.0, Some(1)));
        assert_eq!(build_adjacency(&neg, &n1).unwrap().n_edges(), 0);

        let n2 = AdjacencyScheme::SignedThreshold { cutoff: Cutoff::Correlation(0.3222) };
        let a = build_adjacency(&neg, &n2).unwrap();
        assert_eq!((a.weight(0, 1), a.sign(1, 0)), (1.0, Some(-1)));
        assert_eq!(a.degrees().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn power_rules() {
        let pos = corr2(0.5, 100);
        let neg = corr2(-0.5, 100);
        let a = build_adjacency(&pos, &AdjacencyScheme::n3()).unwrap();
        assert_eq!(a.weight(0, 1), 0.015625);
        assert_eq!(build_adjacency(&neg, &AdjacencyScheme::n3()).unwrap().n_edges(), 0);
        let a = build_adjacency(&neg, &AdjacencyScheme::n4()).unwrap();
        assert_eq!((a.weight(0, 1), a.sign(0, 1)), (0.015625, Some(-1)));
        // 0.04^6 = 4.1e-9 is under the floor
        assert_eq!(build_adjacency(&corr2(0.04, 100), &AdjacencyScheme::n3()).unwrap().n_edges(), 0);
    }

    #[test]
    fn invalid_scheme_parameters() {
        let c = corr2(0.5, 100);
        assert!(build_adjacency(&c, &AdjacencyScheme::Power { alpha: 0.0 }).is_err());
        assert!(build_adjacency(&c, &AdjacencyScheme::Threshold { cutoff: Cutoff::Correlation(1.0) }).is_err());
        assert!(build_adjacency(&c, &AdjacencyScheme::Threshold { cutoff: Cutoff::Normal(-1.0) }).is_err());
    }

    #[test]
    fn partition_cases() {
        let a = partition_adjacency(2, &[vec![0, 1]]).unwrap();
        assert_eq!(a.weight(0, 1), 0.5);
        assert_eq!(partition_adjacency(3, &[vec![0], vec![1], vec![2]]).unwrap().n_edges(), 0);
        let a = partition_adjacency(3, &[vec![0, 1], vec![2]]).unwrap();
        assert_eq!(a.n_edges(), 1);
        assert_eq!(a.weight(0, 2), 0.0);
        assert!(partition_adjacency(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(partition_adjacency(3, &[vec![0, 1]]).is_err());
    }

    #[test]
    fn from_edges_validation() {
        assert!(AdjacencyMatrix::from_edges(3, [(0, 0, 1.0, 1)]).is_err());
        assert!(AdjacencyMatrix::from_edges(3, [(0, 1, 1.0, 1), (1, 0, 1.0, 1)]).is_err());
        assert!(AdjacencyMatrix::from_edges(3, [(0, 1, -1.0, 1)]).is_err());
        assert!(AdjacencyMatrix::from_edges(3, [(0, 1, 1.0, 0)]).is_err());
        let a = AdjacencyMatrix::from_edges(3, [(0, 1, 2.0, -1), (1, 2, 0.5, 1)]).unwrap();
        assert_eq!(a.degrees().as_slice(), &[2.0, 2.5, 0.5]);
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![(0, 1, 2.0, -1), (1, 2, 0.5, 1)]);
    }
}
