//! Sparse Laplacian shrinkage (SLS) regression.
//!
//! Minimizes
//!
//! ```text
//! M(b) = (1/2n)‖y − Xb‖² + Σ_j ρ(|b_j|; λ1, γ) + (λ2/2)·b'Lb
//! ```
//!
//! where `ρ` is the minimax concave penalty (or SCAD / ℓ1) and `L` is a graph
//! Laplacian built from the correlation network of the predictors. The crate
//! covers the whole pipeline: data standardization, adjacency and Laplacian
//! construction, the coordinate-descent solver, oracle-estimator diagnostics,
//! V-fold cross-validation and a simulation harness.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod graph;
pub mod io;
pub mod laplacian;
pub mod oracle;
pub mod penalty;
pub mod sim;
pub mod solver;
pub mod sparse;
pub mod tuning;

pub(crate) mod linalg;

pub use dataset::{load_csv, standardize, Design, RawDataset, ResponseColumn, StandardizedDataset};
pub use error::{Result, SlsError};
pub use graph::{
    build_adjacency, correlations, fisher_cutoff, partition_adjacency, AdjacencyMatrix, AdjacencyScheme, CorrelationMatrix, Cutoff,
};
pub use laplacian::{augment, build_laplacian, connected_components, is_unbiased, AugmentedData, Laplacian};
pub use penalty::{PenaltyConfig, PenaltyKind};
pub use solver::{criterion_value, fit, fit_path, kkt_check, FitOptions, SlsFit, SlsHyperparams, SlsPath};
