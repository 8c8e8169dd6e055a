use std::path::Path;

use serde::Serialize;
use sls_core::{PenaltyConfig, SlsFit, StandardizedDataset};

use crate::Failure;

#[derive(Debug, Serialize)]
pub struct FitJson {
    pub penalty: String,
    /// `None` for ℓ1.
    pub gamma: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub intercept: f64,
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standardized_coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub support_names: Vec<String>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub possibly_nonunique: bool,
}

fn penalty_name(p: &PenaltyConfig) -> String {
    format!("{:?}", p.kind).to_lowercase()
}

impl FitJson {
    pub fn new(ds: &StandardizedDataset, fit: &SlsFit) -> Result<Self, Failure> {
        let (intercept, coefs) = ds.to_original_scale(&fit.beta)?;
        let support = fit.support();
        let names = ds.column_names();
        let pen = fit.hyper.penalty;
        Ok(FitJson {
            penalty: penalty_name(&pen),
            gamma: pen.gamma.is_finite().then_some(pen.gamma),
            lambda1: pen.lambda1,
            lambda2: fit.hyper.lambda2,
            intercept,
            column_names: names.to_vec(),
            coefficients: coefs.as_slice().to_vec(),
            standardized_coefficients: fit.beta.as_slice().to_vec(),
            support_names: support.iter().map(|&j| names[j].clone()).collect(),
            support,
            objective: fit.objective,
            kkt_residual: fit.kkt_residual,
            iterations: fit.iterations,
            converged: fit.converged,
            possibly_nonunique: fit.possibly_nonunique,
        })
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Failure::invalid(format!("cannot serialize output: {e}")))
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))
}
