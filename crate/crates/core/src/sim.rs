//! Simulation harness: clustered Gaussian designs, coefficient scenarios,
//! the replicate loop and median summaries.
//!
//! Every replicate draws from its own ChaCha8 stream (seed, replicate index),
//! so results do not depend on scheduling or on the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{standardize, RawDataset};
use crate::error::{Result, SlsError};
use crate::graph::{build_adjacency, correlations, AdjacencyMatrix, AdjacencyScheme};
use crate::laplacian::{build_laplacian, is_unbiased, Laplacian};
use crate::oracle::SupportSet;
use crate::penalty::{PenaltyConfig, PenaltyKind, DEFAULT_GAMMA};
use crate::solver::{fit, FitOptions, SlsHyperparams};
use crate::tuning::{cv_select, default_lambda1_exponents, default_lambda2_exponents, CvConfig, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    /// Independent clusters, AR(1) correlation inside each cluster.
    I,
    /// One AR(1) chain over all covariates.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CoefScenario {
    Equal { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub cluster_size: usize,
    pub n_nonzero_clusters: usize,
    pub structure: Structure,
    pub rho: f64,
    pub coef_scenario: CoefScenario,
    pub sigma: f64,
    pub n_replicates: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 100,
            p: 500,
            cluster_size: 5,
            n_nonzero_clusters: 5,
            structure: Structure::I,
            rho: 0.5,
            coef_scenario: CoefScenario::Equal { value: 0.5 },
            sigma: 1.0,
            n_replicates: 50,
            n_test: 100,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(SlsError::param("n/p", "need n ≥ 2 and p ≥ 1"));
        }
        if self.cluster_size == 0 || !self.p.is_multiple_of(self.cluster_size) {
            return Err(SlsError::param("cluster_size", format!("p = {} is not a multiple of {}", self.p, self.cluster_size)));
        }
        if self.n_nonzero() > self.p {
            return Err(SlsError::param("n_nonzero_clusters", "more nonzero coefficients than covariates"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(SlsError::param("rho", format!("must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(SlsError::param("sigma", "must be finite and ≥ 0"));
        }
        if self.n_test == 0 {
            return Err(SlsError::param("n_test", "must be positive"));
        }
        match self.coef_scenario {
            CoefScenario::Equal { value } if !value.is_finite() => Err(SlsError::param("value", "must be finite")),
            CoefScenario::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(SlsError::param("uniform", "need finite lo < hi"))
            }
            _ => Ok(()),
        }
    }

    pub fn n_nonzero(&self) -> usize {
        self.n_nonzero_clusters * self.cluster_size
    }

    /// Consecutive index blocks of `cluster_size`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        crate::graph::consecutive_blocks(self.p, self.cluster_size)
    }
}

/// `n_rows × p` Gaussian design with unit variances and AR(1) correlation
/// `ρ^|i−j|` (within clusters for structure I, globally for structure II).
///
/// Uses the bidiagonal factor `x_1 = z_1`, `x_k = ρ x_{k−1} + √(1−ρ²) z_k`.
pub fn generate_design<R: Rng + ?Sized>(cfg: &SimConfig, n_rows: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let rho = cfg.rho;
    let innov = (1.0 - rho * rho).sqrt();
    if !(innov > 0.0) {
        return Err(SlsError::Numerical(format!("AR(1) factor is singular at rho = {rho}")));
    }
    let p = cfg.p;
    let chain_start = |k: usize| match cfg.structure {
        Structure::I => k.is_multiple_of(cfg.cluster_size),
        Structure::II => k == 0,
    };
    let mut x = DMatrix::zeros(n_rows, p);
    for i in 0..n_rows {
        let mut prev = 0.0;
        for k in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if chain_start(k) { z } else { rho * prev + innov * z };
            x[(i, k)] = v;
            prev = v;
        }
    }
    Ok(x)
}

/// True coefficients: the first `n_nonzero` coordinates follow the scenario.
pub fn make_coefficients<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<(DVector<f64>, SupportSet)> {
    cfg.validate()?;
    let m = cfg.n_nonzero();
    let mut beta = DVector::zeros(cfg.p);
    match cfg.coef_scenario {
        CoefScenario::Equal { value } => beta.rows_mut(0, m).fill(value),
        CoefScenario::Uniform { lo, hi } => {
            let u = Uniform::new(lo, hi).map_err(|e| SlsError::param("uniform", e.to_string()))?;
            for j in 0..m {
                beta[j] = rng.sample(u);
            }
        }
    }
    let support = SupportSet::from_beta(&beta);
    Ok((beta, support))
}

/// `y = X β + σ ε` with standard Gaussian `ε`.
pub fn generate_response<R: Rng + ?Sized>(x: &DMatrix<f64>, beta: &DVector<f64>, sigma: f64, rng: &mut R) -> Result<DVector<f64>> {
    if x.ncols() != beta.len() {
        return Err(SlsError::dims("coefficient vector", x.ncols(), beta.len()));
    }
    let mut y = x * beta;
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sigma * e;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateMetrics {
    pub positives: usize,
    pub true_positives: usize,
    pub pmse: f64,
}

/// Selection counts for `coefs` against `beta_true`, and test-set PMSE of
/// `intercept + test_x · coefs`.
pub fn evaluate(
    intercept: f64,
    coefs: &DVector<f64>,
    beta_true: &DVector<f64>,
    test_x: &DMatrix<f64>,
    test_y: &DVector<f64>,
) -> Result<ReplicateMetrics> {
    if coefs.len() != beta_true.len() || test_x.ncols() != coefs.len() {
        return Err(SlsError::dims("coefficient vector", test_x.ncols(), coefs.len()));
    }
    if test_x.nrows() != test_y.len() || test_y.is_empty() {
        return Err(SlsError::dims("test response", test_x.nrows(), test_y.len()));
    }
    let positives = coefs.iter().filter(|&&b| b != 0.0).count();
    let true_positives = coefs.iter().zip(beta_true.iter()).filter(|(&b, &t)| b != 0.0 && t != 0.0).count();
    let pred = test_x * coefs;
    let pmse = pred.iter().zip(test_y.iter()).map(|(f, y)| (y - intercept - f).powi(2)).sum::<f64>() / test_y.len() as f64;
    Ok(ReplicateMetrics { positives, true_positives, pmse })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphSpec {
    /// No Laplacian term; λ2 is fixed at 0.
    None,
    /// Graph estimated from each replicate's training design.
    Scheme {
        scheme: AdjacencyScheme,
        #[serde(default)]
        normalized: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSpec {
    pub folds: usize,
    /// Base-2 exponents relative to λ_max.
    pub lambda1_exponents: Vec<f64>,
    /// Base-2 exponents; ignored when the method has no graph.
    pub lambda2_exponents: Vec<f64>,
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec { folds: 5, lambda1_exponents: default_lambda1_exponents(), lambda2_exponents: default_lambda2_exponents() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub penalty: PenaltyKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub graph: GraphSpec,
    #[serde(default)]
    pub tuning: TuningSpec,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl MethodSpec {
    /// MCP with the given adjacency scheme (raw Laplacian).
    pub fn sls(name: &str, scheme: AdjacencyScheme) -> Self {
        MethodSpec {
            name: name.into(),
            penalty: PenaltyKind::Mcp,
            gamma: DEFAULT_GAMMA,
            graph: GraphSpec::Scheme { scheme, normalized: false },
            tuning: TuningSpec::default(),
        }
    }

    /// MCP without a Laplacian term.
    pub fn mcp(name: &str) -> Self {
        MethodSpec {
            name: name.into(),
            penalty: PenaltyKind::Mcp,
            gamma: DEFAULT_GAMMA,
            graph: GraphSpec::None,
            tuning: TuningSpec::default(),
        }
    }

    fn penalty_config(&self) -> Result<PenaltyConfig> {
        match self.penalty {
            PenaltyKind::L1 => PenaltyConfig::l1(1.0),
            kind => PenaltyConfig::new(kind, 1.0, self.gamma),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub metrics: Option<ReplicateMetrics>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Whether `L_O β°_O = 0` on the Laplacian restricted to true clusters;
    /// only evaluated for equal coefficients and raw Laplacians.
    pub oracle_unbiased: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub positives: f64,
    pub true_positives: f64,
    pub pmse: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub method: MethodSpec,
    pub config: SimConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub summary: Option<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub simulation: SimConfig,
    pub methods: Vec<MethodSpec>,
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Laplacian and whether the edges inside the true clusters leave `β°` unbiased.
fn replicate_laplacian(
    cfg: &SimConfig,
    graph: &GraphSpec,
    ds: &crate::dataset::StandardizedDataset,
    beta: &DVector<f64>,
    support: &SupportSet,
) -> Result<(Laplacian, Option<bool>)> {
    match graph {
        GraphSpec::None => Ok((Laplacian::zeros(cfg.p), None)),
        GraphSpec::Scheme { scheme, normalized } => {
            let adj = build_adjacency(&correlations(ds), scheme)?;
            let check = match cfg.coef_scenario {
                CoefScenario::Equal { .. } if !normalized => Some(restricted_unbiased(cfg, &adj, beta, support)?),
                _ => None,
            };
            Ok((build_laplacian(&adj, *normalized), check))
        }
    }
}

fn restricted_unbiased(cfg: &SimConfig, adj: &AdjacencyMatrix, beta: &DVector<f64>, support: &SupportSet) -> Result<bool> {
    let cs = cfg.cluster_size;
    let restricted = adj.restrict(|j, k| j / cs == k / cs);
    let positive_only = restricted.edges().all(|(j, k, _, s)| s > 0 || beta[j] == 0.0 && beta[k] == 0.0);
    let check = is_unbiased(&build_laplacian(&restricted, false), support.indices(), beta, 1e-10)?;
    if positive_only && !check.unbiased {
        return Err(SlsError::Numerical(format!(
            "restricted Laplacian fails L_O β_O = 0 (residual {:.3e}) for equal coefficients",
            check.residual
        )));
    }
    Ok(check.unbiased)
}

/// Runs one replicate end to end: data, graph, CV, refit, evaluation.
pub fn run_replicate(cfg: &SimConfig, method: &MethodSpec, replicate: usize) -> Result<ReplicateRecord> {
    cfg.validate()?;
    let mut rng = replicate_rng(cfg.seed, replicate);
    let (beta, support) = make_coefficients(cfg, &mut rng)?;
    let x = generate_design(cfg, cfg.n, &mut rng)?;
    let y = generate_response(&x, &beta, cfg.sigma, &mut rng)?;
    let test_x = generate_design(cfg, cfg.n_test, &mut rng)?;
    let test_y = generate_response(&test_x, &beta, cfg.sigma, &mut rng)?;
    let cv_seed: u64 = rng.random();

    let ds = standardize(&RawDataset::unnamed(y, x)?)?;
    let (lap, oracle_unbiased) = replicate_laplacian(cfg, &method.graph, &ds, &beta, &support)?;

    let t = &method.tuning;
    let mut grid = Grid::from_exponents(ds.lambda_max(), &t.lambda1_exponents, &t.lambda2_exponents);
    if matches!(method.graph, GraphSpec::None) {
        grid.lambda2 = vec![0.0];
    }
    let penalty = method.penalty_config()?;
    let opts = FitOptions::default();
    let cv = cv_select(&ds, &lap, &grid, &CvConfig { folds: t.folds, seed: cv_seed, penalty, options: opts.clone() })?;
    let (l1, l2) = cv.best;
    let hyper = SlsHyperparams::new(penalty.with_lambda1(l1), l2)?;
    let f = fit(&ds.design(), &lap, &hyper, &opts)?;
    let (intercept, coefs) = ds.to_original_scale(&f.beta)?;
    let metrics = evaluate(intercept, &coefs, &beta, &test_x, &test_y)?;
    Ok(ReplicateRecord { replicate, metrics: Some(metrics), lambda1: Some(l1), lambda2: Some(l2), oracle_unbiased, error: None })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Medians over successful replicates, `None` when all failed.
pub fn summarize(records: &[ReplicateRecord]) -> Option<SummaryRow> {
    let ok: Vec<ReplicateMetrics> = records.iter().filter_map(|r| r.metrics).collect();
    if ok.is_empty() {
        return None;
    }
    Some(SummaryRow {
        positives: median(ok.iter().map(|m| m.positives as f64).collect()),
        true_positives: median(ok.iter().map(|m| m.true_positives as f64).collect()),
        pmse: median(ok.iter().map(|m| m.pmse).collect()),
        n_ok: ok.len(),
        n_failed: records.len() - ok.len(),
    })
}

/// All replicates for one method. Failed replicates are kept with their error
/// message and excluded from the medians; a warning goes to stderr.
pub fn run_study(cfg: &SimConfig, method: &MethodSpec) -> Result<StudyResult> {
    cfg.validate()?;
    if cfg.n_replicates == 0 {
        return Err(SlsError::param("n_replicates", "must be positive"));
    }
    let replicates: Vec<ReplicateRecord> = (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(cfg, method, r).unwrap_or_else(|e| ReplicateRecord {
                replicate: r,
                metrics: None,
                lambda1: None,
                lambda2: None,
                oracle_unbiased: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    for r in replicates.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {} replicate {} failed: {}", method.name, r.replicate, r.error.as_deref().unwrap_or(""));
    }
    let summary = summarize(&replicates);
    Ok(StudyResult { method: method.clone(), config: cfg.clone(), replicates, summary })
}

pub fn run_study_config(study: &StudyConfig) -> Result<Vec<StudyResult>> {
    if study.methods.is_empty() {
        return Err(SlsError::invalid("study config lists no methods"));
    }
    study.methods.iter().map(|m| run_study(&study.simulation, m)).collect()
}

/// Table of medians: one row per method, PMSE reported ×100.
pub fn results_to_tsv(results: &[StudyResult]) -> String {
    let mut out =
        String::from("method\tstructure\tscenario\trho\tpositives\ttrue_positives\tpmse_x100\treplicates_ok\treplicates_failed\n");
    for r in results {
        let c = &r.config;
        let scenario = match c.coef_scenario {
            CoefScenario::Equal { value } => format!("equal({value})"),
            CoefScenario::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
        };
        let (pos, tp, pmse, ok, failed) = match r.summary {
            Some(s) => (format!("{}", s.positives), format!("{}", s.true_positives), format!("{:.2}", 100.0 * s.pmse), s.n_ok, s.n_failed),
            None => ("NA".into(), "NA".into(), "NA".into(), 0, r.replicates.len()),
        };
        out.push_str(&format!("{}\t{:?}\t{}\t{}\t{pos}\t{tp}\t{pmse}\t{ok}\t{failed}\n", r.method.name, c.structure, scenario, c.rho));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_zero_gives_independent_unit_columns() {
        for structure in [Structure::I, Structure::II] {
            let cfg = SimConfig { p: 10, n_nonzero_clusters: 1, rho: 0.0, structure, ..SimConfig::default() };
            let mut a = ChaCha8Rng::seed_from_u64(3);
            let mut b = ChaCha8Rng::seed_from_u64(3);
            let x = generate_design(&cfg, 4, &mut a).unwrap();
            for i in 0..4 {
                for k in 0..10 {
                    let z: f64 = b.sample(StandardNormal);
                    assert_eq!(x[(i, k)], z);
                }
            }
        }
    }

    #[test]
    fn coefficients_follow_scenario() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (b, s) = make_coefficients(&SimConfig::default(), &mut rng).unwrap();
        assert_eq!(s.indices(), (0..25).collect::<Vec<_>>().as_slice());
        assert!(b.rows(0, 25).iter().all(|&v| v == 0.5));
        assert!(b.rows(25, 475).iter().all(|&v| v == 0.0));
        let cfg = SimConfig { coef_scenario: CoefScenario::Uniform { lo: 0.25, hi: 0.75 }, ..SimConfig::default() };
        let (b, _) = make_coefficients(&cfg, &mut rng).unwrap();
        assert!(b.rows(0, 25).iter().all(|&v| (0.25..0.75).contains(&v)));
        let cfg = SimConfig { n_nonzero_clusters: 0, ..SimConfig::default() };
        let (b, s) = make_coefficients(&cfg, &mut rng).unwrap();
        assert!(b.iter().all(|&v| v == 0.0) && s.is_empty());
    }

    #[test]
    fn noiseless_response_and_perfect_recovery() {
        let cfg = SimConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (b, _) = make_coefficients(&cfg, &mut rng).unwrap();
        let x = generate_design(&cfg, 20, &mut rng).unwrap();
        let y = generate_response(&x, &b, 0.0, &mut rng).unwrap();
        assert_eq!(y, &x * &b);
        let m = evaluate(0.0, &b, &b, &x, &y).unwrap();
        assert_eq!(m, ReplicateMetrics { positives: 25, true_positives: 25, pmse: 0.0 });
        let zero = DVector::zeros(cfg.p);
        let m = evaluate(0.0, &zero, &b, &x, &y).unwrap();
        assert_eq!((m.positives, m.true_positives), (0, 0));
        assert!((m.pmse - y.norm_squared() / 20.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { p: 12, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { rho: 1.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { p: 20, n_nonzero_clusters: 5, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn study_config_parses_from_toml_shaped_json() {
        let cfg: StudyConfig = serde_json::from_str(
            r#"{"simulation": {"p": 50, "rho": 0.9},
                "methods": [{"name": "SLS", "penalty": "mcp",
                             "graph": {"kind": "scheme", "scheme": {"kind": "threshold", "cutoff": {"normal": 3.09}}}},
                            {"name": "MCP", "penalty": "mcp", "graph": {"kind": "none"}}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.simulation.p, 50);
        assert_eq!(cfg.simulation.n, 100);
        assert_eq!(cfg.methods[0].graph, GraphSpec::Scheme { scheme: AdjacencyScheme::n1(), normalized: false });
        assert_eq!(cfg.methods[1].tuning.folds, 5);
    }
}
