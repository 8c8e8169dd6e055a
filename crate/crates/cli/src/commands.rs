use std::path::Path;

use serde::Serialize;
use sls_core::graph::{consecutive_blocks, Cutoff, DEFAULT_POWER, DEFAULT_SIGNED_THRESHOLD_C, DEFAULT_THRESHOLD_C};
use sls_core::io::{adjacency_to_string, laplacian_to_string, read_adjacency, read_support};
use sls_core::oracle::{diagnose, residual_sigma, theorem_conditions, ConditionInputs, ConditionReport, DiagnosticsReport};
use sls_core::sim::{results_to_tsv, run_study_config, StudyConfig};
use sls_core::tuning::{cv_select, default_grid, CvConfig, Grid};
use sls_core::{
    build_adjacency, build_laplacian, connected_components, correlations, fit, fit_path, load_csv, partition_adjacency, standardize,
    AdjacencyMatrix, AdjacencyScheme, FitOptions, Laplacian, PenaltyConfig, PenaltyKind, ResponseColumn, SlsHyperparams,
    StandardizedDataset,
};

use crate::args::{Command, DataArgs, GraphArgs, PenaltyArgs};
use crate::output::{emit, json, write_file, FitJson};
use crate::Failure;

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Graph { data, graph, adjacency_out, laplacian_out } => {
            let ds = load(&data)?;
            let adj = adjacency(&ds, &graph)?;
            let lap = build_laplacian(&adj, graph.normalized);
            if let Some(p) = adjacency_out {
                write_file(&p, &adjacency_to_string(&adj))?;
            }
            if let Some(p) = laplacian_out {
                write_file(&p, &laplacian_to_string(&lap))?;
            }
            let comps = connected_components(&adj);
            let summary = GraphSummary {
                p: adj.p(),
                n_edges: adj.n_edges(),
                n_components: comps.len(),
                largest_component: comps.iter().map(Vec::len).max().unwrap_or(0),
                normalized: graph.normalized,
                correlation_cutoff: resolved_cutoff(&graph, ds.n())?,
            };
            emit(None, &json(&summary)?)
        }
        Command::Fit { data, graph, penalty, lambda1, lambda2, output } => {
            let ds = load(&data)?;
            let lap = laplacian(&ds, &graph)?;
            let hyper = SlsHyperparams::new(penalty_config(&penalty, lambda1)?, lambda2)?;
            let f = fit(&ds.design(), &lap, &hyper, &options(&penalty))?;
            warn_unconverged(f.converged, f.kkt_residual);
            emit(output.as_deref(), &json(&FitJson::new(&ds, &f)?)?)
        }
        Command::Path { data, graph, penalty, lambda2, n_lambda, output } => {
            if n_lambda == 0 {
                return Err(Failure::invalid("--n-lambda must be positive"));
            }
            let ds = load(&data)?;
            let lap = laplacian(&ds, &graph)?;
            let grid: Vec<f64> = (0..n_lambda).map(|k| ds.lambda_max() * 2f64.powf(-0.5 * k as f64)).collect();
            let path = fit_path(&ds.design(), &lap, &grid, lambda2, penalty_config(&penalty, 1.0)?, &options(&penalty))?;
            let fits = path.fits.iter().map(|f| FitJson::new(&ds, f)).collect::<Result<Vec<_>, _>>()?;
            emit(output.as_deref(), &json(&fits)?)
        }
        Command::Cv { data, graph, penalty, folds, seed, output, surface } => {
            let ds = load(&data)?;
            let lap = laplacian(&ds, &graph)?;
            let mut grid = default_grid(&ds);
            if lap.is_zero() {
                grid = Grid { lambda2: vec![0.0], ..grid };
            }
            let pen = penalty_config(&penalty, 1.0)?;
            let cfg = CvConfig { folds, seed, penalty: pen, options: options(&penalty) };
            let cv = cv_select(&ds, &lap, &grid, &cfg)?;
            let (l1, l2) = cv.best;
            eprintln!("best lambda1 = {l1:.6e}, lambda2 = {l2:.6e}, cv error = {:.6e}", cv.cv_errors[cv.best_index]);
            if let Some(p) = surface {
                write_file(&p, &cv.to_tsv())?;
            }
            let f = fit(&ds.design(), &lap, &SlsHyperparams::new(pen.with_lambda1(l1), l2)?, &options(&penalty))?;
            warn_unconverged(f.converged, f.kkt_residual);
            emit(output.as_deref(), &json(&FitJson::new(&ds, &f)?)?)
        }
        Command::Diagnose { data, graph, support, lambda2, lambda1, sigma, gamma, eps, unbiased_tol, output } => {
            let ds = load(&data)?;
            let lap = laplacian(&ds, &graph)?;
            let (support, beta_true) = read_support(&support, ds.p())?;
            let design = ds.design();
            let report = diagnose(&design, &lap, &support, lambda2, beta_true.as_ref(), unbiased_tol)?;
            let (conditions, sigma_used) = match lambda1 {
                Some(lambda1) => {
                    let reference = match &beta_true {
                        Some(b) => b.clone(),
                        None => nalgebra::DVector::from_vec(report.oracle_beta.clone()),
                    };
                    let sigma = match sigma {
                        Some(s) => s,
                        None => residual_sigma(&design, &lap, &support, lambda2)?,
                    };
                    let inputs = ConditionInputs { lambda1, lambda2, gamma, sigma, eps };
                    (Some(theorem_conditions(&design, &lap, &support, &reference, inputs, &[])?), Some(sigma))
                }
                None => (None, None),
            };
            let out = DiagnoseJson {
                diagnostics: report,
                conditions,
                sigma: sigma_used,
                sigma_estimated: sigma_used.is_some() && sigma.is_none(),
            };
            emit(output.as_deref(), &json(&out)?)
        }
        Command::Simulate { config, output, records, replicates, seed } => {
            let mut study = read_study(&config)?;
            if let Some(r) = replicates {
                study.simulation.n_replicates = r;
            }
            if let Some(s) = seed {
                study.simulation.seed = s;
            }
            let results = run_study_config(&study)?;
            if let Some(p) = records {
                write_file(&p, &json(&results)?)?;
            }
            emit(output.as_deref(), &results_to_tsv(&results))
        }
    }
}

#[derive(Serialize)]
struct GraphSummary {
    p: usize,
    n_edges: usize,
    n_components: usize,
    largest_component: usize,
    normalized: bool,
    correlation_cutoff: Option<f64>,
}

#[derive(Serialize)]
struct DiagnoseJson {
    diagnostics: DiagnosticsReport,
    conditions: Option<ConditionReport>,
    sigma: Option<f64>,
    sigma_estimated: bool,
}

fn load(data: &DataArgs) -> Result<StandardizedDataset, Failure> {
    let raw = load_csv(&data.input, !data.no_header, &ResponseColumn::from(data.response.as_str()))?;
    Ok(standardize(&raw)?)
}

fn cutoff(graph: &GraphArgs, default_c: f64) -> Cutoff {
    match (graph.cutoff_c, graph.cutoff_r) {
        (_, Some(r)) => Cutoff::Correlation(r),
        (Some(c), None) => Cutoff::Normal(c),
        (None, None) => Cutoff::Normal(default_c),
    }
}

/// `None` means no graph.
fn scheme(graph: &GraphArgs, p: usize) -> Result<Option<AdjacencyScheme>, Failure> {
    let alpha = graph.alpha.unwrap_or(DEFAULT_POWER);
    let s = match graph.scheme.to_ascii_lowercase().as_str() {
        "n1" | "threshold" => AdjacencyScheme::Threshold { cutoff: cutoff(graph, DEFAULT_THRESHOLD_C) },
        "n2" | "signed-threshold" => AdjacencyScheme::SignedThreshold { cutoff: cutoff(graph, DEFAULT_SIGNED_THRESHOLD_C) },
        "n3" | "power" => AdjacencyScheme::Power { alpha },
        "n4" | "signed-power" => AdjacencyScheme::SignedPower { alpha },
        "partition" => {
            let size = graph.block_size.ok_or_else(|| Failure::invalid("--scheme partition needs --block-size"))?;
            if size == 0 {
                return Err(Failure::invalid("--block-size must be positive"));
            }
            AdjacencyScheme::Partition { blocks: consecutive_blocks(p, size) }
        }
        "none" => return Ok(None),
        other => {
            return Err(Failure::invalid(format!(
                "unknown scheme '{other}' (n1, n2, n3, n4, threshold, signed-threshold, power, signed-power, partition, none)"
            )))
        }
    };
    Ok(Some(s))
}

fn resolved_cutoff(graph: &GraphArgs, n: usize) -> Result<Option<f64>, Failure> {
    if graph.adjacency.is_some() {
        return Ok(None);
    }
    Ok(match scheme(graph, 1)? {
        Some(AdjacencyScheme::Threshold { cutoff } | AdjacencyScheme::SignedThreshold { cutoff }) => Some(cutoff.resolve(n)?),
        _ => None,
    })
}

fn adjacency(ds: &StandardizedDataset, graph: &GraphArgs) -> Result<AdjacencyMatrix, Failure> {
    if let Some(path) = &graph.adjacency {
        return Ok(read_adjacency(path, ds.p())?);
    }
    Ok(match scheme(graph, ds.p())? {
        None => AdjacencyMatrix::empty(ds.p()),
        Some(AdjacencyScheme::Partition { blocks }) => partition_adjacency(ds.p(), &blocks)?,
        Some(s) => build_adjacency(&correlations(ds), &s)?,
    })
}

fn laplacian(ds: &StandardizedDataset, graph: &GraphArgs) -> Result<Laplacian, Failure> {
    Ok(build_laplacian(&adjacency(ds, graph)?, graph.normalized))
}

fn penalty_config(args: &PenaltyArgs, lambda1: f64) -> Result<PenaltyConfig, Failure> {
    Ok(match args.penalty {
        PenaltyKind::L1 => PenaltyConfig::l1(lambda1)?,
        kind => PenaltyConfig::new(kind, lambda1, args.gamma)?,
    })
}

fn options(args: &PenaltyArgs) -> FitOptions {
    FitOptions { tol: args.tol, max_iter: args.max_iter, ..FitOptions::default() }
}

fn warn_unconverged(converged: bool, kkt: f64) {
    if !converged {
        eprintln!("warning: solver stopped at the iteration limit (KKT residual {kkt:.3e})");
    }
}

fn read_study(path: &Path) -> Result<StudyConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::invalid(format!("invalid study config {}: {e}", path.display())))
}
