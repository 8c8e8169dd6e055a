//! Cyclic coordinate descent for
//!
//! ```text
//! M(b) = (1/2n)‖y − Xb‖² + Σ_j ρ(|b_j|; λ1, γ) + (λ2/2)·b'Lb.
//! ```
//!
//! The `j`-th step minimizes `M` exactly in `b_j` with the others fixed:
//!
//! ```text
//! v_j = ‖x_j‖²/n + λ2·L_jj
//! z_j = x_j'r/n + (‖x_j‖²/n)·b_j − λ2·Σ_{k≠j} L_jk b_k
//! b_j ← argmin_b (v_j/2)b² − z_j b + ρ(|b|)
//! ```
//!
//! with the residual `r = y − Xb` updated in place. Each step is an exact
//! univariate minimization, so the criterion never increases.
//!
//! After each full sweep that changes something, the solver cycles over the
//! current nonzero set until it settles and then returns to full sweeps;
//! convergence is only declared on a full sweep.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Design;
use crate::error::{Result, SlsError};
use crate::laplacian::Laplacian;
use crate::linalg;
use crate::penalty::PenaltyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlsHyperparams {
    pub penalty: PenaltyConfig,
    pub lambda2: f64,
}

impl SlsHyperparams {
    pub fn new(penalty: PenaltyConfig, lambda2: f64) -> Result<Self> {
        let h = SlsHyperparams { penalty, lambda2 };
        h.validate()?;
        Ok(h)
    }

    pub fn lambda1(&self) -> f64 {
        self.penalty.lambda1
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        if !(self.lambda2 >= 0.0) || !self.lambda2.is_finite() {
            return Err(SlsError::param("lambda2", format!("must be finite and ≥ 0, got {}", self.lambda2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Maximum number of sweeps (full and active-set sweeps both count).
    pub max_iter: usize,
    /// Convergence threshold on the largest coefficient change in a full sweep.
    pub tol: f64,
    /// Largest stationarity violation accepted at convergence.
    pub kkt_tol: f64,
    pub init: Option<DVector<f64>>,
    /// Cycle over the nonzero set between full sweeps.
    pub active_set: bool,
    /// Record the criterion after every coordinate update (slow; for checks).
    pub trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 10_000, tol: 1e-7, kkt_tol: 1e-6, init: None, active_set: true, trace: false }
    }
}

impl FitOptions {
    pub fn tight() -> Self {
        FitOptions { tol: 1e-13, kkt_tol: 1e-10, max_iter: 200_000, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SlsFit {
    /// Coefficients on the scale of the design that was fitted.
    pub beta: DVector<f64>,
    pub hyper: SlsHyperparams,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Set when λ1 = 0 and `X'X/n + λ2L` is singular.
    pub possibly_nonunique: bool,
    /// Criterion after every coordinate update, starting with the initial point.
    pub trace: Option<Vec<f64>>,
}

impl SlsFit {
    pub fn support(&self) -> Vec<usize> {
        self.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SlsPath {
    pub lambda1_grid: Vec<f64>,
    pub lambda2: f64,
    pub penalty: PenaltyConfig,
    pub fits: Vec<SlsFit>,
}

fn check_inputs(design: &Design<'_>, lap: &Laplacian, b: Option<&DVector<f64>>) -> Result<()> {
    design.check()?;
    if lap.dim() != design.p() {
        return Err(SlsError::dims("Laplacian", design.p(), lap.dim()));
    }
    if let Some(b) = b {
        if b.len() != design.p() {
            return Err(SlsError::dims("coefficient vector", design.p(), b.len()));
        }
    }
    Ok(())
}

/// `M(b)` evaluated term by term.
pub fn criterion_value(design: &Design<'_>, lap: &Laplacian, b: &DVector<f64>, hyper: &SlsHyperparams) -> Result<f64> {
    check_inputs(design, lap, Some(b))?;
    let resid = design.y - design.x * b;
    let loss = resid.norm_squared() / (2.0 * design.n);
    let pen: f64 = b.iter().map(|&t| hyper.penalty.value(t)).sum();
    Ok(loss + pen + 0.5 * hyper.lambda2 * lap.quadratic(b)?)
}

/// Gradient of the smooth part with the sign flipped:
/// `x_j'(y − Xb)/n − λ2(Lb)_j`.
fn smooth_scores(design: &Design<'_>, lap: &Laplacian, b: &DVector<f64>, lambda2: f64) -> DVector<f64> {
    let resid = design.y - design.x * b;
    design.x.tr_mul(&resid) / design.n - lap.mul_vec(b) * lambda2
}

fn stationarity(scores: &DVector<f64>, b: &DVector<f64>, penalty: &PenaltyConfig) -> f64 {
    scores
        .iter()
        .zip(b.iter())
        .map(|(&g, &bj)| if bj != 0.0 { (g - penalty.derivative(bj)).abs() } else { (g.abs() - penalty.lambda1).max(0.0) })
        .fold(0.0, f64::max)
}

/// Largest violation of the stationarity conditions
/// `x_j'r/n − λ2(Lb)_j = ρ̇(b_j)` (nonzero `b_j`) and `|x_j'r/n − λ2(Lb)_j| ≤ λ1`
/// (zero `b_j`).
pub fn kkt_check(design: &Design<'_>, lap: &Laplacian, fit: &SlsFit) -> Result<f64> {
    check_inputs(design, lap, Some(&fit.beta))?;
    let scores = smooth_scores(design, lap, &fit.beta, fit.hyper.lambda2);
    Ok(stationarity(&scores, &fit.beta, &fit.hyper.penalty))
}

struct Workspace<'a> {
    x: &'a [f64],
    nrows: usize,
    n: f64,
    lap: &'a Laplacian,
    lambda2: f64,
    penalty: PenaltyConfig,
    col_sq: Vec<f64>,
    curv: Vec<f64>,
    beta: Vec<f64>,
    resid: Vec<f64>,
}

impl Workspace<'_> {
    fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Exact minimization in coordinate `j`; returns `|Δb_j|`.
    #[inline]
    fn update(&mut self, j: usize) -> f64 {
        let v = self.curv[j];
        if !(v > 0.0) {
            return 0.0;
        }
        let col = self.column(j);
        let xr: f64 = col.iter().zip(&self.resid).map(|(a, b)| a * b).sum::<f64>() / self.n;
        let mut z = xr + self.col_sq[j] * self.beta[j];
        if self.lambda2 != 0.0 {
            let (cols, vals) = self.lap.matrix().row_slices(j);
            let off: f64 = cols.iter().zip(vals).map(|(&k, &l)| l * self.beta[k]).sum();
            z -= self.lambda2 * off;
        }
        let new = self.penalty.solve(z, v);
        let delta = new - self.beta[j];
        if delta != 0.0 {
            let col = &self.x[j * self.nrows..(j + 1) * self.nrows];
            for (r, &a) in self.resid.iter_mut().zip(col) {
                *r -= delta * a;
            }
            self.beta[j] = new;
        }
        delta.abs()
    }

    fn objective(&self) -> f64 {
        let loss = self.resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * self.n);
        let pen: f64 = self.beta.iter().map(|&t| self.penalty.value(t)).sum();
        loss + pen + 0.5 * self.lambda2 * self.lap.matrix().quadratic(&self.beta)
    }
}

pub fn fit(design: &Design<'_>, lap: &Laplacian, hyper: &SlsHyperparams, opts: &FitOptions) -> Result<SlsFit> {
    hyper.validate()?;
    check_inputs(design, lap, opts.init.as_ref())?;
    let p = design.p();
    let nrows = design.x.nrows();
    let beta0 = opts.init.clone().unwrap_or_else(|| DVector::zeros(p));
    let resid0 = design.y - design.x * &beta0;
    let col_sq: Vec<f64> = (0..p).map(|j| design.x.column(j).norm_squared() / design.n).collect();
    let curv = (0..p).map(|j| col_sq[j] + hyper.lambda2 * lap.matrix().diag(j)).collect();
    let mut ws = Workspace {
        x: design.x.as_slice(),
        nrows,
        n: design.n,
        lap,
        lambda2: hyper.lambda2,
        penalty: hyper.penalty,
        col_sq,
        curv,
        beta: beta0.as_slice().to_vec(),
        resid: resid0.as_slice().to_vec(),
    };

    let mut trace = opts.trace.then(|| vec![ws.objective()]);
    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut active: Vec<usize> = Vec::with_capacity(p);

    while iterations < opts.max_iter {
        let mut max_change = 0.0f64;
        for j in 0..p {
            max_change = max_change.max(ws.update(j));
            if let Some(t) = trace.as_mut() {
                t.push(ws.objective());
            }
        }
        iterations += 1;
        if !max_change.is_finite() {
            return Err(SlsError::Numerical("coefficients diverged; check input scaling".into()));
        }
        if max_change <= opts.tol {
            let beta = DVector::from_column_slice(&ws.beta);
            kkt = stationarity(&smooth_scores(design, lap, &beta, hyper.lambda2), &beta, &hyper.penalty);
            if kkt <= opts.kkt_tol {
                converged = true;
                break;
            }
            continue;
        }
        if opts.active_set {
            active.clear();
            active.extend((0..p).filter(|&j| ws.beta[j] != 0.0));
            while iterations < opts.max_iter {
                let mut change = 0.0f64;
                for &j in &active {
                    change = change.max(ws.update(j));
                    if let Some(t) = trace.as_mut() {
                        t.push(ws.objective());
                    }
                }
                iterations += 1;
                if change <= opts.tol {
                    break;
                }
            }
        }
    }

    let beta = DVector::from_column_slice(&ws.beta);
    if !converged {
        kkt = stationarity(&smooth_scores(design, lap, &beta, hyper.lambda2), &beta, &hyper.penalty);
    }
    let objective = criterion_value(design, lap, &beta, hyper)?;
    if !objective.is_finite() {
        return Err(SlsError::Numerical("non-finite objective; check input scaling".into()));
    }
    let possibly_nonunique = hyper.lambda1() == 0.0 && {
        let m = design.gram() + lap.to_dense() * hyper.lambda2;
        linalg::smallest_eigenvalue(&m) <= 1e-12
    };
    Ok(SlsFit { beta, hyper: *hyper, iterations, converged, objective, kkt_residual: kkt, possibly_nonunique, trace })
}

/// Warm-started fits along a strictly descending λ1 grid.
pub fn fit_path(
    design: &Design<'_>,
    lap: &Laplacian,
    lambda1_grid: &[f64],
    lambda2: f64,
    penalty: PenaltyConfig,
    opts: &FitOptions,
) -> Result<SlsPath> {
    if lambda1_grid.is_empty() {
        return Err(SlsError::param("lambda1_grid", "grid is empty"));
    }
    if lambda1_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SlsError::param("lambda1_grid", "grid must be strictly descending"));
    }
    let mut fits = Vec::with_capacity(lambda1_grid.len());
    let mut warm = opts.clone();
    for &l1 in lambda1_grid {
        let hyper = SlsHyperparams::new(penalty.with_lambda1(l1), lambda2)?;
        let f = fit(design, lap, &hyper, &warm)?;
        warm.init = Some(f.beta.clone());
        fits.push(f);
    }
    Ok(SlsPath { lambda1_grid: lambda1_grid.to_vec(), lambda2, penalty, fits })
}
