//! Oracle Laplacian shrinkage estimator and the bias/conditioning quantities
//! that govern when the sparse estimator coincides with it.
//!
//! With `O` the true support, `Σ = X'X/n` and `Σ(λ2) = Σ + λ2L`:
//!
//! ```text
//! β̂°_O = Σ_O(λ2)^{-1} X_O'y/n              (oracle estimator)
//! β*_O = Σ_O(λ2)^{-1} Σ_O β°_O             (its target)
//! C1   = ‖Σ_O(λ2)^{-1} L_O β°_O‖∞
//! C2   = ‖(Σ_{Oᶜ,O}(λ2) Σ_O(λ2)^{-1} L_O − L_{Oᶜ,O}) β°_O‖∞
//! ```
//!
//! so that `‖β*_O − β°_O‖∞ = λ2·C1`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::Design;
use crate::error::{Result, SlsError};
use crate::laplacian::{is_unbiased, Laplacian};
use crate::linalg::{self, select_cols, select_rows, sub_square};

/// Smallest eigenvalue treated as invertible.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

/// Sorted, distinct 0-based indices of the nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    p: usize,
}

impl SupportSet {
    pub fn new(p: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(SlsError::invalid("support indices must be distinct"));
        }
        if let Some(&j) = indices.last().filter(|&&j| j >= p) {
            return Err(SlsError::invalid(format!("support index {j} out of range for p = {p}")));
        }
        Ok(SupportSet { indices, p })
    }

    pub fn from_beta(beta: &DVector<f64>) -> Self {
        let indices = beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect();
        SupportSet { indices, p: beta.len() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn complement(&self) -> Vec<usize> {
        let mut mark = vec![false; self.p];
        for &j in &self.indices {
            mark[j] = true;
        }
        (0..self.p).filter(|&j| !mark[j]).collect()
    }

    fn check(&self, p: usize) -> Result<()> {
        if self.p != p {
            return Err(SlsError::dims("support dimension", p, self.p));
        }
        if self.indices.is_empty() {
            return Err(SlsError::invalid("support must be nonempty"));
        }
        Ok(())
    }
}

/// Restricted blocks shared by the oracle computations.
struct Restricted {
    o: Vec<usize>,
    sigma_o: DMatrix<f64>,
    lap_o: DMatrix<f64>,
    /// `Σ_O(λ2) = Σ_O + λ2 L_O`.
    reg_o: DMatrix<f64>,
}

impl Restricted {
    fn new(design: &Design<'_>, lap: &Laplacian, support: &SupportSet, lambda2: f64) -> Result<Self> {
        design.check()?;
        if lap.dim() != design.p() {
            return Err(SlsError::dims("Laplacian", design.p(), lap.dim()));
        }
        support.check(design.p())?;
        if !(lambda2 >= 0.0) {
            return Err(SlsError::param("lambda2", format!("must be ≥ 0, got {lambda2}")));
        }
        let o = support.indices().to_vec();
        let xo = select_cols(design.x, &o);
        let sigma_o = xo.tr_mul(&xo) / design.n;
        let lap_o = lap.matrix().submatrix(&o, &o);
        let reg_o = &sigma_o + &lap_o * lambda2;
        Ok(Restricted { o, sigma_o, lap_o, reg_o })
    }

    fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        linalg::solve_spd(&self.reg_o, rhs, INVERTIBILITY_TOL, "restricted matrix Σ_O + λ2·L_O")
    }

    fn scatter(&self, p: usize, vals: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(p);
        for (a, &j) in self.o.iter().enumerate() {
            out[j] = vals[a];
        }
        out
    }
}

fn col(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// `β̂°`: Laplacian-penalized least squares restricted to `support`, zero
/// elsewhere.
pub fn oracle_estimator(design: &Design<'_>, lap: &Laplacian, support: &SupportSet, lambda2: f64) -> Result<DVector<f64>> {
    let r = Restricted::new(design, lap, support, lambda2)?;
    let xo = select_cols(design.x, &r.o);
    let rhs = xo.tr_mul(design.y) / design.n;
    let bo = r.solve(&col(&rhs))?.column(0).into_owned();
    Ok(r.scatter(design.p(), &bo))
}

/// Residual noise estimate `‖y − Xβ̂°‖/√(n − |O| − 1)` from the oracle fit,
/// for use when σ is unknown. One degree of freedom goes to the intercept
/// removed by centering.
pub fn residual_sigma(design: &Design<'_>, lap: &Laplacian, support: &SupportSet, lambda2: f64) -> Result<f64> {
    let rows = design.n as usize;
    let df = rows as isize - support.len() as isize - 1;
    if df < 1 {
        return Err(SlsError::param(
            "support",
            format!("{} rows leave no residual degrees of freedom for a support of size {}", rows, support.len()),
        ));
    }
    let b = oracle_estimator(design, lap, support, lambda2)?;
    let resid = design.y - design.x * b;
    Ok(resid.norm() / (df as f64).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    /// `β*`, zero off the support.
    pub target: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    /// `‖β*_O − β°_O‖∞`, equal to `λ2·C1`.
    pub bias: f64,
    /// Diagonal of `Σ_O(λ2)^{-1} Σ_O Σ_O(λ2)^{-1}`, in support order.
    pub v_diag: Vec<f64>,
}

pub fn target_and_bias(
    design: &Design<'_>,
    lap: &Laplacian,
    support: &SupportSet,
    lambda2: f64,
    beta_true: &DVector<f64>,
) -> Result<BiasReport> {
    if beta_true.len() != design.p() {
        return Err(SlsError::dims("true coefficients", design.p(), beta_true.len()));
    }
    let r = Restricted::new(design, lap, support, lambda2)?;
    let bo = select_rows(beta_true, &r.o);
    let target_o = r.solve(&col(&(&r.sigma_o * &bo)))?.column(0).into_owned();
    let lb = &r.lap_o * &bo;
    let shrink = r.solve(&col(&lb))?.column(0).into_owned();
    let c1 = shrink.amax();

    let oc = support.complement();
    let c2 = if oc.is_empty() {
        0.0
    } else {
        let x_oc = select_cols(design.x, &oc);
        let x_o = select_cols(design.x, &r.o);
        let lap_oc_o = lap.matrix().submatrix(&oc, &r.o);
        let cross = x_oc.tr_mul(&x_o) / design.n + &lap_oc_o * lambda2;
        (cross * &shrink - lap_oc_o * &bo).amax()
    };

    let inv_sigma = r.solve(&r.sigma_o)?;
    let sandwich = r.solve(&inv_sigma.transpose())?;
    let v_diag = sandwich.diagonal().iter().copied().collect();

    let bias = (&target_o - &bo).amax();
    let target = r.scatter(design.p(), &target_o);
    Ok(BiasReport { target: target.as_slice().to_vec(), c1, c2, bias, v_diag })
}

/// Smallest eigenvalue of `X'X/n + λ2L`.
pub fn c_min(design: &Design<'_>, lap: &Laplacian, lambda2: f64) -> Result<f64> {
    design.check()?;
    if lap.dim() != design.p() {
        return Err(SlsError::dims("Laplacian", design.p(), lap.dim()));
    }
    Ok(linalg::smallest_eigenvalue(&(design.gram() + lap.to_dense() * lambda2)))
}

/// Traces of the oracle covariance with and without Laplacian shrinkage:
/// `(tr(Σ_O(λ2)^{-1} Σ_O Σ_O(λ2)^{-1}), tr(Σ_O^{-1}))`.
pub fn oracle_variance_traces(design: &Design<'_>, lap: &Laplacian, support: &SupportSet, lambda2: f64) -> Result<(f64, f64)> {
    let r = Restricted::new(design, lap, support, lambda2)?;
    let inv_sigma = r.solve(&r.sigma_o)?;
    let shrunk = r.solve(&inv_sigma.transpose())?.trace();
    let d = r.o.len();
    let plain = linalg::solve_spd(&r.sigma_o, &DMatrix::identity(d, d), INVERTIBILITY_TOL, "Σ_O")?.trace();
    Ok((shrunk, plain))
}

/// Closed forms for two standardized predictors with Laplacian penalty
/// `(λ2/2)(b1 − b2)²` and ridge penalty `(λ2/2)(b1² + b2²)`.
#[derive(Debug, Clone, Serialize)]
pub struct TwoPredictorCase {
    pub r1: f64,
    pub r2: f64,
    pub r12: f64,
    pub lambda2: f64,
    pub b_laplacian: [f64; 2],
    pub b_ridge: [f64; 2],
    pub b_ols: [f64; 2],
    /// Univariate regression slopes, `(r1, r2)`.
    pub b_univariate: [f64; 2],
    /// Common-coefficient least squares, the λ2 → ∞ limit of `b_laplacian`.
    pub b_laplacian_limit: f64,
    pub w_laplacian: f64,
    pub w_ridge: f64,
    pub c_ridge: f64,
}

pub fn two_predictor(r1: f64, r2: f64, r12: f64, lambda2: f64) -> Result<TwoPredictorCase> {
    if !(r12.abs() < 1.0) {
        return Err(SlsError::param("r12", format!("|r12| must be < 1, got {r12}")));
    }
    if !(lambda2 >= 0.0) || !lambda2.is_finite() {
        return Err(SlsError::param("lambda2", format!("must be finite and ≥ 0, got {lambda2}")));
    }
    let l = lambda2;
    let den_l = (1.0 + l).powi(2) - (r12 - l).powi(2);
    let b_laplacian = [((1.0 + l) * r1 - (r12 - l) * r2) / den_l, ((1.0 + l) * r2 - (r12 - l) * r1) / den_l];
    let den_r = (1.0 + l).powi(2) - r12 * r12;
    let b_ridge = [((1.0 + l) * r1 - r12 * r2) / den_r, ((1.0 + l) * r2 - r12 * r1) / den_r];
    let den_ols = 1.0 - r12 * r12;
    let b_ols = [(r1 - r12 * r2) / den_ols, (r2 - r12 * r1) / den_ols];
    Ok(TwoPredictorCase {
        r1,
        r2,
        r12,
        lambda2,
        b_laplacian,
        b_ridge,
        b_ols,
        b_univariate: [r1, r2],
        b_laplacian_limit: (r1 + r2) / (2.0 * (1.0 + r12)),
        w_laplacian: 2.0 * l / (1.0 - r12 + 2.0 * l),
        w_ridge: l / (1.0 + l - r12 * r12),
        c_ridge: ((1.0 + l).powi(2) - (1.0 + l) * r12 * r12) / den_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseStatus {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct Clause {
    pub status: ClauseStatus,
    /// Left-hand side minus required bound; positive means satisfied.
    pub margin: f64,
    pub lhs: f64,
    pub bound: f64,
}

impl Clause {
    fn at_least(lhs: f64, bound: f64) -> Self {
        if !bound.is_finite() || !lhs.is_finite() {
            return Clause { status: ClauseStatus::Inapplicable, margin: f64::NAN, lhs, bound };
        }
        let status = if lhs >= bound { ClauseStatus::Pass } else { ClauseStatus::Fail };
        Clause { status, margin: lhs - bound, lhs, bound }
    }

    fn inapplicable(lhs: f64) -> Self {
        Clause { status: ClauseStatus::Inapplicable, margin: f64::NAN, lhs, bound: f64::NAN }
    }
}

/// Spectrum of `Σ_{B∪O}(λ2)` for one user-supplied subset `B`.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetSpectrum {
    pub subset: Vec<usize>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub c_min: f64,
    /// `c_min(λ2) > 1/γ`.
    pub convexity: Clause,
    /// `λ1 ≥ λ2·C2 + σ√(2 log((p − d°)/ε))·max_j‖x_j‖/n`.
    pub penalty_level: Clause,
    /// `min_{j∈O} |β*_j|√(n/v_j) ≥ σ√(2 log(d°/ε))`.
    pub signal_strength: Clause,
    /// `β_min ≥ λ2·C1 + max_j √((2v_j/n) log(d°/ε))` (sign-consistency form).
    pub sign_consistency: Clause,
    pub c1: f64,
    pub c2: f64,
    pub subset_spectra: Vec<SubsetSpectrum>,
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionInputs {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub eps: f64,
}

/// Evaluates each clause of the sufficient conditions numerically. Purely
/// diagnostic.
pub fn theorem_conditions(
    design: &Design<'_>,
    lap: &Laplacian,
    support: &SupportSet,
    beta_true: &DVector<f64>,
    inputs: ConditionInputs,
    src_subsets: &[Vec<usize>],
) -> Result<ConditionReport> {
    let ConditionInputs { lambda1, lambda2, gamma, sigma, eps } = inputs;
    if !(eps > 0.0) || !(sigma >= 0.0) || !(gamma > 0.0) {
        return Err(SlsError::invalid("need ε > 0, σ ≥ 0 and γ > 0"));
    }
    let p = design.p();
    let d = support.len();
    let n = design.n;
    let bias = target_and_bias(design, lap, support, lambda2, beta_true)?;
    let cmin = c_min(design, lap, lambda2)?;

    let convexity = {
        let c = Clause::at_least(cmin, 1.0 / gamma);
        // strict inequality
        if c.margin == 0.0 {
            Clause { status: ClauseStatus::Fail, ..c }
        } else {
            c
        }
    };

    let max_norm = (0..p).map(|j| design.x.column(j).norm()).fold(0.0, f64::max);
    let log_null = ((p - d) as f64 / eps).ln();
    let penalty_level = if p == d || log_null < 0.0 {
        Clause::inapplicable(lambda1)
    } else {
        Clause::at_least(lambda1, lambda2 * bias.c2 + sigma * (2.0 * log_null).sqrt() * max_norm / n)
    };

    let log_sig = (d as f64 / eps).ln();
    let signal_lhs =
        support.indices().iter().zip(&bias.v_diag).map(|(&j, &v)| bias.target[j].abs() * (n / v).sqrt()).fold(f64::INFINITY, f64::min);
    let (signal_strength, sign_consistency) = if log_sig < 0.0 {
        (Clause::inapplicable(signal_lhs), Clause::inapplicable(f64::NAN))
    } else {
        let beta_min = support.indices().iter().map(|&j| beta_true[j].abs()).fold(f64::INFINITY, f64::min);
        let noise = bias.v_diag.iter().map(|&v| (2.0 * v / n * log_sig).sqrt()).fold(0.0, f64::max);
        (Clause::at_least(signal_lhs, sigma * (2.0 * log_sig).sqrt()), Clause::at_least(beta_min, lambda2 * bias.c1 + noise))
    };

    let gram = design.gram() + lap.to_dense() * lambda2;
    let subset_spectra = src_subsets
        .iter()
        .map(|b| {
            let mut idx: Vec<usize> = b.iter().chain(support.indices()).copied().collect();
            idx.sort_unstable();
            idx.dedup();
            if let Some(&j) = idx.iter().find(|&&j| j >= p) {
                return Err(SlsError::invalid(format!("subset index {j} out of range")));
            }
            let (lo, hi) = linalg::eigenvalue_range(&sub_square(&gram, &idx, &idx));
            Ok(SubsetSpectrum { subset: idx, min_eigenvalue: lo, max_eigenvalue: hi })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ConditionReport {
        c_min: cmin,
        convexity,
        penalty_level,
        signal_strength,
        sign_consistency,
        c1: bias.c1,
        c2: bias.c2,
        subset_spectra,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub support: Vec<usize>,
    pub lambda2: f64,
    pub oracle_beta: Vec<f64>,
    pub target_beta: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c_min: f64,
    pub v_diag: Vec<f64>,
    pub unbiased: bool,
    pub unbiased_residual: f64,
    /// True when `beta_true` was not supplied and the oracle estimate stood in
    /// for it.
    pub plug_in: bool,
}

/// Full oracle diagnostics. Without `beta_true`, the oracle estimate is used
/// in its place.
pub fn diagnose(
    design: &Design<'_>,
    lap: &Laplacian,
    support: &SupportSet,
    lambda2: f64,
    beta_true: Option<&DVector<f64>>,
    unbiased_tol: f64,
) -> Result<DiagnosticsReport> {
    let oracle = oracle_estimator(design, lap, support, lambda2)?;
    let reference = beta_true.unwrap_or(&oracle);
    let bias = target_and_bias(design, lap, support, lambda2, reference)?;
    let unb = is_unbiased(lap, support.indices(), reference, unbiased_tol)?;
    Ok(DiagnosticsReport {
        support: support.indices().to_vec(),
        lambda2,
        oracle_beta: oracle.as_slice().to_vec(),
        target_beta: bias.target,
        c1: bias.c1,
        c2: bias.c2,
        c_min: c_min(design, lap, lambda2)?,
        v_diag: bias.v_diag,
        unbiased: unb.unbiased,
        unbiased_residual: unb.residual,
        plug_in: beta_true.is_none(),
    })
}
