//! Tabular input and the centering/standardization the criterion assumes.
//!
//! After [`standardize`], every predictor column has mean zero and squared
//! Euclidean norm exactly `n` (population scaling), and the response is
//! centered. The intercept is never penalized; it is recovered from the stored
//! means and scales by [`StandardizedDataset::to_original_scale`].

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SlsError};

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    /// 0-based column index.
    Index(usize),
}

impl From<&str> for ResponseColumn {
    /// Numeric strings are read as indices, anything else as a header name.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RawDataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub column_names: Vec<String>,
}

impl RawDataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n {
            return Err(SlsError::dims("design rows", n, x.nrows()));
        }
        if column_names.len() != x.ncols() {
            return Err(SlsError::dims("column names", x.ncols(), column_names.len()));
        }
        if n < 2 {
            return Err(SlsError::invalid(format!("n ≥ 2 required, got {n} observation(s)")));
        }
        if x.ncols() == 0 {
            return Err(SlsError::invalid("p ≥ 1 required, no predictor columns"));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SlsError::invalid(format!("non-finite response at row {i}")));
        }
        for (col, name) in x.column_iter().zip(&column_names) {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(SlsError::invalid(format!("non-finite value at row {i}, column '{name}'")));
            }
        }
        Ok(RawDataset { y, x, column_names })
    }

    /// Builds a dataset with generated column names `x1..xp`.
    pub fn unnamed(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(y, x, names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Reads a rectangular numeric CSV. Row numbers in errors are 1-based file
/// lines; column numbers are 1-based.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, response: &ResponseColumn) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SlsError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_reader(file);

    let parse_err = |row: usize, message: String| SlsError::Parse { path: path.to_path_buf(), row, message };

    let header: Option<Vec<String>> = if has_header {
        let h = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    let first_line = if has_header { 2 } else { 1 };
    for (i, rec) in reader.records().enumerate() {
        let line = first_line + i;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            Some(w) if w != rec.len() => {
                return Err(parse_err(line, format!("ragged row: expected {w} fields, found {}", rec.len())));
            }
            None => width = Some(rec.len()),
            _ => {}
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("column {}: non-numeric cell '{field}'", c + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite cell '{field}'", c + 1)));
            }
            vals.push(v);
        }
        rows.push(vals);
    }

    let width = width.unwrap_or(0);
    let names: Vec<String> = header.unwrap_or_else(|| (1..=width).map(|c| format!("col{c}")).collect());
    let resp_idx = match response {
        ResponseColumn::Index(i) if *i < width => *i,
        ResponseColumn::Index(i) => return Err(SlsError::invalid(format!("response column index {i} not found ({width} columns)"))),
        ResponseColumn::Name(name) => names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SlsError::invalid(format!("response column '{name}' not found in header")))?,
    };
    if rows.len() < 2 {
        return Err(SlsError::invalid(format!("n ≥ 2 required, file has {} data row(s)", rows.len())));
    }

    let n = rows.len();
    let p = width - 1;
    let y = DVector::from_iterator(n, rows.iter().map(|r| r[resp_idx]));
    let pred_cols: Vec<usize> = (0..width).filter(|&c| c != resp_idx).collect();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][pred_cols[j]]);
    let column_names = pred_cols.iter().map(|&c| names[c].clone()).collect();
    RawDataset::new(y, x, column_names)
}

/// Centered response and standardized design, with the affine maps needed to
/// return to the original scale.
#[derive(Debug, Clone)]
pub struct StandardizedDataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    col_means: DVector<f64>,
    col_scales: DVector<f64>,
    y_mean: f64,
    column_names: Vec<String>,
}

/// Centers the response and scales every predictor to mean 0 and
/// `Σ_i x_ij² = n`.
pub fn standardize(raw: &RawDataset) -> Result<StandardizedDataset> {
    let n = raw.n();
    let nf = n as f64;
    let p = raw.p();
    let mut x = raw.x.clone();
    let mut col_means = DVector::zeros(p);
    let mut col_scales = DVector::zeros(p);
    for j in 0..p {
        let mut col = x.column_mut(j);
        let mean = col.sum() / nf;
        col.add_scalar_mut(-mean);
        let scale = (col.norm_squared() / nf).sqrt();
        // relative to the column's magnitude, so large-offset constants are caught too
        if !(scale > 1e-12 * mean.abs().max(1.0)) {
            return Err(SlsError::invalid(format!("column '{}' is constant; it cannot be scaled", raw.column_names[j])));
        }
        col.unscale_mut(scale);
        col_means[j] = mean;
        col_scales[j] = scale;
    }
    let y_mean = raw.y.mean();
    let y = raw.y.add_scalar(-y_mean);
    Ok(StandardizedDataset { x, y, col_means, col_scales, y_mean, column_names: raw.column_names.clone() })
}

impl StandardizedDataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn col_means(&self) -> &DVector<f64> {
        &self.col_means
    }

    pub fn col_scales(&self) -> &DVector<f64> {
        &self.col_scales
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn design(&self) -> Design<'_> {
        Design::new(&self.x, &self.y)
    }

    /// Smallest λ1 at which the all-zero fit is stationary when λ2 = 0.
    pub fn lambda_max(&self) -> f64 {
        self.design().lambda_max()
    }

    /// Maps standardized-scale coefficients to `(intercept, coefs)` on the
    /// original scale.
    pub fn to_original_scale(&self, coefs: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        if coefs.len() != self.p() {
            return Err(SlsError::dims("coefficient vector", self.p(), coefs.len()));
        }
        let orig = coefs.component_div(&self.col_scales);
        let intercept = self.y_mean - orig.dot(&self.col_means);
        Ok((intercept, orig))
    }

    /// Applies this dataset's column centering/scaling to new original-scale
    /// rows (e.g. a held-out fold).
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.p() {
            return Err(SlsError::dims("design columns", self.p(), x.ncols()));
        }
        let mut out = x.clone();
        for j in 0..self.p() {
            let mut col = out.column_mut(j);
            col.add_scalar_mut(-self.col_means[j]);
            col.unscale_mut(self.col_scales[j]);
        }
        Ok(out)
    }

    /// Predictions on the original response scale for standardized-scale
    /// coefficients and original-scale rows.
    pub fn predict(&self, coefs: &DVector<f64>, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let xs = self.transform(x)?;
        if coefs.len() != self.p() {
            return Err(SlsError::dims("coefficient vector", self.p(), coefs.len()));
        }
        Ok((xs * coefs).add_scalar(self.y_mean))
    }
}

/// Back-transform of standardized coefficients; see
/// [`StandardizedDataset::to_original_scale`].
pub fn coefficients_to_original_scale(coefs: &DVector<f64>, ds: &StandardizedDataset) -> Result<(f64, DVector<f64>)> {
    ds.to_original_scale(coefs)
}

/// Borrowed least-squares data `(X, y)` with the divisor `n` of the loss
/// `(1/2n)‖y − Xb‖²`.
///
/// The divisor is usually the row count, but an augmented design keeps the
/// original sample size while carrying `p` extra rows.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    pub x: &'a DMatrix<f64>,
    pub y: &'a DVector<f64>,
    pub n: f64,
}

impl<'a> Design<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &'a DVector<f64>) -> Self {
        Design { x, y, n: x.nrows() as f64 }
    }

    pub fn with_divisor(x: &'a DMatrix<f64>, y: &'a DVector<f64>, n: f64) -> Self {
        Design { x, y, n }
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn check(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(SlsError::dims("design rows", self.y.len(), self.x.nrows()));
        }
        if !(self.n > 0.0) {
            return Err(SlsError::param("n", "loss divisor must be positive"));
        }
        Ok(())
    }

    /// `max_j |x_j'y| / n`.
    pub fn lambda_max(&self) -> f64 {
        // same summation order as the coordinate updates, so λ1 = λ_max gives exact zeros
        self.x.column_iter().map(|c| (c.iter().zip(self.y.iter()).map(|(a, b)| a * b).sum::<f64>() / self.n).abs()).fold(0.0, f64::max)
    }

    /// Gram matrix `X'X/n`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.x.tr_mul(self.x) / self.n
    }
}
