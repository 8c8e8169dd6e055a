//! Plain-text coordinate lists.
//!
//! Adjacency: one undirected edge per line, `j k weight sign`, 0-based,
//! written with `j < k`. Laplacian: `j k value` for the diagonal and the upper
//! triangle. Support: one 0-based index per line, optionally followed by the
//! true coefficient. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Result, SlsError};
use crate::graph::AdjacencyMatrix;
use crate::laplacian::Laplacian;
use crate::oracle::SupportSet;

pub fn adjacency_to_string(adj: &AdjacencyMatrix) -> String {
    let mut out = String::new();
    for (j, k, w, s) in adj.edges() {
        let _ = writeln!(out, "{j} {k} {w:e} {s}");
    }
    out
}

pub fn laplacian_to_string(lap: &Laplacian) -> String {
    let mut out = String::new();
    for j in 0..lap.dim() {
        let d = lap.matrix().diag(j);
        if d != 0.0 {
            let _ = writeln!(out, "{j} {j} {d:e}");
        }
        for (k, v) in lap.matrix().row(j).filter(|&(k, _)| k > j) {
            let _ = writeln!(out, "{j} {k} {v:e}");
        }
    }
    out
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, fields: &[&str], idx: usize, what: &str) -> Result<T> {
    let raw = fields.get(idx).ok_or_else(|| SlsError::Parse { path: path.to_path_buf(), row, message: format!("missing {what}") })?;
    raw.parse().map_err(|_| SlsError::Parse { path: path.to_path_buf(), row, message: format!("bad {what} '{raw}'") })
}

pub fn parse_adjacency(path: &Path, text: &str, p: usize) -> Result<AdjacencyMatrix> {
    let mut edges = Vec::new();
    for (row, f) in data_lines(text) {
        if f.len() != 4 {
            return Err(SlsError::Parse { path: path.to_path_buf(), row, message: format!("expected 4 fields, found {}", f.len()) });
        }
        edges.push((
            field(path, row, &f, 0, "index j")?,
            field(path, row, &f, 1, "index k")?,
            field(path, row, &f, 2, "weight")?,
            field(path, row, &f, 3, "sign")?,
        ));
    }
    AdjacencyMatrix::from_edges(p, edges)
}

pub fn read_adjacency(path: impl AsRef<Path>, p: usize) -> Result<AdjacencyMatrix> {
    let path = path.as_ref();
    let text = read(path)?;
    parse_adjacency(path, &text, p)
}

/// Support indices and, when every line carries one, the true coefficients.
pub fn read_support(path: impl AsRef<Path>, p: usize) -> Result<(SupportSet, Option<DVector<f64>>)> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for (row, f) in data_lines(&text) {
        idx.push(field::<usize>(path, row, &f, 0, "index")?);
        if f.len() > 1 {
            vals.push(field::<f64>(path, row, &f, 1, "coefficient")?);
        }
    }
    let beta = match vals.len() {
        0 => None,
        m if m == idx.len() => {
            let mut b = DVector::zeros(p);
            for (&j, &v) in idx.iter().zip(&vals) {
                if j < p {
                    b[j] = v;
                }
            }
            Some(b)
        }
        _ => return Err(SlsError::invalid(format!("{}: coefficients given on some lines only", path.display()))),
    };
    Ok((SupportSet::new(p, idx)?, beta))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| SlsError::Io { path: path.to_path_buf(), source })
}
