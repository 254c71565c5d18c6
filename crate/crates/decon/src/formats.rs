//! Plain-text edge lists and matrix dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use decon_core::graph::Graph;
use decon_core::linalg::{Stacked, SymMatrix};

use crate::error::{Error, Result};

/// Node-count comment written ahead of the edges, so trailing isolated
/// labels survive a roundtrip.
const NODES_DIRECTIVE: &str = "# nodes";

/// Parses `i j` lines (0-based). Blank lines and `#` comments are skipped;
/// a `# nodes N` comment fixes the node count, otherwise it is the largest
/// label plus one.
pub fn parse_edge_list(text: &str, what: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut n_decl = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix(NODES_DIRECTIVE) {
            let v = rest
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(what, idx + 1, format!("bad node count: {e}")))?;
            n_decl = Some(v);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| Error::parse(what, idx + 1, "expected two node labels"))?;
            tok.parse::<usize>()
                .map_err(|e| Error::parse(what, idx + 1, format!("bad node label '{tok}': {e}")))
        };
        let (i, j) = (next()?, next()?);
        if it.next().is_some() {
            return Err(Error::parse(what, idx + 1, "expected exactly two node labels"));
        }
        edges.push((i, j));
    }
    let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let n = match n_decl {
        Some(n) if n < inferred => {
            return Err(Error::parse(
                what,
                0,
                format!("declared {n} nodes but label {} appears", inferred - 1),
            ))
        }
        Some(n) => n,
        None => inferred,
    };
    Ok((n, edges))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (n, edges) = parse_edge_list(&text, &path.display().to_string())?;
    Ok(Graph::from_edges(n, &edges)?)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("{NODES_DIRECTIVE} {}\n", g.n());
    for &(i, j) in g.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn write_graph(g: &Graph, path: &Path) -> Result<()> {
    fs::write(path, format_edge_list(g)).map_err(|e| Error::io(path, e))
}

/// Exponent form with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per line, space separated, 17 significant digits.
pub fn format_matrix(rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_f64(get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn format_sym(m: &SymMatrix) -> String {
    format_matrix(m.dim(), m.dim(), |i, j| m.get(i, j))
}

pub fn parse_matrix(text: &str, what: &str) -> Result<Stacked> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::parse(what, idx + 1, format!("bad number '{t}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    what,
                    idx + 1,
                    format!("row has {} entries, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(what, 0, "no matrix rows"));
    }
    Ok(Stacked::from_rows(&rows)?)
}

pub fn read_matrix(path: &Path) -> Result<Stacked> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, &path.display().to_string())
}

/// Largest `|a_ij − a_ji|` of a square matrix.
pub fn asymmetry(m: &Stacked) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.rows() {
        for j in (i + 1)..m.cols() {
            worst = worst.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    worst
}

pub fn write_sym(m: &SymMatrix, path: &Path) -> Result<()> {
    fs::write(path, format_sym(m)).map_err(|e| Error::io(path, e))
}
