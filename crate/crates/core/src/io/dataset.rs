//! Plain-text dataset files.
//!
//! * edges: one `u v` pair per line, 0-based, whitespace separated
//! * features: header `n m`, then `n` rows of `m` reals
//! * labels: one non-negative integer per line
//!
//! Blank lines and anything after `#` are ignored in all three.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::sparse::CsrMatrix;

/// Paths making up one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    /// Used to look up reference shapes; case-insensitive.
    pub name: Option<String>,
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
}

/// Expected shape of a benchmark dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownShape {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub classes: usize,
}

pub const KNOWN_SHAPES: &[KnownShape] = &[
    KnownShape { name: "acm", nodes: 3025, edges: 13128, features: 1870, classes: 3 },
    KnownShape { name: "amac", nodes: 7650, edges: 245861, features: 767, classes: 10 },
    KnownShape { name: "amap", nodes: 13752, edges: 119081, features: 745, classes: 8 },
    KnownShape { name: "citeseer", nodes: 3327, edges: 4552, features: 3703, classes: 6 },
    KnownShape { name: "cocs", nodes: 18333, edges: 81894, features: 6805, classes: 15 },
    KnownShape { name: "cora", nodes: 2708, edges: 5278, features: 1433, classes: 7 },
    KnownShape { name: "film", nodes: 7600, edges: 15009, features: 932, classes: 5 },
    KnownShape { name: "pubmed", nodes: 19717, edges: 44324, features: 500, classes: 3 },
    KnownShape { name: "uat", nodes: 1190, edges: 13599, features: 239, classes: 4 },
];

pub fn known_shape(name: &str) -> Option<&'static KnownShape> {
    KNOWN_SHAPES.iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// Loaded graph plus shape warnings against the reference table.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub graph: AttributedGraph,
    pub warnings: Vec<String>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: FromStr>(path: &Path, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} '{tok}'")))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_edges(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    content_lines(text)
        .map(|(line, s)| {
            let toks: Vec<&str> = s.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(parse_err(path, line, format!("expected 2 node ids, found {}", toks.len())));
            }
            Ok((
                parse_field(path, line, toks[0], "node id")?,
                parse_field(path, line, toks[1], "node id")?,
            ))
        })
        .collect()
}

pub fn parse_features(text: &str, path: &Path) -> Result<CsrMatrix<f64>> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing 'n m' header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(path, hline, "header must be 'n m'"));
    }
    let n: usize = parse_field(path, hline, toks[0], "row count")?;
    let m: usize = parse_field(path, hline, toks[1], "column count")?;
    if m == 0 {
        return Err(Error::NoFeatures);
    }
    let mut rows = Vec::with_capacity(n);
    let mut last_line = hline;
    for (line, s) in lines {
        last_line = line;
        if rows.len() == n {
            return Err(parse_err(path, line, format!("more than {n} feature rows")));
        }
        let mut row = Vec::new();
        let mut count = 0;
        for tok in s.split_whitespace() {
            let v: f64 = parse_field(path, line, tok, "feature value")?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite feature value '{tok}'")));
            }
            if v != 0.0 {
                row.push((count, v));
            }
            count += 1;
        }
        if count != m {
            return Err(parse_err(path, line, format!("expected {m} values, found {count}")));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(parse_err(path, last_line, format!("expected {n} feature rows, found {}", rows.len())));
    }
    Ok(CsrMatrix::from_rows(m, rows))
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    content_lines(text)
        .map(|(line, s)| {
            if s.split_whitespace().count() != 1 {
                return Err(parse_err(path, line, "expected one label per line"));
            }
            parse_field(path, line, s, "label")
        })
        .collect()
}

pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    parse_edges(&read_text(path)?, path)
}

pub fn read_features(path: &Path) -> Result<CsrMatrix<f64>> {
    parse_features(&read_text(path)?, path)
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&read_text(path)?, path)
}

/// Differences between a loaded graph and the reference shape for `name`.
pub fn shape_warnings(name: &str, g: &AttributedGraph) -> Vec<String> {
    let Some(shape) = known_shape(name) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let classes = g.labels().map(|l| l.num_communities());
    let checks = [
        ("nodes", Some(g.num_nodes()), shape.nodes),
        ("edges", Some(g.num_edges()), shape.edges),
        ("features", Some(g.feature_dim()), shape.features),
        ("classes", classes, shape.classes),
    ];
    for (what, got, expected) in checks {
        if let Some(got) = got {
            if got != expected {
                out.push(format!("{}: {what} = {got}, reference lists {expected}", shape.name));
            }
        }
    }
    out
}

pub fn load_dataset(bundle: &DatasetBundle) -> Result<LoadedDataset> {
    let edges = read_edges(&bundle.edges)?;
    let features = read_features(&bundle.features)?;
    let labels = bundle.labels.as_deref().map(read_labels).transpose()?;
    if let (Some(labels), Some(path)) = (&labels, &bundle.labels) {
        if labels.len() != features.nrows() {
            return Err(parse_err(
                path,
                labels.len(),
                format!("{} labels for {} feature rows", labels.len(), features.nrows()),
            ));
        }
    }
    let graph = AttributedGraph::new(&edges, features, labels)?;
    if graph.dropped_self_loops() > 0 {
        log::warn!("dropped {} self-loop(s)", graph.dropped_self_loops());
    }
    if graph.duplicate_edges() > 0 {
        log::info!("collapsed {} duplicate or reversed edge(s)", graph.duplicate_edges());
    }
    let warnings = bundle.name.as_deref().map(|n| shape_warnings(n, &graph)).unwrap_or_default();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LoadedDataset { graph, warnings })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_edges(path: &Path, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
    let mut s = String::new();
    for (u, v) in edges {
        writeln!(s, "{u} {v}").unwrap();
    }
    write_text(path, &s)
}

/// Writes a dense matrix in the features format. Values use Rust's shortest
/// round-trip representation, so reading back is exact.
pub fn write_matrix(path: &Path, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "{} {}", m.nrows(), m.ncols()).unwrap();
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_features(path: &Path, features: &CsrMatrix<f64>) -> Result<()> {
    write_matrix(path, features.to_dense().view())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(s, "{l}").unwrap();
    }
    write_text(path, &s)
}
