//! Clustering evaluation: NMI, ACC with optimal label mapping, macro-F1, ARI
//! and the Davies–Bouldin index.
//!
//! Label slices may use arbitrary ids; they are compacted before counting, so
//! every score is invariant under relabeling of either side.

mod hungarian;

use ndarray::{Array1, ArrayView2};

pub use hungarian::min_cost_assignment;

use crate::error::{Error, Result};
use crate::graph::Partition;

/// Centroid distance below which two communities are treated as coincident.
pub const COINCIDENT_EPS: f64 = 1e-12;

/// Co-occurrence counts between predicted (rows) and true (columns) clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        check_lengths(pred, truth)?;
        let pred = Partition::from_labels(pred);
        let truth = Partition::from_labels(truth);
        let (r, s) = (pred.num_communities(), truth.num_communities());
        let mut counts = vec![vec![0; s]; r];
        for (&p, &t) in pred.assign().iter().zip(truth.assign()) {
            counts[p][t] += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: Vec<Vec<usize>>) -> Self {
        let s = counts.first().map_or(0, Vec::len);
        let row_sums: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<usize> = (0..s).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let n = row_sums.iter().sum();
        Self {
            counts,
            row_sums,
            col_sums,
            n,
        }
    }

    pub fn num_pred(&self) -> usize {
        self.counts.len()
    }

    pub fn num_true(&self) -> usize {
        self.col_sums.len()
    }
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "predicted labels",
            got: pred.len(),
            expected: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::TooFew {
            what: "labels",
            needed: 1,
            got: 0,
        });
    }
    Ok(())
}

/// Injective assignment of predicted clusters to true classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    /// `pred_to_true[p]` is the true class matched to predicted cluster `p`,
    /// or `None` when there are more predicted clusters than classes.
    pub pred_to_true: Vec<Option<usize>>,
    /// Total count on matched cells.
    pub matched: usize,
}

/// Maximum-weight matching between predicted and true ids; the table is
/// padded with zero rows or columns to make it square. Among mappings with
/// the largest matched count, the one with the highest macro-F1 is chosen,
/// which keeps F1 independent of how labels are numbered.
pub fn optimal_mapping(ct: &ContingencyTable) -> LabelMapping {
    let (r, s) = (ct.num_pred(), ct.num_true());
    let size = r.max(s);
    // per-pair F1 terms are at most 1, so their total stays below one count
    let tie_weight = 0.5 / (r.min(s) + 1) as f64;
    let weight = |i: usize, j: usize| {
        if i < r && j < s && ct.counts[i][j] > 0 {
            let c = ct.counts[i][j];
            c as f64 + tie_weight * 2.0 * c as f64 / (ct.row_sums[i] + ct.col_sums[j]) as f64
        } else {
            0.0
        }
    };
    let max = (0..size).flat_map(|i| (0..size).map(move |j| (i, j))).map(|(i, j)| weight(i, j)).fold(0.0, f64::max);
    let cost: Vec<Vec<f64>> = (0..size).map(|i| (0..size).map(|j| max - weight(i, j)).collect()).collect();
    let assignment = min_cost_assignment(&cost);
    let pred_to_true: Vec<Option<usize>> = assignment[..r].iter().map(|&j| (j < s).then_some(j)).collect();
    let matched = pred_to_true
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| ct.counts[i][j]))
        .sum();
    LabelMapping { pred_to_true, matched }
}

fn entropy(sizes: &[usize], n: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by `√(H(pred)·H(truth))`, natural log.
/// Two single-cluster labelings score 1; a single cluster against anything
/// else scores 0.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = ContingencyTable::new(pred, truth)?;
    let n = ct.n as f64;
    let h_pred = entropy(&ct.row_sums, n);
    let h_true = entropy(&ct.col_sums, n);
    if h_pred == 0.0 && h_true == 0.0 {
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_true == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (ct.row_sums[i] as f64 * ct.col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (h_pred * h_true).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of nodes whose mapped prediction equals the truth.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = ContingencyTable::new(pred, truth)?;
    Ok(optimal_mapping(&ct).matched as f64 / ct.n as f64)
}

/// Macro-averaged one-vs-rest F1 over true classes after optimal mapping.
/// A class no predicted cluster maps to scores 0.
pub fn f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = ContingencyTable::new(pred, truth)?;
    let mapping = optimal_mapping(&ct);
    Ok(f1_with_mapping(&ct, &mapping))
}

/// Macro-F1 for a given mapping.
pub fn f1_with_mapping(ct: &ContingencyTable, mapping: &LabelMapping) -> f64 {
    let mut scores = vec![0.0; ct.num_true()];
    for (p, target) in mapping.pred_to_true.iter().enumerate() {
        if let Some(c) = *target {
            let tp = ct.counts[p][c] as f64;
            // 2TP / (2TP + FP + FN) with TP+FP = row sum and TP+FN = column sum
            scores[c] = 2.0 * tp / (ct.row_sums[p] + ct.col_sums[c]) as f64;
        }
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

fn pairs(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the contingency table. Identical trivial
/// partitions (both one cluster, or both all singletons) score 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() < 2 {
        check_lengths(pred, truth)?;
        return Err(Error::TooFew {
            what: "nodes",
            needed: 2,
            got: pred.len(),
        });
    }
    let ct = ContingencyTable::new(pred, truth)?;
    let index: f64 = ct.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = ct.row_sums.iter().map(|&c| pairs(c)).sum();
    let cols: f64 = ct.col_sums.iter().map(|&c| pairs(c)).sum();
    let expected = rows * cols / pairs(ct.n);
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Davies–Bouldin index of `pred` over the rows of `h` (Euclidean). Returns
/// `+∞` when two centroids coincide.
pub fn dbi(h: ArrayView2<'_, f64>, pred: &[usize]) -> Result<f64> {
    if h.nrows() != pred.len() {
        return Err(Error::LengthMismatch {
            what: "predicted labels",
            got: pred.len(),
            expected: h.nrows(),
        });
    }
    let part = Partition::from_labels(pred);
    let k = part.num_communities();
    if k < 2 {
        return Err(Error::TooFew {
            what: "communities",
            needed: 2,
            got: k,
        });
    }
    let members = part.members();
    let centroids: Vec<Array1<f64>> = members
        .iter()
        .map(|m| {
            let mut c = Array1::zeros(h.ncols());
            for &i in m {
                c += &h.row(i);
            }
            c / m.len() as f64
        })
        .collect();
    let distance = |a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>| {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let scatter: Vec<f64> = members
        .iter()
        .zip(&centroids)
        .map(|(m, c)| m.iter().map(|&i| distance(h.row(i), c.view())).sum::<f64>() / m.len() as f64)
        .collect();

    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = distance(centroids[i].view(), centroids[j].view());
            if sep < COINCIDENT_EPS {
                return Ok(f64::INFINITY);
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// All label-based scores for one prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelScores {
    pub nmi: f64,
    pub acc: f64,
    pub f1: f64,
    pub ari: f64,
}

pub fn label_scores(pred: &[usize], truth: &[usize]) -> Result<LabelScores> {
    let ct = ContingencyTable::new(pred, truth)?;
    let mapping = optimal_mapping(&ct);
    Ok(LabelScores {
        nmi: nmi(pred, truth)?,
        acc: mapping.matched as f64 / ct.n as f64,
        f1: f1_with_mapping(&ct, &mapping),
        ari: if pred.len() >= 2 { ari(pred, truth)? } else { f64::NAN },
    })
}
