//! Undirected attributed graphs, hard partitions, and hard modularity.

use std::collections::BTreeMap;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Hard node-to-community assignment with ids `0..num_communities`, every id
/// used at least once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assign: Vec<usize>,
    num_communities: usize,
}

impl Partition {
    /// Validates an assignment that is already contiguous.
    pub fn new(assign: Vec<usize>) -> Result<Self> {
        let num_communities = assign.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; num_communities];
        for &c in &assign {
            used[c] = true;
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(Error::InvalidPartition(format!(
                "community id {missing} is unused (ids must be contiguous)"
            )));
        }
        Ok(Self {
            assign,
            num_communities,
        })
    }

    /// Relabels arbitrary ids onto `0..t`, preserving the ascending order of
    /// the original ids.
    pub fn from_labels(labels: &[usize]) -> Self {
        let ids: BTreeMap<usize, usize> = labels
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(new, old)| (old, new))
            .collect();
        Self {
            assign: labels.iter().map(|l| ids[l]).collect(),
            num_communities: ids.len(),
        }
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_communities];
        for &c in &self.assign {
            sizes[c] += 1;
        }
        sizes
    }

    /// Node ids of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_communities];
        for (node, &c) in self.assign.iter().enumerate() {
            members[c].push(node);
        }
        members
    }
}

/// Immutable undirected graph with node features and optional ground truth.
///
/// Adjacency is stored once per direction, without self-loops or duplicates.
#[derive(Debug, Clone)]
pub struct AttributedGraph {
    indptr: Vec<usize>,
    neighbors: Vec<usize>,
    two_m: usize,
    features: CsrMatrix<f64>,
    labels: Option<Partition>,
    dropped_self_loops: usize,
    duplicate_edges: usize,
}

impl AttributedGraph {
    /// Builds and validates a graph. Node count is the feature row count.
    ///
    /// Duplicate and reversed edges collapse onto one undirected edge and
    /// self-loops are dropped (both are counted, see
    /// [`dropped_self_loops`](Self::dropped_self_loops)).
    pub fn new(
        edges: &[(usize, usize)],
        features: CsrMatrix<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if features.ncols() == 0 {
            return Err(Error::NoFeatures);
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    what: "labels",
                    got: labels.len(),
                    expected: n,
                });
            }
        }

        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut dropped_self_loops = 0;
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange {
                    u,
                    v,
                    node: u.max(v),
                    n,
                });
            }
            if u == v {
                dropped_self_loops += 1;
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }

        let mut indptr = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut raw = 0;
        indptr.push(0);
        for mut list in adjacency {
            raw += list.len();
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            indptr.push(neighbors.len());
        }
        if neighbors.is_empty() {
            return Err(Error::EmptyEdgeSet);
        }
        let duplicate_edges = (raw - neighbors.len()) / 2;
        if dropped_self_loops > 0 {
            log::warn!("dropped {dropped_self_loops} self-loop(s) from input edges");
        }

        let labels = labels.map(|l| {
            let p = Partition::from_labels(&l);
            if p.assign() != l.as_slice() {
                log::warn!("ground-truth label ids were not contiguous; relabeled onto 0..{}", p.num_communities());
            }
            p
        });

        Ok(Self {
            two_m: neighbors.len(),
            indptr,
            neighbors,
            features,
            labels,
            dropped_self_loops,
            duplicate_edges,
        })
    }

    /// Convenience constructor for dense feature matrices.
    pub fn with_dense_features(
        edges: &[(usize, usize)],
        features: ArrayView2<'_, f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        Self::new(edges, CsrMatrix::from_dense(features), labels)
    }

    pub fn num_nodes(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.two_m / 2
    }

    /// Total degree `2M`.
    pub fn two_m(&self) -> usize {
        self.two_m
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|i| self.degree(i)).collect()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes())
            .flat_map(move |i| self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn features(&self) -> &CsrMatrix<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> Option<&Partition> {
        self.labels.as_ref()
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn duplicate_edges(&self) -> usize {
        self.duplicate_edges
    }
}

/// Newman modularity of a hard partition, `Σ_c (e_c/2M − (D_c/2M)²)`, where
/// `e_c` counts intra-community adjacency entries (both directions) and `D_c`
/// is the community degree sum.
pub fn modularity_hard(g: &AttributedGraph, p: &Partition) -> Result<f64> {
    let n = g.num_nodes();
    if p.len() != n {
        return Err(Error::LengthMismatch {
            what: "partition",
            got: p.len(),
            expected: n,
        });
    }
    let t = p.num_communities();
    let mut internal = vec![0usize; t];
    let mut degree_sum = vec![0usize; t];
    let assign = p.assign();
    for i in 0..n {
        let ci = assign[i];
        degree_sum[ci] += g.degree(i);
        internal[ci] += g.neighbors(i).iter().filter(|&&j| assign[j] == ci).count();
    }
    let two_m = g.two_m() as f64;
    Ok(internal
        .iter()
        .zip(&degree_sum)
        .map(|(&e, &d)| {
            let frac = d as f64 / two_m;
            e as f64 / two_m - frac * frac
        })
        .sum())
}
