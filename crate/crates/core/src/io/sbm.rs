//! Attributed stochastic block model.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Length of each block's feature center.
    pub center_separation: f64,
    /// Standard deviation of the per-coordinate Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::InvalidConfig("every block needs at least one node".into()));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::NoFeatures);
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite() && self.center_separation.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be finite and non-negative".into()));
        }
        let intra_pairs = self.blocks.iter().any(|&b| b >= 2);
        let inter_pairs = self.blocks.len() >= 2 && self.p_out > 0.0;
        if !intra_pairs && !inter_pairs {
            return Err(Error::InvalidConfig("spec can never produce an edge".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Planted block id of every node.
    pub fn labels(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect()
    }

    /// Expected number of edges and its variance.
    pub fn edge_count_moments(&self) -> (f64, f64) {
        let n = self.num_nodes() as f64;
        let intra: f64 = self.blocks.iter().map(|&b| (b * b.saturating_sub(1) / 2) as f64).sum();
        let inter = n * (n - 1.0) / 2.0 - intra;
        let mean = intra * self.p_in + inter * self.p_out;
        let var = intra * self.p_in * (1.0 - self.p_in) + inter * self.p_out * (1.0 - self.p_out);
        (mean, var)
    }
}

fn sample_edges(spec: &SbmSpec, labels: &[usize], rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { spec.p_in } else { spec.p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Block `b` is centered at `separation · e_{b mod dim}`, and each feature
/// adds independent `N(0, σ²)` noise. Labels are the block ids.
pub fn generate_sbm(spec: &SbmSpec) -> Result<AttributedGraph> {
    spec.validate()?;
    let labels = spec.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = sample_edges(spec, &labels, &mut rng);
    let mut stream = 0;
    while edges.is_empty() {
        stream += 1;
        rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        edges = sample_edges(spec, &labels, &mut rng);
    }

    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut features = Array2::zeros((labels.len(), spec.feature_dim));
    for (mut row, &b) in features.rows_mut().into_iter().zip(&labels) {
        for x in row.iter_mut() {
            *x = noise.sample(&mut rng);
        }
        row[b % spec.feature_dim] += spec.center_separation;
    }
    AttributedGraph::with_dense_features(&edges, features.view(), Some(labels))
}
