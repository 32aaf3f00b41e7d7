//! Structural community centers, node–center similarity, softmax membership,
//! hard assignment, and soft modularity.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, Partition};
use crate::predetect::FilterResult;
use crate::real::Real;

/// Norm below which a center is considered degenerate under cosine similarity.
pub const CENTER_EPS: f64 = 1e-12;

/// Tolerance on membership row sums accepted by [`soft_modularity`].
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    /// `h·u / ‖u‖` (rows of `H` are already unit length).
    #[default]
    Cosine,
    /// Plain `h·u`.
    Dot,
}

/// Sign of the softmax exponent. `Plus` gives higher probability to more
/// similar centers; `Minus` reverses that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SoftmaxSign {
    #[default]
    Plus,
    Minus,
}

impl SoftmaxSign {
    pub fn factor(self) -> f64 {
        match self {
            SoftmaxSign::Plus => 1.0,
            SoftmaxSign::Minus => -1.0,
        }
    }
}

/// Mean embedding of each kept structural community, in `kept_ids` order.
pub fn compute_centers<T: Real>(h: ArrayView2<'_, T>, fr: &FilterResult) -> Result<Array2<T>> {
    let mut centers = Array2::zeros((fr.member_lists.len(), h.ncols()));
    for (index, (members, mut center)) in fr.member_lists.iter().zip(centers.axis_iter_mut(Axis(0))).enumerate() {
        if members.is_empty() {
            return Err(Error::EmptyCommunity { index });
        }
        for &j in members {
            center += &h.row(j);
        }
        center /= T::from_f64(members.len() as f64);
    }
    Ok(centers)
}

/// `1/‖u_c‖` for each center; rejects zero-norm centers.
pub fn inverse_center_norms<T: Real>(centers: ArrayView2<'_, T>) -> Result<Array1<T>> {
    centers
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(index, u)| {
            let norm = u.dot(&u).sqrt();
            if norm.as_f64() < CENTER_EPS {
                Err(Error::DegenerateCenter { index })
            } else {
                Ok(T::one() / norm)
            }
        })
        .collect()
}

/// `n×k` matrix of node–center similarities.
pub fn similarity<T: Real>(h: ArrayView2<'_, T>, centers: ArrayView2<'_, T>, mode: SimilarityMode) -> Result<Array2<T>> {
    let mut sim = h.dot(&centers.t());
    if mode == SimilarityMode::Cosine {
        let inv = inverse_center_norms(centers)?;
        sim *= &inv;
    }
    Ok(sim)
}

/// Row-wise softmax of `sign·δ·sim` with max subtraction.
pub fn soft_assign<T: Real>(sim: ArrayView2<'_, T>, delta: f64, sign: SoftmaxSign) -> Array2<T> {
    let scale = T::from_f64(sign.factor() * delta);
    let mut p = sim.mapv(|s| s * scale);
    for mut row in p.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

/// Argmax assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct HardAssignment {
    /// Winning membership column per node (ties go to the smallest column).
    pub columns: Vec<usize>,
    /// The same assignment relabeled onto contiguous ids.
    pub partition: Partition,
}

pub fn hard_assign<T: Real>(p: ArrayView2<'_, T>) -> HardAssignment {
    let columns: Vec<usize> = p
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    let partition = Partition::from_labels(&columns);
    HardAssignment { columns, partition }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftModularityValue {
    pub q_prime: f64,
    pub loss: f64,
}

fn check_membership<T: Real>(g: &AttributedGraph, p: ArrayView2<'_, T>) -> Result<()> {
    if p.nrows() != g.num_nodes() {
        return Err(Error::LengthMismatch {
            what: "membership rows",
            got: p.nrows(),
            expected: g.num_nodes(),
        });
    }
    for (row, r) in p.axis_iter(Axis(0)).enumerate() {
        let sum: f64 = r.iter().map(|v| v.as_f64()).sum();
        if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
            return Err(Error::NotRowStochastic { row, sum });
        }
    }
    Ok(())
}

/// `Pᵀd` accumulated in `f64`.
fn community_degrees<T: Real>(g: &AttributedGraph, p: ArrayView2<'_, T>) -> Array1<f64> {
    let mut out = Array1::zeros(p.ncols());
    for (i, row) in p.axis_iter(Axis(0)).enumerate() {
        let d = g.degree(i) as f64;
        for (o, &v) in out.iter_mut().zip(row.iter()) {
            *o += d * v.as_f64();
        }
    }
    out
}

/// `Q′ = tr(PᵀAP)/2M − ‖Pᵀd‖²/(2M)²` and `loss = −α·Q′`.
///
/// The first term walks stored edges; the null-model term is a single
/// `k`-vector norm, so no `n×n` matrix is formed.
pub fn soft_modularity<T: Real>(g: &AttributedGraph, p: ArrayView2<'_, T>, alpha: f64) -> Result<SoftModularityValue> {
    check_membership(g, p)?;
    let mut edge_term = 0.0;
    for i in 0..g.num_nodes() {
        let pi = p.row(i);
        for &j in g.neighbors(i) {
            let pj = p.row(j);
            edge_term += pi.iter().zip(pj.iter()).map(|(a, b)| a.as_f64() * b.as_f64()).sum::<f64>();
        }
    }
    let two_m = g.two_m() as f64;
    let pd = community_degrees(g, p);
    let q_prime = edge_term / two_m - pd.dot(&pd) / (two_m * two_m);
    Ok(SoftModularityValue {
        q_prime,
        loss: -alpha * q_prime,
    })
}

/// `∂Q′/∂P = (A P − d (dᵀP)/2M) / M`.
pub fn soft_modularity_grad<T: Real>(g: &AttributedGraph, p: ArrayView2<'_, T>) -> Array2<f64> {
    let two_m = g.two_m() as f64;
    let m = two_m / 2.0;
    let pd = community_degrees(g, p);
    let mut grad = Array2::zeros(p.raw_dim());
    for (i, mut out) in grad.axis_iter_mut(Axis(0)).enumerate() {
        for &j in g.neighbors(i) {
            for (o, &v) in out.iter_mut().zip(p.row(j).iter()) {
                *o += v.as_f64();
            }
        }
        let d = g.degree(i) as f64;
        for (o, &s) in out.iter_mut().zip(pd.iter()) {
            *o = (*o - d * s / two_m) / m;
        }
    }
    grad
}
