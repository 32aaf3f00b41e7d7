//! Single-layer graph convolution `Z = f(D̂^{-1/2}(A+I)D̂^{-1/2} X W)` and
//! row-wise L2 normalization.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::real::Real;
use crate::sparse::CsrMatrix;

/// Norm floor used by [`l2_normalize`].
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y = f(x)`.
    pub fn derivative_from_output<T: Real>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
            Activation::Identity => T::one(),
        }
    }
}

/// Symmetrically normalized adjacency with self-loops. Symmetric, so it is
/// its own transpose in the backward pass.
#[derive(Debug, Clone)]
pub struct PropagationMatrix(CsrMatrix<f64>);

impl PropagationMatrix {
    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.0
    }

    pub fn cast<T: Real>(&self) -> CsrMatrix<T> {
        self.0.cast()
    }
}

pub fn build_propagation(g: &AttributedGraph) -> PropagationMatrix {
    let n = g.num_nodes();
    let d_hat: Vec<f64> = (0..n).map(|i| (g.degree(i) + 1) as f64).collect();
    let rows = (0..n)
        .map(|i| {
            std::iter::once(i)
                .chain(g.neighbors(i).iter().copied())
                .map(|j| (j, 1.0 / (d_hat[i] * d_hat[j]).sqrt()))
                .collect()
        })
        .collect();
    PropagationMatrix(CsrMatrix::from_rows(n, rows))
}

/// `f(P̂ · (X · W))`.
pub fn encode<T: Real>(
    propagation: &CsrMatrix<T>,
    features: &CsrMatrix<T>,
    weights: ArrayView2<'_, T>,
    activation: Activation,
) -> Result<Array2<T>> {
    if features.ncols() != weights.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} columns but weights have {} rows",
            features.ncols(),
            weights.nrows()
        )));
    }
    if propagation.ncols() != features.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "propagation is {}x{} but features have {} rows",
            propagation.nrows(),
            propagation.ncols(),
            features.nrows()
        )));
    }
    let projected = features.matmul_dense(weights);
    let mut z = propagation.matmul_dense(projected.view());
    z.mapv_inplace(|x| activation.apply(x));
    Ok(z)
}

/// Unit-norm rows together with the norms they were divided by.
#[derive(Debug, Clone)]
pub struct Normalized<T> {
    pub h: Array2<T>,
    /// `max(‖z_i‖, ε)` per row.
    pub norms: Array1<T>,
    pub zero_rows: usize,
}

/// `h_i = z_i / max(‖z_i‖₂, ε)`; rows with norm below `ε` are counted.
pub fn l2_normalize<T: Real>(z: ArrayView2<'_, T>) -> Normalized<T> {
    let eps = T::from_f64(NORM_EPS);
    let mut h = z.to_owned();
    let mut norms = Array1::zeros(z.nrows());
    let mut zero_rows = 0;
    for (mut row, norm) in h.axis_iter_mut(Axis(0)).zip(norms.iter_mut()) {
        let raw = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        if raw < eps {
            zero_rows += 1;
        }
        *norm = raw.max(eps);
        row /= *norm;
    }
    if zero_rows > 0 {
        log::warn!("{zero_rows} embedding row(s) had (near-)zero norm during normalization");
    }
    Normalized { h, norms, zero_rows }
}

/// Uniform weights in `±√(6/(m+l))`.
pub fn init_weights<T: Real>(m: usize, l: usize, seed: u64) -> Array2<T> {
    let bound = (6.0 / (m + l) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((m, l), || T::from_f64(rng.random_range(-bound..bound)))
}
