use ndarray::{Array2, ArrayView2, Zip};

use crate::real::Real;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Moment accumulators shaped like the parameter they optimize.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first: Array2<T>,
    pub second: Array2<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(shape: (usize, usize)) -> Self {
        Self {
            first: Array2::zeros(shape),
            second: Array2::zeros(shape),
            step: 0,
        }
    }
}

/// One Adam update with L2 weight decay folded into the gradient
/// (`g ← g + λ·w`), bias-corrected moments.
pub fn adam_step<T: Real>(
    weights: &mut Array2<T>,
    grad: ArrayView2<'_, T>,
    state: &mut AdamState<T>,
    lr: f64,
    weight_decay: f64,
) {
    assert_eq!(weights.dim(), grad.dim(), "gradient shape");
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::from_f64(BETA1), T::from_f64(BETA2));
    let one = T::one();
    let correction1 = one - b1.powi(t);
    let correction2 = one - b2.powi(t);
    let lr = T::from_f64(lr);
    let decay = T::from_f64(weight_decay);
    let eps = T::from_f64(EPSILON);

    Zip::from(weights)
        .and(grad)
        .and(&mut state.first)
        .and(&mut state.second)
        .for_each(|w, &g, m, v| {
            let g = g + decay * *w;
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}
