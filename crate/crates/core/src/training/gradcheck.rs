//! Central finite-difference comparison against the analytic gradient.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Objective;
use crate::error::Result;

/// Analytic and numeric partial derivative for one entry of `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradSample {
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradSample {
    /// `|a − f| / max(|a|, |f|, floor)`.
    pub fn relative_error(&self, floor: f64) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(floor);
        if scale == 0.0 {
            0.0
        } else {
            (self.analytic - self.numeric).abs() / scale
        }
    }
}

/// Norm-wise relative error `‖a − f‖₂ / max(‖a‖₂, ‖f‖₂)` over the sampled
/// entries; 0 when both vectors vanish.
pub fn relative_error(samples: &[GradSample]) -> f64 {
    let norm = |f: &dyn Fn(&GradSample) -> f64| samples.iter().map(|s| f(s).powi(2)).sum::<f64>().sqrt();
    let diff = norm(&|s| s.analytic - s.numeric);
    let scale = norm(&|s| s.analytic).max(norm(&|s| s.numeric));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Step used for entry `w`: `1e-6·(1+|w|)`.
pub fn fd_step(w: f64) -> f64 {
    1e-6 * (1.0 + w.abs())
}

/// Compares `samples` randomly chosen entries (all entries when there are
/// fewer) of the analytic gradient at `w` with central differences.
pub fn check_gradient(objective: &Objective<'_, f64>, w: ArrayView2<'_, f64>, samples: usize, seed: u64) -> Result<Vec<GradSample>> {
    let analytic = objective.loss_and_grad(w)?.grad;
    let (rows, cols) = w.dim();
    let total = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, total, samples.min(total));
    let mut probe: Array2<f64> = w.to_owned();
    let mut out = Vec::with_capacity(picks.len());
    for flat in picks.iter() {
        let (row, col) = (flat / cols, flat % cols);
        let original = probe[[row, col]];
        let h = fd_step(original);
        probe[[row, col]] = original + h;
        let plus = objective.loss(probe.view())?;
        probe[[row, col]] = original - h;
        let minus = objective.loss(probe.view())?;
        probe[[row, col]] = original;
        out.push(GradSample {
            row,
            col,
            analytic: analytic[[row, col]],
            numeric: (plus - minus) / (2.0 * h),
        });
    }
    Ok(out)
}
