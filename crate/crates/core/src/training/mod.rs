//! Training loop: soft-modularity loss, its analytic gradient with respect to
//! the encoder weights, Adam updates, and periodic evaluation.

mod adam;
pub mod gradcheck;

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};

use crate::encoder::{self, Activation, PropagationMatrix};
use crate::error::{Error, Result};
use crate::graph::{modularity_hard, AttributedGraph, Partition};
use crate::membership::{self, HardAssignment, SimilarityMode, SoftModularityValue, SoftmaxSign};
use crate::metrics;
use crate::predetect::{self, FilterResult};
use crate::real::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Hyperparameters of a detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Softmax temperature applied to similarities.
    pub delta: f64,
    /// Loss scale: `loss = −α·Q′`.
    pub alpha: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub iters: usize,
    /// Metrics are recorded every this many iterations.
    pub eval_interval: usize,
    /// Embedding dimension `l`.
    pub dim: usize,
    pub seed: u64,
    /// Coefficient on σ in the community-size threshold.
    pub threshold_coef: f64,
    pub activation: Activation,
    pub sim_mode: SimilarityMode,
    pub sign: SoftmaxSign,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            delta: 30.0,
            alpha: 0.001,
            lr: 0.001,
            weight_decay: 0.005,
            iters: 300,
            eval_interval: 10,
            dim: 512,
            seed: 0,
            threshold_coef: predetect::DEFAULT_THRESHOLD_COEF,
            activation: Activation::Relu,
            sim_mode: SimilarityMode::Cosine,
            sign: SoftmaxSign::Plus,
            precision: Precision::F64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("delta", self.delta), ("lr", self.lr)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("alpha", self.alpha),
            ("weight_decay", self.weight_decay),
            ("threshold_coef", self.threshold_coef),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be at least 1".into()));
        }
        if self.eval_interval == 0 {
            return Err(Error::InvalidConfig("eval_interval must be at least 1".into()));
        }
        if self.iters > 0 && self.eval_interval > self.iters {
            return Err(Error::InvalidConfig(format!(
                "eval_interval ({}) exceeds iters ({})",
                self.eval_interval, self.iters
            )));
        }
        Ok(())
    }
}

/// Intermediate tensors of one forward pass.
#[derive(Debug, Clone)]
pub struct Artifacts<T> {
    /// Raw embeddings `Z`.
    pub z: Array2<T>,
    /// Unit-norm embeddings `H`.
    pub h: Array2<T>,
    pub norms: Array1<T>,
    /// Structural centers `U`.
    pub centers: Array2<T>,
    /// `1/‖u_c‖`, present in cosine mode.
    pub inv_center_norms: Option<Array1<T>>,
    pub sim: Array2<T>,
    /// Membership probabilities `P`.
    pub membership: Array2<T>,
    pub value: SoftModularityValue,
}

#[derive(Debug, Clone)]
pub struct LossGrad<T> {
    pub loss: f64,
    pub grad: Array2<T>,
    pub artifacts: Artifacts<T>,
}

/// The scalar objective as a function of the encoder weights, for a fixed
/// graph and fixed structural communities.
pub struct Objective<'a, T> {
    graph: &'a AttributedGraph,
    filter: &'a FilterResult,
    propagation: CsrMatrix<T>,
    features: CsrMatrix<T>,
    features_t: CsrMatrix<T>,
    delta: f64,
    alpha: f64,
    activation: Activation,
    sim_mode: SimilarityMode,
    sign: SoftmaxSign,
}

impl<'a, T: Real> Objective<'a, T> {
    pub fn new(g: &'a AttributedGraph, pm: &PropagationMatrix, filter: &'a FilterResult, cfg: &TrainConfig) -> Self {
        let features: CsrMatrix<T> = g.features().cast();
        Self {
            graph: g,
            filter,
            propagation: pm.cast(),
            features_t: features.transpose(),
            features,
            delta: cfg.delta,
            alpha: cfg.alpha,
            activation: cfg.activation,
            sim_mode: cfg.sim_mode,
            sign: cfg.sign,
        }
    }

    pub fn forward(&self, w: ArrayView2<'_, T>) -> Result<Artifacts<T>> {
        let z = encoder::encode(&self.propagation, &self.features, w, self.activation)?;
        let normalized = encoder::l2_normalize(z.view());
        if z.iter().chain(normalized.norms.iter()).any(|v| !v.is_finite()) {
            return Err(non_finite("embeddings", None, w));
        }
        let h = normalized.h;
        let centers = membership::compute_centers(h.view(), self.filter)?;
        let inv_center_norms = match self.sim_mode {
            SimilarityMode::Cosine => Some(membership::inverse_center_norms(centers.view())?),
            SimilarityMode::Dot => None,
        };
        let mut sim = h.dot(&centers.t());
        if let Some(inv) = &inv_center_norms {
            sim *= inv;
        }
        let p = membership::soft_assign(sim.view(), self.delta, self.sign);
        let value = membership::soft_modularity(self.graph, p.view(), self.alpha)?;
        if !value.loss.is_finite() {
            return Err(non_finite("loss", Some(&value), w));
        }
        Ok(Artifacts {
            z,
            h,
            norms: normalized.norms,
            centers,
            inv_center_norms,
            sim,
            membership: p,
            value,
        })
    }

    pub fn loss(&self, w: ArrayView2<'_, T>) -> Result<f64> {
        Ok(self.forward(w)?.value.loss)
    }

    /// Loss and `∂loss/∂W`, with the gradient flowing through the centers.
    pub fn loss_and_grad(&self, w: ArrayView2<'_, T>) -> Result<LossGrad<T>> {
        let a = self.forward(w)?;
        let p = &a.membership;

        // ∂L/∂P = −α ∂Q′/∂P
        let dq = membership::soft_modularity_grad(self.graph, p.view());
        let scale = -self.alpha;
        let g_p: Array2<T> = dq.mapv(|v| T::from_f64(scale * v));

        // softmax: ∂L/∂logit = P ⊙ (G − rowsum(P ⊙ G)), logit = ±δ·sim
        let mut g_sim = p * &g_p;
        let row_dot = g_sim.sum_axis(Axis(1));
        let logit_scale = T::from_f64(self.sign.factor() * self.delta);
        Zip::from(g_sim.rows_mut())
            .and(p.rows())
            .and(&row_dot)
            .for_each(|mut out, p_row, &s| {
                Zip::from(&mut out).and(p_row).for_each(|o, &pv| *o = (*o - pv * s) * logit_scale);
            });

        // similarity: sim = H Ũᵀ with Ũ = diag(inv) U (cosine) or U (dot)
        let (mut g_h, g_centers) = match &a.inv_center_norms {
            Some(inv) => {
                let unit = &a.centers * &inv.view().insert_axis(Axis(1));
                let g_h = g_sim.dot(&unit);
                let g_unit = g_sim.t().dot(&a.h);
                let mut g_u = g_unit.clone();
                for ((mut gu, u), &s) in g_u.rows_mut().into_iter().zip(unit.rows()).zip(inv.iter()) {
                    let proj = u.dot(&gu);
                    gu.scaled_add(-proj, &u);
                    gu *= s;
                }
                (g_h, g_u)
            }
            None => (g_sim.dot(&a.centers), g_sim.t().dot(&a.h)),
        };

        // centers are member means
        for (members, g_u) in self.filter.member_lists.iter().zip(g_centers.rows()) {
            let share = T::one() / T::from_f64(members.len() as f64);
            for &j in members {
                g_h.row_mut(j).scaled_add(share, &g_u);
            }
        }

        // L2 normalization: ∂h/∂z = (I − h hᵀ)/‖z‖
        let eps = T::from_f64(encoder::NORM_EPS);
        let mut g_z = g_h;
        for ((mut g, h), &norm) in g_z.rows_mut().into_iter().zip(a.h.rows()).zip(a.norms.iter()) {
            if norm > eps {
                let proj = h.dot(&g);
                g.scaled_add(-proj, &h);
            }
            g /= norm;
        }

        let activation = self.activation;
        Zip::from(&mut g_z)
            .and(&a.z)
            .for_each(|g, &z| *g *= activation.derivative_from_output(z));

        // Z = P̂ (X W); P̂ is symmetric
        let g_y = self.propagation.matmul_dense(g_z.view());
        let grad = self.features_t.matmul_dense(g_y.view());
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(non_finite("gradient", Some(&a.value), w));
        }
        Ok(LossGrad {
            loss: a.value.loss,
            grad,
            artifacts: a,
        })
    }
}

fn non_finite<T: Real>(what: &'static str, value: Option<&SoftModularityValue>, w: ArrayView2<'_, T>) -> Error {
    let max_w = w.iter().map(|v| v.as_f64().abs()).fold(0.0, f64::max);
    let bad_w = w.iter().filter(|v| !v.is_finite()).count();
    let mut snapshot = format!("max|W|={max_w} non-finite W entries={bad_w}");
    if let Some(v) = value {
        snapshot = format!("q_prime={} loss={} {snapshot}", v.q_prime, v.loss);
    }
    Error::NonFinite {
        what,
        iteration: 0,
        snapshot,
    }
}

/// Metrics at one evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: usize,
    pub loss: f64,
    pub q_prime: f64,
    /// Hard modularity of the argmax partition.
    pub q: f64,
    pub num_communities: usize,
    /// Absent with fewer than two predicted communities or coincident centroids.
    pub dbi: Option<f64>,
    pub nmi: Option<f64>,
    pub acc: Option<f64>,
    pub f1: Option<f64>,
    pub ari: Option<f64>,
    pub elapsed_ms: f64,
}

pub type TrainHistory = Vec<EvalRecord>;

fn to_f64<T: Real>(a: &Array2<T>) -> Array2<f64> {
    a.mapv(|v| v.as_f64())
}

fn evaluate(
    g: &AttributedGraph,
    h: &Array2<f64>,
    assignment: &HardAssignment,
    value: SoftModularityValue,
    iteration: usize,
    elapsed_ms: f64,
) -> Result<EvalRecord> {
    let pred = assignment.partition.assign();
    let q = modularity_hard(g, &assignment.partition)?;
    let dbi = if assignment.partition.num_communities() >= 2 {
        Some(metrics::dbi(h.view(), pred)?).filter(|d| d.is_finite())
    } else {
        None
    };
    let scores = g.labels().map(|truth| metrics::label_scores(pred, truth.assign())).transpose()?;
    Ok(EvalRecord {
        iteration,
        loss: value.loss,
        q_prime: value.q_prime,
        q,
        num_communities: assignment.partition.num_communities(),
        dbi,
        nmi: scores.map(|s| s.nmi),
        acc: scores.map(|s| s.acc),
        f1: scores.map(|s| s.f1),
        ari: scores.map(|s| s.ari).filter(|a| a.is_finite()),
        elapsed_ms,
    })
}

/// Louvain outcome and the communities kept by the size filter.
#[derive(Debug, Clone)]
pub struct Predetection {
    pub partition: Partition,
    pub modularity: f64,
    pub filter: FilterResult,
}

pub fn predetect(g: &AttributedGraph, cfg: &TrainConfig) -> Result<Predetection> {
    let partition = predetect::louvain_detect(g, cfg.seed)?;
    let modularity = modularity_hard(g, &partition)?;
    let filter = predetect::filter_communities(&partition, g.num_nodes(), cfg.threshold_coef)?;
    Ok(Predetection {
        partition,
        modularity,
        filter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub louvain_ms: f64,
    pub train_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub history: TrainHistory,
    /// Evaluation of the untrained encoder.
    pub initial: EvalRecord,
    /// Evaluation after the last update.
    pub final_record: EvalRecord,
    pub embeddings: Array2<f64>,
    pub membership: Array2<f64>,
    pub assignment: HardAssignment,
    pub predetection: Predetection,
    pub timing: Timing,
}

/// Callback invoked at every logged iteration with the record, `H` and `P`.
pub type Observer<'o> = dyn FnMut(&EvalRecord, ArrayView2<'_, f64>, ArrayView2<'_, f64>) + 'o;

pub fn train(g: &AttributedGraph, cfg: &TrainConfig) -> Result<TrainOutput> {
    train_with_observer(g, cfg, &mut |_, _, _| {})
}

pub fn train_with_observer(g: &AttributedGraph, cfg: &TrainConfig, observer: &mut Observer<'_>) -> Result<TrainOutput> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F32 => run::<f32>(g, cfg, observer),
        Precision::F64 => run::<f64>(g, cfg, observer),
    }
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run<T: Real>(g: &AttributedGraph, cfg: &TrainConfig, observer: &mut Observer<'_>) -> Result<TrainOutput> {
    let total_start = Instant::now();
    let pre = predetect(g, cfg)?;
    let louvain_ms = ms_since(total_start);
    log::info!(
        "pre-detection: t={} Q={:.4} threshold={:.3} k={}",
        pre.partition.num_communities(),
        pre.modularity,
        pre.filter.threshold,
        pre.filter.k
    );

    let train_start = Instant::now();
    let pm = encoder::build_propagation(g);
    let objective = Objective::<T>::new(g, &pm, &pre.filter, cfg);
    let mut w: Array2<T> = encoder::init_weights(g.feature_dim(), cfg.dim, cfg.seed.wrapping_add(1));
    let mut state = AdamState::new(w.dim());

    let at_iteration = |e: Error, iteration: usize| match e {
        Error::NonFinite { what, snapshot, .. } => Error::NonFinite {
            what,
            iteration,
            snapshot,
        },
        other => other,
    };

    let initial = {
        let a = objective.forward(w.view()).map_err(|e| at_iteration(e, 0))?;
        let h = to_f64(&a.h);
        evaluate(g, &h, &membership::hard_assign(a.membership.view()), a.value, 0, 0.0)?
    };

    let mut history = TrainHistory::new();
    for iteration in 1..=cfg.iters {
        let step = objective.loss_and_grad(w.view()).map_err(|e| at_iteration(e, iteration))?;
        adam_step(&mut w, step.grad.view(), &mut state, cfg.lr, cfg.weight_decay);
        if iteration % cfg.eval_interval == 0 {
            let a = objective.forward(w.view()).map_err(|e| at_iteration(e, iteration))?;
            let h = to_f64(&a.h);
            let p = to_f64(&a.membership);
            let assignment = membership::hard_assign(p.view());
            let record = evaluate(g, &h, &assignment, a.value, iteration, ms_since(train_start))?;
            log::info!(
                "iter {iteration}: loss={:.6e} Q'={:.4} Q={:.4} k={} nmi={:?}",
                record.loss,
                record.q_prime,
                record.q,
                record.num_communities,
                record.nmi
            );
            observer(&record, h.view(), p.view());
            history.push(record);
        }
    }

    let last = objective.forward(w.view()).map_err(|e| at_iteration(e, cfg.iters))?;
    let embeddings = to_f64(&last.h);
    let membership = to_f64(&last.membership);
    let assignment = membership::hard_assign(membership.view());
    let train_ms = ms_since(train_start);
    let final_record = evaluate(g, &embeddings, &assignment, last.value, cfg.iters, train_ms)?;

    Ok(TrainOutput {
        history,
        initial,
        final_record,
        embeddings,
        membership,
        assignment,
        predetection: pre,
        timing: Timing {
            louvain_ms,
            train_ms,
            total_ms: ms_since(total_start),
        },
    })
}
