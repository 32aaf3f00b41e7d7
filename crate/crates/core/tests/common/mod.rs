//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use commdet::predetect::FilterResult;
use commdet::AttributedGraph;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) edges; retries until at least one edge exists.
pub fn random_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        if !edges.is_empty() {
            return edges;
        }
    }
}

pub fn random_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// `Q = (1/2M) Σ_ij (A_ij − d_i d_j / 2M) [c_i = c_j]` over all ordered pairs.
pub fn brute_force_modularity(n: usize, edges: &[(usize, usize)], assign: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v) in edges {
        if u != v {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
    }
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = d.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assign[i] == assign[j] {
                q += a[i][j] - d[i] * d[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Pair-counting ARI with explicit loops over all node pairs.
pub fn naive_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut both, mut same_pred, mut same_truth) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let p = pred[i] == pred[j];
            let t = truth[i] == truth[j];
            if p && t {
                both += 1.0;
            }
            if p {
                same_pred += 1.0;
            }
            if t {
                same_truth += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = same_pred * same_truth / pairs;
    let max = 0.5 * (same_pred + same_truth);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

/// NMI from explicit probability sums, natural log.
pub fn naive_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut cc: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cg: BTreeMap<usize, usize> = BTreeMap::new();
    for (&c, &g) in pred.iter().zip(truth) {
        *joint.entry((c, g)).or_default() += 1;
        *cc.entry(c).or_default() += 1;
        *cg.entry(g).or_default() += 1;
    }
    let prob = |count: usize| count as f64 / n;
    let mut mi = 0.0;
    for (&(c, g), &count) in &joint {
        let p = prob(count);
        mi += p * (p / (prob(cc[&c]) * prob(cg[&g]))).ln();
    }
    let h = |m: &BTreeMap<usize, usize>| -m.values().map(|&c| prob(c) * prob(c).ln()).sum::<f64>();
    let (hc, hg) = (h(&cc), h(&cg));
    if cc.len() == 1 && cg.len() == 1 {
        return 1.0;
    }
    if cc.len() == 1 || cg.len() == 1 {
        return 0.0;
    }
    mi / (hc * hg).sqrt()
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let out = labels.iter().map(|l| ids.binary_search(l).unwrap()).collect();
    (out, ids.len())
}

/// Every injective map from the smaller label set into the larger one.
fn injections(from: usize, to: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, from: usize, to: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == from {
            out.push(cur.clone());
            return;
        }
        for t in 0..to {
            if !used[t] {
                used[t] = true;
                cur.push(t);
                rec(i + 1, from, to, used, cur, out);
                cur.pop();
                used[t] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, from, to, &mut vec![false; to], &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over label mappings: the best matched count and the
/// macro-F1 of every mapping achieving it.
pub struct ExhaustiveMapping {
    pub acc: f64,
    pub f1_candidates: Vec<f64>,
}

/// `pred_to_true[c]` gives the true class of predicted cluster `c`, if any.
fn macro_f1(pred: &[usize], truth: &[usize], num_true: usize, pred_to_true: &[Option<usize>]) -> f64 {
    let mut total = 0.0;
    for class in 0..num_true {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (&p, &t) in pred.iter().zip(truth) {
            let predicted = pred_to_true[p] == Some(class);
            match (predicted, t == class) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        if tp > 0.0 {
            let precision = tp / (tp + fp);
            let recall = tp / (tp + fn_);
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    total / num_true as f64
}

pub fn exhaustive_mapping(pred: &[usize], truth: &[usize]) -> ExhaustiveMapping {
    let (pred, r) = compact(pred);
    let (truth, s) = compact(truth);
    let n = pred.len();
    let mut scored: Vec<(usize, f64)> = Vec::new();
    if r <= s {
        for inj in injections(r, s) {
            let map: Vec<Option<usize>> = inj.into_iter().map(Some).collect();
            let matched = pred.iter().zip(&truth).filter(|(&p, &t)| map[p] == Some(t)).count();
            scored.push((matched, macro_f1(&pred, &truth, s, &map)));
        }
    } else {
        for inj in injections(s, r) {
            let mut map = vec![None; r];
            for (t, &p) in inj.iter().enumerate() {
                map[p] = Some(t);
            }
            let matched = pred.iter().zip(&truth).filter(|(&p, &t)| map[p] == Some(t)).count();
            scored.push((matched, macro_f1(&pred, &truth, s, &map)));
        }
    }
    let best = scored.iter().map(|s| s.0).max().unwrap();
    ExhaustiveMapping {
        acc: best as f64 / n as f64,
        f1_candidates: scored.iter().filter(|s| s.0 == best).map(|s| s.1).collect(),
    }
}

/// The small gradient-check problem: n = 20 random graph, m = 12 dense
/// features, three fixed structural communities.
pub fn gradcheck_problem(seed: u64) -> (AttributedGraph, FilterResult) {
    let mut r = rng(seed);
    let n = 20;
    let edges = random_edges(n, 0.25, &mut r);
    let features = Array2::from_shape_simple_fn((n, 12), || {
        if r.random::<f64>() < 0.3 {
            0.0
        } else {
            r.random_range(-1.0..1.0)
        }
    });
    let g = AttributedGraph::with_dense_features(&edges, features.view(), None).unwrap();
    let fr = FilterResult::from_members(vec![(0..7).collect(), (7..14).collect(), (14..20).collect()]).unwrap();
    (g, fr)
}

/// Zachary's karate club, 0-based, 78 edges.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11), (0, 12), (0, 13),
    (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30),
    (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6),
    (4, 10), (5, 6), (5, 10), (5, 16), (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32),
    (14, 33), (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33),
    (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29),
    (26, 33), (27, 33), (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33),
    (32, 33),
];

/// Graph with identity-like single-column features.
pub fn plain_graph(n: usize, edges: &[(usize, usize)]) -> AttributedGraph {
    AttributedGraph::with_dense_features(edges, Array2::ones((n, 1)).view(), None).unwrap()
}
