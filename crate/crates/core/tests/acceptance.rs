//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria needing the Cora/Citeseer files read them from
//! `$COMMDET_DATA_DIR/{cora,citeseer}/{edges,features,labels}.txt`
//! (default `<workspace>/data`). When the files are absent those criteria
//! print FAIL with the reason; they abort the run only when
//! `COMMDET_ACCEPTANCE_STRICT=1`. Any criterion that runs and misses its
//! threshold makes the process exit non-zero.

mod common;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use commdet::encoder::{self, Activation};
use commdet::io::{generate_sbm, load_dataset, read_results, DatasetBundle, SbmSpec};
use commdet::membership::{self, SimilarityMode, SoftmaxSign};
use commdet::metrics;
use commdet::predetect::{filter_communities, louvain_with_levels};
use commdet::training::gradcheck::{check_gradient, relative_error};
use commdet::training::{train, train_with_observer, Objective, TrainConfig};
use commdet::{modularity_hard, AttributedGraph, Partition};
use ndarray::{Array2, Axis};
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    MissingData(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c1_soft_hard_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = common::rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=30);
        let edges = common::random_edges(n, 0.2, &mut rng);
        let k = rng.random_range(1..=n.min(6));
        let labels = common::random_labels(n, k, &mut rng);
        let g = common::plain_graph(n, &edges);
        let mut p = Array2::<f64>::zeros((n, k));
        for (i, &c) in labels.iter().enumerate() {
            p[[i, c]] = 1.0;
        }
        let soft = membership::soft_modularity(&g, p.view(), 1.0).unwrap().q_prime;
        let brute = common::brute_force_modularity(n, &edges, &labels);
        worst = worst.max((soft - brute).abs());
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-10 && t < Duration::from_secs(5),
        format!("max |Q'-Q| = {worst:.2e} (tol 1e-10), {:.2} s (limit 5 s)", t.as_secs_f64()),
    )
}

fn c2_gradient() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_combo = String::new();
    for sim in [SimilarityMode::Cosine, SimilarityMode::Dot] {
        for sign in [SoftmaxSign::Plus, SoftmaxSign::Minus] {
            for act in [Activation::Relu, Activation::Tanh, Activation::Identity] {
                let (g, fr) = common::gradcheck_problem(3);
                let cfg = TrainConfig {
                    activation: act,
                    sim_mode: sim,
                    sign,
                    dim: 8,
                    ..Default::default()
                };
                let pm = encoder::build_propagation(&g);
                let obj = Objective::<f64>::new(&g, &pm, &fr, &cfg);
                let w = encoder::init_weights::<f64>(12, 8, 17);
                let err = relative_error(&check_gradient(&obj, w.view(), 20, 29).unwrap());
                if err >= worst {
                    worst = err;
                    worst_combo = format!("{sim:?}/{sign:?}/{act:?}");
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-5 && t < Duration::from_secs(30),
        format!(
            "12 combos, worst relative error {worst:.2e} ({worst_combo}) (tol 1e-5), {:.2} s (limit 30 s)",
            t.as_secs_f64()
        ),
    )
}

fn c3_metric_oracles() -> Verdict {
    let mut rng = common::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=100);
        let pred = common::random_labels(n, rng.random_range(1..=6), &mut rng);
        let truth = common::random_labels(n, rng.random_range(1..=6), &mut rng);
        let oracle = common::exhaustive_mapping(&pred, &truth);
        let best_f1 = oracle.f1_candidates.iter().copied().fold(0.0, f64::max);
        let diffs = [
            metrics::nmi(&pred, &truth).unwrap() - common::naive_nmi(&pred, &truth),
            metrics::ari(&pred, &truth).unwrap() - common::naive_ari(&pred, &truth),
            metrics::acc(&pred, &truth).unwrap() - oracle.acc,
            metrics::f1(&pred, &truth).unwrap() - best_f1,
        ];
        worst = diffs.iter().fold(worst, |w, d| w.max(d.abs()));
    }
    let ari = metrics::ari(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
    let nmi = metrics::nmi(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
    let acc = metrics::acc(&[0, 1, 1], &[0, 0, 1]).unwrap();
    let fixed = (ari + 0.5).abs() <= 1e-9 && nmi.abs() <= 1e-9 && (acc - 2.0 / 3.0).abs() <= 1e-9;
    verdict(
        worst <= 1e-9 && fixed,
        format!("200 pairs, max deviation {worst:.2e} (tol 1e-9); ARI={ari}, NMI={nmi}, ACC={acc:.6}"),
    )
}

fn c4_louvain() -> Verdict {
    let triangles = common::plain_graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
    let tri = louvain_with_levels(&triangles, 0).unwrap();
    let tri_q = modularity_hard(&triangles, &tri.partition).unwrap();
    let tri_ok = tri.partition.assign() == [0, 0, 0, 1, 1, 1] && (tri_q - 0.5).abs() <= 1e-12;

    let karate = common::plain_graph(34, &common::KARATE_EDGES);
    let mut karate_q = Vec::new();
    let mut graphs = vec![triangles, karate.clone()];
    let mut rng = common::rng(4);
    for _ in 0..20 {
        let n = rng.random_range(5..60);
        graphs.push(common::plain_graph(n, &common::random_edges(n, 0.1, &mut rng)));
    }
    let mut monotone = true;
    for seed in 0..20 {
        let r = louvain_with_levels(&karate, seed).unwrap();
        karate_q.push(modularity_hard(&karate, &r.partition).unwrap());
        for g in &graphs {
            let levels = louvain_with_levels(g, seed).unwrap().level_modularity;
            monotone &= levels.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        }
    }
    let min_karate = karate_q.iter().copied().fold(f64::INFINITY, f64::min);
    let max_karate = karate_q.iter().copied().fold(0.0, f64::max);
    let median_karate = median(karate_q);
    verdict(
        tri_ok && median_karate >= 0.40 && monotone,
        format!(
            "triangles Q={tri_q} exact={tri_ok}; karate median Q over 20 seeds {median_karate:.4} (need >= 0.40, range {min_karate:.4}..{max_karate:.4}); levels non-decreasing={monotone}"
        ),
    )
}

fn c5_filter() -> Verdict {
    let labels: Vec<usize> = [10usize, 10, 10, 2].iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    let p = Partition::new(labels).unwrap();
    let fr = filter_communities(&p, 32, 0.5).unwrap();
    let exact = 8.0 + 0.5 * 12f64.sqrt();
    verdict(
        (fr.threshold - exact).abs() <= 1e-9 && fr.k == 3,
        format!("T = {:.10} (exact {exact:.10}), k = {}", fr.threshold, fr.k),
    )
}

fn data_dir() -> PathBuf {
    std::env::var_os("COMMDET_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data")))
}

fn load_named(name: &str) -> Result<AttributedGraph, String> {
    let dir = data_dir().join(name);
    let bundle = DatasetBundle {
        name: Some(name.into()),
        edges: dir.join("edges.txt"),
        features: dir.join("features.txt"),
        labels: Some(dir.join("labels.txt")),
    };
    for p in [&bundle.edges, &bundle.features, bundle.labels.as_ref().unwrap()] {
        if !p.exists() {
            return Err(format!("{} not found", p.display()));
        }
    }
    load_dataset(&bundle).map(|l| l.graph).map_err(|e| e.to_string())
}

struct RunSummary {
    q: f64,
    nmi: f64,
    acc: f64,
    ari: f64,
    secs: f64,
}

fn run_default(g: &AttributedGraph, seed: u64, alpha: f64) -> Result<RunSummary, String> {
    let cfg = TrainConfig {
        seed,
        alpha,
        ..Default::default()
    };
    let start = Instant::now();
    let out = train(g, &cfg).map_err(|e| e.to_string())?;
    let r = out.final_record;
    Ok(RunSummary {
        q: r.q,
        nmi: r.nmi.unwrap_or(f64::NAN),
        acc: r.acc.unwrap_or(f64::NAN),
        ari: r.ari.unwrap_or(f64::NAN),
        secs: start.elapsed().as_secs_f64(),
    })
}

fn end_to_end(name: &str, q_min: f64, nmi_min: f64, acc_min: f64, ari_min: Option<f64>) -> Verdict {
    let g = match load_named(name) {
        Ok(g) => g,
        Err(e) => return Verdict::MissingData(e),
    };
    let mut runs = Vec::new();
    for seed in 0..5 {
        match run_default(&g, seed, 0.001) {
            Ok(r) => runs.push(r),
            Err(e) => return Verdict::Fail(format!("seed {seed}: {e}")),
        }
    }
    let m = |f: fn(&RunSummary) -> f64| median(runs.iter().map(f).collect());
    let (q, nmi, acc, ari) = (m(|r| r.q), m(|r| r.nmi), m(|r| r.acc), m(|r| r.ari));
    let slowest = runs.iter().map(|r| r.secs).fold(0.0, f64::max);
    let ok = q >= q_min && nmi >= nmi_min && acc >= acc_min && ari_min.is_none_or(|a| ari >= a) && slowest < 300.0;
    let ari_part = ari_min.map(|a| format!(", ARI {ari:.4} (>= {a})")).unwrap_or_default();
    verdict(
        ok,
        format!(
            "median of 5: Q {q:.4} (>= {q_min}), NMI {nmi:.4} (>= {nmi_min}), ACC {acc:.4} (>= {acc_min}){ari_part}; slowest run {slowest:.1} s (limit 300 s)"
        ),
    )
}

fn c8_alpha_sweep() -> Verdict {
    let g = match load_named("cora") {
        Ok(g) => g,
        Err(e) => return Verdict::MissingData(e),
    };
    let alphas = [1.0, 0.1, 0.01, 0.001];
    let mut medians = Vec::new();
    for &alpha in &alphas {
        let mut qs = Vec::new();
        for seed in 0..3 {
            match run_default(&g, seed, alpha) {
                Ok(r) => qs.push(r.q),
                Err(e) => return Verdict::Fail(format!("alpha {alpha} seed {seed}: {e}")),
            }
        }
        medians.push(median(qs));
    }
    let best = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let detail = alphas
        .iter()
        .zip(&medians)
        .map(|(a, q)| format!("alpha {a}: Q {q:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(medians[3] == best, format!("{detail}; 0.001 must be best"))
}

fn c9_invariants() -> Verdict {
    let spec = SbmSpec {
        blocks: vec![30, 30, 30, 30],
        p_in: 0.3,
        p_out: 0.03,
        feature_dim: 24,
        center_separation: 1.0,
        noise_sigma: 1.0,
        seed: 9,
    };
    let g = generate_sbm(&spec).unwrap();
    let (mut worst_row, mut worst_norm, mut logged) = (0.0f64, 0.0f64, 0);
    for act in [Activation::Relu, Activation::Tanh, Activation::Identity] {
        let cfg = TrainConfig {
            iters: 60,
            dim: 32,
            seed: 2,
            activation: act,
            ..Default::default()
        };
        train_with_observer(&g, &cfg, &mut |_, h, p| {
            logged += 1;
            for row in p.axis_iter(Axis(0)) {
                worst_row = worst_row.max((row.sum() - 1.0).abs());
            }
            for row in h.axis_iter(Axis(0)) {
                worst_norm = worst_norm.max((row.dot(&row).sqrt() - 1.0).abs());
            }
        })
        .unwrap();
    }

    let mut rng = common::rng(99);
    let mut argmax_ok = true;
    for _ in 0..200 {
        let (n, k) = (rng.random_range(1..40), rng.random_range(1..8));
        let sim = Array2::from_shape_simple_fn((n, k), || rng.random_range(-1.0..1.0));
        let delta = rng.random_range(0.5..50.0);
        let p = membership::soft_assign(sim.view(), delta, SoftmaxSign::Plus);
        let hard = membership::hard_assign(p.view());
        for (row, &c) in sim.axis_iter(Axis(0)).zip(&hard.columns) {
            let best = row.iter().enumerate().fold(0, |b, (j, &v)| if v > row[b] { j } else { b });
            argmax_ok &= best == c;
        }
    }
    verdict(
        logged == 18 && worst_row <= 1e-9 && worst_norm <= 1e-6 && argmax_ok,
        format!(
            "{logged} logged points; max |rowsum(P)-1| {worst_row:.2e} (tol 1e-9); max |‖h‖-1| {worst_norm:.2e} (tol 1e-6); argmax agreement {argmax_ok}"
        ),
    )
}

fn c10_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_commdet");
    let status = Command::new(bin)
        .args(["synth", "--blocks", "40,40,40", "--p-in", "0.3", "--p-out", "0.03", "--seed", "5", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    if !status.success() {
        return Verdict::Fail("synth failed".into());
    }
    let run = |out: &str| {
        let path = dir.path().join(out);
        let status = Command::new(bin)
            .arg("detect")
            .args(["--edges", "--features", "--labels"].iter().zip(["edges.txt", "features.txt", "labels.txt"]).flat_map(
                |(flag, file)| [std::ffi::OsString::from(flag), dir.path().join(file).into_os_string()],
            ))
            .args(["--seed", "11", "--iters", "60", "--dim", "64", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        read_results(&path).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    verdict(
        a.without_timing() == b.without_timing() && !a.records.is_empty(),
        format!("{} records compared, identical modulo timing: {}", a.records.len(), a.without_timing() == b.without_timing()),
    )
}

fn main() {
    let strict = std::env::var("COMMDET_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("soft/hard modularity equivalence", c1_soft_hard_equivalence),
        ("gradient correctness", c2_gradient),
        ("metric oracle equivalence", c3_metric_oracles),
        ("Louvain quality", c4_louvain),
        ("filter arithmetic", c5_filter),
        ("end-to-end Cora", || end_to_end("cora", 0.70, 0.45, 0.55, Some(0.35))),
        ("end-to-end Citeseer", || end_to_end("citeseer", 0.76, 0.28, 0.45, None)),
        ("alpha sweep ordering on Cora", c8_alpha_sweep),
        ("structural invariants", c9_invariants),
        ("CLI determinism", c10_determinism),
    ];
    let (mut failed, mut missing) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Verdict::Pass(d) => println!("PASS  {:>2}. {name}: {d}", i + 1),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {d}", i + 1);
            }
            Verdict::MissingData(d) => {
                missing += 1;
                println!("FAIL  {:>2}. {name}: dataset unavailable ({d})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {missing} failed for missing data",
        criteria.len() - failed - missing
    );
    if failed > 0 || (strict && missing > 0) {
        std::process::exit(1);
    }
}
