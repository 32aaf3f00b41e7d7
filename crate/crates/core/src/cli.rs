//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::encoder::Activation;
use crate::error::{Error, Result};
use crate::graph::{modularity_hard, AttributedGraph, Partition};
use crate::io::dataset::{self, DatasetBundle};
use crate::io::{generate_sbm, write_results, ResultsFile, SbmSpec};
use crate::membership::{SimilarityMode, SoftmaxSign};
use crate::metrics;
use crate::predetect;
use crate::sparse::CsrMatrix;
use crate::training::{self, Precision, TrainConfig};

/// Environment variable holding the worker-thread count for matrix kernels.
pub const THREADS_ENV: &str = "COMMDET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "commdet", version, about = "Community detection on attributed graphs")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write a results file.
    Detect(DetectArgs),
    /// Louvain pre-detection and size filtering only.
    Louvain(LouvainArgs),
    /// Score a partition against labels and/or embeddings.
    Eval(EvalArgs),
    /// Generate an attributed stochastic block model dataset.
    Synth(SynthArgs),
    /// Repeat detection over lists of alpha/delta values and seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Dataset name, checked against the reference shape table.
    #[arg(long)]
    pub name: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<AttributedGraph> {
        let bundle = DatasetBundle {
            name: self.name.clone(),
            edges: self.edges.clone(),
            features: self.features.clone(),
            labels: self.labels.clone(),
        };
        let loaded = dataset::load_dataset(&bundle)?;
        for w in &loaded.warnings {
            eprintln!("warning: {w}");
        }
        Ok(loaded.graph)
    }
}

/// Hyperparameters shared by `detect` and `sweep` (alpha and delta are
/// declared per subcommand).
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.005)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub eval_interval: usize,
    #[arg(long, default_value_t = predetect::DEFAULT_THRESHOLD_COEF)]
    pub threshold_coef: f64,
    #[arg(long, value_enum, default_value_t = Activation::Relu)]
    pub activation: Activation,
    #[arg(long, value_enum, default_value_t = SimilarityMode::Cosine)]
    pub sim: SimilarityMode,
    #[arg(long, value_enum, default_value_t = SoftmaxSign::Plus)]
    pub sign: SoftmaxSign,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
}

impl ModelArgs {
    fn config(&self, alpha: f64, delta: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            delta,
            alpha,
            lr: self.lr,
            weight_decay: self.weight_decay,
            iters: self.iters,
            eval_interval: self.eval_interval,
            dim: self.dim,
            seed,
            threshold_coef: self.threshold_coef,
            activation: self.activation,
            sim_mode: self.sim,
            sign: self.sign,
            precision: self.precision,
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 30.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Results JSON path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the final embeddings (features format).
    #[arg(long)]
    pub embeddings_out: Option<PathBuf>,
    /// Also write the final partition (labels format).
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LouvainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = predetect::DEFAULT_THRESHOLD_COEF)]
    pub threshold_coef: f64,
    /// Write the Louvain partition (labels format).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted partition (labels format).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Embeddings (features format), enables DBI.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Edge list, enables hard modularity.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', default_value = "50,50,50")]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving edges.txt, features.txt and labels.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    pub alpha: Vec<f64>,
    /// Comma-separated delta values.
    #[arg(long, value_delimiter = ',', default_value = "30")]
    pub delta: Vec<f64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn print_final(r: &training::EvalRecord) {
    println!("q\t{}", r.q);
    println!("q_prime\t{}", r.q_prime);
    println!("communities\t{}", r.num_communities);
    let optional = [("dbi", r.dbi), ("nmi", r.nmi), ("acc", r.acc), ("f1", r.f1), ("ari", r.ari)];
    for (name, v) in optional {
        if let Some(v) = v {
            println!("{name}\t{v}");
        }
    }
}

fn detect(args: &DetectArgs) -> Result<()> {
    let g = args.data.load()?;
    let cfg = args.model.config(args.alpha, args.delta, args.seed);
    let out = training::train(&g, &cfg)?;
    write_results(&args.out, &ResultsFile::from_output(args.data.name.as_deref(), &cfg, &out))?;
    if let Some(path) = &args.embeddings_out {
        dataset::write_matrix(path, out.embeddings.view())?;
    }
    if let Some(path) = &args.partition_out {
        dataset::write_labels(path, out.assignment.partition.assign())?;
    }
    print_final(&out.final_record);
    Ok(())
}

fn louvain(args: &LouvainArgs) -> Result<()> {
    let g = args.data.load()?;
    let levels = predetect::louvain_with_levels(&g, args.seed)?;
    let q = modularity_hard(&g, &levels.partition)?;
    println!("q\t{q}");
    println!("communities\t{}", levels.partition.num_communities());
    println!("levels\t{}", levels.level_modularity.len());
    match predetect::filter_communities(&levels.partition, g.num_nodes(), args.threshold_coef) {
        Ok(fr) => {
            println!("threshold\t{}", fr.threshold);
            println!("kept\t{}", fr.k);
        }
        Err(Error::NoCommunities { threshold }) => {
            println!("threshold\t{threshold}");
            println!("kept\t0");
        }
        Err(e) => return Err(e),
    }
    if let Some(truth) = g.labels() {
        println!("nmi\t{}", metrics::nmi(levels.partition.assign(), truth.assign())?);
    }
    if let Some(path) = &args.out {
        dataset::write_labels(path, levels.partition.assign())?;
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let pred = dataset::read_labels(&args.pred)?;
    let check_len = |what: &'static str, got: usize| {
        if got == pred.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                what,
                got,
                expected: pred.len(),
            })
        }
    };
    if let Some(path) = &args.edges {
        let edges = dataset::read_edges(path)?;
        let placeholder = CsrMatrix::from_rows(1, vec![Vec::new(); pred.len()]);
        let g = AttributedGraph::new(&edges, placeholder, None)?;
        println!("q\t{}", modularity_hard(&g, &Partition::from_labels(&pred))?);
    }
    if let Some(path) = &args.truth {
        let truth = dataset::read_labels(path)?;
        check_len("truth labels", truth.len())?;
        let s = metrics::label_scores(&pred, &truth)?;
        println!("nmi\t{}", s.nmi);
        println!("acc\t{}", s.acc);
        println!("f1\t{}", s.f1);
        if s.ari.is_finite() {
            println!("ari\t{}", s.ari);
        }
    }
    if let Some(path) = &args.embeddings {
        let h = dataset::read_features(path)?.to_dense();
        check_len("embedding rows", h.nrows())?;
        println!("dbi\t{}", metrics::dbi(h.view(), &pred)?);
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SbmSpec {
        blocks: args.blocks.clone(),
        p_in: args.p_in,
        p_out: args.p_out,
        feature_dim: args.feature_dim,
        center_separation: args.separation,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let g = generate_sbm(&spec)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let labels = g.labels().map(|l| l.assign().to_vec()).unwrap_or_default();
    dataset::write_edges(&args.out_dir.join("edges.txt"), g.edges())?;
    dataset::write_features(&args.out_dir.join("features.txt"), g.features())?;
    dataset::write_labels(&args.out_dir.join("labels.txt"), &labels)?;
    println!("nodes\t{}", g.num_nodes());
    println!("edges\t{}", g.num_edges());
    Ok(())
}

/// File name for one sweep point.
pub fn sweep_file_name(alpha: f64, delta: f64, seed: u64) -> String {
    format!("alpha{alpha}_delta{delta}_seed{seed}.json")
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let g = args.data.load()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let mut points = Vec::new();
    for &alpha in &args.alpha {
        for &delta in &args.delta {
            for &seed in &args.seeds {
                points.push(args.model.config(alpha, delta, seed));
            }
        }
    }
    for cfg in &points {
        cfg.validate()?;
    }
    let outcomes: Vec<Result<(PathBuf, f64, Option<f64>)>> = points
        .par_iter()
        .map(|cfg| {
            let out = training::train(&g, cfg)?;
            let path = args.out_dir.join(sweep_file_name(cfg.alpha, cfg.delta, cfg.seed));
            write_results(&path, &ResultsFile::from_output(args.data.name.as_deref(), cfg, &out))?;
            Ok((path, out.final_record.q, out.final_record.nmi))
        })
        .collect();
    println!("file\tq\tnmi");
    for o in outcomes {
        let (path, q, nmi) = o?;
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match nmi {
            Some(nmi) => println!("{name}\t{q}\t{nmi}"),
            None => println!("{name}\t{q}\t-"),
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Detect(a) => detect(a),
        Command::Louvain(a) => louvain(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    let result = configure_threads().and_then(|()| run(&cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_default_flags() {
        let cli = Cli::try_parse_from([
            "commdet", "detect", "--edges", "e", "--features", "f", "--out", "o",
        ])
        .unwrap();
        let Command::Detect(d) = cli.command else { panic!() };
        let cfg = d.model.config(d.alpha, d.delta, d.seed);
        assert_eq!(cfg, TrainConfig::default());
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        assert_eq!(main_with_args(["commdet", "detect", "--bogus"]), 1);
        assert_eq!(main_with_args(["commdet"]), 1);
    }

    #[test]
    fn sweep_lists_parse() {
        let cli = Cli::try_parse_from([
            "commdet", "sweep", "--edges", "e", "--features", "f", "--alpha", "1.0,0.1,0.01,0.001", "--seeds", "1,2,3",
            "--out-dir", "d",
        ])
        .unwrap();
        let Command::Sweep(s) = cli.command else { panic!() };
        assert_eq!(s.alpha, vec![1.0, 0.1, 0.01, 0.001]);
        assert_eq!(s.delta, vec![30.0]);
        assert_eq!(s.seeds, vec![1, 2, 3]);
    }
}
