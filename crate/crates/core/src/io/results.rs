//! JSON results document for one detection run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::{EvalRecord, Timing, TrainConfig, TrainOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredetectionSummary {
    /// Communities found by Louvain before filtering.
    pub num_detected: usize,
    pub modularity: f64,
    pub threshold: f64,
    pub mean_size: f64,
    pub stddev_size: f64,
    /// Number of communities kept by the size filter.
    pub k: usize,
    pub kept_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub q: f64,
    pub q_prime: f64,
    pub num_communities: usize,
    pub dbi: Option<f64>,
    pub nmi: Option<f64>,
    pub acc: Option<f64>,
    pub f1: Option<f64>,
    pub ari: Option<f64>,
}

impl From<&EvalRecord> for FinalMetrics {
    fn from(r: &EvalRecord) -> Self {
        Self {
            q: r.q,
            q_prime: r.q_prime,
            num_communities: r.num_communities,
            dbi: r.dbi,
            nmi: r.nmi,
            acc: r.acc,
            f1: r.f1,
            ari: r.ari,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub dataset: Option<String>,
    pub config: TrainConfig,
    pub predetection: PredetectionSummary,
    pub initial: EvalRecord,
    pub records: Vec<EvalRecord>,
    #[serde(rename = "final")]
    pub final_metrics: FinalMetrics,
    pub timing: Timing,
}

impl ResultsFile {
    pub fn from_output(dataset: Option<&str>, config: &TrainConfig, out: &TrainOutput) -> Self {
        let pre = &out.predetection;
        Self {
            dataset: dataset.map(str::to_owned),
            config: config.clone(),
            predetection: PredetectionSummary {
                num_detected: pre.partition.num_communities(),
                modularity: pre.modularity,
                threshold: pre.filter.threshold,
                mean_size: pre.filter.mean,
                stddev_size: pre.filter.stddev,
                k: pre.filter.k,
                kept_sizes: pre.filter.member_lists.iter().map(Vec::len).collect(),
            },
            initial: out.initial.clone(),
            records: out.history.clone(),
            final_metrics: FinalMetrics::from(&out.final_record),
            timing: out.timing,
        }
    }

    /// Copy with every wall-clock field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut c = self.clone();
        c.timing = Timing {
            louvain_ms: 0.0,
            train_ms: 0.0,
            total_ms: 0.0,
        };
        c.initial.elapsed_ms = 0.0;
        for r in &mut c.records {
            r.elapsed_ms = 0.0;
        }
        c
    }
}

pub fn write_results(path: &Path, results: &ResultsFile) -> Result<()> {
    let text = serde_json::to_string_pretty(results).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<ResultsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
