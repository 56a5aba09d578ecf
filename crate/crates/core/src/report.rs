//! Benchmark orchestration and the comma-separated report format.
//!
//! Every (dataset, algorithm, subset size, seed) cell becomes one row. Wall
//! time is measured separately around the embedding stage (factorization,
//! sampling, feature construction or eigendecomposition) and the clustering
//! stage. Cells that need the dense Gram matrix beyond the guard are kept as
//! skipped rows with empty measurement fields.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use crate::baselines::{approx_kkmeans, cholesky_embedding, nystrom_embedding, rff_embedding};
use crate::cluster::{lloyd, ClusterModel, LloydParams};
use crate::data::Dataset;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::eval::{accuracy, median};
use crate::icf::icf_factorize;
use crate::kernel::{full_gram, Guard, KernelSpec};
use crate::linalg::psd_embedding;

pub const CSV_HEADER: &str =
    "dataset,algorithm,subset_size,seed,accuracy,objective,achieved_rank,factorize_ms,cluster_ms,total_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Icf,
    Kernel,
    Chol,
    Approx,
    Rff,
    Nystrom,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Self::Icf,
        Self::Kernel,
        Self::Chol,
        Self::Approx,
        Self::Rff,
        Self::Nystrom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Icf => "icf",
            Self::Kernel => "kernel",
            Self::Chol => "chol",
            Self::Approx => "approx",
            Self::Rff => "rff",
            Self::Nystrom => "nystrom",
        }
    }

    /// Algorithms that materialize the `n x n` Gram matrix.
    pub fn needs_full_gram(self) -> bool {
        matches!(self, Self::Kernel | Self::Chol)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of one algorithm run, with its stage timings.
#[derive(Debug, Clone)]
pub struct TimedRun {
    pub model: ClusterModel,
    /// Dimension of the space the points were clustered in.
    pub achieved_rank: usize,
    pub factorize_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs one algorithm with stage timing.
///
/// `subset_size` is the ICF rank cap, the number of Nystrom landmarks, the
/// approximate k-means sample size, or the number of Fourier frequencies
/// (each frequency yields a cosine and a sine feature). It is ignored by the
/// full-matrix algorithms.
#[allow(clippy::too_many_arguments)]
pub fn run_algorithm(
    algorithm: Algorithm,
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    k: usize,
    seed: u64,
    epsilon: f64,
    guard: Guard,
    params: &LloydParams,
) -> Result<TimedRun> {
    let total = Instant::now();
    if algorithm == Algorithm::Approx {
        let t = Instant::now();
        let model = approx_kkmeans(data, spec, subset_size, k, seed, params)?;
        let cluster_ms = ms(t);
        return Ok(TimedRun {
            achieved_rank: subset_size,
            model,
            factorize_ms: 0.0,
            cluster_ms,
            total_ms: ms(total),
        });
    }
    let t = Instant::now();
    let points: Embedding = match algorithm {
        Algorithm::Icf => {
            let f = icf_factorize(data, spec, subset_size, epsilon)?;
            Embedding::new(f.n(), f.rank(), f.rows_major())?
        }
        Algorithm::Kernel => psd_embedding(&full_gram(spec, data, guard)?),
        Algorithm::Chol => cholesky_embedding(data, spec, guard)?,
        Algorithm::Nystrom => nystrom_embedding(data, spec, subset_size, seed)?,
        Algorithm::Rff => rff_embedding(data, spec, 2 * subset_size, seed)?,
        Algorithm::Approx => unreachable!("handled above"),
    };
    let factorize_ms = ms(t);
    let t = Instant::now();
    let model = lloyd(&points, k, seed, params)?;
    let cluster_ms = ms(t);
    Ok(TimedRun {
        achieved_rank: points.cols(),
        model,
        factorize_ms,
        cluster_ms,
        total_ms: ms(total),
    })
}

/// One dataset with the kernel and cluster count to use on it.
#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub data: Dataset,
    pub spec: KernelSpec,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub datasets: Vec<BenchDataset>,
    pub algorithms: Vec<Algorithm>,
    pub subset_sizes: Vec<usize>,
    /// Seeds `first_seed .. first_seed + seeds`.
    pub seeds: usize,
    pub first_seed: u64,
    pub epsilon: f64,
    pub guard: Guard,
    pub params: LloydParams,
    /// Run one untimed cell per (dataset, algorithm) before measuring.
    pub warmup: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub subset_size: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub objective: f64,
    pub achieved_rank: usize,
    pub factorize_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
    /// Set when the cell was not run; the measurements are then meaningless.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
}

/// Per-(algorithm, subset size) medians over the completed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub subset_size: usize,
    pub runs: usize,
    pub skipped: usize,
    pub median_accuracy: Option<f64>,
    pub median_total_ms: f64,
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchmarkReport> {
    if config.seeds == 0 {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let mut rows = Vec::new();
    for bd in &config.datasets {
        let n = bd.data.len();
        for &algorithm in &config.algorithms {
            let skip = algorithm.needs_full_gram() && !config.guard.allows(n);
            if config.warmup && !skip {
                if let Some(&s) = config.subset_sizes.iter().min() {
                    // Warm-up cells only prime caches; their errors resurface below.
                    let _ = run_algorithm(
                        algorithm, &bd.data, &bd.spec, s, bd.k, config.first_seed,
                        config.epsilon, config.guard, &config.params,
                    );
                }
            }
            for &subset_size in &config.subset_sizes {
                for i in 0..config.seeds {
                    let seed = config.first_seed + i as u64;
                    let mut row = BenchRow {
                        dataset: bd.data.name().to_string(),
                        algorithm,
                        subset_size,
                        seed,
                        accuracy: None,
                        objective: f64::NAN,
                        achieved_rank: 0,
                        factorize_ms: 0.0,
                        cluster_ms: 0.0,
                        total_ms: 0.0,
                        skipped: None,
                    };
                    if skip {
                        row.skipped = Some(format!("n = {n} exceeds the full-matrix guard"));
                        rows.push(row);
                        continue;
                    }
                    let run = run_algorithm(
                        algorithm, &bd.data, &bd.spec, subset_size, bd.k, seed,
                        config.epsilon, config.guard, &config.params,
                    )?;
                    row.accuracy = match bd.data.labels() {
                        Some(truth) => Some(accuracy(&run.model.assignments, truth)?),
                        None => None,
                    };
                    row.objective = run.model.objective;
                    row.achieved_rank = run.achieved_rank;
                    row.factorize_ms = run.factorize_ms;
                    row.cluster_ms = run.cluster_ms;
                    row.total_ms = run.total_ms;
                    rows.push(row);
                }
            }
        }
    }
    Ok(BenchmarkReport { rows })
}

impl BenchmarkReport {
    /// The report as CSV under [`CSV_HEADER`]. Missing accuracy is an empty
    /// field; skipped rows leave every measurement field empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{},{},", r.dataset, r.algorithm, r.subset_size, r.seed);
            if r.skipped.is_some() {
                out.push_str(",,,,,\n");
                continue;
            }
            let acc = r.accuracy.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{acc},{},{},{:.3},{:.3},{:.3}",
                r.objective, r.achieved_rank, r.factorize_ms, r.cluster_ms, r.total_ms
            );
        }
        out
    }

    pub fn summaries(&self) -> Vec<Summary> {
        let mut keys: Vec<(String, Algorithm, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.dataset.clone(), r.algorithm, r.subset_size);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(dataset, algorithm, subset_size)| {
                let cell: Vec<&BenchRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.dataset == dataset && r.algorithm == algorithm && r.subset_size == subset_size)
                    .collect();
                let done: Vec<&&BenchRow> = cell.iter().filter(|r| r.skipped.is_none()).collect();
                let accs: Vec<f64> = done.iter().filter_map(|r| r.accuracy).collect();
                let times: Vec<f64> = done.iter().map(|r| r.total_ms).collect();
                Summary {
                    dataset,
                    algorithm,
                    subset_size,
                    runs: done.len(),
                    skipped: cell.len() - done.len(),
                    median_accuracy: (!accs.is_empty()).then(|| median(&accs)),
                    median_total_ms: median(&times),
                }
            })
            .collect()
    }
}
