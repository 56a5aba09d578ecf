//! Kernel k-means through incomplete Cholesky factorization.
//!
//! The Gram matrix of a Gaussian kernel is factored as `K ~ P P^T` by greedy
//! pivoted Cholesky, touching only `O(ns)` kernel entries, and ordinary Lloyd
//! iterations run on the rows of `P`. The crate also carries the exact and
//! approximate baselines used for comparison, evaluation metrics, and the
//! benchmark driver.

pub mod baselines;
pub mod cluster;
pub mod data;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod icf;
pub mod kernel;
pub mod linalg;
pub mod report;

pub use baselines::{approx_kkmeans, kernel_chol_kmeans, nystrom_kmeans, rff_kmeans};
pub use cluster::{icf_kkmeans, kernel_kmeans_oracle, kmeans_pp_init, lloyd, ClusterModel, LloydParams};
pub use data::{gen_synthetic, parse_libsvm, read_libsvm, Dataset, SyntheticKind};
pub use embedding::Embedding;
pub use error::{Error, Result};
pub use eval::{accuracy, bound_gap, fit_decay, BoundGap, DecayFit};
pub use icf::{icf_factorize, FactorDump, IcfFactor, DEFAULT_EPSILON};
pub use kernel::{full_gram, kernel_column, kernel_diag, kernel_eval, Guard, KernelSpec};
pub use report::{run_benchmark, Algorithm, BenchConfig, BenchDataset, BenchRow, BenchmarkReport};

/// Appends one greedy pivot column to `factor`, evaluating kernel entries of
/// `data` on demand.
pub fn icf_step(mut factor: IcfFactor, data: &Dataset, spec: &KernelSpec) -> Result<IcfFactor> {
    factor.step(&kernel::DataKernel::new(*spec, data))?;
    Ok(factor)
}
