//! Comparison algorithms: kernel k-means on a complete Cholesky factor, on a
//! uniformly sampled Nystrom embedding, on random Fourier features, and the
//! approximate kernel k-means that restricts centers to the span of a random
//! subset.

use nalgebra::{Cholesky, DMatrix};
use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::cluster::{aux_rng, check_k, init_rng, kmeans_pp_indices, lloyd, repair_empty, ClusterModel, LloydParams};
use crate::data::Dataset;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::kernel::{full_gram, Guard, KernelSpec};
use crate::linalg::{inverse_sqrt_factor, psd_pinv};

const SAMPLE_STREAM: u64 = 1;
const FREQUENCY_STREAM: u64 = 2;

/// Jitter schedule for the complete Cholesky factorization, relative to the
/// mean diagonal: `1e-12, 1e-11, ..., 1e-6`.
const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

/// Lower-triangular `L` with `L L^T = K + jitter * I`; returns the jitter used.
pub fn jittered_cholesky(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let scale = (k.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * scale;
        let mut shifted = k.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch.l(), jitter));
        }
        if rel >= JITTER_MAX {
            return Err(Error::CholeskyFailed { jitter });
        }
        rel *= 10.0;
    }
}

/// Embedding from the complete Cholesky factor of the dense Gram matrix.
pub fn cholesky_embedding(data: &Dataset, spec: &KernelSpec, guard: Guard) -> Result<Embedding> {
    let k = full_gram(spec, data, guard)?;
    let (l, _) = jittered_cholesky(&k)?;
    Ok(Embedding::from_matrix(&l))
}

/// Kernel k-means on the rows of the complete Cholesky factor.
pub fn kernel_chol_kmeans(
    data: &Dataset,
    spec: &KernelSpec,
    k: usize,
    seed: u64,
    guard: Guard,
    params: &LloydParams,
) -> Result<ClusterModel> {
    check_k(k, data.len())?;
    lloyd(&cholesky_embedding(data, spec, guard)?, k, seed, params)
}

/// `subset_size` distinct indices drawn uniformly, in increasing order.
pub fn sample_landmarks(n: usize, subset_size: usize, seed: u64) -> Result<Vec<usize>> {
    if subset_size == 0 || subset_size > n {
        return Err(Error::InvalidArgument(format!(
            "subset size must be in 1..={n}, got {subset_size}"
        )));
    }
    let mut idx = sample(&mut aux_rng(seed, SAMPLE_STREAM), n, subset_size).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Row-major `n x s` block `K[:, landmarks]`.
fn column_block(data: &Dataset, spec: &KernelSpec, landmarks: &[usize]) -> Vec<f64> {
    let s = landmarks.len();
    let mut block = vec![0.0; data.len() * s];
    block
        .par_chunks_mut(s.max(1))
        .zip(data.rows().collect::<Vec<_>>())
        .for_each(|(out, x)| {
            for (o, &b) in out.iter_mut().zip(landmarks) {
                *o = spec.apply(x, data.row(b));
            }
        });
    block
}

fn landmark_gram(block: &[f64], s: usize, landmarks: &[usize]) -> DMatrix<f64> {
    let mut kbb = DMatrix::from_fn(s, s, |i, j| block[landmarks[i] * s + j]);
    // Symmetrize exactly; entries are evaluated in both orders above.
    for i in 0..s {
        for j in 0..i {
            let v = 0.5 * (kbb[(i, j)] + kbb[(j, i)]);
            kbb[(i, j)] = v;
            kbb[(j, i)] = v;
        }
    }
    kbb
}

/// Nystrom embedding `K_MB U_r D_r^{-1/2}` on uniformly sampled landmarks.
/// Its row Gram matrix is `K_MB K_BB^+ K_MB^T`.
pub fn nystrom_embedding(
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    seed: u64,
) -> Result<Embedding> {
    let landmarks = sample_landmarks(data.len(), subset_size, seed)?;
    let s = landmarks.len();
    let block = column_block(data, spec, &landmarks);
    let w = inverse_sqrt_factor(&landmark_gram(&block, s, &landmarks));
    let r = w.ncols();
    let n = data.len();
    let mut out = vec![0.0; n * r];
    out.par_chunks_mut(r.max(1)).enumerate().for_each(|(i, row)| {
        let kb = &block[i * s..(i + 1) * s];
        for (j, o) in row.iter_mut().enumerate() {
            *o = kb.iter().zip(w.column(j).iter()).map(|(a, b)| a * b).sum();
        }
    });
    Embedding::new(n, r, out)
}

/// Kernel k-means on a uniformly sampled Nystrom embedding.
pub fn nystrom_kmeans(
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    k: usize,
    seed: u64,
    params: &LloydParams,
) -> Result<ClusterModel> {
    check_k(k, data.len())?;
    lloyd(&nystrom_embedding(data, spec, subset_size, seed)?, k, seed, params)
}

/// Random Fourier features for the Gaussian kernel: `num_features / 2`
/// frequencies `w ~ N(0, 2 sigma I)`, each contributing the pair
/// `sqrt(2 / D) * (cos(w.x), sin(w.x))`, so that `z(x).z(x) = 1` and
/// `E[z(x).z(y)] = k(x, y)`.
pub fn rff_embedding(
    data: &Dataset,
    spec: &KernelSpec,
    num_features: usize,
    seed: u64,
) -> Result<Embedding> {
    if num_features == 0 || !num_features.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "number of Fourier features must be positive and even, got {num_features}"
        )));
    }
    let KernelSpec::Gaussian { sigma } = *spec;
    let d = data.dim();
    let pairs = num_features / 2;
    let normal = Normal::new(0.0, (2.0 * sigma).sqrt())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = aux_rng(seed, FREQUENCY_STREAM);
    let freqs: Vec<f64> = (0..pairs * d).map(|_| normal.sample(&mut rng)).collect();
    let scale = (2.0 / num_features as f64).sqrt();
    let n = data.len();
    let mut out = vec![0.0; n * num_features];
    out.par_chunks_mut(num_features)
        .zip(data.rows().collect::<Vec<_>>())
        .for_each(|(z, x)| {
            for p in 0..pairs {
                let w = &freqs[p * d..(p + 1) * d];
                let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
                let (s, c) = arg.sin_cos();
                z[2 * p] = scale * c;
                z[2 * p + 1] = scale * s;
            }
        });
    Embedding::new(n, num_features, out)
}

/// Kernel k-means on random Fourier features.
pub fn rff_kmeans(
    data: &Dataset,
    spec: &KernelSpec,
    num_features: usize,
    k: usize,
    seed: u64,
    params: &LloydParams,
) -> Result<ClusterModel> {
    check_k(k, data.len())?;
    lloyd(&rff_embedding(data, spec, num_features, seed)?, k, seed, params)
}

/// Approximate kernel k-means: centers are restricted to combinations of the
/// feature maps of `subset_size` uniformly sampled points.
///
/// Each iteration solves for the weights `alpha_c = K_BB^+ K_BM u_c`, where
/// `u_c` averages the members of cluster `c`, and reassigns every point by
/// `k(x,x) - 2 (K_MB alpha_c)_x + alpha_c' K_BB alpha_c`. Only `K_MB` and
/// `K_BB` are evaluated. Initial centers are single sampled points picked by
/// k-means++ under the kernel distance. The reported objective is the mean
/// squared feature-space distance to these restricted centers; the returned
/// `centers` are the `k x s` weights.
pub fn approx_kkmeans(
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    k: usize,
    seed: u64,
    params: &LloydParams,
) -> Result<ClusterModel> {
    let n = data.len();
    let landmarks = sample_landmarks(n, subset_size, seed)?;
    let s = landmarks.len();
    if k == 0 || k > s {
        return Err(Error::InvalidArgument(format!(
            "number of clusters must be in 1..={s} (the subset size), got {k}"
        )));
    }
    if params.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let block = column_block(data, spec, &landmarks);
    let kbb = landmark_gram(&block, s, &landmarks);
    let kbb_pinv = psd_pinv(&kbb);
    let diag: Vec<f64> = data.rows().map(|x| spec.self_similarity(x)).collect();

    let seeds = kmeans_pp_indices(s, k, &mut init_rng(seed), |a, b| {
        kbb[(a, a)] - 2.0 * kbb[(a, b)] + kbb[(b, b)]
    })?;
    let mut alpha = DMatrix::<f64>::zeros(s, k);
    for (c, &b) in seeds.iter().enumerate() {
        alpha[(b, c)] = 1.0;
    }

    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let mut labels = approx_assign(&block, s, &diag, &kbb, &alpha);
        repair_empty(&mut labels, k);
        let next: Vec<usize> = labels.into_iter().map(|(c, _)| c).collect();
        let fixpoint = next == assignments;
        assignments = next;
        alpha = approx_weights(&block, s, &kbb_pinv, &assignments, k);
        let objective = approx_objective_with(&block, s, &diag, &kbb, &alpha, &assignments);
        let small_change = history
            .last()
            .is_some_and(|&prev: &f64| prev - objective <= params.tol * prev.abs());
        history.push(objective);
        if fixpoint || small_change {
            converged = true;
            break;
        }
    }

    let centers = Embedding::from_matrix(&alpha.transpose());
    Ok(ClusterModel {
        assignments,
        centers,
        objective: *history.last().expect("at least one iteration"),
        history,
        iterations,
        converged,
    })
}

/// Squared distances from every point to every restricted center, as
/// `(nearest cluster, distance)`.
fn approx_assign(
    block: &[f64],
    s: usize,
    diag: &[f64],
    kbb: &DMatrix<f64>,
    alpha: &DMatrix<f64>,
) -> Vec<(usize, f64)> {
    let k = alpha.ncols();
    let center_norms: Vec<f64> = (0..k)
        .map(|c| {
            let a = alpha.column(c);
            (a.transpose() * kbb * a)[(0, 0)]
        })
        .collect();
    (0..diag.len())
        .into_par_iter()
        .map(|i| {
            let kb = &block[i * s..(i + 1) * s];
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let cross: f64 = kb.iter().zip(alpha.column(c).iter()).map(|(a, b)| a * b).sum();
                let d = diag[i] - 2.0 * cross + center_norms[c];
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

fn approx_weights(
    block: &[f64],
    s: usize,
    kbb_pinv: &DMatrix<f64>,
    assignments: &[usize],
    k: usize,
) -> DMatrix<f64> {
    // K_BM u_c: the mean landmark similarity of each cluster.
    let mut means = DMatrix::<f64>::zeros(s, k);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for (j, &v) in block[i * s..(i + 1) * s].iter().enumerate() {
            means[(j, c)] += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            means.column_mut(c).scale_mut(1.0 / count as f64);
        }
    }
    kbb_pinv * means
}

fn approx_objective_with(
    block: &[f64],
    s: usize,
    diag: &[f64],
    kbb: &DMatrix<f64>,
    alpha: &DMatrix<f64>,
    assignments: &[usize],
) -> f64 {
    let k = alpha.ncols();
    let norms: Vec<f64> = (0..k)
        .map(|c| {
            let a = alpha.column(c);
            (a.transpose() * kbb * a)[(0, 0)]
        })
        .collect();
    let total: f64 = assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let kb = &block[i * s..(i + 1) * s];
            let cross: f64 = kb.iter().zip(alpha.column(c).iter()).map(|(a, b)| a * b).sum();
            diag[i] - 2.0 * cross + norms[c]
        })
        .sum();
    total / diag.len() as f64
}

/// Objective of the approximate kernel k-means for a given partition, using
/// the same landmarks the run with `seed` samples.
pub fn approx_objective(
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    seed: u64,
    assignments: &[usize],
    k: usize,
) -> Result<f64> {
    let landmarks = sample_landmarks(data.len(), subset_size, seed)?;
    let s = landmarks.len();
    let block = column_block(data, spec, &landmarks);
    let kbb = landmark_gram(&block, s, &landmarks);
    let alpha = approx_weights(&block, s, &psd_pinv(&kbb), assignments, k);
    let diag: Vec<f64> = data.rows().map(|x| spec.self_similarity(x)).collect();
    Ok(approx_objective_with(&block, s, &diag, &kbb, &alpha, assignments))
}
