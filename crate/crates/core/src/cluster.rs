//! Lloyd's k-means on embedded points, k-means++ seeding, ICF kernel k-means,
//! and the exact kernel k-means oracle built on the full eigendecomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::icf::{icf_factorize, IcfFactor};
use crate::kernel::{full_gram, squared_distance, Guard, KernelSpec};
use crate::linalg::psd_embedding;

/// Iteration controls shared by every Lloyd-style loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub max_iter: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

/// Result of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// Cluster id in `0..k` for every point.
    pub assignments: Vec<usize>,
    /// `k x m` centers in the embedding the run clustered in. For the
    /// approximate kernel k-means baseline these are the combination weights
    /// over the sampled points.
    pub centers: Embedding,
    /// `(1/n) * sum_i |v_i - center(i)|^2`.
    pub objective: f64,
    /// Objective after each iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centers.rows()
    }

    /// Cluster sizes, indexed by cluster id.
    pub fn sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.assignments, self.k())
    }
}

pub(crate) fn cluster_sizes(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    sizes
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "number of clusters must be in 1..={n}, got {k}"
        )));
    }
    Ok(())
}

/// Random generator for k-means++ seeding.
pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for everything else a baseline samples (landmarks, frequencies),
/// on its own stream so seeding draws stay aligned across algorithms.
pub(crate) fn aux_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// k-means++ over `n` items given a squared-distance function, returning the
/// chosen indices. The first pick is uniform; later picks are drawn with
/// probability proportional to the squared distance to the nearest pick.
/// When every remaining item coincides with a pick, the next one is drawn
/// uniformly from the unpicked items so the picks stay distinct.
pub fn kmeans_pp_indices<R: Rng, F: Fn(usize, usize) -> f64>(
    n: usize,
    k: usize,
    rng: &mut R,
    dist: F,
) -> Result<Vec<usize>> {
    check_k(k, n)?;
    let mut picked = vec![false; n];
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    picked[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, first).max(0.0)).collect();
    nearest[first] = 0.0;

    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !picked[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        picked[next] = true;
        chosen.push(next);
        for (i, w) in nearest.iter_mut().enumerate() {
            let d = if picked[i] { 0.0 } else { dist(i, next).max(0.0) };
            if d < *w {
                *w = d;
            }
        }
    }
    Ok(chosen)
}

/// k-means++ seeding on embedded points; returns the `k x m` initial centers.
pub fn kmeans_pp_init(points: &Embedding, k: usize, seed: u64) -> Result<Embedding> {
    let idx = kmeans_pp_indices(points.rows(), k, &mut init_rng(seed), |i, j| {
        points.sq_dist(i, j)
    })?;
    Ok(gather_rows(points, &idx))
}

fn gather_rows(points: &Embedding, idx: &[usize]) -> Embedding {
    let m = points.cols();
    let mut c = Embedding::zeros(idx.len(), m);
    for (r, &i) in idx.iter().enumerate() {
        c.row_mut(r).copy_from_slice(points.row(i));
    }
    c
}

/// Nearest center per point, smallest cluster id on ties, with distances.
fn assign(points: &Embedding, centers: &Embedding) -> Vec<(usize, f64)> {
    (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let p = points.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..centers.rows() {
                let d = squared_distance(p, centers.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

/// Gives every empty cluster one point: repeatedly moves the point that is
/// farthest from its own center, taken from a cluster with at least two
/// members, into the empty cluster.
pub(crate) fn repair_empty(labels: &mut [(usize, f64)], k: usize) {
    let mut sizes = vec![0usize; k];
    for &(c, _) in labels.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let far = labels
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| sizes[*c] > 1)
            .fold(None::<(usize, f64)>, |best, (i, &(_, d))| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = far {
            sizes[labels[i].0] -= 1;
            labels[i] = (empty, 0.0);
            sizes[empty] = 1;
        }
    }
}

fn update_centers(points: &Embedding, assignments: &[usize], k: usize) -> Embedding {
    let m = points.cols();
    let mut centers = Embedding::zeros(k, m);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for (acc, v) in centers.row_mut(c).iter_mut().zip(points.row(i)) {
            *acc += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centers.row_mut(c).iter_mut().for_each(|v| *v *= inv);
        }
    }
    centers
}

/// `(1/n) * sum_i |v_i - center(a_i)|^2`.
pub fn embedding_objective(points: &Embedding, centers: &Embedding, assignments: &[usize]) -> f64 {
    let total: f64 = assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(points.row(i), centers.row(c)))
        .sum();
    total / points.rows() as f64
}

/// Lloyd's algorithm from k-means++ seeds.
///
/// Stops at an assignment fixpoint, when the relative objective decrease
/// drops below `params.tol`, or after `params.max_iter` iterations. The
/// returned centers are the means of the returned assignments.
pub fn lloyd(points: &Embedding, k: usize, seed: u64, params: &LloydParams) -> Result<ClusterModel> {
    let n = points.rows();
    check_k(k, n)?;
    if params.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    let mut centers = kmeans_pp_init(points, k, seed)?;
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let mut labels = assign(points, &centers);
        repair_empty(&mut labels, k);
        let next: Vec<usize> = labels.into_iter().map(|(c, _)| c).collect();
        let fixpoint = next == assignments;
        assignments = next;
        centers = update_centers(points, &assignments, k);
        let objective = embedding_objective(points, &centers, &assignments);
        let small_change = history
            .last()
            .is_some_and(|&prev: &f64| prev - objective <= params.tol * prev.abs());
        history.push(objective);
        if fixpoint || small_change {
            converged = true;
            break;
        }
    }

    let objective = *history.last().expect("at least one iteration");
    Ok(ClusterModel {
        assignments,
        centers,
        objective,
        history,
        iterations,
        converged,
    })
}

/// Kernel k-means through incomplete Cholesky: factor `K ~ P P^T` with at most
/// `subset_size` pivots, then run Lloyd on the rows of `P`.
pub fn icf_kkmeans(
    data: &Dataset,
    spec: &KernelSpec,
    subset_size: usize,
    k: usize,
    seed: u64,
    epsilon: f64,
    params: &LloydParams,
) -> Result<(ClusterModel, IcfFactor)> {
    check_k(k, data.len())?;
    let factor = icf_factorize(data, spec, subset_size, epsilon)?;
    let model = cluster_factor(&factor, k, seed, params)?;
    Ok((model, factor))
}

/// Lloyd on the rows of an existing factor.
pub fn cluster_factor(
    factor: &IcfFactor,
    k: usize,
    seed: u64,
    params: &LloydParams,
) -> Result<ClusterModel> {
    let points = Embedding::new(factor.n(), factor.rank(), factor.rows_major())?;
    lloyd(&points, k, seed, params)
}

/// Exact kernel k-means: Lloyd on the rows of `U D^{1/2}` from the full
/// eigendecomposition of the Gram matrix.
pub fn kernel_kmeans_oracle(
    data: &Dataset,
    spec: &KernelSpec,
    k: usize,
    seed: u64,
    guard: Guard,
    params: &LloydParams,
) -> Result<ClusterModel> {
    check_k(k, data.len())?;
    let gram = full_gram(spec, data, guard)?;
    lloyd(&psd_embedding(&gram), k, seed, params)
}
