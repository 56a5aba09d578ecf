#![allow(dead_code)]

use icfkm_core::{Dataset, KernelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points uniform in `[0, 1]^d`.
pub fn uniform(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Dataset::new("uniform", n, d, values, None).unwrap()
}

/// Gram matrix built entry by entry from the kernel formula.
pub fn naive_gram(data: &Dataset, sigma: f64) -> DMatrix<f64> {
    let n = data.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = data
            .row(i)
            .iter()
            .zip(data.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-sigma * d2).exp()
    })
}

pub fn spec(sigma: f64) -> KernelSpec {
    KernelSpec::gaussian(sigma).unwrap()
}

/// Kernel k-means objective straight from kernel distances:
/// `(1/n) sum_i sum_{j in C_i} ( K_jj - (2/|C|) sum_{l in C} K_jl + (1/|C|^2) sum_{l,m in C} K_lm )`.
pub fn direct_objective(gram: &DMatrix<f64>, assignments: &[usize], k: usize) -> f64 {
    let n = assignments.len();
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| assignments[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let size = members.len() as f64;
        let mut inner = 0.0;
        for &l in &members {
            for &m in &members {
                inner += gram[(l, m)];
            }
        }
        for &j in &members {
            let cross: f64 = members.iter().map(|&l| gram[(j, l)]).sum();
            total += gram[(j, j)] - 2.0 * cross / size + inner / (size * size);
        }
    }
    total / n as f64
}

/// Every assignment of `n` points to `k` labels with no empty label.
pub fn all_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        let mut seen = vec![false; k];
        for &c in &cur {
            seen[c] = true;
        }
        if seen.iter().all(|&s| s) {
            out.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            cur[i] += 1;
            if cur[i] < k {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// Pairwise squared distances between rows of a row-major matrix.
pub fn row_sq_dist(rows: &[f64], m: usize, i: usize, j: usize) -> f64 {
    rows[i * m..(i + 1) * m]
        .iter()
        .zip(&rows[j * m..(j + 1) * m])
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
