//! Evaluation: clustering accuracy under optimal label matching, trace-form
//! objectives, the approximation gap diagnostic, and exponential decay fits.

use nalgebra::DMatrix;

use crate::cluster::{cluster_factor, kernel_kmeans_oracle, LloydParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::icf::icf_factorize;
use crate::kernel::{full_gram, Guard, KernelSpec};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, `O(n^3)`). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Contingency counts `table[p][t]` over the compacted label sets.
fn contingency(pred: &[usize], truth: &[usize]) -> (Vec<Vec<f64>>, Vec<usize>, Vec<usize>) {
    let compact = |ids: &[usize]| {
        let mut uniq: Vec<usize> = ids.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        uniq
    };
    let p_ids = compact(pred);
    let t_ids = compact(truth);
    let size = p_ids.len().max(t_ids.len());
    let mut table = vec![vec![0.0; size]; size];
    for (&p, &t) in pred.iter().zip(truth) {
        let pi = p_ids.binary_search(&p).expect("present");
        let ti = t_ids.binary_search(&t).expect("present");
        table[pi][ti] += 1.0;
    }
    (table, p_ids, t_ids)
}

/// Best one-to-one matching of predicted ids onto true ids, as
/// `(predicted, true)` pairs; unmatched ids are omitted.
pub fn match_labels(pred: &[usize], truth: &[usize]) -> Result<Vec<(usize, usize)>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let (table, p_ids, t_ids) = contingency(pred, truth);
    let big = pred.len() as f64;
    let cost: Vec<Vec<f64>> = table
        .iter()
        .map(|row| row.iter().map(|&c| big - c).collect())
        .collect();
    Ok(hungarian(&cost)
        .into_iter()
        .enumerate()
        .filter(|&(p, t)| p < p_ids.len() && t < t_ids.len())
        .map(|(p, t)| (p_ids[p], t_ids[t]))
        .collect())
}

/// Fraction of points whose predicted cluster maps to their true label under
/// the best one-to-one matching.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (table, _, _) = contingency(pred, truth);
    let big = pred.len() as f64;
    let cost: Vec<Vec<f64>> = table
        .iter()
        .map(|row| row.iter().map(|&c| big - c).collect())
        .collect();
    let matched: f64 = hungarian(&cost)
        .into_iter()
        .enumerate()
        .map(|(p, t)| table[p][t])
        .sum();
    Ok(matched / big)
}

fn members(assignments: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in assignments.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidArgument(format!(
                "cluster id {c} out of range for k = {k}"
            )));
        }
        groups[c].push(i);
    }
    if let Some(empty) = groups.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster(empty));
    }
    Ok(groups)
}

/// `(1/n) tr(V^T K V)` with `V_ic = 1/sqrt(|C_c|)` for members of cluster `c`.
pub fn trace_objective_gram(gram: &DMatrix<f64>, assignments: &[usize], k: usize) -> Result<f64> {
    let n = gram.nrows();
    if assignments.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: assignments.len(),
        });
    }
    let groups = members(assignments, k)?;
    let mut total = 0.0;
    for g in &groups {
        let mut block = 0.0;
        for &i in g {
            for &j in g {
                block += gram[(i, j)];
            }
        }
        total += block / g.len() as f64;
    }
    Ok(total / n as f64)
}

/// `(1/n) tr(V^T P P^T V)` from a row-major `n x s` factor, via `V^T P`.
pub fn trace_objective_factor(
    rows: &[f64],
    s: usize,
    assignments: &[usize],
    k: usize,
) -> Result<f64> {
    let n = assignments.len();
    if rows.len() != n * s {
        return Err(Error::DimensionMismatch {
            expected: n * s,
            got: rows.len(),
        });
    }
    let groups = members(assignments, k)?;
    let mut total = 0.0;
    for g in &groups {
        let mut sum = vec![0.0; s];
        for &i in g {
            for (acc, v) in sum.iter_mut().zip(&rows[i * s..(i + 1) * s]) {
                *acc += v;
            }
        }
        total += sum.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
    }
    Ok(total / n as f64)
}

/// Kernel k-means objective evaluated from a Gram matrix:
/// `(1/n) sum_c sum_{j in C} |phi(x_j) - mean_C phi|^2`.
pub fn kernel_objective(gram: &DMatrix<f64>, assignments: &[usize], k: usize) -> Result<f64> {
    let n = gram.nrows();
    Ok(gram.trace() / n as f64 - trace_objective_gram(gram, assignments, k)?)
}

/// Outcome of comparing the exact and the ICF kernel k-means partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundGap {
    /// `(1/n) tr((V - V')^T K (V - V'))` after matching cluster ids.
    pub gap: f64,
    /// `2 sqrt(k) tr(K - P P^T) / n`.
    pub bound: f64,
    /// `tr(K - P P^T)`.
    pub residual_trace: f64,
}

/// Runs the exact oracle and ICF kernel k-means with the same seed and
/// measures how far apart their indicator matrices are in the kernel metric.
///
/// Both partitions come from Lloyd and are local optima, so this is an
/// empirical check of the bound rather than a proof-level one. Cluster ids of
/// the ICF run are first matched to the oracle's by maximum overlap.
#[allow(clippy::too_many_arguments)]
pub fn bound_gap(
    data: &Dataset,
    spec: &KernelSpec,
    k: usize,
    subset_size: usize,
    seed: u64,
    epsilon: f64,
    guard: Guard,
    params: &LloydParams,
) -> Result<BoundGap> {
    let n = data.len();
    let gram = full_gram(spec, data, guard)?;
    let exact = kernel_kmeans_oracle(data, spec, k, seed, guard, params)?;
    let factor = icf_factorize(data, spec, subset_size, epsilon)?;
    let approx = cluster_factor(&factor, k, seed, params)?;

    let mut relabel: Vec<usize> = (0..k).collect();
    for (p, t) in match_labels(&approx.assignments, &exact.assignments)? {
        relabel[p] = t;
    }
    let approx_ids: Vec<usize> = approx.assignments.iter().map(|&c| relabel[c]).collect();
    let gap = indicator_gap(&gram, &exact.assignments, &approx_ids, k)?;
    let residual_trace = factor.residual_trace();
    Ok(BoundGap {
        gap,
        bound: 2.0 * (k as f64).sqrt() * residual_trace / n as f64,
        residual_trace,
    })
}

/// `(1/n) tr((V_a - V_b)^T K (V_a - V_b))` for two partitions with aligned ids.
pub fn indicator_gap(gram: &DMatrix<f64>, a: &[usize], b: &[usize], k: usize) -> Result<f64> {
    let n = gram.nrows();
    let ga = members(a, k)?;
    let gb = members(b, k)?;
    let mut total = 0.0;
    let mut diff = vec![0.0; n];
    for c in 0..k {
        diff.iter_mut().for_each(|v| *v = 0.0);
        let wa = 1.0 / (ga[c].len() as f64).sqrt();
        let wb = 1.0 / (gb[c].len() as f64).sqrt();
        for &i in &ga[c] {
            diff[i] += wa;
        }
        for &i in &gb[c] {
            diff[i] -= wb;
        }
        let support: Vec<usize> = (0..n).filter(|&i| diff[i] != 0.0).collect();
        for &i in &support {
            let mut row = 0.0;
            for &j in &support {
                row += gram[(i, j)] * diff[j];
            }
            total += diff[i] * row;
        }
    }
    Ok(total / n as f64)
}

/// Least-squares fit of `ln(eps_s) = ln(C) - b s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c_hat: f64,
    pub b_hat: f64,
    pub r_squared: f64,
    /// Number of history entries used.
    pub points: usize,
}

/// Fits an exponential decay to a residual trace history. Trailing entries
/// below `1e-12 * eps_0` are dropped; the remaining strictly positive entries
/// are fitted against their step index.
pub fn fit_decay(history: &[f64]) -> Result<DecayFit> {
    let floor = 1e-12 * history.first().copied().unwrap_or(0.0);
    let end = history
        .iter()
        .rposition(|&v| v >= floor && v > 0.0)
        .map_or(0, |i| i + 1);
    let pts: Vec<(f64, f64)> = history[..end]
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(s, &v)| (s as f64, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 3 positive entries, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayFit {
        c_hat: intercept.exp(),
        b_hat: -slope,
        r_squared,
        points: pts.len(),
    })
}

/// Median of a non-empty sample; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Population variance; NaN when empty.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}
