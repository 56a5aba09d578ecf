//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the criteria execute one after another
//! and the timing checks are not disturbed by concurrent tests.

mod common;

use std::time::{Duration, Instant};

use common::{row_sq_dist, uniform};
use icfkm_core::cluster::cluster_factor;
use icfkm_core::data::{gaussian_mixture, MixtureSpec};
use icfkm_core::eval::{median, variance};
use icfkm_core::icf::factorize;
use icfkm_core::kernel::{kernel_distance, DenseGram};
use icfkm_core::report::run_algorithm;
use icfkm_core::{
    accuracy, bound_gap, fit_decay, full_gram, gen_synthetic, icf_factorize, icf_kkmeans,
    kernel_kmeans_oracle, Algorithm, Dataset, Guard, IcfFactor, KernelSpec, LloydParams,
    SyntheticKind,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn(&mut Shared) -> Outcome,
}

/// State carried from the small-subset criterion to the baseline ordering
/// criterion, which runs on the same mixture.
#[derive(Default)]
struct Shared {
    mixture: Option<Dataset>,
    icf_accuracy: Vec<(usize, Vec<f64>)>,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "exact-rank recovery", limit: Some(Duration::from_secs(1)), run: exact_rank },
        Criterion { id: 2, name: "trace monotonicity", limit: Some(Duration::from_secs(10)), run: monotonicity },
        Criterion { id: 3, name: "oracle equivalence", limit: Some(Duration::from_secs(5)), run: oracle_equivalence },
        Criterion { id: 4, name: "pivot interpolation", limit: Some(Duration::from_secs(1)), run: interpolation },
        Criterion { id: 5, name: "exponential decay", limit: Some(Duration::from_secs(5)), run: exponential_decay },
        Criterion { id: 6, name: "synthetic accuracy", limit: Some(Duration::from_secs(30)), run: synthetic_accuracy },
        Criterion { id: 7, name: "small subset sufficiency", limit: Some(Duration::from_secs(300)), run: small_subset },
        Criterion { id: 8, name: "complexity scaling", limit: None, run: scaling },
        Criterion { id: 9, name: "approximation bound", limit: None, run: approximation_bound },
        Criterion { id: 10, name: "baseline ordering", limit: None, run: baseline_ordering },
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut outcome = (c.run)(&mut shared);
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, c.limit) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; runtime {elapsed:.2?} exceeds {limit:?}"));
            }
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2} {}: {detail} [{elapsed:.2?}]", c.id, c.name);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian(sigma: f64) -> KernelSpec {
    KernelSpec::gaussian(sigma).expect("positive sigma")
}

fn params() -> LloydParams {
    LloydParams::default()
}

/// Criterion 1: K = G'G with G random 30 x 100: exactly 30 steps, residual <= 1e-8 tr(K).
fn exact_rank(_: &mut Shared) -> Outcome {
    let (r, n) = (30, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g: DMatrix<f64> = DMatrix::from_fn(r, n, |_, _| StandardNormal.sample(&mut rng));
    let k = g.transpose() * g;
    let tr = k.trace();
    let f = factorize(&DenseGram(k), n, 1e-8 * tr).map_err(|e| format!("factorization failed: {e}"))?;
    let rel = f.residual_trace() / tr;
    check(
        f.rank() == r && rel <= 1e-8,
        format!("steps = {} (want {r}), tr(K - PP')/tr(K) = {rel:.2e} (want <= 1e-8)", f.rank()),
    )
}

/// Criterion 2: 50 random datasets, n = 200, d = 5, sigma log-uniform in [2^-6, 2^4].
fn monotonicity(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for i in 0..50u64 {
        let sigma = 2f64.powf(rng.random_range(-6.0..=4.0));
        let data = uniform(200, 5, 1000 + i);
        let f = icf_factorize(&data, &gaussian(sigma), 200, 1e-12)
            .map_err(|e| format!("dataset {i}, sigma {sigma:.3e}: {e}"))?;
        for w in f.trace_history().windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
        steps += f.rank();
    }
    check(
        worst <= 1e-12,
        format!("largest increase {worst:.2e} (slack 1e-12) over {steps} steps in 50 runs"),
    )
}

/// Criterion 3: n = 40, full-rank ICF + Lloyd vs the eigendecomposition oracle; factor
/// row distances vs kernel distances. 10 seeds.
fn oracle_equivalence(_: &mut Shared) -> Outcome {
    let sp = gaussian(2.0);
    let mut worst_obj = 0.0f64;
    let mut worst_dist = 0.0f64;
    for seed in 0..10u64 {
        let data = uniform(40, 3, 300 + seed);
        let (model, f) = icf_kkmeans(&data, &sp, 40, 3, seed, 1e-300, &params()).map_err(|e| e.to_string())?;
        let exact = kernel_kmeans_oracle(&data, &sp, 3, seed, Guard::default(), &params()).map_err(|e| e.to_string())?;
        worst_obj = worst_obj.max((model.objective - exact.objective).abs() / exact.objective);
        let rows = f.rows_major();
        for i in 0..40 {
            for j in 0..40 {
                let kd = kernel_distance(&sp, data.row(i), data.row(j)).map_err(|e| e.to_string())?;
                worst_dist = worst_dist.max((row_sq_dist(&rows, f.rank(), i, j) - kd).abs());
            }
        }
    }
    check(
        worst_obj <= 1e-6 && worst_dist <= 1e-8,
        format!("max relative objective gap {worst_obj:.2e} (<= 1e-6), max distance error {worst_dist:.2e} (<= 1e-8)"),
    )
}

/// Criterion 4: n = 50, s = 10: rows of PP' at pivots equal rows of K.
fn interpolation(_: &mut Shared) -> Outcome {
    let data = uniform(50, 4, 4);
    let sp = gaussian(1.0);
    let f = icf_factorize(&data, &sp, 10, 1e-12).map_err(|e| e.to_string())?;
    let k = full_gram(&sp, &data, Guard::default()).map_err(|e| e.to_string())?;
    let kh = f.reconstruct(Guard::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &t in f.pivots() {
        for j in 0..50 {
            worst = worst.max((kh[(t, j)] - k[(t, j)]).abs());
        }
    }
    check(
        f.rank() == 10 && worst <= 1e-10,
        format!("rank {}, max |K_hat - K| on pivot rows {worst:.2e} (<= 1e-10)", f.rank()),
    )
}

/// Criterion 5: Gram matrix with eigenvalues exp(-0.2 j), n = 500: fit over the first
/// 100 steps gives b_hat > 0 and r^2 >= 0.9.
fn exponential_decay(_: &mut Shared) -> Outcome {
    let n = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    let lambda = DVector::from_fn(n, |j, _| (-0.2 * j as f64).exp());
    let k = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    let k = (&k + k.transpose()) * 0.5;
    let f = factorize(&DenseGram(k), 100, 1e-300).map_err(|e| e.to_string())?;
    let fit = fit_decay(f.trace_history()).map_err(|e| e.to_string())?;
    check(
        fit.b_hat > 0.0 && fit.r_squared >= 0.9,
        format!(
            "b_hat = {:.4} (> 0, spectrum rate 0.2), r^2 = {:.4} (>= 0.9), {} points",
            fit.b_hat, fit.r_squared, fit.points
        ),
    )
}

/// Criterion 6: Ring / parabolic / zigzag at n = 1000, s = 50, k = 2: median accuracy
/// over 10 seeds >= 0.99.
fn synthetic_accuracy(_: &mut Shared) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, sigma) in [
        (SyntheticKind::Ring, 16.0),
        (SyntheticKind::Parabolic, 2.0),
        (SyntheticKind::Zigzag, 8.0),
    ] {
        let mut accs = Vec::new();
        for seed in 0..10u64 {
            let data = gen_synthetic(kind, 500, 0.02, seed).map_err(|e| e.to_string())?;
            let (m, _) = icf_kkmeans(&data, &gaussian(sigma), 50, 2, seed, 1e-3, &params()).map_err(|e| e.to_string())?;
            accs.push(accuracy(&m.assignments, data.labels().unwrap()).map_err(|e| e.to_string())?);
        }
        let med = median(&accs);
        ok &= med >= 0.99;
        parts.push(format!("{} {med:.3}", kind.as_str()));
    }
    check(ok, format!("median accuracy (>= 0.99): {}", parts.join(", ")))
}

fn mixture(shared: &mut Shared) -> Result<Dataset, String> {
    if shared.mixture.is_none() {
        shared.mixture = Some(gaussian_mixture(&MixtureSpec::pendigits_like(), 0).map_err(|e| e.to_string())?);
    }
    Ok(shared.mixture.clone().unwrap())
}

const PENDIGITS_SIGMA: f64 = 1.0 / 65536.0;

/// ICF accuracies for seeds 0..10 from one factorization (the factor does not
/// depend on the seed).
fn icf_accuracies(data: &Dataset, s: usize) -> Result<Vec<f64>, String> {
    let f: IcfFactor = icf_factorize(data, &gaussian(PENDIGITS_SIGMA), s, 1e-3).map_err(|e| e.to_string())?;
    let truth = data.labels().unwrap();
    (0..10u64)
        .map(|seed| {
            let m = cluster_factor(&f, 10, seed, &params()).map_err(|e| e.to_string())?;
            accuracy(&m.assignments, truth).map_err(|e| e.to_string())
        })
        .collect()
}

/// Criterion 7: PenDigits-like mixture (n = 10,992, d = 16, k = 10): median accuracy at
/// s = 25 within 0.03 of s = 500.
fn small_subset(shared: &mut Shared) -> Outcome {
    let data = mixture(shared)?;
    let mut med = Vec::new();
    for s in [25, 50, 500] {
        let accs = icf_accuracies(&data, s)?;
        med.push(median(&accs));
        shared.icf_accuracy.push((s, accs));
    }
    let gap = (med[0] - med[2]).abs();
    check(
        gap <= 0.03,
        format!(
            "Gaussian-mixture substitute: median s=25 {:.4}, s=500 {:.4}, gap {gap:.4} (<= 0.03)",
            med[0], med[2]
        ),
    )
}

fn ring(per_cluster: usize) -> Dataset {
    gen_synthetic(SyntheticKind::Ring, per_cluster, 0.02, 8).expect("ring")
}

fn icf_stage_ms(data: &Dataset, s: usize) -> Result<f64, String> {
    let sp = gaussian(16.0);
    let mut times = Vec::new();
    for _ in 0..5 {
        let t = Instant::now();
        let f = icf_factorize(data, &sp, s, 1e-300).map_err(|e| e.to_string())?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        if f.rank() != s {
            return Err(format!("rank {} instead of {s}", f.rank()));
        }
    }
    Ok(median(&times))
}

/// Criterion 8: ICF stage time: s 50 -> 100 at n = 20,000 grows by [2.5, 6]; n
/// 10,000 -> 20,000 at s = 50 grows by [1.5, 3]. Medians of 5 runs.
fn scaling(_: &mut Shared) -> Outcome {
    let small = ring(5_000);
    let large = ring(10_000);
    icf_stage_ms(&large, 50)?; // warm-up
    let t_large_50 = icf_stage_ms(&large, 50)?;
    let t_large_100 = icf_stage_ms(&large, 100)?;
    let t_small_50 = icf_stage_ms(&small, 50)?;
    let rank_ratio = t_large_100 / t_large_50;
    let size_ratio = t_large_50 / t_small_50;
    check(
        (2.5..=6.0).contains(&rank_ratio) && (1.5..=3.0).contains(&size_ratio),
        format!(
            "s 50->100: {t_large_50:.1} ms -> {t_large_100:.1} ms, x{rank_ratio:.2} (in [2.5, 6]); \
             n 10k->20k: {t_small_50:.1} ms -> {t_large_50:.1} ms, x{size_ratio:.2} (in [1.5, 3])"
        ),
    )
}

/// Criterion 9: Random n = 200, k = 3, s = 20: gap <= bound on at least 9 of 10 seeds.
fn approximation_bound(_: &mut Shared) -> Outcome {
    let mut held = 0;
    let mut worst_ratio = 0.0f64;
    for seed in 0..10u64 {
        let data = uniform(200, 5, seed);
        let r = bound_gap(&data, &gaussian(1.0), 3, 20, seed, 1e-12, Guard::default(), &params())
            .map_err(|e| e.to_string())?;
        if r.gap < -1e-9 {
            return Err(format!("seed {seed}: negative gap {}", r.gap));
        }
        if r.gap <= r.bound {
            held += 1;
        }
        worst_ratio = worst_ratio.max(r.gap / r.bound);
    }
    check(held >= 9, format!("gap <= bound on {held}/10 seeds (>= 9), max gap/bound {worst_ratio:.3}"))
}

/// Criterion 10: On the mixture of criterion 7 at s in {25, 50}: ICF median accuracy >=
/// each of nystrom / rff / approx, and ICF variance <= each.
fn baseline_ordering(shared: &mut Shared) -> Outcome {
    let data = mixture(shared)?;
    let truth = data.labels().unwrap().to_vec();
    let sp = gaussian(PENDIGITS_SIGMA);
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [25usize, 50] {
        let icf = match shared.icf_accuracy.iter().find(|(size, _)| *size == s) {
            Some((_, a)) => a.clone(),
            None => icf_accuracies(&data, s)?,
        };
        let (icf_med, icf_var) = (median(&icf), variance(&icf));
        parts.push(format!("s={s} icf med {icf_med:.4} var {icf_var:.2e}"));
        for alg in [Algorithm::Nystrom, Algorithm::Rff, Algorithm::Approx] {
            let accs = (0..10u64)
                .map(|seed| {
                    let run = run_algorithm(alg, &data, &sp, s, 10, seed, 1e-3, Guard::default(), &params())
                        .map_err(|e| e.to_string())?;
                    accuracy(&run.model.assignments, &truth).map_err(|e| e.to_string())
                })
                .collect::<Result<Vec<f64>, String>>()?;
            let (med, var) = (median(&accs), variance(&accs));
            let med_ok = icf_med >= med;
            let var_ok = icf_var <= var;
            ok &= med_ok && var_ok;
            parts.push(format!(
                "{alg} med {med:.4}{} var {var:.2e}{}",
                if med_ok { "" } else { " (above icf)" },
                if var_ok { "" } else { " (below icf)" }
            ));
        }
    }
    check(ok, parts.join("; "))
}
