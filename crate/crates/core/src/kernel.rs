//! Kernel evaluation: single entries, columns, the diagonal, and a guarded
//! dense Gram matrix used only by oracles and full-matrix baselines.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A positive semidefinite kernel family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `k(x, y) = exp(-sigma * |x - y|^2)`.
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// Evaluates the kernel on two slices of equal length. No shape checks.
    #[inline]
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::Gaussian { sigma } => (-sigma * squared_distance(x, y)).exp(),
        }
    }

    /// `k(x, x)`; constant for stationary kernels.
    #[inline]
    pub fn self_similarity(&self, _x: &[f64]) -> f64 {
        match self {
            Self::Gaussian { .. } => 1.0,
        }
    }
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(spec.apply(x, y))
}

/// Squared feature-space distance `k(x,x) - 2k(x,y) + k(y,y)`.
pub fn kernel_distance(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let kxy = kernel_eval(spec, x, y)?;
    Ok(spec.self_similarity(x) - 2.0 * kxy + spec.self_similarity(y))
}

/// Column `t` of the Gram matrix, computed on demand.
pub fn kernel_column(spec: &KernelSpec, data: &Dataset, t: usize) -> Result<Vec<f64>> {
    if t >= data.len() {
        return Err(Error::IndexOutOfRange { index: t, n: data.len() });
    }
    let xt = data.row(t);
    Ok(data.rows().map(|x| spec.apply(x, xt)).collect())
}

pub fn kernel_diag(spec: &KernelSpec, data: &Dataset) -> Vec<f64> {
    data.rows().map(|x| spec.self_similarity(x)).collect()
}

/// Upper limit on `n` for anything that materializes an `n x n` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guard(Option<usize>);

impl Guard {
    pub const DEFAULT_LIMIT: usize = 5_000;

    pub fn limit(n: usize) -> Self {
        Self(Some(n))
    }

    /// No limit; the caller accepts the O(n^2) memory cost.
    pub fn unlimited() -> Self {
        Self(None)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0 {
            Some(guard) if n > guard => Err(Error::GuardExceeded { n, guard }),
            _ => Ok(()),
        }
    }

    pub fn allows(&self, n: usize) -> bool {
        self.check(n).is_ok()
    }
}

impl Default for Guard {
    fn default() -> Self {
        Self(Some(Self::DEFAULT_LIMIT))
    }
}

/// The dense Gram matrix. Each pair is evaluated once and mirrored, so the
/// result is exactly symmetric.
pub fn full_gram(spec: &KernelSpec, data: &Dataset, guard: Guard) -> Result<DMatrix<f64>> {
    let n = data.len();
    guard.check(n)?;
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        let xj = data.row(j);
        k[(j, j)] = spec.self_similarity(xj);
        for i in j + 1..n {
            let v = spec.apply(data.row(i), xj);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Column-wise access to a symmetric positive semidefinite matrix.
///
/// Incomplete Cholesky only ever needs the diagonal and single columns, so it
/// is written against this trait rather than a materialized matrix.
pub trait GramSource {
    fn size(&self) -> usize;

    fn diagonal(&self) -> Vec<f64>;

    /// Writes column `t` into `out` (length `size()`).
    fn column_into(&self, t: usize, out: &mut [f64]);
}

/// Kernel columns evaluated from data, with a count of kernel evaluations.
#[derive(Debug)]
pub struct DataKernel<'a> {
    spec: KernelSpec,
    data: &'a Dataset,
    evals: AtomicU64,
}

impl<'a> DataKernel<'a> {
    pub fn new(spec: KernelSpec, data: &'a Dataset) -> Self {
        Self {
            spec,
            data,
            evals: AtomicU64::new(0),
        }
    }

    /// Kernel evaluations performed so far, diagonal included.
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }
}

impl GramSource for DataKernel<'_> {
    fn size(&self) -> usize {
        self.data.len()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.evals.fetch_add(self.data.len() as u64, Ordering::Relaxed);
        kernel_diag(&self.spec, self.data)
    }

    fn column_into(&self, t: usize, out: &mut [f64]) {
        self.evals.fetch_add(self.data.len() as u64, Ordering::Relaxed);
        let xt = self.data.row(t);
        for (o, x) in out.iter_mut().zip(self.data.rows()) {
            *o = self.spec.apply(x, xt);
        }
    }
}

/// An explicit symmetric matrix viewed as a Gram source.
#[derive(Debug, Clone)]
pub struct DenseGram(pub DMatrix<f64>);

impl GramSource for DenseGram {
    fn size(&self) -> usize {
        self.0.nrows()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    fn column_into(&self, t: usize, out: &mut [f64]) {
        out.copy_from_slice(self.0.column(t).as_slice());
    }
}
