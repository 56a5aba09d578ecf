//! Incomplete Cholesky factorization of a Gram matrix.
//!
//! The factor `P` (n x s) is grown one column per step. Each step picks the
//! unselected index with the largest residual diagonal `e_t`, evaluates the
//! single kernel column `K[:, t]`, and appends
//!
//! ```text
//! u = P[t, :],   nu = sqrt(K_tt - u.u),   p = (K[:, t] - P u) / nu
//! ```
//!
//! after which `e_j <- e_j - p_j^2`. Only the diagonal and `s` columns of the
//! kernel are ever evaluated, so the cost is `O(n s^2)` time and `O(n s)`
//! memory. `P P^T` equals the Nystrom approximation on the selected pivots.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{DataKernel, GramSource, Guard, KernelSpec};

/// Residuals in `[-NEGATIVE_TOLERANCE, 0)` are rounding noise and are clamped
/// to zero; anything lower is reported as a breakdown.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Default stopping threshold on the residual trace.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// The factor, its pivots and the residual state after `s` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct IcfFactor {
    n: usize,
    /// Column-major, columns in pivot order.
    columns: Vec<f64>,
    pivots: Vec<usize>,
    selected: Vec<bool>,
    residual: Vec<f64>,
    trace_history: Vec<f64>,
}

impl IcfFactor {
    /// The empty factor: no pivots, residual equal to the kernel diagonal.
    pub fn new<G: GramSource + ?Sized>(source: &G) -> Result<Self> {
        let n = source.size();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let residual = source.diagonal();
        if let Some((i, &v)) = residual
            .iter()
            .enumerate()
            .find(|(_, v)| **v < 0.0 || !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {i} is {v}; the kernel is not positive semidefinite"
            )));
        }
        let trace = residual.iter().sum();
        Ok(Self {
            n,
            columns: Vec::new(),
            pivots: Vec::new(),
            selected: vec![false; n],
            residual,
            trace_history: vec![trace],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns built so far.
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Diagonal of `K - P P^T`; zero at pivots.
    pub fn residual_diag(&self) -> &[f64] {
        &self.residual
    }

    /// Residual traces `eps_0, eps_1, ..., eps_s`.
    pub fn trace_history(&self) -> &[f64] {
        &self.trace_history
    }

    pub fn residual_trace(&self) -> f64 {
        *self.trace_history.last().expect("history starts with eps_0")
    }

    /// Column `j` of `P`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    /// Row `i` of `P`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.rank()).map(|j| self.columns[j * self.n + i]).collect()
    }

    /// `P` as an `n x s` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.rank(), &self.columns)
    }

    /// `P` in row-major order, the layout k-means consumes.
    pub fn rows_major(&self) -> Vec<f64> {
        let s = self.rank();
        let mut out = vec![0.0; self.n * s];
        for j in 0..s {
            for (i, &v) in self.column(j).iter().enumerate() {
                out[i * s + j] = v;
            }
        }
        out
    }

    /// Next pivot: the largest positive residual among unselected indices,
    /// smallest index on ties.
    pub fn next_pivot(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &e) in self.residual.iter().enumerate() {
            if self.selected[j] || e <= 0.0 {
                continue;
            }
            if best.is_none_or(|(_, b)| e > b) {
                best = Some((j, e));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Appends one column for the pivot chosen by [`next_pivot`](Self::next_pivot).
    pub fn step<G: GramSource + ?Sized>(&mut self, source: &G) -> Result<usize> {
        let t = self.next_pivot().ok_or(Error::Breakdown {
            step: self.rank(),
            value: self.max_unselected_residual(),
        })?;
        self.step_at(source, t)?;
        Ok(t)
    }

    /// Appends one column using pivot `t`.
    pub fn step_at<G: GramSource + ?Sized>(&mut self, source: &G, t: usize) -> Result<()> {
        let n = self.n;
        if source.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: source.size(),
            });
        }
        if t >= n {
            return Err(Error::IndexOutOfRange { index: t, n });
        }
        if self.selected[t] {
            return Err(Error::InvalidArgument(format!("index {t} is already a pivot")));
        }
        let step = self.rank();
        let u = self.row(t);

        let mut p = vec![0.0; n];
        source.column_into(t, &mut p);
        let nu_sq = p[t] - u.iter().map(|v| v * v).sum::<f64>();
        if !(nu_sq > 0.0) {
            return Err(Error::Breakdown { step, value: nu_sq });
        }
        let nu = nu_sq.sqrt();

        for (j, &uj) in u.iter().enumerate() {
            if uj == 0.0 {
                continue;
            }
            let col = &self.columns[j * n..(j + 1) * n];
            for (pi, &c) in p.iter_mut().zip(col) {
                *pi -= uj * c;
            }
        }
        let inv_nu = 1.0 / nu;
        for v in &mut p {
            *v *= inv_nu;
        }
        p[t] = nu;

        self.selected[t] = true;
        self.residual[t] = 0.0;
        let mut trace = 0.0;
        for j in 0..n {
            if self.selected[j] {
                continue;
            }
            let mut e = self.residual[j] - p[j] * p[j];
            if e < 0.0 {
                if e < -NEGATIVE_TOLERANCE {
                    return Err(Error::Breakdown { step, value: e });
                }
                e = 0.0;
            }
            self.residual[j] = e;
            trace += e;
        }

        self.columns.extend_from_slice(&p);
        self.pivots.push(t);
        self.trace_history.push(trace);
        Ok(())
    }

    fn max_unselected_residual(&self) -> f64 {
        self.residual
            .iter()
            .zip(&self.selected)
            .filter(|(_, s)| !**s)
            .map(|(e, _)| *e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `P P^T`, for testing at small `n`.
    pub fn reconstruct(&self, guard: Guard) -> Result<DMatrix<f64>> {
        guard.check(self.n)?;
        let p = self.matrix();
        Ok(&p * p.transpose())
    }

    /// Writes the text dump: `ICF n s`, the pivot line, `n` rows of `P`, and
    /// the trace history line. Values use the shortest round-tripping form.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ICF {} {}", self.n, self.rank())?;
        writeln!(w, "{}", join(self.pivots.iter()))?;
        let s = self.rank();
        let rows = self.rows_major();
        for i in 0..self.n {
            writeln!(w, "{}", join(rows[i * s..(i + 1) * s].iter()))?;
        }
        writeln!(w, "{}", join(self.trace_history.iter()))?;
        Ok(())
    }
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Factorizes `source` until the residual trace is at most `epsilon` or
/// `max_rank` columns exist.
pub fn factorize<G: GramSource + ?Sized>(
    source: &G,
    max_rank: usize,
    epsilon: f64,
) -> Result<IcfFactor> {
    let n = source.size();
    if max_rank == 0 || max_rank > n {
        return Err(Error::InvalidArgument(format!(
            "max_rank must be in 1..={n}, got {max_rank}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let mut factor = IcfFactor::new(source)?;
    while factor.residual_trace() > epsilon && factor.rank() < max_rank {
        factor.step(source)?;
    }
    Ok(factor)
}

/// Factorizes the Gram matrix of `data` under `spec` without materializing it.
pub fn icf_factorize(
    data: &Dataset,
    spec: &KernelSpec,
    max_rank: usize,
    epsilon: f64,
) -> Result<IcfFactor> {
    factorize(&DataKernel::new(*spec, data), max_rank, epsilon)
}

/// A factor read back from the text dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDump {
    pub n: usize,
    pub s: usize,
    pub pivots: Vec<usize>,
    /// Row-major `n x s`.
    pub p: Vec<f64>,
    pub trace_history: Vec<f64>,
}

impl FactorDump {
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?.trim_end_matches('\r').to_string())),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of dump, expected {what}"),
                }),
            }
        };
        let (ln, header) = next("header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (n, s) = match parts.as_slice() {
            ["ICF", n, s] => (
                parse_num::<usize>(n, ln)?,
                parse_num::<usize>(s, ln)?,
            ),
            _ => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("bad header {header:?}"),
                })
            }
        };
        let (ln, pivot_line) = next("pivots")?;
        let pivots = parse_line::<usize>(&pivot_line, ln, s)?;
        let mut p = Vec::with_capacity(n * s);
        for _ in 0..n {
            let (ln, row) = next("factor row")?;
            p.extend(parse_line::<f64>(&row, ln, s)?);
        }
        let (ln, hist) = next("trace history")?;
        let trace_history = parse_line::<f64>(&hist, ln, s + 1)?;
        Ok(Self {
            n,
            s,
            pivots,
            p,
            trace_history,
        })
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad number {tok:?}"),
    })
}

fn parse_line<T: std::str::FromStr>(text: &str, line: usize, expected: usize) -> Result<Vec<T>> {
    let vals = text
        .split_whitespace()
        .map(|t| parse_num(t, line))
        .collect::<Result<Vec<T>>>()?;
    if vals.len() != expected {
        return Err(Error::Parse {
            line,
            msg: format!("expected {expected} values, found {}", vals.len()),
        });
    }
    Ok(vals)
}
