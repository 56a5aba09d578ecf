//! Datasets: LIBSVM text ingestion, synthetic geometries and the in-memory
//! representation shared by every other module.
//!
//! Points are stored densely in row-major order so that a single point is a
//! contiguous slice; kernel columns walk the rows one after the other.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// `n` points in `d` dimensions with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from row-major values, validating shape and finiteness.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        d: usize,
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 1 and d >= 1, got n = {n}, d = {d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {n} points",
                    l.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            d,
            values,
            labels,
        })
    }

    /// Builds a dataset from a list of equally sized rows.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(name, n, d, rows.concat(), labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: a dataset holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Row-major point values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct ground-truth labels, if labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut seen: Vec<usize> = l.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
    }

    /// The points restricted to `indices`, keeping labels aligned.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange { index: i, n: self.n });
            }
            values.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self::new(self.name.clone(), indices.len(), self.d, values, labels)
    }

    /// Column-wise z-scoring. Constant columns are centered only.
    pub fn standardized(&self) -> Self {
        let n = self.n as f64;
        let mut values = self.values.clone();
        for j in 0..self.d {
            let mean = self.rows().map(|r| r[j]).sum::<f64>() / n;
            let var = self.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..self.n {
                let v = &mut values[i * self.d + j];
                *v = (*v - mean) / scale;
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }
}

/// Parses LIBSVM text: `<label> <idx>:<val> ...` per line with 1-based,
/// strictly increasing indices.
///
/// The width is the largest index seen unless `dim` is given. Missing entries
/// are zero. Lines whose first token is already an `idx:val` pair are treated
/// as unlabeled; a file must be either fully labeled or fully unlabeled.
/// Blank lines and `#` comments are ignored.
pub fn parse_libsvm<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut labeled: Option<bool> = None;
    let mut width = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = content.split_whitespace().peekable();

        let has_label = !tokens.peek().is_some_and(|t| t.contains(':'));
        match labeled {
            None => labeled = Some(has_label),
            Some(prev) if prev != has_label => {
                return Err(perr("mix of labeled and unlabeled lines".into()));
            }
            _ => {}
        }
        if has_label {
            let tok = tokens.next().unwrap_or_default();
            labels.push(parse_label(tok).map_err(perr)?);
        }

        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected idx:val, found {tok:?}")))?;
            let idx = usize::from_str(idx)
                .map_err(|_| perr(format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(perr(format!(
                    "feature index {idx} does not increase (previous {last})"
                )));
            }
            let val = f64::from_str(val).map_err(|_| perr(format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(perr(format!("non-finite value {val}")));
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        width = width.max(last);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let d = match dim {
        Some(d) if d < width => {
            return Err(Error::InvalidArgument(format!(
                "requested width {d} but index {width} occurs in the input"
            )))
        }
        Some(d) => d,
        None => width,
    };
    if d == 0 {
        return Err(Error::InvalidDataset("no features in input".into()));
    }
    let n = rows.len();
    let mut values = vec![0.0; n * d];
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            values[i * d + j] = v;
        }
    }
    let labels = if labeled == Some(true) { Some(labels) } else { None };
    Dataset::new("libsvm", n, d, values, labels)
}

pub fn parse_libsvm_str(text: &str, dim: Option<usize>) -> Result<Dataset> {
    parse_libsvm(text.as_bytes(), dim)
}

/// Reads a LIBSVM file; the dataset is named after the file stem.
pub fn read_libsvm(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let ds = parse_libsvm(std::io::BufReader::new(file), dim)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("libsvm")
        .to_string();
    Ok(ds.with_name(name))
}

fn parse_label(tok: &str) -> std::result::Result<usize, String> {
    if let Ok(v) = tok.parse::<i64>() {
        return usize::try_from(v).map_err(|_| format!("negative label {v}"));
    }
    let f: f64 = tok
        .parse()
        .map_err(|_| format!("bad label {tok:?}"))?;
    if f.fract() != 0.0 || !f.is_finite() {
        return Err(format!("label {tok:?} is not an integer"));
    }
    if f < 0.0 {
        return Err(format!("negative label {tok}"));
    }
    Ok(f as usize)
}

/// Renders a dataset as LIBSVM text. Zero entries are omitted; an unlabeled
/// all-zero row is written as `1:0` so the line survives re-parsing.
pub fn to_libsvm_string(ds: &Dataset) -> String {
    let mut out = String::new();
    for (i, row) in ds.rows().enumerate() {
        let mut line = String::new();
        if let Some(l) = ds.labels() {
            let _ = write!(line, "{}", l[i]);
        }
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                if !line.is_empty() {
                    line.push(' ');
                }
                let _ = write!(line, "{}:{}", j + 1, v);
            }
        }
        if line.is_empty() {
            line.push_str("1:0");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_libsvm<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    w.write_all(to_libsvm_string(ds).as_bytes())?;
    Ok(())
}

/// Two-cluster planar geometries that are not linearly separable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Ring,
    Parabolic,
    Zigzag,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(Self::Ring),
            "parabolic" => Ok(Self::Parabolic),
            "zigzag" => Ok(Self::Zigzag),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic kind {other:?} (expected ring, parabolic or zigzag)"
            ))),
        }
    }
}

impl SyntheticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ring => "ring",
            Self::Parabolic => "parabolic",
            Self::Zigzag => "zigzag",
        }
    }

    /// Point on the base curve of `label` at curve parameter `t` in [0, 1).
    pub fn base_point(self, label: usize, t: f64) -> [f64; 2] {
        match (self, label) {
            // A small inner circle, nearly a blob at kernel scale, inside a
            // wide outer circle.
            (Self::Ring, l) => {
                let r = if l == 0 { RING_INNER } else { RING_OUTER };
                let a = std::f64::consts::TAU * t;
                [r * a.cos(), r * a.sin()]
            }
            // Upward arc and a downward arc shifted right and up; the two
            // interlock without crossing.
            (Self::Parabolic, 0) => {
                let x = -1.0 + 2.0 * t;
                [x, x * x]
            }
            (Self::Parabolic, _) => {
                let x = 2.0 * t;
                [x, -(x - 1.0).powi(2) + PARABOLA_LIFT]
            }
            // Two short zigzag bands, the upper one raised and shifted by half
            // a period.
            (Self::Zigzag, l) => {
                let shift = if l == 0 { 0.0 } else { ZIGZAG_PERIOD / 2.0 };
                let x = ZIGZAG_LENGTH * t + shift;
                [x, zigzag(x) + ZIGZAG_OFFSET * l.min(1) as f64]
            }
        }
    }
}

const RING_INNER: f64 = 0.1;
const RING_OUTER: f64 = 1.0;
const PARABOLA_LIFT: f64 = 2.5;
const ZIGZAG_LENGTH: f64 = 1.0;
const ZIGZAG_PERIOD: f64 = 0.5;
const ZIGZAG_AMPLITUDE: f64 = 0.25;
const ZIGZAG_OFFSET: f64 = 1.0;

/// Triangle wave with period [`ZIGZAG_PERIOD`], ranging over
/// `[-ZIGZAG_AMPLITUDE, ZIGZAG_AMPLITUDE]`, peaking at half periods.
fn zigzag(x: f64) -> f64 {
    let u = (x / ZIGZAG_PERIOD).rem_euclid(1.0);
    ZIGZAG_AMPLITUDE * (1.0 - 2.0 * (2.0 * u - 1.0).abs())
}

/// Generates `2 * per_cluster` planar points, `per_cluster` per label, with
/// isotropic Gaussian noise of standard deviation `noise` per coordinate.
pub fn gen_synthetic(
    kind: SyntheticKind,
    per_cluster: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if per_cluster == 0 {
        return Err(Error::InvalidArgument("per_cluster must be >= 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = Vec::with_capacity(4 * per_cluster);
    let mut labels = Vec::with_capacity(2 * per_cluster);
    for label in 0..2 {
        for _ in 0..per_cluster {
            let t: f64 = rng.random();
            let [x, y] = kind.base_point(label, t);
            let (ex, ey) = if noise > 0.0 {
                (noise * normal.sample(&mut rng), noise * normal.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            values.push(x + ex);
            values.push(y + ey);
            labels.push(label);
        }
    }
    Dataset::new(kind.as_str(), 2 * per_cluster, 2, values, Some(labels))
}

/// Parameters of an axis-aligned Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    /// Centers are drawn uniformly from `[0, box_size]^d`.
    pub box_size: f64,
    /// Base per-coordinate standard deviation; each class scales it by a
    /// factor drawn from `[0.5, 1.5]` per coordinate.
    pub spread: f64,
}

impl MixtureSpec {
    /// Ten classes in 16 dimensions with feature values on a 0..100 scale,
    /// sized like the combined pen-digit training and test sets.
    pub fn pendigits_like() -> Self {
        Self {
            n: 10_992,
            d: 16,
            classes: 10,
            box_size: 100.0,
            spread: 12.0,
        }
    }
}

/// Draws a labeled Gaussian mixture; class `i % classes` owns point `i`.
pub fn gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 || spec.classes == 0 {
        return Err(Error::InvalidArgument(
            "mixture needs n, d and classes >= 1".into(),
        ));
    }
    if !(spec.spread >= 0.0 && spec.box_size >= 0.0) {
        return Err(Error::InvalidArgument("negative mixture scale".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let centers: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| (0..spec.d).map(|_| spec.box_size * rng.random::<f64>()).collect())
        .collect();
    let scales: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.d)
                .map(|_| spec.spread * rng.random_range(0.5..1.5))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % spec.classes;
        for j in 0..spec.d {
            let z: f64 = normal.sample(&mut rng);
            values.push(centers[c][j] + scales[c][j] * z);
        }
        labels.push(c);
    }
    Dataset::new("mixture", spec.n, spec.d, values, Some(labels))
}
