//! Gaussian Gram matrices, double centering with Frobenius normalization,
//! and the normalized HSIC score between two such matrices.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, LocalSample};

/// Frobenius norms below this are treated as a constant (degenerate) input.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Symmetric `n × n` kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Array2<f64>,
    normalized: bool,
    degenerate: bool,
}

impl GramMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// True once `H·G·H / ‖H·G·H‖_F` has been applied.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// True for the all-zero result of normalizing a constant input.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Wraps an already centered and normalized matrix. Used by tests and
    /// oracles that construct problems directly.
    pub fn from_normalized(values: Array2<f64>) -> Result<Self> {
        check_square(&values)?;
        let degenerate = frobenius(&values) < DEGENERATE_NORM;
        Ok(GramMatrix {
            values,
            normalized: true,
            degenerate,
        })
    }

    /// Wraps a raw (uncentered) kernel matrix.
    pub fn from_raw(values: Array2<f64>) -> Result<Self> {
        check_square(&values)?;
        Ok(GramMatrix {
            values,
            normalized: false,
            degenerate: false,
        })
    }
}

fn check_square(values: &Array2<f64>) -> Result<()> {
    if values.nrows() != values.ncols() {
        return Err(Error::Shape {
            expected: "square matrix".into(),
            actual: format!("{} × {}", values.nrows(), values.ncols()),
        });
    }
    Ok(())
}

/// Gaussian kernel width: a fixed positive value or the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Width {
    #[default]
    Auto,
    Fixed(f64),
}

impl Width {
    pub(crate) fn check(self) -> Result<Self> {
        match self {
            Width::Fixed(s) if !(s > 0.0 && s.is_finite()) => {
                Err(Error::invalid(format!("kernel width must be > 0, got {s}")))
            }
            w => Ok(w),
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Width::Auto => f.write_str("auto"),
            Width::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl Serialize for Width {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Width::Auto => s.serialize_str("auto"),
            Width::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Width {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Width::Fixed(v).check().map_err(serde::de::Error::custom),
            Raw::Str(s) if s == "auto" => Ok(Width::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "kernel width must be a positive number or \"auto\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub sigma_x: Width,
    pub sigma_y: Width,
    /// Restrict kernels to sample pairs joined by an edge (plus the diagonal).
    pub use_adjacency_mask: bool,
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        self.sigma_x.check()?;
        self.sigma_y.check()?;
        Ok(())
    }
}

/// `K_ij = exp(−(x_i − x_j)² / 2σ²)` over one feature column.
pub fn gaussian_gram_feature(column: ArrayView1<f64>, sigma: f64) -> Result<GramMatrix> {
    if column.len() < 2 {
        return Err(Error::invalid("a Gram matrix needs at least 2 samples"));
    }
    if column.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("feature column contains non-finite values"));
    }
    Width::Fixed(sigma).check()?;
    let n = column.len();
    let scale = 1.0 / (2.0 * sigma * sigma);
    let mut values = Array2::ones((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = column[i] - column[j];
            let k = (-diff * diff * scale).exp();
            values[[i, j]] = k;
            values[[j, i]] = k;
        }
    }
    GramMatrix::from_raw(values)
}

/// `L_ij = exp(−‖y_i − y_j‖² / 2σ²)` over prediction rows.
pub fn gaussian_gram_output(predictions: ArrayView2<f64>, sigma: f64) -> Result<GramMatrix> {
    if predictions.nrows() < 2 {
        return Err(Error::invalid("a Gram matrix needs at least 2 samples"));
    }
    if predictions.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("prediction matrix contains non-finite values"));
    }
    Width::Fixed(sigma).check()?;
    let n = predictions.nrows();
    let scale = 1.0 / (2.0 * sigma * sigma);
    let mut values = Array2::ones((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let sq = squared_distance(predictions.row(i), predictions.row(j));
            let k = (-sq * scale).exp();
            values[[i, j]] = k;
            values[[j, i]] = k;
        }
    }
    GramMatrix::from_raw(values)
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `H·G·H / ‖H·G·H‖_F` with `H = I − 11ᵀ/n`; the zero matrix (flagged
/// degenerate) when the centered norm vanishes.
pub fn center_and_normalize(gram: &GramMatrix) -> GramMatrix {
    let n = gram.values.nrows();
    let mut centered = double_center(&gram.values);
    let norm = frobenius(&centered);
    if norm < DEGENERATE_NORM {
        return GramMatrix {
            values: Array2::zeros((n, n)),
            normalized: true,
            degenerate: true,
        };
    }
    centered.mapv_inplace(|x| x / norm);
    // a second pass removes the rounding left by cancellation in near-flat grams
    let mut values = double_center(&centered);
    let norm = frobenius(&values);
    values.mapv_inplace(|x| x / norm);
    GramMatrix {
        values,
        normalized: true,
        degenerate: false,
    }
}

fn double_center(g: &Array2<f64>) -> Array2<f64> {
    let n = g.nrows();
    let nf = n as f64;
    let row_means: Array1<f64> = g.rows().into_iter().map(|r| r.sum() / nf).collect();
    let col_means: Array1<f64> = g.columns().into_iter().map(|c| c.sum() / nf).collect();
    let grand = row_means.sum() / nf;
    Array2::from_shape_fn((n, n), |(i, j)| g[[i, j]] - row_means[i] - col_means[j] + grand)
}

/// `tr(A·B)` of two normalized Gram matrices; 0 if either is degenerate.
pub fn nhsic(a: &GramMatrix, b: &GramMatrix) -> Result<f64> {
    if a.values.dim() != b.values.dim() {
        return Err(Error::Shape {
            expected: format!("{:?}", a.values.dim()),
            actual: format!("{:?}", b.values.dim()),
        });
    }
    if !a.normalized || !b.normalized {
        return Err(Error::ContractViolation(
            "nhsic requires normalized Gram matrices".into(),
        ));
    }
    if a.degenerate || b.degenerate {
        return Ok(0.0);
    }
    Ok(frobenius_inner(&a.values, &b.values))
}

/// `Σ_ij a_ij b_ij`, equal to `tr(A·B)` for symmetric matrices.
pub(crate) fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(x), Some(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
        _ => a.iter().zip(b.iter()).map(|(p, q)| p * q).sum(),
    }
}

/// Elementwise product with the sample's 0/1 adjacency (self-loops kept).
pub fn mask_with_adjacency(gram: &GramMatrix, sample: &LocalSample, graph: &Graph) -> GramMatrix {
    let ids = sample.node_ids();
    let n = ids.len();
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j || graph.has_edge(ids[i], ids[j]) {
            gram.values[[i, j]]
        } else {
            0.0
        }
    });
    GramMatrix {
        values,
        normalized: false,
        degenerate: false,
    }
}

/// Median of the pairwise Euclidean distances between rows, 1 when that
/// median is 0.
pub fn median_heuristic(points: ArrayView2<f64>) -> f64 {
    let n = points.nrows();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(squared_distance(points.row(i), points.row(j)).sqrt());
        }
    }
    median_or_one(dists)
}

/// [`median_heuristic`] for a single column.
pub fn median_heuristic_column(column: ArrayView1<f64>) -> f64 {
    let n = column.len();
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push((column[i] - column[j]).abs());
        }
    }
    median_or_one(dists)
}

fn median_or_one(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mid = values.len() / 2;
    let upper = *values.select_nth_unstable_by(mid, f64::total_cmp).1;
    let median = if values.len() % 2 == 0 {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    } else {
        upper
    };
    if median > 0.0 && median.is_finite() {
        median
    } else {
        1.0
    }
}

/// Zero-mean, unit-variance copy of `column`, or `None` if it is constant.
pub fn standardize(column: ArrayView1<f64>) -> Option<Array1<f64>> {
    let n = column.len() as f64;
    let mean = column.sum() / n;
    let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12 * (1.0 + mean.abs())) {
        return None;
    }
    Some(column.mapv(|x| (x - mean) / sd))
}
