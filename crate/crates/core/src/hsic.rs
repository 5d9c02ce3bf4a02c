//! The HSIC Lasso regression problem: fit the normalized output Gram matrix
//! as a nonnegative combination of per-feature normalized Gram matrices.
//!
//! Every quantity the solvers need reduces to inner products between those
//! matrices, so the problem keeps two precomputed tables:
//! `relevance[k] = NHSIC(f_k, y)` and `redundancy[k][m] = NHSIC(f_k, f_m)`.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, LocalSample};
use crate::kernel::{
    center_and_normalize, frobenius_inner, gaussian_gram_feature, gaussian_gram_output,
    mask_with_adjacency, median_heuristic, median_heuristic_column, standardize, GramMatrix,
    KernelConfig, Width,
};

#[derive(Debug, Clone)]
pub struct HsicProblem {
    feature_grams: Vec<Option<GramMatrix>>,
    output_gram: GramMatrix,
    degenerate_features: Vec<usize>,
    relevance: Array1<f64>,
    redundancy: Array2<f64>,
}

impl HsicProblem {
    /// Kernelizes every feature column of `sample` and its predictions.
    ///
    /// Columns are standardized over the sample before kernel evaluation;
    /// constant columns become degenerate features with a zero Gram matrix.
    pub fn build(sample: &LocalSample, config: &KernelConfig, graph: &Graph) -> Result<Self> {
        config.validate()?;
        let x = sample.features();
        let normalize = |raw: GramMatrix| {
            let raw = if config.use_adjacency_mask {
                mask_with_adjacency(&raw, sample, graph)
            } else {
                raw
            };
            center_and_normalize(&raw)
        };

        let feature_grams = (0..x.ncols())
            .into_par_iter()
            .map(|k| -> Result<Option<GramMatrix>> {
                let Some(z) = standardize(x.column(k)) else {
                    return Ok(None);
                };
                let sigma = match config.sigma_x {
                    Width::Auto => median_heuristic_column(z.view()),
                    Width::Fixed(s) => s,
                };
                let gram = normalize(gaussian_gram_feature(z.view(), sigma)?);
                Ok((!gram.is_degenerate()).then_some(gram))
            })
            .collect::<Result<Vec<_>>>()?;

        let y = sample.predictions();
        let sigma_y = match config.sigma_y {
            Width::Auto => median_heuristic(y.view()),
            Width::Fixed(s) => s,
        };
        let output_gram = normalize(gaussian_gram_output(y.view(), sigma_y)?);
        if output_gram.is_degenerate() {
            return Err(Error::DegenerateProblem(format!(
                "predictions are constant over the {}-node sample of node {}",
                sample.len(),
                sample.center()
            )));
        }
        Self::assemble(feature_grams, output_gram)
    }

    /// Builds a problem from already normalized matrices. Degenerate inputs
    /// are recorded as such.
    pub fn from_grams(feature_grams: Vec<GramMatrix>, output_gram: GramMatrix) -> Result<Self> {
        let n = output_gram.n();
        if !output_gram.is_normalized() || output_gram.is_degenerate() {
            return Err(Error::DegenerateProblem(
                "output Gram matrix must be normalized and non-degenerate".into(),
            ));
        }
        let mut grams = Vec::with_capacity(feature_grams.len());
        for g in feature_grams {
            if !g.is_normalized() {
                return Err(Error::ContractViolation("feature Gram matrix is not normalized".into()));
            }
            if g.n() != n {
                return Err(Error::Shape {
                    expected: format!("{n} × {n}"),
                    actual: format!("{} × {}", g.n(), g.n()),
                });
            }
            grams.push((!g.is_degenerate()).then_some(g));
        }
        Self::assemble(grams, output_gram)
    }

    fn assemble(feature_grams: Vec<Option<GramMatrix>>, output_gram: GramMatrix) -> Result<Self> {
        let d = feature_grams.len();
        let degenerate_features: Vec<usize> =
            (0..d).filter(|&k| feature_grams[k].is_none()).collect();
        if degenerate_features.len() == d {
            return Err(Error::DegenerateProblem(format!(
                "all {d} features are constant over the sample"
            )));
        }
        let lv = output_gram.values();
        let relevance: Array1<f64> = feature_grams
            .par_iter()
            .map(|g| g.as_ref().map_or(0.0, |g| frobenius_inner(g.values(), lv)))
            .collect::<Vec<_>>()
            .into();
        let rows: Vec<Vec<f64>> = (0..d)
            .into_par_iter()
            .map(|k| {
                let mut row = vec![0.0; d];
                if let Some(gk) = &feature_grams[k] {
                    for m in k..d {
                        if let Some(gm) = &feature_grams[m] {
                            row[m] = if m == k {
                                frobenius_inner(gk.values(), gk.values())
                            } else {
                                frobenius_inner(gk.values(), gm.values())
                            };
                        }
                    }
                }
                row
            })
            .collect();
        let mut redundancy = Array2::zeros((d, d));
        for (k, row) in rows.into_iter().enumerate() {
            for m in k..d {
                redundancy[[k, m]] = row[m];
                redundancy[[m, k]] = row[m];
            }
        }
        Ok(HsicProblem {
            feature_grams,
            output_gram,
            degenerate_features,
            relevance,
            redundancy,
        })
    }

    pub fn n(&self) -> usize {
        self.output_gram.n()
    }

    pub fn d(&self) -> usize {
        self.feature_grams.len()
    }

    /// Normalized Gram matrix of feature `k`; `None` for degenerate features,
    /// whose matrix is identically zero.
    pub fn feature_gram(&self, k: usize) -> Option<&GramMatrix> {
        self.feature_grams[k].as_ref()
    }

    pub fn output_gram(&self) -> &GramMatrix {
        &self.output_gram
    }

    pub fn degenerate_features(&self) -> &[usize] {
        &self.degenerate_features
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.feature_grams[k].is_none()
    }

    /// `NHSIC(f_k, y)` for every feature.
    pub fn relevance(&self) -> &Array1<f64> {
        &self.relevance
    }

    /// `NHSIC(f_k, f_m)` table.
    pub fn redundancy(&self) -> &Array2<f64> {
        &self.redundancy
    }
}

fn check_beta(problem: &HsicProblem, beta: &[f64]) -> Result<()> {
    if beta.len() != problem.d() {
        return Err(Error::Shape {
            expected: format!("{} coefficients", problem.d()),
            actual: format!("{}", beta.len()),
        });
    }
    if let Some((k, b)) = beta.iter().enumerate().find(|(_, b)| !(**b >= 0.0)) {
        return Err(Error::ContractViolation(format!("beta[{k}] = {b} is negative")));
    }
    Ok(())
}

/// `½‖L̄ − Σ_k β_k K̄_k‖_F² + ρ‖β‖₁`, evaluated on the explicit residual matrix.
pub fn objective(problem: &HsicProblem, beta: &[f64], rho: f64) -> Result<f64> {
    check_beta(problem, beta)?;
    let mut residual = problem.output_gram.values().clone();
    for (k, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            if let Some(g) = problem.feature_gram(k) {
                residual.scaled_add(-b, g.values());
            }
        }
    }
    let fit = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
    Ok(fit + rho * beta.iter().sum::<f64>())
}

/// The same objective through the NHSIC tables only:
/// `½ Σ_km β_k β_m NHSIC(f_k, f_m) − Σ_k β_k NHSIC(f_k, y) + ½ + ρ‖β‖₁`.
pub fn objective_via_nhsic(problem: &HsicProblem, beta: &[f64], rho: f64) -> Result<f64> {
    check_beta(problem, beta)?;
    let b = Array1::from(beta.to_vec());
    let quadratic = b.dot(&problem.redundancy.dot(&b));
    let linear = b.dot(&problem.relevance);
    Ok(0.5 * quadratic - linear + 0.5 + rho * b.sum())
}
