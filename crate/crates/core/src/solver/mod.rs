//! Solvers for the nonnegative HSIC Lasso.
//!
//! [`solve_nonnegative_lars`] is the production path. [`solve_projected_gradient`]
//! is an independent first-order method used to cross-check it: the problem
//! is convex, so both must land on the same optimum.

mod lars;
mod proximal;

pub use lars::{lars_path, solve_nonnegative_lars, LarsInput};
pub use proximal::solve_projected_gradient;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Termination settings. Exactly one of `rho` and `target_nonzeros` must be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_nonzeros: Option<usize>,
    /// Defaults to `4·d` path steps for LARS and 10⁶ iterations for
    /// projected gradient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: None,
            target_nonzeros: None,
            max_iterations: None,
            tolerance: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn with_target_nonzeros(k: usize) -> Self {
        SolverConfig {
            target_nonzeros: Some(k),
            ..Default::default()
        }
    }

    pub fn with_rho(rho: f64) -> Self {
        SolverConfig {
            rho: Some(rho),
            ..Default::default()
        }
    }

    pub(crate) fn stopping(&self) -> Result<Stopping> {
        match (self.rho, self.target_nonzeros) {
            (Some(rho), None) if rho >= 0.0 && rho.is_finite() => Ok(Stopping::Rho(rho)),
            (Some(rho), None) => Err(Error::invalid(format!("rho must be ≥ 0, got {rho}"))),
            (None, Some(k)) if k >= 1 => Ok(Stopping::Nonzeros(k)),
            (None, Some(_)) => Err(Error::invalid("target_nonzeros must be ≥ 1")),
            _ => Err(Error::invalid(
                "exactly one of rho and target_nonzeros must be set",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stopping {
    Rho(f64),
    Nonzeros(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// The iteration budget ran out before the stopping rule was met.
    PartialPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathEvent {
    Enter,
    Drop,
}

/// One breakpoint of the LARS path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub step: usize,
    pub feature: usize,
    pub event: PathEvent,
    /// Correlation bound at the breakpoint.
    pub lambda: f64,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub beta: Vec<f64>,
    pub path: Vec<PathStep>,
    /// Regularization level at which `beta` is optimal.
    pub lambda: f64,
    pub status: SolveStatus,
}

impl Coefficients {
    pub fn support(&self) -> Vec<usize> {
        support(&self.beta, 0.0)
    }

    pub fn is_partial(&self) -> bool {
        self.status == SolveStatus::PartialPath
    }
}

/// Indices with `value > threshold`.
pub fn support(values: &[f64], threshold: f64) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Indices of the `k` largest strictly positive entries, descending, ties
/// broken by ascending index. May return fewer than `k`.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = support(values, 0.0);
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Largest violation of the optimality conditions of
/// `min ½βᵀGβ − cᵀβ + ρ‖β‖₁, β ≥ 0`:
/// active coordinates need `c_k − (Gβ)_k = ρ`, inactive ones `≤ ρ`.
pub fn kkt_violation(gram: &Array2<f64>, xty: &Array1<f64>, beta: &[f64], rho: f64) -> f64 {
    let b = Array1::from(beta.to_vec());
    let corr = xty - &gram.dot(&b);
    corr.iter()
        .zip(beta)
        .map(|(&c, &bk)| {
            if bk > 0.0 {
                (c - rho).abs()
            } else {
                (c - rho).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
