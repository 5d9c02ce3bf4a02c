use ndarray::Array1;

use super::{Coefficients, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::hsic::HsicProblem;

/// Projected (proximal) gradient descent on the HSIC Lasso objective.
///
/// Each iteration takes a gradient step on the smooth part and applies the
/// nonnegative soft-threshold `max(0, z − tρ)`. The step size is the inverse
/// of a Gershgorin bound on the largest eigenvalue of the NHSIC table.
pub fn solve_projected_gradient(
    problem: &HsicProblem,
    rho: f64,
    config: &SolverConfig,
) -> Result<Coefficients> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho must be > 0, got {rho}")));
    }
    let gram = problem.redundancy();
    let xty = problem.relevance();
    let d = problem.d();
    let max_iterations = config.max_iterations.unwrap_or(1_000_000);
    let tol = config.tolerance;

    let lipschitz = gram
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;
    let smooth = |b: &Array1<f64>| 0.5 * b.dot(&gram.dot(b)) - b.dot(xty) + rho * b.sum();

    let mut beta = Array1::<f64>::zeros(d);
    let mut value = smooth(&beta);
    let mut status = SolveStatus::PartialPath;
    for _ in 0..max_iterations {
        let grad = gram.dot(&beta) - xty;
        let mut next = &beta - &(step * &grad);
        for (k, b) in next.iter_mut().enumerate() {
            *b = if problem.is_degenerate(k) {
                0.0
            } else {
                (*b - step * rho).max(0.0)
            };
        }
        let next_value = smooth(&next);
        let moved = next
            .iter()
            .zip(beta.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let decrease = value - next_value;
        beta = next;
        value = next_value;
        if decrease.abs() < tol && moved < tol.sqrt() {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok(Coefficients {
        beta: beta.to_vec(),
        path: Vec::new(),
        lambda: rho,
        status,
    })
}
