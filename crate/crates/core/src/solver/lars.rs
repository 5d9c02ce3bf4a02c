use ndarray::{Array1, Array2};

use super::{Coefficients, PathEvent, PathStep, SolveStatus, SolverConfig, Stopping};
use crate::error::{Error, Result};
use crate::hsic::HsicProblem;
use crate::linalg::solve_spd;

/// A least-squares problem in Gram form: `G = XᵀX`, `xty = Xᵀy`.
#[derive(Debug, Clone, Copy)]
pub struct LarsInput<'a> {
    pub gram: &'a Array2<f64>,
    pub xty: &'a Array1<f64>,
    /// Features allowed to enter the model.
    pub eligible: &'a [bool],
    /// Constrain every coefficient to stay `≥ 0`.
    pub positive: bool,
}

/// Traces the nonnegative LARS-lasso path of the HSIC Lasso problem.
///
/// The vectorized regression has response `vec(L̄)` and design columns
/// `vec(K̄_k)`, so its Gram form is exactly the problem's NHSIC tables.
pub fn solve_nonnegative_lars(problem: &HsicProblem, config: &SolverConfig) -> Result<Coefficients> {
    let eligible: Vec<bool> = (0..problem.d()).map(|k| !problem.is_degenerate(k)).collect();
    lars_path(
        &LarsInput {
            gram: problem.redundancy(),
            xty: problem.relevance(),
            eligible: &eligible,
            positive: true,
        },
        config,
    )
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Stop,
    Enter(usize),
    Drop(usize),
}

/// LARS with the lasso modification, optionally sign-constrained.
///
/// With `target_nonzeros = K` the path is followed until a (K+1)-th feature
/// would enter, so the returned solution has K nonzero coefficients whenever
/// the path reaches that far. With `rho` the path stops where the common
/// active correlation equals `rho`.
pub fn lars_path(input: &LarsInput<'_>, config: &SolverConfig) -> Result<Coefficients> {
    let LarsInput {
        gram,
        xty,
        eligible,
        positive,
    } = *input;
    let d = xty.len();
    if gram.dim() != (d, d) || eligible.len() != d {
        return Err(Error::Shape {
            expected: format!("{d} × {d} Gram and {d} eligibility flags"),
            actual: format!("{:?} and {}", gram.dim(), eligible.len()),
        });
    }
    let stopping = config.stopping()?;
    let (floor, max_active) = match stopping {
        Stopping::Rho(rho) => (rho, usize::MAX),
        Stopping::Nonzeros(k) => (0.0, k),
    };
    let max_steps = config.max_iterations.unwrap_or(4 * d).max(1);
    let score = |c: f64| if positive { c } else { c.abs() };

    let mut beta = vec![0.0; d];
    let mut path = Vec::new();

    let mut first: Option<(usize, f64)> = None;
    for j in (0..d).filter(|&j| eligible[j]) {
        if first.is_none_or(|(_, best)| score(xty[j]) > best) {
            first = Some((j, score(xty[j])));
        }
    }
    let Some((first, mut lambda)) = first.filter(|&(_, s)| s > floor) else {
        return Ok(Coefficients {
            beta,
            path,
            lambda: floor,
            status: SolveStatus::Converged,
        });
    };

    let mut active = vec![first];
    let mut signs = vec![if positive { 1.0 } else { xty[first].signum() }];
    path.push(PathStep {
        step: 0,
        feature: first,
        event: PathEvent::Enter,
        lambda,
        beta: beta.clone(),
    });

    let mut just_dropped: Option<usize> = None;
    let mut status = SolveStatus::PartialPath;
    for step in 1..=max_steps {
        let m = active.len();
        let sub_gram = Array2::from_shape_fn((m, m), |(i, j)| gram[[active[i], active[j]]]);
        let Some(direction) = solve_spd(&sub_gram, &Array1::from(signs.clone())) else {
            break;
        };
        let beta_vec = Array1::from(beta.clone());
        let corr = xty - &gram.dot(&beta_vec);
        // rate at which each correlation falls per unit step
        let rate: Array1<f64> = (0..d)
            .map(|j| {
                active
                    .iter()
                    .zip(direction.iter())
                    .map(|(&a, &w)| gram[[j, a]] * w)
                    .sum()
            })
            .collect();

        let mut gamma = (lambda - floor).max(0.0);
        let mut event = Event::Stop;
        let consider = |g: f64, ev: Event, gamma: &mut f64, event: &mut Event| {
            let g = if g < 0.0 && g > -1e-12 { 0.0 } else { g };
            if g >= 0.0 && g < *gamma {
                *gamma = g;
                *event = ev;
            }
        };
        for j in 0..d {
            if !eligible[j] || active.contains(&j) || just_dropped == Some(j) {
                continue;
            }
            let down = 1.0 - rate[j];
            if down > 1e-12 {
                consider((lambda - corr[j]) / down, Event::Enter(j), &mut gamma, &mut event);
            }
            if !positive {
                let up = 1.0 + rate[j];
                if up > 1e-12 {
                    consider((lambda + corr[j]) / up, Event::Enter(j), &mut gamma, &mut event);
                }
            }
        }
        for (pos, (&k, &w)) in active.iter().zip(direction.iter()).enumerate() {
            if w != 0.0 && beta[k] * w < 0.0 {
                let g = -beta[k] / w;
                if g > 0.0 && g < gamma {
                    gamma = g;
                    event = Event::Drop(pos);
                }
            }
        }
        if let Event::Enter(_) = event {
            if active.len() >= max_active {
                event = Event::Stop;
            }
        }

        for (&k, &w) in active.iter().zip(direction.iter()) {
            beta[k] += gamma * w;
        }
        lambda -= gamma;

        match event {
            Event::Stop => {
                status = SolveStatus::Converged;
                break;
            }
            Event::Enter(j) => {
                let c = corr[j] - gamma * rate[j];
                active.push(j);
                signs.push(if positive { 1.0 } else { c.signum() });
                just_dropped = None;
                path.push(PathStep {
                    step,
                    feature: j,
                    event: PathEvent::Enter,
                    lambda,
                    beta: beta.clone(),
                });
            }
            Event::Drop(pos) => {
                let k = active.remove(pos);
                signs.remove(pos);
                beta[k] = 0.0;
                just_dropped = Some(k);
                path.push(PathStep {
                    step,
                    feature: k,
                    event: PathEvent::Drop,
                    lambda,
                    beta: beta.clone(),
                });
                if active.is_empty() {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
    }
    if positive {
        for b in &mut beta {
            *b = b.max(0.0);
        }
    }
    Ok(Coefficients {
        beta,
        path,
        lambda: lambda.max(0.0),
        status,
    })
}
