use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::explainers::Explanation;

/// Local importances of a set of explained instances, one row each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationMatrix {
    pub w: Array2<f64>,
    pub instance_ids: Vec<usize>,
}

impl ExplanationMatrix {
    /// Row `i` holds `|weight|` of each selected feature of explanation `i`.
    pub fn from_explanations(explanations: &[Explanation], d: usize) -> Self {
        let mut w = Array2::zeros((explanations.len(), d));
        for (i, e) in explanations.iter().enumerate() {
            w.row_mut(i).assign(&Array1::from(e.importance_row(d)));
        }
        ExplanationMatrix {
            w,
            instance_ids: explanations.iter().map(|e| e.node).collect(),
        }
    }
}

/// `I_j = √(Σ_i W_ij)`.
pub fn global_importance(w: &ExplanationMatrix) -> Result<Array1<f64>> {
    if w.w.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::ContractViolation(
            "explanation matrix entries must be nonnegative".into(),
        ));
    }
    Ok(w.w.sum_axis(ndarray::Axis(0)).mapv(f64::sqrt))
}

/// `Σ_j 1[∃ i ∈ V : W_ij > 0] · I_j`.
pub fn coverage_score(v: &[usize], w: &ExplanationMatrix, importance: &Array1<f64>) -> f64 {
    (0..w.w.ncols())
        .filter(|&j| v.iter().any(|&i| w.w[[i, j]] > 0.0))
        .map(|j| importance[j])
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pick {
    /// Row indices into the explanation matrix, in pick order.
    pub picks: Vec<usize>,
    /// The budget exceeded the number of instances, so all were picked.
    pub truncated: bool,
}

/// Greedy coverage maximization: adds the instance with the largest
/// marginal gain until `budget` instances are chosen, ties to the lowest
/// row index.
pub fn submodular_pick(w: &ExplanationMatrix, importance: &Array1<f64>, budget: usize) -> Result<Pick> {
    if budget == 0 {
        return Err(Error::invalid("pick budget must be at least 1"));
    }
    let (n, d) = w.w.dim();
    if importance.len() != d {
        return Err(Error::Shape {
            expected: format!("{d} importances"),
            actual: format!("{}", importance.len()),
        });
    }
    let mut covered = vec![false; d];
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(budget.min(n));
    while picks.len() < budget.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let gain: f64 = (0..d)
                .filter(|&j| !covered[j] && w.w[[i, j]] > 0.0)
                .map(|j| importance[j])
                .sum();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, _) = best.expect("an unchosen instance remains");
        chosen[i] = true;
        for j in 0..d {
            covered[j] |= w.w[[i, j]] > 0.0;
        }
        picks.push(i);
    }
    Ok(Pick { picks, truncated: budget > n })
}
