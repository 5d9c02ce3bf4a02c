use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{mix_seed, ExplainerConfig, Explanation, Method};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::Width;
use crate::predictor::{argmax, Predictor};
use crate::solver::{lars_path, LarsInput};

/// Fits a proximity-weighted lasso to the predictor's response when the
/// feature row of `v` alone is perturbed.
///
/// Perturbations are Gaussian with per-feature standard deviation
/// `scale · std_j`; the regression target is the probability of `v`'s
/// originally predicted class. Coefficients are expressed per perturbation
/// standard deviation and ranked by magnitude.
pub fn explain_linear_lime<P: Predictor + ?Sized>(
    predictor: &P,
    graph: &Graph,
    v: usize,
    config: &ExplainerConfig,
) -> Result<Explanation> {
    config.validate()?;
    graph.check_node(v)?;
    let d = graph.feature_count();
    let samples = config.lime.samples;
    if samples * 10 < d || samples < 2 {
        return Err(Error::invalid(format!(
            "{samples} perturbations are too few for {d} features"
        )));
    }

    let stds = graph.features().std_axis(Axis(0), 0.0);
    let scales = stds.mapv(|s| s * config.lime.scale);
    if scales.iter().all(|&s| s == 0.0) {
        return Err(Error::DegenerateFit(format!(
            "all perturbations of node {v} are identical"
        )));
    }
    let width = match config.lime.width {
        Width::Fixed(w) => w,
        Width::Auto => {
            let mut sorted = stds.to_vec();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            let w = (d as f64).sqrt() * median;
            if w > 0.0 { w } else { 1.0 }
        }
    };

    let mut features = graph.features().clone();
    let original = features.row(v).to_owned();
    let class = argmax(predictor.predict(graph, Some(&features), v)?.view());

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, v as u64));
    let mut z = Array2::<f64>::zeros((samples, d));
    let mut target = Array1::<f64>::zeros(samples);
    let mut proximity = Array1::<f64>::zeros(samples);
    for s in 0..samples {
        let mut dist2 = 0.0;
        for j in 0..d {
            let e: f64 = StandardNormal.sample(&mut rng);
            if scales[j] > 0.0 {
                z[[s, j]] = e;
                let delta = e * scales[j];
                features[[v, j]] = original[j] + delta;
                dist2 += delta * delta;
            }
        }
        target[s] = predictor.predict(graph, Some(&features), v)?[class];
        proximity[s] = (-dist2 / (width * width)).exp();
    }

    let total: f64 = proximity.sum();
    let x_mean = z.t().dot(&proximity) / total;
    let y_mean = target.dot(&proximity) / total;
    let root_w = proximity.mapv(f64::sqrt);
    let xw = (&z - &x_mean) * &root_w.view().insert_axis(Axis(1));
    let yw = (&target - y_mean) * &root_w;
    if yw.iter().all(|&y| y.abs() < 1e-15) {
        return Err(Error::DegenerateFit(format!(
            "the predicted probability of node {v} does not respond to perturbation"
        )));
    }

    let gram = xw.t().dot(&xw);
    let xty = xw.t().dot(&yw);
    let eligible: Vec<bool> = scales.iter().map(|&s| s > 0.0).collect();
    let coefficients = lars_path(
        &LarsInput { gram: &gram, xty: &xty, eligible: &eligible, positive: false },
        &config.resolved_solver(),
    )?;
    let beta = coefficients.beta;
    let magnitude: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
    let selected = crate::solver::top_k(&magnitude, config.top_k);
    let weights = selected.iter().map(|&j| beta[j]).collect();
    Ok(Explanation {
        node: v,
        method: Method::LimeLinear,
        selected,
        weights,
        beta: Some(beta),
        n: samples,
        config: *config,
    })
}
