use super::{ExplainerConfig, Explanation, Method};
use crate::error::Result;
use crate::graph::{assemble_local_sample, n_hop_neighborhood, Graph};
use crate::hsic::HsicProblem;
use crate::predictor::Predictor;
use crate::solver::{solve_nonnegative_lars, top_k};

/// Samples the N-hop neighborhood of `v`, queries the predictor on every
/// sampled node, solves the nonnegative HSIC Lasso and keeps the `top_k`
/// largest coefficients.
pub fn explain_graphlime<P: Predictor + ?Sized>(
    predictor: &P,
    graph: &Graph,
    v: usize,
    config: &ExplainerConfig,
) -> Result<Explanation> {
    config.validate()?;
    let nodes = n_hop_neighborhood(graph, v, config.hops)?;
    let outputs = predictor.predict_nodes(graph, None, &nodes)?;
    let sample = assemble_local_sample(graph, &nodes, outputs)?;
    let problem = HsicProblem::build(&sample, &config.kernel, graph)?;
    let coefficients = solve_nonnegative_lars(&problem, &config.resolved_solver())?;
    let selected = top_k(&coefficients.beta, config.top_k);
    let weights = selected.iter().map(|&j| coefficients.beta[j]).collect();
    Ok(Explanation {
        node: v,
        method: Method::Graphlime,
        selected,
        weights,
        beta: Some(coefficients.beta),
        n: sample.len(),
        config: *config,
    })
}
