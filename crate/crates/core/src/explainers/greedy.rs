use super::{ExplainerConfig, Explanation, Method};
use crate::error::Result;
use crate::graph::Graph;
use crate::predictor::{argmax, Predictor};

/// Repeatedly zeroes (for every node) the feature column whose removal most
/// lowers the probability of `v`'s original class. Stops once the argmax
/// changes or after `greedy_max_removals` (default `top_k`) removals.
pub fn explain_greedy<P: Predictor + ?Sized>(
    predictor: &P,
    graph: &Graph,
    v: usize,
    config: &ExplainerConfig,
) -> Result<Explanation> {
    config.validate()?;
    graph.check_node(v)?;
    let d = graph.feature_count();
    let max_removals = config.greedy_max_removals.unwrap_or(config.top_k).min(d);

    let mut features = graph.features().clone();
    let start = predictor.predict(graph, Some(&features), v)?;
    let class = argmax(start.view());
    let mut current = start[class];
    let mut removed = vec![false; d];
    let mut selected = Vec::new();
    let mut weights = Vec::new();

    while selected.len() < max_removals {
        let mut best: Option<(usize, f64, usize)> = None;
        for j in (0..d).filter(|&j| !removed[j]) {
            let saved = features.column(j).to_owned();
            features.column_mut(j).fill(0.0);
            let probs = predictor.predict(graph, Some(&features), v)?;
            features.column_mut(j).assign(&saved);
            let drop = current - probs[class];
            if best.is_none_or(|(_, b, _)| drop > b) {
                best = Some((j, drop, argmax(probs.view())));
            }
        }
        let Some((j, drop, new_class)) = best else { break };
        features.column_mut(j).fill(0.0);
        removed[j] = true;
        selected.push(j);
        weights.push(drop);
        current -= drop;
        if new_class != class {
            break;
        }
    }

    Ok(Explanation {
        node: v,
        method: Method::Greedy,
        selected,
        weights,
        beta: None,
        n: 0,
        config: *config,
    })
}
