//! Simulated-user experiments over explanations, and Submodular Pick.

mod noise;
mod pick;
mod select;
mod trust;

pub use noise::{run_noise_experiment, MethodNoise, NodeCount, NoiseConfig, NoiseReport};
pub use pick::{coverage_score, global_importance, submodular_pick, ExplanationMatrix, Pick};
pub use select::{
    run_model_selection, MethodSelection, ModelSelectConfig, ModelSelectReport, PairRecord,
    SelectionRecord,
};
pub use trust::{run_trust_experiment, MethodTrust, RoundScore, TrustConfig, TrustReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::{explain, ExplainerConfig, Explanation, Method};
use crate::graph::Graph;
use crate::predictor::{train_reference_gnn, Predictor, ReferenceGnn, TrainConfig};

/// Something that can fit a classifier for the experiments.
pub trait ModelFactory: Sync {
    type Model: Predictor;

    fn train(&self, graph: &Graph, train_ids: &[usize], test_ids: &[usize], seed: u64) -> Result<Self::Model>;
}

impl ModelFactory for TrainConfig {
    type Model = ReferenceGnn;

    fn train(&self, graph: &Graph, train_ids: &[usize], test_ids: &[usize], seed: u64) -> Result<ReferenceGnn> {
        train_reference_gnn(graph, train_ids, test_ids, &TrainConfig { seed, ..*self })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

/// A node an explainer could not explain, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedNode {
    pub node: usize,
    pub method: Method,
    pub reason: String,
}

/// Confusion counts with "trustworthy" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl BinaryCounts {
    pub fn add(&mut self, predicted_positive: bool, actual_positive: bool) {
        match (predicted_positive, actual_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// 1 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 1 when nothing was actually positive.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Explains every node in parallel; errors that only concern one node
/// (too small a neighborhood, a constant fit) are collected as skips.
pub(crate) fn explain_nodes<P: Predictor + ?Sized>(
    method: Method,
    predictor: &P,
    graph: &Graph,
    nodes: &[usize],
    config: &ExplainerConfig,
) -> Result<(Vec<Explanation>, Vec<SkippedNode>)> {
    use rayon::prelude::*;
    let results: Vec<Result<Explanation>> = nodes
        .par_iter()
        .map(|&v| explain(method, predictor, graph, v, config))
        .collect();
    let mut explanations = Vec::new();
    let mut skipped = Vec::new();
    for (&node, r) in nodes.iter().zip(results) {
        match r {
            Ok(e) => explanations.push(e),
            Err(e @ (Error::InsufficientNeighbors { .. } | Error::DegenerateProblem(_) | Error::DegenerateFit(_))) => {
                skipped.push(SkippedNode { node, method, reason: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((explanations, skipped))
}

/// Writes rows through the `csv` crate into an in-memory buffer.
pub(crate) fn to_csv<S: Serialize>(rows: impl IntoIterator<Item = S>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::invalid(format!("csv encoding failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub(crate) fn methods_tag(methods: &[Method]) -> String {
    if methods.is_empty() {
        "none".into()
    } else {
        methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join("-")
    }
}
