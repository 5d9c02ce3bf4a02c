use serde::{Deserialize, Serialize};

use super::{explain_nodes, methods_tag, to_csv, ModelFactory, SkippedNode, Split};
use crate::error::{Error, Result};
use crate::explainers::{ExplainerConfig, Method};
use crate::graph::{inject_noise_features, Graph};
use crate::predictor::accuracy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub noise_count: usize,
    /// Explain at most this many test nodes, in split order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub accuracy_gate: f64,
    pub retries: usize,
    pub explainer: ExplainerConfig,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            noise_count: 10,
            nodes: None,
            accuracy_gate: 0.8,
            retries: 25,
            explainer: ExplainerConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCount {
    pub node: usize,
    pub noisy_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodNoise {
    pub method: Method,
    pub counts: Vec<NodeCount>,
    pub mean: f64,
    /// `histogram[c]` nodes had exactly `c` noisy features selected.
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub seed: u64,
    pub top_k: usize,
    pub noise_count: usize,
    pub noisy_indices: Vec<usize>,
    pub test_accuracy: Option<f64>,
    pub training_attempts: usize,
    pub methods: Vec<MethodNoise>,
    pub skipped: Vec<SkippedNode>,
    pub notes: Vec<String>,
}

impl NoiseReport {
    pub fn method(&self, method: Method) -> Option<&MethodNoise> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn file_stem(&self) -> String {
        let methods: Vec<Method> = self.methods.iter().map(|m| m.method).collect();
        format!("noise_{}_k{}_seed{}", methods_tag(&methods), self.top_k, self.seed)
    }

    /// Columns `node_id,method,noisy_count`.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row {
            node_id: usize,
            method: Method,
            noisy_count: usize,
        }
        to_csv(self.methods.iter().flat_map(|m| {
            m.counts.iter().map(move |c| Row { node_id: c.node, method: m.method, noisy_count: c.noisy_count })
        }))
    }
}

/// Appends `noise_count` noise columns, trains a classifier that passes the
/// accuracy gate (retrying with incremented seeds), explains test nodes with
/// every method and counts how many selected features are noise.
pub fn run_noise_experiment<F: ModelFactory>(
    graph: &Graph,
    split: &Split,
    factory: &F,
    methods: &[Method],
    config: &NoiseConfig,
) -> Result<NoiseReport> {
    let explainer = ExplainerConfig { seed: config.seed, ..config.explainer };
    explainer.validate()?;
    let mut report = NoiseReport {
        seed: config.seed,
        top_k: explainer.top_k,
        noise_count: config.noise_count,
        noisy_indices: Vec::new(),
        test_accuracy: None,
        training_attempts: 0,
        methods: Vec::new(),
        skipped: Vec::new(),
        notes: vec![
            "noise columns mimic the pooled marginal of the original features".into(),
            "lime_linear: Gaussian perturbations of the explained row, proximity-weighted signed lasso".into(),
        ],
    };
    if methods.is_empty() {
        return Ok(report);
    }

    let (augmented, noisy) = if config.noise_count == 0 {
        (graph.clone(), Vec::new())
    } else {
        let (g, injection) = inject_noise_features(graph, config.noise_count, config.seed)?;
        (g, injection.noisy_indices)
    };
    report.noisy_indices = noisy.clone();

    let mut best = f64::NEG_INFINITY;
    let mut model = None;
    for attempt in 0..config.retries.max(1) {
        let seed = config.seed.wrapping_add(attempt as u64);
        let candidate = factory.train(&augmented, &split.train_ids, &split.test_ids, seed)?;
        let acc = accuracy(&candidate, &augmented, &split.test_ids)?;
        report.training_attempts = attempt + 1;
        best = best.max(acc);
        if acc >= config.accuracy_gate {
            report.test_accuracy = Some(acc);
            model = Some(candidate);
            break;
        }
    }
    let Some(model) = model else {
        return Err(Error::GateUnmet {
            attempts: report.training_attempts,
            detail: format!("best test accuracy {best:.4} < gate {}", config.accuracy_gate),
        });
    };

    let limit = config.nodes.unwrap_or(split.test_ids.len());
    let nodes = &split.test_ids[..limit.min(split.test_ids.len())];
    for &method in methods {
        let (explanations, skipped) = explain_nodes(method, &model, &augmented, nodes, &explainer)?;
        report.skipped.extend(skipped);
        let counts: Vec<NodeCount> = explanations
            .iter()
            .map(|e| NodeCount {
                node: e.node,
                noisy_count: e.selected.iter().filter(|j| noisy.binary_search(j).is_ok()).count(),
            })
            .collect();
        let mut histogram = vec![0; explainer.top_k + 1];
        for c in &counts {
            histogram[c.noisy_count] += 1;
        }
        let mean = if counts.is_empty() {
            0.0
        } else {
            counts.iter().map(|c| c.noisy_count as f64).sum::<f64>() / counts.len() as f64
        };
        report.methods.push(MethodNoise { method, counts, mean, histogram });
    }
    Ok(report)
}
