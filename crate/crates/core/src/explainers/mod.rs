//! Explanation methods behind one entry point, [`explain`].
//!
//! * [`Method::Graphlime`]: HSIC Lasso over the node's N-hop neighborhood.
//! * [`Method::LimeLinear`]: proximity-weighted lasso over Gaussian
//!   perturbations of the node's own feature row.
//! * [`Method::Greedy`]: removes the most contributory feature column until
//!   the predicted class changes.
//! * [`Method::Random`]: a uniform draw of K features.

mod graphlime;
mod greedy;
mod lime;
mod random;

pub use graphlime::explain_graphlime;
pub use greedy::explain_greedy;
pub use lime::explain_linear_lime;
pub use random::explain_random;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{KernelConfig, Width};
use crate::predictor::Predictor;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Graphlime,
    LimeLinear,
    Greedy,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Graphlime, Method::LimeLinear, Method::Greedy, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Graphlime => "graphlime",
            Method::LimeLinear => "lime_linear",
            Method::Greedy => "greedy",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
                Error::invalid(format!("unknown method {s:?}; valid methods: {}", valid.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub samples: usize,
    /// Perturbation standard deviation as a multiple of each feature's
    /// standard deviation over the graph.
    pub scale: f64,
    /// `auto` is `√d · median(feature std)`.
    pub width: Width,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig { samples: 500, scale: 0.5, width: Width::Auto }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub hops: usize,
    pub top_k: usize,
    pub kernel: KernelConfig,
    /// When neither `rho` nor `target_nonzeros` is set, the path stops at
    /// `top_k` nonzeros.
    pub solver: SolverConfig,
    pub lime: LimeConfig,
    /// Defaults to `top_k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greedy_max_removals: Option<usize>,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            hops: 2,
            top_k: 10,
            kernel: KernelConfig::default(),
            solver: SolverConfig::default(),
            lime: LimeConfig::default(),
            greedy_max_removals: None,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        if self.hops == 0 {
            return Err(Error::invalid("hops must be at least 1"));
        }
        if !(self.lime.scale.is_finite() && self.lime.scale >= 0.0) {
            return Err(Error::invalid("lime scale must be finite and nonnegative"));
        }
        self.lime.width.check()?;
        self.kernel.validate()?;
        self.resolved_solver().stopping()?;
        Ok(())
    }

    pub(crate) fn resolved_solver(&self) -> SolverConfig {
        let mut solver = self.solver;
        if solver.rho.is_none() && solver.target_nonzeros.is_none() {
            solver.target_nonzeros = Some(self.top_k);
        }
        solver
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub node: usize,
    pub method: Method,
    /// Ranked feature indices, at most K.
    pub selected: Vec<usize>,
    /// One weight per entry of `selected`: the coefficient for the two
    /// surrogate methods, the probability drop for greedy, 1 for random.
    pub weights: Vec<f64>,
    /// Full coefficient vector of the surrogate fit, when there is one.
    pub beta: Option<Vec<f64>>,
    /// Number of samples the surrogate was fitted on.
    pub n: usize,
    pub config: ExplainerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub index: usize,
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub node: usize,
    pub method: Method,
    pub selected: Vec<SelectedFeature>,
    pub n: usize,
    pub config_digest: String,
}

impl Explanation {
    pub fn record(&self, graph: &Graph) -> ExplanationRecord {
        ExplanationRecord {
            node: self.node,
            method: self.method,
            selected: self
                .selected
                .iter()
                .zip(&self.weights)
                .map(|(&index, &weight)| SelectedFeature { index, name: graph.feature_name(index), weight })
                .collect(),
            n: self.n,
            config_digest: self.config.digest(),
        }
    }

    pub fn to_json(&self, graph: &Graph) -> String {
        serde_json::to_string_pretty(&self.record(graph)).expect("record serializes")
    }

    /// Nonnegative importance of every feature: zero outside `selected`.
    pub fn importance_row(&self, d: usize) -> Vec<f64> {
        let mut row = vec![0.0; d];
        for (&j, &w) in self.selected.iter().zip(&self.weights) {
            row[j] = w.abs();
        }
        row
    }
}

/// Runs `method` on node `v`.
pub fn explain<P: Predictor + ?Sized>(
    method: Method,
    predictor: &P,
    graph: &Graph,
    v: usize,
    config: &ExplainerConfig,
) -> Result<Explanation> {
    match method {
        Method::Graphlime => explain_graphlime(predictor, graph, v, config),
        Method::LimeLinear => explain_linear_lime(predictor, graph, v, config),
        Method::Greedy => explain_greedy(predictor, graph, v, config),
        Method::Random => {
            graph.check_node(v)?;
            let mut e = explain_random(v, graph.feature_count(), config.top_k, config.seed)?;
            e.config = *config;
            Ok(e)
        }
    }
}

/// Per-node stream seed: SplitMix64 finalizer over `seed` and `node`.
pub(crate) fn mix_seed(seed: u64, node: u64) -> u64 {
    let mut z = seed ^ node.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
