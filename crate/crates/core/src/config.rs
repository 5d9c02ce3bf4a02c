//! The single JSON run configuration shared by every command, and the run
//! manifest written next to each command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ModelSelectConfig, NoiseConfig, Split, TrustConfig};
use crate::explainers::{ExplainerConfig, Method};
use crate::graph::{load_graph, Graph, GraphFiles};
use crate::predictor::TrainConfig;
use crate::synthetic::SyntheticConfig;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding `edges.tsv`, `features.csv`, `labels.txt` and
    /// optionally `split.json`; the explicit paths below take precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    /// Used for a seeded random split when no split file is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Noise,
    Trust,
    ModelSelect,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Experiment::Noise),
            "trust" => Ok(Experiment::Trust),
            "model-select" => Ok(Experiment::ModelSelect),
            _ => Err(Error::invalid(format!(
                "unknown experiment {s:?}; valid experiments: noise, trust, model-select"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub method: Method,
    /// Defaults to the test nodes of the split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection { method: Method::Graphlime, nodes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub methods: Vec<Method>,
    /// Noise columns appended before training the trust experiment's model.
    pub trust_noise_count: usize,
    pub noise: NoiseConfig,
    pub trust: TrustConfig,
    pub model_select: ModelSelectConfig,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            experiment: None,
            methods: Method::ALL.to_vec(),
            trust_noise_count: 10,
            noise: NoiseConfig::default(),
            trust: TrustConfig::default(),
            model_select: ModelSelectConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PickSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    pub method: Method,
    /// Defaults to the test nodes of the split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<usize>>,
}

impl Default for PickSection {
    fn default() -> Self {
        PickSection { budget: None, method: Method::Graphlime, candidates: None }
    }
}

/// Every setting of every command. Nested `seed` fields and the explainer
/// blocks of the experiments are overwritten from the top-level `seed` and
/// `explainer` when the config is resolved.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub data: DataConfig,
    /// Model file read by `explain` and `pick`; `train` writes `model.json`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub train: TrainConfig,
    pub explainer: ExplainerConfig,
    pub explain: ExplainSection,
    pub eval: EvalSection,
    pub pick: PickSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl RunConfig {
    /// Reads a config file, or the `config` of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("artifact_version") => {
                map.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    /// The seed, which has no default.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("a seed is required: pass --seed or set \"seed\" in the config"))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Propagates the top-level seed and explainer into every nested block.
    pub fn resolve(&mut self) -> Result<()> {
        let seed = self.seed()?;
        self.train.seed = seed;
        self.explainer.seed = seed;
        self.explainer.validate()?;
        for (explainer, nested_seed) in [
            (&mut self.eval.noise.explainer, &mut self.eval.noise.seed),
            (&mut self.eval.trust.explainer, &mut self.eval.trust.seed),
            (&mut self.eval.model_select.explainer, &mut self.eval.model_select.seed),
        ] {
            *explainer = self.explainer;
            *nested_seed = seed;
        }
        Ok(())
    }

    pub fn manifest(&self, command: &str) -> Result<Manifest> {
        Ok(Manifest {
            artifact_version: ARTIFACT_VERSION.into(),
            command: command.into(),
            seed: self.seed()?,
            config: self.clone(),
        })
    }

    pub fn graph_files(&self) -> Result<GraphFiles> {
        let from_dir = self.data.dir.as_deref().map(GraphFiles::in_dir);
        let pick = |explicit: &Option<PathBuf>, fallback: Option<PathBuf>, what: &str| {
            explicit
                .clone()
                .or(fallback)
                .ok_or_else(|| Error::invalid(format!("no {what} file: set data.dir or data.{what}")))
        };
        Ok(GraphFiles {
            edges: pick(&self.data.edges, from_dir.as_ref().map(|f| f.edges.clone()), "edges")?,
            features: pick(&self.data.features, from_dir.as_ref().map(|f| f.features.clone()), "features")?,
            labels: self
                .data
                .labels
                .clone()
                .or_else(|| from_dir.and_then(|f| f.labels).filter(|p| p.exists())),
        })
    }

    pub fn load_graph(&self) -> Result<Graph> {
        let files = self.graph_files()?;
        for path in [Some(&files.edges), Some(&files.features), files.labels.as_ref()].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        load_graph(&files.edges, &files.features, files.labels.as_deref())
    }

    /// The split file if one is configured or present in the data directory,
    /// otherwise a seeded random split.
    pub fn split(&self, graph: &Graph) -> Result<Split> {
        let file = self
            .data
            .split
            .clone()
            .or_else(|| self.data.dir.as_ref().map(|d| d.join("split.json")).filter(|p| p.exists()));
        let split = match file {
            Some(path) => {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?
            }
            None => random_split(graph.node_count(), self.data.train_fraction.unwrap_or(0.8), self.seed()?)?,
        };
        validate_split(&split, graph)?;
        Ok(split)
    }
}

fn random_split(n: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if !(train_fraction > 0.0 && train_fraction < 1.0) || n < 2 {
        return Err(Error::invalid("train_fraction must lie in (0, 1) and the graph needs 2 nodes"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut train_ids = order[..cut].to_vec();
    let mut test_ids = order[cut..].to_vec();
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    Ok(Split { train_ids, test_ids })
}

fn validate_split(split: &Split, graph: &Graph) -> Result<()> {
    let mut seen = vec![false; graph.node_count()];
    for &v in split.train_ids.iter().chain(&split.test_ids) {
        if v >= graph.node_count() {
            return Err(Error::Bounds { id: v, node_count: graph.node_count() });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::Consistency(format!("node {v} appears twice in the split")));
        }
    }
    if split.train_ids.is_empty() || split.test_ids.is_empty() {
        return Err(Error::Consistency("train and test sets must both be nonempty".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_needs_a_seed() {
        let mut c: RunConfig = serde_json::from_str("{}").unwrap();
        assert!(c.resolve().is_err());
        c.seed = Some(4);
        c.resolve().unwrap();
        assert_eq!(c.train.seed, 4);
        assert_eq!(c.eval.trust.seed, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn manifest_round_trips_through_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig { seed: Some(9), ..Default::default() };
        c.explainer.top_k = 4;
        c.eval.experiment = Some(Experiment::ModelSelect);
        c.resolve().unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string(&c.manifest("eval").unwrap()).unwrap()).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), c);
    }

    #[test]
    fn experiment_names() {
        assert_eq!("model-select".parse::<Experiment>().unwrap(), Experiment::ModelSelect);
        assert_eq!(serde_json::to_string(&Experiment::ModelSelect).unwrap(), "\"model-select\"");
        assert!("fidelity".parse::<Experiment>().is_err());
    }

    #[test]
    fn random_split_is_seeded_and_disjoint() {
        let a = random_split(50, 0.8, 3).unwrap();
        assert_eq!(a, random_split(50, 0.8, 3).unwrap());
        assert_eq!(a.train_ids.len(), 40);
        assert!(a.test_ids.iter().all(|v| !a.train_ids.contains(v)));
    }
}
