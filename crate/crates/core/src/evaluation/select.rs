use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    explain_nodes, global_importance, methods_tag, submodular_pick, to_csv, ExplanationMatrix,
    ModelFactory, SkippedNode, Split,
};
use crate::error::{Error, Result};
use crate::explainers::{mix_seed, ExplainerConfig, Method};
use crate::graph::{inject_noise_features, Graph};
use crate::predictor::accuracy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSelectConfig {
    pub rounds: usize,
    pub b_values: Vec<usize>,
    pub noise_count: usize,
    /// Both classifiers need train and test accuracy above this.
    pub min_accuracy: f64,
    /// Their test accuracies must differ by more than this.
    pub min_gap: f64,
    pub retries: usize,
    /// Each candidate classifier trains on a copy of the graph whose noise
    /// columns carry a class-dependent mean shift, in noise standard
    /// deviations, on training nodes only. The shift is drawn uniformly
    /// from this range per candidate.
    pub spurious_shift: (f64, f64),
    /// Explain at most this many test nodes as pick candidates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    pub explainer: ExplainerConfig,
    pub seed: u64,
}

impl Default for ModelSelectConfig {
    fn default() -> Self {
        ModelSelectConfig {
            rounds: 50,
            b_values: vec![5, 10, 15, 20, 25, 30],
            noise_count: 10,
            min_accuracy: 0.7,
            min_gap: 0.05,
            retries: 25,
            spurious_shift: (0.0, 3.0),
            candidates: None,
            explainer: ExplainerConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub round: usize,
    pub spurious_shift: [f64; 2],
    pub train_accuracy: [f64; 2],
    pub test_accuracy: [f64; 2],
    /// Index of the classifier with the higher test accuracy.
    pub better: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub round: usize,
    pub b: usize,
    /// Untrusted features counted over the picked explanations of each classifier.
    pub untrusted: [usize; 2],
    pub chosen: usize,
    pub coin_flip: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSelection {
    pub method: Method,
    /// Fraction of rounds choosing the better classifier, per entry of `b_values`.
    pub accuracy: Vec<f64>,
    pub records: Vec<SelectionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectReport {
    pub seed: u64,
    pub rounds: usize,
    pub top_k: usize,
    pub b_values: Vec<usize>,
    pub methods: Vec<MethodSelection>,
    /// Accuracy of a fair coin per entry of `b_values`.
    pub random_choice: Vec<f64>,
    pub pairs: Vec<PairRecord>,
    pub skipped: Vec<SkippedNode>,
    pub notes: Vec<String>,
}

impl ModelSelectReport {
    pub fn method(&self, method: Method) -> Option<&MethodSelection> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn file_stem(&self) -> String {
        let methods: Vec<Method> = self.methods.iter().map(|m| m.method).collect();
        format!("model_select_{}_k{}_seed{}", methods_tag(&methods), self.top_k, self.seed)
    }

    /// One row per method, round and budget.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row {
            round: usize,
            method: Method,
            b: usize,
            untrusted_a: usize,
            untrusted_b: usize,
            chosen: usize,
            coin_flip: bool,
            correct: bool,
        }
        to_csv(self.methods.iter().flat_map(|m| {
            m.records.iter().map(move |r| Row {
                round: r.round,
                method: m.method,
                b: r.b,
                untrusted_a: r.untrusted[0],
                untrusted_b: r.untrusted[1],
                chosen: r.chosen,
                coin_flip: r.coin_flip,
                correct: r.correct,
            })
        }))
    }
}

/// Shifts the noisy columns of training nodes by `±shift/2` standard
/// deviations according to their label, so the columns look predictive
/// during training and carry no signal elsewhere.
fn make_spurious(graph: &Graph, noisy: &[usize], train_ids: &[usize], shift: f64) -> Result<Graph> {
    if shift == 0.0 {
        return Ok(graph.clone());
    }
    let labels = graph.labels().ok_or(Error::MissingLabels)?;
    let classes = graph.class_count().unwrap_or(1).max(2) as f64;
    let mut x = graph.features().clone();
    for &j in noisy {
        let col = x.column(j);
        let sd = col.std(0.0);
        for &v in train_ids {
            let centered = labels[v] as f64 / (classes - 1.0) - 0.5;
            x[[v, j]] += shift * sd * centered;
        }
    }
    graph.with_features(x)
}

struct Pair<M> {
    models: [M; 2],
    record: PairRecord,
}

fn train_pair<F: ModelFactory>(
    factory: &F,
    graph: &Graph,
    noisy: &[usize],
    split: &Split,
    config: &ModelSelectConfig,
    round: usize,
    round_seed: u64,
) -> Result<Pair<F::Model>> {
    let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
    let (lo, hi) = config.spurious_shift;
    let mut valid: Vec<(F::Model, f64, f64, f64)> = Vec::new();
    let mut last = String::from("no candidate trained");
    for attempt in 0..config.retries.max(2) {
        let shift = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let train_graph = make_spurious(graph, noisy, &split.train_ids, shift)?;
        let model = factory.train(&train_graph, &split.train_ids, &split.test_ids, round_seed.wrapping_add(attempt as u64))?;
        let train_acc = accuracy(&model, &train_graph, &split.train_ids)?;
        let test_acc = accuracy(&model, graph, &split.test_ids)?;
        last = format!("round {round}: candidate {attempt} train/test accuracy {train_acc:.3}/{test_acc:.3}");
        if train_acc <= config.min_accuracy || test_acc <= config.min_accuracy {
            continue;
        }
        if let Some(k) = valid.iter().position(|c| (c.3 - test_acc).abs() > config.min_gap) {
            let first = valid.swap_remove(k);
            let second = (model, shift, train_acc, test_acc);
            // present the pair in random order so position carries no signal
            let [a, b] = if rng.random_bool(0.5) { [second, first] } else { [first, second] };
            let record = PairRecord {
                round,
                spurious_shift: [a.1, b.1],
                train_accuracy: [a.2, b.2],
                test_accuracy: [a.3, b.3],
                better: usize::from(b.3 > a.3),
                attempts: attempt + 1,
            };
            return Ok(Pair { models: [a.0, b.0], record });
        }
        valid.push((model, shift, train_acc, test_acc));
    }
    Err(Error::GateUnmet {
        attempts: config.retries.max(2),
        detail: format!(
            "no pair with accuracy > {} and gap > {} ({last})",
            config.min_accuracy, config.min_gap
        ),
    })
}

/// Per round: injects noise features (the untrusted set), trains a pair of
/// classifiers with clearly different test accuracy, explains the
/// Submodular-Pick instances under both and chooses the classifier whose
/// explanations mention fewer noise features. Ties are settled by a seeded
/// coin. Reports how often the choice is the better classifier.
pub fn run_model_selection<F: ModelFactory>(
    graph: &Graph,
    split: &Split,
    factory: &F,
    methods: &[Method],
    config: &ModelSelectConfig,
) -> Result<ModelSelectReport> {
    let explainer = ExplainerConfig { seed: config.seed, ..config.explainer };
    explainer.validate()?;
    if config.b_values.is_empty() || config.b_values.contains(&0) {
        return Err(Error::invalid("b_values must be nonempty and positive"));
    }
    let max_b = *config.b_values.iter().max().expect("nonempty");
    let limit = config.candidates.unwrap_or(split.test_ids.len()).min(split.test_ids.len());
    let candidates = &split.test_ids[..limit];

    type RoundOut = (PairRecord, Vec<Vec<SelectionRecord>>, Vec<bool>, Vec<SkippedNode>);
    let rounds: Vec<RoundOut> = (0..config.rounds)
        .into_par_iter()
        .map(|round| -> Result<RoundOut> {
            let round_seed = mix_seed(config.seed, round as u64);
            let (g, noisy) = if config.noise_count == 0 {
                (graph.clone(), Vec::new())
            } else {
                let (g, injection) = inject_noise_features(graph, config.noise_count, round_seed)?;
                (g, injection.noisy_indices)
            };
            let pair = train_pair(factory, &g, &noisy, split, config, round, round_seed)?;
            let better = pair.record.better;

            let mut skipped = Vec::new();
            let mut per_method = Vec::new();
            for (k, &method) in methods.iter().enumerate() {
                let mut counts = vec![[0usize; 2]; config.b_values.len()];
                for (side, model) in pair.models.iter().enumerate() {
                    let (explanations, s) = explain_nodes(method, model, &g, candidates, &explainer)?;
                    skipped.extend(s);
                    if explanations.is_empty() {
                        continue;
                    }
                    let w = ExplanationMatrix::from_explanations(&explanations, g.feature_count());
                    let importance = global_importance(&w)?;
                    let picks = submodular_pick(&w, &importance, max_b)?.picks;
                    for (bi, &b) in config.b_values.iter().enumerate() {
                        counts[bi][side] = picks
                            .iter()
                            .take(b)
                            .map(|&i| explanations[i].selected.iter().filter(|j| noisy.binary_search(j).is_ok()).count())
                            .sum();
                    }
                }
                let records = config
                    .b_values
                    .iter()
                    .zip(&counts)
                    .map(|(&b, &untrusted)| {
                        let (chosen, coin_flip) = match untrusted[0].cmp(&untrusted[1]) {
                            std::cmp::Ordering::Less => (0, false),
                            std::cmp::Ordering::Greater => (1, false),
                            std::cmp::Ordering::Equal => {
                                let mut coin = ChaCha8Rng::seed_from_u64(mix_seed(round_seed, (k * 1000 + b) as u64));
                                (usize::from(coin.random_bool(0.5)), true)
                            }
                        };
                        SelectionRecord { round, b, untrusted, chosen, coin_flip, correct: chosen == better }
                    })
                    .collect();
                per_method.push(records);
            }
            let mut coin = ChaCha8Rng::seed_from_u64(mix_seed(round_seed, u64::MAX));
            let random_choice = config.b_values.iter().map(|_| coin.random_bool(0.5)).collect();
            Ok((pair.record, per_method, random_choice, skipped))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = config.rounds.max(1) as f64;
    let methods_out = methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let records: Vec<SelectionRecord> = rounds.iter().flat_map(|r| r.1[k].clone()).collect();
            let accuracy = config
                .b_values
                .iter()
                .map(|&b| records.iter().filter(|r| r.b == b && r.correct).count() as f64 / n)
                .collect();
            MethodSelection { method, accuracy, records }
        })
        .collect();
    let random_choice = (0..config.b_values.len())
        .map(|bi| rounds.iter().filter(|r| r.2[bi]).count() as f64 / n)
        .collect();

    Ok(ModelSelectReport {
        seed: config.seed,
        rounds: config.rounds,
        top_k: explainer.top_k,
        b_values: config.b_values.clone(),
        methods: methods_out,
        random_choice,
        pairs: rounds.iter().map(|r| r.0.clone()).collect(),
        skipped: rounds.into_iter().flat_map(|r| r.3).collect(),
        notes: vec![
            "the untrusted features of each round are freshly injected noise columns".into(),
            "candidate classifiers train on noise columns with a random spurious label shift on training nodes; accuracies and explanations use the unshifted graph".into(),
            "W rows use |weight|; graphlime weights are nonnegative already".into(),
        ],
    })
}
