use ndarray::{Array1, Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{explain_nodes, methods_tag, to_csv, BinaryCounts, SkippedNode};
use crate::error::{Error, Result};
use crate::explainers::{explain_random, mix_seed, ExplainerConfig, Explanation, Method};
use crate::graph::{n_hop_neighborhood, Graph};
use crate::linalg::solve_spd;
use crate::predictor::{argmax, zero_columns, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustConfig {
    pub untrust_fraction: f64,
    pub rounds: usize,
    /// Evaluate at most this many test nodes, in split order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub explainer: ExplainerConfig,
    pub seed: u64,
}

impl Default for TrustConfig {
    fn default() -> Self {
        TrustConfig {
            untrust_fraction: 0.3,
            rounds: 100,
            nodes: None,
            explainer: ExplainerConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundScore {
    pub round: usize,
    #[serde(flatten)]
    pub counts: BinaryCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTrust {
    pub method: Method,
    /// Means over rounds.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub rounds: Vec<RoundScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustReport {
    pub seed: u64,
    pub rounds: usize,
    pub top_k: usize,
    pub untrust_fraction: f64,
    pub positive_class: String,
    /// Untrustworthy feature set of each round.
    pub untrusted: Vec<Vec<usize>>,
    pub methods: Vec<MethodTrust>,
    pub skipped: Vec<SkippedNode>,
    pub notes: Vec<String>,
}

impl TrustReport {
    pub fn method(&self, method: Method) -> Option<&MethodTrust> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn file_stem(&self) -> String {
        let methods: Vec<Method> = self.methods.iter().map(|m| m.method).collect();
        format!("trust_{}_k{}_seed{}", methods_tag(&methods), self.top_k, self.seed)
    }

    /// One row per method and round.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row {
            round: usize,
            method: Method,
            tp: usize,
            fp: usize,
            #[serde(rename = "fn")]
            fn_: usize,
            tn: usize,
            precision: f64,
            recall: f64,
            f1: f64,
        }
        to_csv(self.methods.iter().flat_map(|m| {
            m.rounds.iter().map(move |r| Row {
                round: r.round,
                method: m.method,
                tp: r.counts.tp,
                fp: r.counts.fp,
                fn_: r.counts.fn_,
                tn: r.counts.tn,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
            })
        }))
    }
}

/// Least-squares map from the selected features of the node's N-hop sample
/// to the predictor's probability rows.
struct Surrogate {
    selected: Vec<usize>,
    intercept: Array1<f64>,
    /// `|selected| × C`
    coef: Array2<f64>,
    point: Array1<f64>,
}

impl Surrogate {
    fn fit(graph: &Graph, probs: &Array2<f64>, e: &Explanation) -> Result<Self> {
        let sample = n_hop_neighborhood(graph, e.node, e.config.hops)?;
        let x = graph.features().select(Axis(0), &sample).select(Axis(1), &e.selected);
        let y = probs.select(Axis(0), &sample);
        let x_mean = x.mean_axis(Axis(0)).expect("sample is nonempty");
        let y_mean = y.mean_axis(Axis(0)).expect("sample is nonempty");
        let xc = &x - &x_mean;
        let yc = &y - &y_mean;
        let s = e.selected.len();
        let mut gram = xc.t().dot(&xc);
        let ridge = 1e-8 * (gram.diag().sum() / s.max(1) as f64).max(1e-12);
        for i in 0..s {
            gram[[i, i]] += ridge;
        }
        let xty = xc.t().dot(&yc);
        let mut coef = Array2::zeros((s, y.ncols()));
        for c in 0..y.ncols() {
            let col = solve_spd(&gram, &xty.column(c).to_owned())
                .ok_or_else(|| Error::DegenerateFit(format!("surrogate for node {} is singular", e.node)))?;
            coef.column_mut(c).assign(&col);
        }
        let intercept = &y_mean - &x_mean.dot(&coef);
        let point = graph.features().row(e.node).select(Axis(0), &e.selected);
        Ok(Surrogate { selected: e.selected.clone(), intercept, coef, point })
    }

    fn class(&self, point: &Array1<f64>) -> usize {
        argmax((&self.intercept + &point.dot(&self.coef)).view())
    }

    /// Trusted unless zeroing the untrusted selected features flips the
    /// surrogate's class.
    fn trusts(&self, untrusted: &[usize]) -> bool {
        let mut removed = self.point.clone();
        let mut touched = false;
        for (i, j) in self.selected.iter().enumerate() {
            if untrusted.binary_search(j).is_ok() {
                removed[i] = 0.0;
                touched = true;
            }
        }
        !touched || self.class(&removed) == self.class(&self.point)
    }
}

enum User {
    /// Surrogate-based judgement for the two lasso methods.
    Surrogates(Vec<(usize, Surrogate)>),
    /// Distrusts any explanation that mentions an untrusted feature.
    Listed(Vec<Explanation>),
    /// Like `Listed`, with a fresh draw each round.
    Random,
}

/// Marks `⌊untrust_fraction · d⌋` random features untrustworthy per round.
/// The oracle distrusts a prediction when zeroing those columns for every
/// node changes its class; each method's simulated user decides from its
/// explanation. Precision, recall and F1 treat "trustworthy" as positive.
pub fn run_trust_experiment<P: Predictor + ?Sized>(
    graph: &Graph,
    predictor: &P,
    test_ids: &[usize],
    methods: &[Method],
    config: &TrustConfig,
) -> Result<TrustReport> {
    let explainer = ExplainerConfig { seed: config.seed, ..config.explainer };
    explainer.validate()?;
    let d = graph.feature_count();
    if !(0.0..=1.0).contains(&config.untrust_fraction) {
        return Err(Error::invalid("untrust_fraction must lie in [0, 1]"));
    }
    let m = (config.untrust_fraction * d as f64).floor() as usize;
    if config.untrust_fraction > 0.0 && m == 0 {
        return Err(Error::invalid(format!(
            "untrust_fraction {} marks no feature of {d}",
            config.untrust_fraction
        )));
    }
    let limit = config.nodes.unwrap_or(test_ids.len()).min(test_ids.len());
    let nodes = &test_ids[..limit];

    let probs = predictor.predict_all(graph, None)?;
    let base: Vec<usize> = nodes.iter().map(|&v| argmax(probs.row(v))).collect();

    let mut skipped = Vec::new();
    let mut users = Vec::new();
    for &method in methods {
        let user = match method {
            Method::Random => User::Random,
            Method::Greedy => {
                let (explanations, s) = explain_nodes(method, predictor, graph, nodes, &explainer)?;
                skipped.extend(s);
                User::Listed(explanations)
            }
            Method::Graphlime | Method::LimeLinear => {
                let (explanations, s) = explain_nodes(method, predictor, graph, nodes, &explainer)?;
                skipped.extend(s);
                let fitted = explanations
                    .par_iter()
                    .map(|e| Ok((e.node, Surrogate::fit(graph, &probs, e)?)))
                    .collect::<Result<Vec<_>>>()?;
                User::Surrogates(fitted)
            }
        };
        users.push((method, user));
    }
    let position = |v: usize| nodes.iter().position(|&u| u == v).expect("explained node is in the set");

    let per_round = (0..config.rounds)
        .into_par_iter()
        .map(|round| -> Result<(Vec<usize>, Vec<BinaryCounts>)> {
            let round_seed = mix_seed(config.seed, round as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
            let mut untrusted = sample(&mut rng, d, m).into_vec();
            untrusted.sort_unstable();
            let zeroed = zero_columns(graph.features(), &untrusted);
            let after = predictor.predict_nodes(graph, Some(&zeroed), nodes)?;
            let oracle: Vec<bool> = after.rows().into_iter().zip(&base).map(|(p, &c)| argmax(p) == c).collect();
            let listed = |e: &Explanation| !e.selected.iter().any(|j| untrusted.binary_search(j).is_ok());

            let mut counts = Vec::new();
            for (_, user) in &users {
                let mut c = BinaryCounts::default();
                match user {
                    User::Surrogates(fitted) => {
                        for (v, s) in fitted {
                            c.add(s.trusts(&untrusted), oracle[position(*v)]);
                        }
                    }
                    User::Listed(explanations) => {
                        for e in explanations {
                            c.add(listed(e), oracle[position(e.node)]);
                        }
                    }
                    User::Random => {
                        for (i, &v) in nodes.iter().enumerate() {
                            let e = explain_random(v, d, explainer.top_k.min(d), round_seed)?;
                            c.add(listed(&e), oracle[i]);
                        }
                    }
                }
                counts.push(c);
            }
            Ok((untrusted, counts))
        })
        .collect::<Result<Vec<_>>>()?;

    let rounds_n = config.rounds.max(1) as f64;
    let methods_out = users
        .iter()
        .enumerate()
        .map(|(k, (method, _))| {
            let rounds: Vec<RoundScore> = per_round
                .iter()
                .enumerate()
                .map(|(round, (_, counts))| {
                    let c = counts[k];
                    RoundScore { round, counts: c, precision: c.precision(), recall: c.recall(), f1: c.f1() }
                })
                .collect();
            MethodTrust {
                method: *method,
                precision: rounds.iter().map(|r| r.precision).sum::<f64>() / rounds_n,
                recall: rounds.iter().map(|r| r.recall).sum::<f64>() / rounds_n,
                f1: rounds.iter().map(|r| r.f1).sum::<f64>() / rounds_n,
                rounds,
            }
        })
        .collect();

    Ok(TrustReport {
        seed: config.seed,
        rounds: config.rounds,
        top_k: explainer.top_k,
        untrust_fraction: config.untrust_fraction,
        positive_class: "trustworthy".into(),
        untrusted: per_round.into_iter().map(|(u, _)| u).collect(),
        methods: methods_out,
        skipped,
        notes: vec![
            "feature removal zeroes the column for every node".into(),
            "graphlime and lime_linear users refit a ridge-stabilized least-squares surrogate on the N-hop sample restricted to the selected features".into(),
            "greedy and random users distrust any explanation containing an untrusted feature".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::tests::random_graph;
    use crate::predictor::tests::LinearBlackBox;

    #[test]
    fn no_untrusted_features_means_perfect_scores() {
        let g = random_graph(30, 6, 0.2, 1);
        let model = LinearBlackBox { weights: vec![1.0, -1.0, 0.5, 0.0, 0.0, 2.0] };
        let ids: Vec<usize> = (0..30).collect();
        let config = TrustConfig { untrust_fraction: 0.0, rounds: 3, explainer: ExplainerConfig { top_k: 3, ..Default::default() }, ..Default::default() };
        let r = run_trust_experiment(&g, &model, &ids, &Method::ALL, &config).unwrap();
        for m in &r.methods {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0), "{:?}", m.method);
        }
    }

    #[test]
    fn too_small_a_fraction_is_an_input_error() {
        let g = random_graph(10, 3, 0.3, 1);
        let model = LinearBlackBox { weights: vec![1.0; 3] };
        let config = TrustConfig { untrust_fraction: 0.3, ..Default::default() };
        assert!(matches!(run_trust_experiment(&g, &model, &[0, 1], &[Method::Random], &config), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn f1_is_consistent_and_order_invariant() {
        let g = random_graph(40, 10, 0.15, 2);
        let model = LinearBlackBox { weights: vec![1.0, -1.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.1, 0.0, 0.0] };
        let ids: Vec<usize> = (0..40).collect();
        let mut reversed = ids.clone();
        reversed.reverse();
        let config = TrustConfig { rounds: 5, explainer: ExplainerConfig { top_k: 3, ..Default::default() }, ..Default::default() };
        let methods = [Method::Graphlime, Method::Greedy];
        let a = run_trust_experiment(&g, &model, &ids, &methods, &config).unwrap();
        let b = run_trust_experiment(&g, &model, &reversed, &methods, &config).unwrap();
        for (x, y) in a.methods.iter().zip(&b.methods) {
            assert_eq!(x.f1, y.f1);
            for r in &x.rounds {
                let (p, rc) = (r.precision, r.recall);
                assert!((r.f1 - if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) }).abs() < 1e-12);
            }
        }
        assert_eq!(a.untrusted.len(), 5);
        assert!(a.untrusted.iter().all(|u| u.len() == 3));
        assert!(a.to_csv().unwrap().starts_with("round,method,tp,fp,fn,tn,precision,recall,f1\n"));
    }

    #[test]
    fn selecting_only_untrusted_features_on_an_untrusted_prediction_is_a_true_negative() {
        let e = Explanation {
            node: 0,
            method: Method::Greedy,
            selected: vec![1, 2],
            weights: vec![1.0, 1.0],
            beta: None,
            n: 0,
            config: ExplainerConfig::default(),
        };
        let untrusted = [1, 2];
        let user_trusts = !e.selected.iter().any(|j| untrusted.contains(j));
        let mut c = BinaryCounts::default();
        c.add(user_trusts, false);
        assert_eq!(c.tn, 1);
    }
}
