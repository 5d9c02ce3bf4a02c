//! Two-layer mean-aggregation message-passing network:
//!
//! ```text
//! h_v = relu(W1·[x_v ; mean_{u ∈ N(v) ∪ {v}} x_u] + b1)
//! p_v = softmax(W2·[h_v ; mean_{u ∈ N(v) ∪ {v}} h_u] + b2)
//! ```
//!
//! Inference evaluates one node at a time with the same row kernels whether
//! a single node or the whole graph is requested, so both paths agree
//! bit for bit.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{accuracy, Predictor};
use crate::error::{Error, Result};
use crate::graph::Graph;

const FORMAT: &str = "hsic-explain/reference-gnn";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            epochs: 200,
            learning_rate: 0.2,
            momentum: 0.9,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGnn {
    input_dim: usize,
    /// hidden × 2·input_dim
    w1: Array2<f64>,
    b1: Array1<f64>,
    /// classes × 2·hidden
    w2: Array2<f64>,
    b2: Array1<f64>,
    training: Option<TrainingMetadata>,
}

/// Gradients of the mean cross-entropy with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Gradients {
    /// Flattened in the same order as [`ReferenceGnn::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }
}

/// `(row(u) + Σ_{w ∈ N(u)} row(w)) / (deg(u) + 1)`, neighbors in id order.
fn mean_row<'a>(graph: &Graph, u: usize, row: impl Fn(usize) -> ArrayView1<'a, f64>) -> Array1<f64> {
    let mut acc = row(u).to_owned();
    for &w in graph.neighbors(u) {
        acc += &row(w);
    }
    acc / (graph.neighbors(u).len() + 1) as f64
}

fn affine(weights: &Array2<f64>, bias: &Array1<f64>, own: ArrayView1<f64>, agg: ArrayView1<f64>) -> Array1<f64> {
    let d = own.len();
    Array1::from_shape_fn(weights.nrows(), |i| {
        let row = weights.row(i);
        let mut z = bias[i];
        for j in 0..d {
            z += row[j] * own[j];
        }
        for j in 0..d {
            z += row[d + j] * agg[j];
        }
        z
    })
}

fn softmax(mut z: Array1<f64>) -> Array1<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    z.mapv_inplace(|v| (v - max).exp());
    let sum = z.sum();
    z / sum
}

impl ReferenceGnn {
    /// Small random weights; an untrained model predicts nearly uniformly.
    pub fn new(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, (1.0 / (2 * input_dim) as f64).sqrt()).expect("finite std");
        let n2 = Normal::new(0.0, 0.1 * (1.0 / (2 * hidden) as f64).sqrt()).expect("finite std");
        let w1 = Array2::from_shape_simple_fn((hidden, 2 * input_dim), || n1.sample(&mut rng));
        let w2 = Array2::from_shape_simple_fn((classes, 2 * hidden), || n2.sample(&mut rng));
        ReferenceGnn {
            input_dim,
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(classes),
            training: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn training(&self) -> Option<&TrainingMetadata> {
        self.training.as_ref()
    }

    /// All parameters flattened row-major: `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    /// Replaces all parameters from a flat vector in [`parameters`](Self::parameters) order.
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        let sizes = [self.w1.len(), self.b1.len(), self.w2.len(), self.b2.len()];
        let total: usize = sizes.iter().sum();
        if params.len() != total {
            return Err(Error::Shape {
                expected: format!("{total} parameters"),
                actual: format!("{}", params.len()),
            });
        }
        let mut rest = params;
        for (target, size) in [
            self.w1.as_slice_mut(),
            self.b1.as_slice_mut(),
            self.w2.as_slice_mut(),
            self.b2.as_slice_mut(),
        ]
        .into_iter()
        .zip(sizes)
        {
            let (head, tail) = rest.split_at(size);
            target.expect("standard layout").copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn features<'a>(&self, graph: &'a Graph, features: Option<&'a Array2<f64>>) -> Result<&'a Array2<f64>> {
        let x = features.unwrap_or(graph.features());
        if x.dim() != (graph.node_count(), self.input_dim) {
            return Err(Error::Shape {
                expected: format!("{} × {}", graph.node_count(), self.input_dim),
                actual: format!("{} × {}", x.nrows(), x.ncols()),
            });
        }
        Ok(x)
    }

    fn hidden_row(&self, graph: &Graph, x: &Array2<f64>, u: usize) -> Array1<f64> {
        let agg = mean_row(graph, u, |w| x.row(w));
        affine(&self.w1, &self.b1, x.row(u), agg.view()).mapv(|z| z.max(0.0))
    }

    fn output_row(&self, graph: &Graph, hidden: impl Fn(usize) -> Array1<f64>, v: usize) -> Array1<f64> {
        let h_v = hidden(v);
        let mut agg = h_v.clone();
        for &u in graph.neighbors(v) {
            agg += &hidden(u);
        }
        let agg = agg / (graph.neighbors(v).len() + 1) as f64;
        softmax(affine(&self.w2, &self.b2, h_v.view(), agg.view()))
    }

    /// Batched forward pass over the whole graph used for training.
    fn forward_train(&self, graph: &Graph, x: &Array2<f64>, ax: &Array2<f64>) -> Forward {
        let d = self.input_dim;
        let h = self.hidden();
        let z1 = x.dot(&self.w1.slice(s![.., ..d]).t()) + ax.dot(&self.w1.slice(s![.., d..]).t()) + &self.b1;
        let hid = z1.mapv(|z| z.max(0.0));
        let ah = aggregate(graph, &hid);
        let z2 = hid.dot(&self.w2.slice(s![.., ..h]).t()) + ah.dot(&self.w2.slice(s![.., h..]).t()) + &self.b2;
        let mut probs = z2;
        for mut row in probs.rows_mut() {
            let p = softmax(row.to_owned());
            row.assign(&p);
        }
        Forward { z1, hid, ah, probs }
    }

    /// Mean cross-entropy over `ids` and its analytic gradients.
    pub fn loss_and_gradients(&self, graph: &Graph, ids: &[usize]) -> Result<(f64, Gradients)> {
        let labels = graph.labels().ok_or(Error::MissingLabels)?;
        let x = self.features(graph, None)?;
        let ax = aggregate(graph, x);
        Ok(self.loss_and_gradients_with(graph, x, &ax, labels, ids))
    }

    fn loss_and_gradients_with(
        &self,
        graph: &Graph,
        x: &Array2<f64>,
        ax: &Array2<f64>,
        labels: &[usize],
        ids: &[usize],
    ) -> (f64, Gradients) {
        let d = self.input_dim;
        let h = self.hidden();
        let fwd = self.forward_train(graph, x, ax);
        let m = ids.len() as f64;

        let mut loss = 0.0;
        let mut dz2 = Array2::<f64>::zeros(fwd.probs.dim());
        for &v in ids {
            let y = labels[v];
            loss -= fwd.probs[[v, y]].ln();
            let mut row = dz2.row_mut(v);
            row.assign(&fwd.probs.row(v));
            row[y] -= 1.0;
        }
        loss /= m;
        dz2 /= m;

        let mut w2 = Array2::zeros(self.w2.dim());
        w2.slice_mut(s![.., ..h]).assign(&dz2.t().dot(&fwd.hid));
        w2.slice_mut(s![.., h..]).assign(&dz2.t().dot(&fwd.ah));
        let b2 = dz2.sum_axis(Axis(0));

        let d_ah = dz2.dot(&self.w2.slice(s![.., h..]));
        let mut d_hid = dz2.dot(&self.w2.slice(s![.., ..h])) + aggregate_transpose(graph, &d_ah);
        d_hid.zip_mut_with(&fwd.z1, |g, &z| {
            if z <= 0.0 {
                *g = 0.0
            }
        });
        let mut w1 = Array2::zeros(self.w1.dim());
        w1.slice_mut(s![.., ..d]).assign(&d_hid.t().dot(x));
        w1.slice_mut(s![.., d..]).assign(&d_hid.t().dot(ax));
        let b1 = d_hid.sum_axis(Axis(0));
        (loss, Gradients { w1, b1, w2, b2 })
    }
}

struct Forward {
    z1: Array2<f64>,
    hid: Array2<f64>,
    ah: Array2<f64>,
    probs: Array2<f64>,
}

/// Row-normalized adjacency with self-loops applied to `m`.
fn aggregate(graph: &Graph, m: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(m.dim());
    for v in 0..graph.node_count() {
        out.row_mut(v).assign(&mean_row(graph, v, |w| m.row(w)));
    }
    out
}

/// Transpose of [`aggregate`]: scatters each row back to its sources.
fn aggregate_transpose(graph: &Graph, g: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(g.dim());
    for v in 0..graph.node_count() {
        let share = &g.row(v) / (graph.neighbors(v).len() + 1) as f64;
        let mut own = out.row_mut(v);
        own += &share;
        for &u in graph.neighbors(v) {
            let mut row = out.row_mut(u);
            row += &share;
        }
    }
    out
}

impl Predictor for ReferenceGnn {
    fn class_count(&self) -> usize {
        self.w2.nrows()
    }

    fn predict(&self, graph: &Graph, features: Option<&Array2<f64>>, node: usize) -> Result<Array1<f64>> {
        graph.check_node(node)?;
        let x = self.features(graph, features)?;
        Ok(self.output_row(graph, |u| self.hidden_row(graph, x, u), node))
    }

    fn predict_all(&self, graph: &Graph, features: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        let x = self.features(graph, features)?;
        let hidden: Vec<Array1<f64>> = (0..graph.node_count())
            .map(|u| self.hidden_row(graph, x, u))
            .collect();
        let mut out = Array2::zeros((graph.node_count(), self.class_count()));
        for v in 0..graph.node_count() {
            out.row_mut(v)
                .assign(&self.output_row(graph, |u| hidden[u].clone(), v));
        }
        Ok(out)
    }
}

/// Full-batch gradient descent (with momentum) on the training nodes'
/// cross-entropy. Deterministic under `config.seed`.
pub fn train_reference_gnn(
    graph: &Graph,
    train_ids: &[usize],
    test_ids: &[usize],
    config: &TrainConfig,
) -> Result<ReferenceGnn> {
    let labels = graph.labels().ok_or(Error::MissingLabels)?;
    if train_ids.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if config.hidden == 0 {
        return Err(Error::invalid("hidden width must be at least 1"));
    }
    let train_set: HashSet<usize> = train_ids.iter().copied().collect();
    if test_ids.iter().any(|v| train_set.contains(v)) {
        return Err(Error::invalid("train and test node sets overlap"));
    }
    for &v in train_ids.iter().chain(test_ids) {
        graph.check_node(v)?;
    }
    let classes = graph.class_count().unwrap_or(0).max(2);
    let mut model = ReferenceGnn::new(graph.feature_count(), config.hidden, classes, config.seed);

    let x = graph.features();
    let ax = aggregate(graph, x);
    let mut velocity = vec![0.0; model.parameters().len()];
    let mut loss = f64::NAN;
    for epoch in 0..config.epochs {
        let (l, grads) = model.loss_and_gradients_with(graph, x, &ax, labels, train_ids);
        if !l.is_finite() {
            return Err(Error::Training { epoch, loss: l });
        }
        loss = l;
        let mut params = model.parameters();
        for ((p, g), v) in params.iter_mut().zip(grads.flatten()).zip(velocity.iter_mut()) {
            *v = config.momentum * *v - config.learning_rate * (g + config.weight_decay * *p);
            *p += *v;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Training { epoch, loss: f64::NAN });
        }
        model.set_parameters(&params)?;
    }
    if config.epochs > 0 {
        let (l, _) = model.loss_and_gradients_with(graph, x, &ax, labels, train_ids);
        if !l.is_finite() {
            return Err(Error::Training { epoch: config.epochs, loss: l });
        }
        loss = l;
    }

    let train_accuracy = accuracy(&model, graph, train_ids)?;
    let test_accuracy = if test_ids.is_empty() {
        None
    } else {
        Some(accuracy(&model, graph, test_ids)?)
    };
    model.training = Some(TrainingMetadata {
        epochs: config.epochs,
        seed: config.seed,
        learning_rate: config.learning_rate,
        final_loss: loss,
        train_accuracy,
        test_accuracy,
    });
    Ok(model)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden: usize,
    classes: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    training: Option<TrainingMetadata>,
}

impl ReferenceGnn {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            input_dim: self.input_dim,
            hidden: self.hidden(),
            classes: self.class_count(),
            w1: self.w1.iter().copied().collect(),
            b1: self.b1.to_vec(),
            w2: self.w2.iter().copied().collect(),
            b2: self.b2.to_vec(),
            training: self.training.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != FORMAT {
            return Err(Error::Format(format!("unknown format tag {:?}", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported version {} (expected {VERSION})",
                file.version
            )));
        }
        let shape = |name: &str, rows: usize, cols: usize, data: Vec<f64>| {
            let expected = rows * cols;
            if data.len() != expected {
                return Err(Error::Shape {
                    expected: format!("{name} with {rows} × {cols} = {expected} values"),
                    actual: format!("{} values", data.len()),
                });
            }
            Ok(Array2::from_shape_vec((rows, cols), data).expect("length checked"))
        };
        let w1 = shape("w1", file.hidden, 2 * file.input_dim, file.w1)?;
        let b1 = shape("b1", 1, file.hidden, file.b1)?.into_shape_with_order(file.hidden).expect("1-d");
        let w2 = shape("w2", file.classes, 2 * file.hidden, file.w2)?;
        let b2 = shape("b2", 1, file.classes, file.b2)?.into_shape_with_order(file.classes).expect("1-d");
        Ok(ReferenceGnn {
            input_dim: file.input_dim,
            w1,
            b1,
            w2,
            b2,
            training: file.training,
        })
    }
}

pub fn save_model(model: &ReferenceGnn, path: &Path) -> Result<()> {
    crate::graph::write_atomic(path, model.to_json().as_bytes())
}

pub fn load_model(path: &Path) -> Result<ReferenceGnn> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ReferenceGnn::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SyntheticConfig};
    use rand::Rng;

    fn tiny_graph() -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = Array2::from_shape_simple_fn((5, 3), || rng.random_range(-1.0..1.0));
        Graph::new(f, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 3)], Some(vec![0, 1, 2, 1, 0])).unwrap()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let g = tiny_graph();
        let mut model = ReferenceGnn::new(3, 4, 3, 5);
        // move off the tiny-weight regime so every layer matters
        let params: Vec<f64> = model.parameters().iter().enumerate().map(|(i, p)| p * 3.0 + 0.05 * ((i % 7) as f64 - 3.0)).collect();
        model.set_parameters(&params).unwrap();
        let ids = [0, 1, 2, 3, 4];
        let (_, grads) = model.loss_and_gradients(&g, &ids).unwrap();
        let analytic = grads.flatten();
        let eps = 1e-6;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += eps;
            let mut minus = params.clone();
            minus[i] -= eps;
            let mut m = model.clone();
            m.set_parameters(&plus).unwrap();
            let lp = m.loss_and_gradients(&g, &ids).unwrap().0;
            m.set_parameters(&minus).unwrap();
            let lm = m.loss_and_gradients(&g, &ids).unwrap().0;
            let numeric = (lp - lm) / (2.0 * eps);
            let scale = numeric.abs().max(analytic[i].abs()).max(1e-6);
            assert!((numeric - analytic[i]).abs() / scale < 1e-4, "param {i}: {numeric} vs {}", analytic[i]);
        }
    }

    #[test]
    fn outputs_are_probabilities_and_paths_agree() {
        let g = tiny_graph();
        let model = ReferenceGnn::new(3, 4, 3, 1);
        let all = model.predict_all(&g, None).unwrap();
        for v in 0..5 {
            let p = model.predict(&g, None, v).unwrap();
            assert!((p.sum() - 1.0).abs() < 1e-12);
            assert_eq!(p, all.row(v));
            assert_eq!(p, model.predict(&g, Some(g.features()), v).unwrap());
        }
    }

    #[test]
    fn override_shape_is_checked() {
        let g = tiny_graph();
        let model = ReferenceGnn::new(3, 4, 3, 1);
        let bad = Array2::zeros((5, 2));
        assert!(matches!(model.predict(&g, Some(&bad), 0), Err(Error::Shape { .. })));
    }

    #[test]
    fn untrained_model_is_near_uniform() {
        let g = tiny_graph();
        let model = train_reference_gnn(&g, &[0, 1, 2], &[3, 4], &TrainConfig { epochs: 0, ..Default::default() }).unwrap();
        let probs = model.predict_all(&g, None).unwrap();
        assert!(probs.iter().all(|&p| (p - 1.0 / 3.0).abs() < 0.05));
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let data = generate(&SyntheticConfig::default(), 3).unwrap();
        let config = TrainConfig::default();
        let a = train_reference_gnn(&data.graph, &data.train_ids, &data.test_ids, &config).unwrap();
        let b = train_reference_gnn(&data.graph, &data.train_ids, &data.test_ids, &config).unwrap();
        assert_eq!(a, b);
        let meta = a.training().unwrap();
        assert!(meta.test_accuracy.unwrap() >= 0.8, "{meta:?}");
    }

    #[test]
    fn missing_labels_and_overlap_rejected() {
        let g = tiny_graph();
        let unlabeled = Graph::new(g.features().clone(), g.edges().to_vec(), None).unwrap();
        assert!(matches!(
            train_reference_gnn(&unlabeled, &[0], &[1], &TrainConfig::default()),
            Err(Error::MissingLabels)
        ));
        assert!(train_reference_gnn(&g, &[0, 1], &[1], &TrainConfig::default()).is_err());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let g = tiny_graph();
        let config = TrainConfig { learning_rate: 1e200, momentum: 0.0, epochs: 50, ..Default::default() };
        assert!(matches!(
            train_reference_gnn(&g, &[0, 1, 2, 3, 4], &[], &config),
            Err(Error::Training { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = tiny_graph();
        let model = train_reference_gnn(&g, &[0, 1, 2], &[3, 4], &TrainConfig { epochs: 20, ..Default::default() }).unwrap();
        let back = ReferenceGnn::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        for v in 0..5 {
            assert_eq!(back.predict(&g, None, v).unwrap(), model.predict(&g, None, v).unwrap());
        }
    }

    #[test]
    fn truncated_and_misshapen_files_rejected() {
        let model = ReferenceGnn::new(3, 4, 2, 0);
        let text = model.to_json();
        assert!(matches!(ReferenceGnn::from_json(&text[..text.len() / 2]), Err(Error::Format(_))));

        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["input_dim"] = serde_json::json!(5);
        match ReferenceGnn::from_json(&value.to_string()).unwrap_err() {
            Error::Shape { expected, actual } => {
                assert!(expected.contains("4 × 10"), "{expected}");
                assert!(actual.contains("24"), "{actual}");
            }
            other => panic!("unexpected {other:?}"),
        }

        value["input_dim"] = serde_json::json!(3);
        value["version"] = serde_json::json!(99);
        assert!(matches!(ReferenceGnn::from_json(&value.to_string()), Err(Error::Format(_))));
    }

    #[test]
    fn permuted_edge_storage_gives_identical_predictions() {
        let g = tiny_graph();
        let mut reversed: Vec<_> = g.edges().iter().map(|&(u, v)| (v, u)).collect();
        reversed.reverse();
        let h = Graph::new(g.features().clone(), reversed, g.labels().map(|l| l.to_vec())).unwrap();
        let model = ReferenceGnn::new(3, 4, 3, 9);
        assert_eq!(model.predict_all(&g, None).unwrap(), model.predict_all(&h, None).unwrap());
    }
}
