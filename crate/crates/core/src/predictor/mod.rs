//! The black-box classifier contract consumed by every explainer, and a
//! small trainable mean-aggregation GNN that satisfies it.

mod gnn;

pub use gnn::{
    load_model, save_model, train_reference_gnn, Gradients, ReferenceGnn, TrainConfig,
    TrainingMetadata,
};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A node classifier treated as a black box.
///
/// Implementations must be deterministic, return probability vectors of
/// length [`class_count`](Predictor::class_count), and compute against the
/// override matrix when one is supplied.
pub trait Predictor: Send + Sync {
    fn class_count(&self) -> usize;

    fn predict(&self, graph: &Graph, features: Option<&Array2<f64>>, node: usize)
        -> Result<Array1<f64>>;

    /// One probability row per node of `nodes`.
    fn predict_nodes(
        &self,
        graph: &Graph,
        features: Option<&Array2<f64>>,
        nodes: &[usize],
    ) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((nodes.len(), self.class_count()));
        for (row, &v) in nodes.iter().enumerate() {
            out.row_mut(row).assign(&self.predict(graph, features, v)?);
        }
        Ok(out)
    }

    /// Probability rows for every node of the graph.
    fn predict_all(&self, graph: &Graph, features: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        let nodes: Vec<usize> = (0..graph.node_count()).collect();
        self.predict_nodes(graph, features, &nodes)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn predict(&self, graph: &Graph, features: Option<&Array2<f64>>, node: usize) -> Result<Array1<f64>> {
        (**self).predict(graph, features, node)
    }

    fn predict_nodes(&self, graph: &Graph, features: Option<&Array2<f64>>, nodes: &[usize]) -> Result<Array2<f64>> {
        (**self).predict_nodes(graph, features, nodes)
    }

    fn predict_all(&self, graph: &Graph, features: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        (**self).predict_all(graph, features)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }

    fn predict(&self, graph: &Graph, features: Option<&Array2<f64>>, node: usize) -> Result<Array1<f64>> {
        (**self).predict(graph, features, node)
    }

    fn predict_nodes(&self, graph: &Graph, features: Option<&Array2<f64>>, nodes: &[usize]) -> Result<Array2<f64>> {
        (**self).predict_nodes(graph, features, nodes)
    }

    fn predict_all(&self, graph: &Graph, features: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        (**self).predict_all(graph, features)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: ndarray::ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of `ids` whose argmax prediction equals the label.
pub fn accuracy<P: Predictor + ?Sized>(predictor: &P, graph: &Graph, ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::invalid("accuracy over an empty node set"));
    }
    let labels = graph.labels().ok_or(Error::MissingLabels)?;
    let probs = predictor.predict_nodes(graph, None, ids)?;
    let correct = ids
        .iter()
        .zip(probs.rows())
        .filter(|(&v, p)| argmax(p.view()) == labels[v])
        .count();
    Ok(correct as f64 / ids.len() as f64)
}

/// Copy of `features` with the given columns set to zero for every node.
pub fn zero_columns(features: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    let mut out = features.clone();
    for &j in columns {
        out.column_mut(j).fill(0.0);
    }
    out
}
