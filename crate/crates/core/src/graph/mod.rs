//! Undirected attributed graphs, their on-disk format, neighborhood
//! sampling and synthetic noise columns.

mod io;
mod noise;
mod sample;

pub use io::{load_graph, save_graph, GraphFiles};
pub(crate) use io::write_atomic;
pub use noise::{inject_noise_features, NoiseInjection};
pub use sample::{assemble_local_sample, n_hop_neighborhood, LocalSample};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Immutable undirected graph with a dense `node_count × d` feature matrix.
///
/// Edges are stored once as `(u, v)` with `u < v`; self-loops are never
/// stored (they are added logically where an algorithm needs them).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    features: Array2<f64>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    labels: Option<Vec<usize>>,
    feature_names: Option<Vec<String>>,
    edge_records: usize,
}

impl Graph {
    /// Builds a graph, symmetrizing and deduplicating `edges`.
    ///
    /// Self-loops in the input are dropped. `edge_records` keeps the number
    /// of pairs that were supplied, before deduplication.
    pub fn new<I>(features: Array2<f64>, edges: I, labels: Option<Vec<usize>>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let node_count = features.nrows();
        if features.ncols() == 0 {
            return Err(Error::invalid("feature matrix must have at least one column"));
        }
        if let Some(labels) = &labels {
            if labels.len() != node_count {
                return Err(Error::Consistency(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    node_count
                )));
            }
        }
        let mut canonical = Vec::new();
        let mut edge_records = 0;
        for (u, v) in edges {
            edge_records += 1;
            for id in [u, v] {
                if id >= node_count {
                    return Err(Error::Bounds { id, node_count });
                }
            }
            if u != v {
                canonical.push((u.min(v), u.max(v)));
            }
        }
        canonical.sort_unstable();
        canonical.dedup();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &canonical {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(Graph {
            features,
            edges: canonical,
            adjacency,
            labels,
            feature_names: None,
            edge_records,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.feature_count() {
            return Err(Error::Consistency(format!(
                "{} feature names for {} feature columns",
                names.len(),
                self.feature_count()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Same structure and labels, different feature matrix.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.node_count() || features.ncols() == 0 {
            return Err(Error::Shape {
                expected: format!("{} × d (d ≥ 1)", self.node_count()),
                actual: format!("{} × {}", features.nrows(), features.ncols()),
            });
        }
        let mut out = self.clone();
        if features.ncols() != self.feature_count() {
            out.feature_names = None;
        }
        out.features = features;
        Ok(out)
    }

    pub fn node_count(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// Deduplicated undirected edges, `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Number of edge pairs that were supplied when the graph was built.
    pub fn edge_records(&self) -> usize {
        self.edge_records
    }

    /// Sorted neighbor ids of `v` (without `v` itself).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of classes implied by the labels (max label + 1).
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Display name of feature column `j`, `f{j}` when the graph has no names.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("f{j}"),
        }
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::Bounds {
                id: v,
                node_count: self.node_count(),
            });
        }
        Ok(())
    }
}
