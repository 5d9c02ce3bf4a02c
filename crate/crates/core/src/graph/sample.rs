use ndarray::Array2;

use super::Graph;
use crate::error::{Error, Result};

/// Nodes within `hops` shortest-path steps of `v`, `v` first, then ring by
/// ring with ascending ids inside each ring.
pub fn n_hop_neighborhood(graph: &Graph, v: usize, hops: usize) -> Result<Vec<usize>> {
    graph.check_node(v)?;
    if hops == 0 {
        return Err(Error::invalid("hop count must be at least 1"));
    }
    let mut seen = vec![false; graph.node_count()];
    seen[v] = true;
    let mut order = vec![v];
    let mut ring = vec![v];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &u in &ring {
            for &w in graph.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        order.extend_from_slice(&next);
        ring = next;
    }
    Ok(order)
}

/// The paired local data a surrogate is fit on: feature rows of the
/// neighborhood and the predictor's probability vector for each of them.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSample {
    node_ids: Vec<usize>,
    features: Array2<f64>,
    predictions: Array2<f64>,
}

impl LocalSample {
    pub fn center(&self) -> usize {
        self.node_ids[0]
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    /// `n × d` feature rows, in `node_ids` order.
    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// `n × C` probability vectors, in `node_ids` order.
    pub fn predictions(&self) -> &Array2<f64> {
        &self.predictions
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }
}

/// Gathers the feature rows of `nodes` (from `features`, normally the
/// graph's own matrix) alongside one predictor output row per node.
pub fn assemble_local_sample(
    graph: &Graph,
    nodes: &[usize],
    predictor_outputs: Array2<f64>,
) -> Result<LocalSample> {
    let center = *nodes
        .first()
        .ok_or_else(|| Error::invalid("empty node sequence"))?;
    if nodes.len() < 2 {
        return Err(Error::InsufficientNeighbors {
            node: center,
            n: nodes.len(),
        });
    }
    let mut seen = vec![false; graph.node_count()];
    for &u in nodes {
        graph.check_node(u)?;
        if std::mem::replace(&mut seen[u], true) {
            return Err(Error::invalid(format!("node {u} appears twice in the sample")));
        }
    }
    if predictor_outputs.nrows() != nodes.len() {
        return Err(Error::Shape {
            expected: format!("{} prediction rows", nodes.len()),
            actual: format!("{}", predictor_outputs.nrows()),
        });
    }
    for (i, row) in predictor_outputs.rows().into_iter().enumerate() {
        let sum: f64 = row.sum();
        if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::ContractViolation(format!(
                "prediction for node {} is not a probability vector",
                nodes[i]
            )));
        }
    }
    let features = graph.features().select(ndarray::Axis(0), nodes);
    Ok(LocalSample {
        node_ids: nodes.to_vec(),
        features,
        predictions: predictor_outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::path_graph;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn star(leaves: usize) -> Graph {
        Graph::new(Array2::zeros((leaves + 1, 3)), (1..=leaves).map(|l| (0, l)), None).unwrap()
    }

    #[test]
    fn path_graph_hops() {
        let g = path_graph(4, 1);
        assert_eq!(n_hop_neighborhood(&g, 0, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(n_hop_neighborhood(&g, 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(n_hop_neighborhood(&g, 2, 1).unwrap(), vec![2, 1, 3]);
    }

    #[test]
    fn star_center() {
        let g = star(5);
        assert_eq!(n_hop_neighborhood(&g, 0, 1).unwrap(), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn isolated_node_is_alone() {
        let g = Graph::new(Array2::zeros((3, 1)), vec![(1, 2)], None).unwrap();
        assert_eq!(n_hop_neighborhood(&g, 0, 3).unwrap(), vec![0]);
    }

    #[test]
    fn zero_hops_rejected() {
        assert!(n_hop_neighborhood(&path_graph(3, 1), 0, 0).is_err());
    }

    #[test]
    fn sample_shapes() {
        let g = star(5);
        let nodes = n_hop_neighborhood(&g, 0, 1).unwrap();
        let s = assemble_local_sample(&g, &nodes, Array2::from_elem((6, 2), 0.5)).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.features().dim(), (6, 3));
        assert_eq!(s.center(), 0);

        let s = assemble_local_sample(&g, &[0, 1], array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn single_node_sample_refused() {
        let g = star(2);
        assert!(matches!(
            assemble_local_sample(&g, &[0], array![[1.0]]).unwrap_err(),
            Error::InsufficientNeighbors { node: 0, n: 1 }
        ));
    }

    #[test]
    fn non_probability_rows_rejected() {
        let g = star(2);
        assert!(matches!(
            assemble_local_sample(&g, &[0, 1], array![[0.7, 0.7], [0.5, 0.5]]).unwrap_err(),
            Error::ContractViolation(_)
        ));
    }

    fn all_pairs_distances(g: &Graph) -> Vec<Vec<usize>> {
        let n = g.node_count();
        let inf = usize::MAX / 4;
        let mut dist = vec![vec![inf; n]; n];
        for i in 0..n {
            dist[i][i] = 0;
        }
        for &(u, v) in g.edges() {
            dist[u][v] = 1;
            dist[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if dist[i][k] + dist[k][j] < dist[i][j] {
                        dist[i][j] = dist[i][k] + dist[k][j];
                    }
                }
            }
        }
        dist
    }

    proptest! {
        #[test]
        fn neighborhood_matches_floyd_warshall(
            n in 1usize..50,
            raw in proptest::collection::vec((0usize..50, 0usize..50), 0..80),
            v in 0usize..50,
            hops in 1usize..5,
        ) {
            let g = Graph::new(
                Array2::zeros((n, 1)),
                raw.into_iter().map(|(a, b)| (a % n, b % n)),
                None,
            ).unwrap();
            let v = v % n;
            let dist = all_pairs_distances(&g);
            let hood = n_hop_neighborhood(&g, v, hops).unwrap();
            let bigger = n_hop_neighborhood(&g, v, hops + 1).unwrap();

            prop_assert_eq!(hood[0], v);
            let mut expected: Vec<usize> = (0..n).filter(|&u| dist[v][u] <= hops).collect();
            let mut got = hood.clone();
            got.sort_unstable();
            expected.sort_unstable();
            prop_assert_eq!(&got, &expected);
            // ordered by (distance, id)
            for w in hood.windows(2) {
                prop_assert!((dist[v][w[0]], w[0]) < (dist[v][w[1]], w[1]));
            }
            prop_assert!(hood.iter().all(|u| bigger.contains(u)));
        }
    }
}
