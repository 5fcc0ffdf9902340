use hgff_core::env::{node_features, state_graph, NodeFeatures};
use hgff_core::{CommGraph, NodeKind, SimState, WsnInstance};
use ndarray::Array2;

use crate::error::{NnError, Result};

/// Network input: node features plus the weighted graph in compressed
/// adjacency form. Node order is arbitrary; the Q-values come out in the
/// order in which site nodes appear.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub features: Array2<f64>,
    pub kinds: Vec<NodeKind>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    sensors: Vec<usize>,
    sites: Vec<usize>,
}

impl GraphInput {
    /// `adjacency[v]` lists `(neighbor, weight)`; it must be symmetric for
    /// the encoder to be an undirected message passing network.
    pub fn new(
        features: Array2<f64>,
        kinds: Vec<NodeKind>,
        adjacency: &[Vec<(usize, f64)>],
    ) -> Result<Self> {
        let n = features.nrows();
        if kinds.len() != n || adjacency.len() != n {
            return Err(NnError::Shape(format!(
                "{} feature rows, {} node kinds, {} adjacency lists",
                n,
                kinds.len(),
                adjacency.len()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in adjacency {
            for &(u, w) in list {
                if u >= n {
                    return Err(NnError::Shape(format!("neighbor {u} out of range")));
                }
                neighbors.push(u);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        let sensors = (0..n).filter(|&v| kinds[v] == NodeKind::Sensor).collect();
        let sites = (0..n).filter(|&v| kinds[v] == NodeKind::Site).collect();
        Ok(Self {
            features,
            kinds,
            offsets,
            neighbors,
            weights,
            sensors,
            sites,
        })
    }

    pub fn from_parts(features: &NodeFeatures, graph: &CommGraph) -> Result<Self> {
        let n = features.rows.len();
        if graph.node_count() != n {
            return Err(NnError::Shape(format!(
                "{} feature rows for a graph of {} nodes",
                n,
                graph.node_count()
            )));
        }
        let flat: Vec<f64> = features
            .rows
            .iter()
            .flat_map(|r| r.iter().copied())
            .collect();
        let x = Array2::from_shape_vec((n, hgff_core::env::FEATURE_DIM), flat)
            .map_err(|e| NnError::Shape(e.to_string()))?;
        Self::new(x, graph.kinds(), &graph.adjacency())
    }

    pub fn from_state(state: &SimState, instance: &WsnInstance) -> Result<Self> {
        Self::from_parts(
            &node_features(state, instance),
            &state_graph(state, instance),
        )
    }

    /// Same graph structure with new features (valid while positions are
    /// unchanged).
    pub fn with_features(&self, features: &NodeFeatures) -> Result<Self> {
        let n = self.node_count();
        if features.rows.len() != n {
            return Err(NnError::Shape("feature rows do not match the graph".into()));
        }
        let mut out = self.clone();
        for (v, row) in features.rows.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                out.features[[v, k]] = x;
            }
        }
        Ok(out)
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn sensors(&self) -> &[usize] {
        &self.sensors
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// `(neighbor, weight, edge_slot)` for every edge incident to `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        (self.offsets[v]..self.offsets[v + 1]).map(move |e| (self.neighbors[e], self.weights[e], e))
    }
}
