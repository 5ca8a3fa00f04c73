//! Contact-network substrates: generators, structural measures and the
//! edge-list text format.
//!
//! A [`Network`] is a fixed node set `0..n_nodes` carrying one or more named
//! layers of weighted undirected edges. Networks are immutable once built;
//! every layer keeps both its canonical edge list (`u < v`, sorted) and a
//! compressed adjacency used by the simulation engines.

mod generators;
mod io;
pub(crate) mod spectral;
mod temporal;

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};

pub use generators::{
    build_multiplex, generate_ba, generate_complete, generate_configuration, generate_er,
};
pub use io::{load_network, parse_edge_list, save_network, write_edge_list};
pub use spectral::spectral_radius;
pub use temporal::{aggregate_temporal, sample_temporal_step, TemporalNetworkSpec};

/// Layer name used by the single-layer generators.
pub const DEFAULT_LAYER: &str = "contact";

/// Default absolute tolerance for spectral radius computations.
pub const SPECTRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    name: String,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl Layer {
    /// Builds a layer over nodes `0..n_nodes`, enforcing the network
    /// invariants. Edges are canonicalized to `u < v` and sorted.
    pub fn new(name: impl Into<String>, n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "layer name {name:?} must be non-empty without whitespace"
            )));
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u >= n_nodes || e.v >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) outside node range 0..{n_nodes} in layer {name}",
                    e.u, e.v
                )));
            }
            if e.u == e.v {
                return Err(Error::invalid(format!(
                    "self-loop on node {} in layer {name}",
                    e.u
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has non-positive weight {} in layer {name}",
                    e.u, e.v, e.weight
                )));
            }
            let (u, v) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            canonical.push(Edge {
                u,
                v,
                weight: e.weight,
            });
        }
        canonical.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        if let Some(w) = canonical.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::invalid(format!(
                "duplicate edge ({}, {}) in layer {name}",
                w[0].u, w[0].v
            )));
        }

        let mut degree = vec![0usize; n_nodes];
        for e in &canonical {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n_nodes].to_vec();
        let mut neighbors = vec![0; offsets[n_nodes]];
        let mut weights = vec![0.0; offsets[n_nodes]];
        for e in &canonical {
            neighbors[fill[e.u]] = e.v;
            weights[fill[e.u]] = e.weight;
            fill[e.u] += 1;
            neighbors[fill[e.v]] = e.u;
            weights[fill[e.v]] = e.weight;
            fill[e.v] += 1;
        }

        Ok(Layer {
            name,
            edges: canonical,
            offsets,
            neighbors,
            weights,
        })
    }

    pub(crate) fn from_pairs(
        name: &str,
        n_nodes: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let edges = pairs
            .into_iter()
            .map(|(u, v)| Edge { u, v, weight: 1.0 })
            .collect();
        Layer::new(name, n_nodes, edges)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, node: usize) -> f64 {
        self.weights[self.offsets[node]..self.offsets[node + 1]]
            .iter()
            .sum()
    }

    /// `(neighbor, weight)` pairs of `node`.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn is_weighted(&self) -> bool {
        self.edges.iter().any(|e| e.weight != 1.0)
    }

    fn renamed(&self, name: &str) -> Result<Layer> {
        Layer::new(name, self.n_nodes(), self.edges.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_nodes: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(n_nodes: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut seen = HashSet::new();
        for layer in &layers {
            if layer.n_nodes() != n_nodes {
                return Err(Error::invalid(format!(
                    "layer {} spans {} nodes, network has {n_nodes}",
                    layer.name,
                    layer.n_nodes()
                )));
            }
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::invalid(format!("duplicate layer name {}", layer.name)));
            }
        }
        Ok(Network { n_nodes, layers })
    }

    pub fn single_layer(layer: Layer) -> Self {
        Network {
            n_nodes: layer.n_nodes(),
            layers: vec![layer],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_names(&self) -> impl Iterator<Item = &str> {
        self.layers.iter().map(|l| l.name.as_str())
    }

    pub fn has_layer(&self, name: &str) -> bool {
        self.layers.iter().any(|l| l.name == name)
    }

    pub fn layer(&self, name: &str) -> Result<&Layer> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::invalid(format!("unknown layer {name:?}")))
    }

    pub(crate) fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Copy of this network with its single layer renamed; used when
    /// stacking generator outputs into a multiplex.
    pub fn with_layer_name(&self, name: &str) -> Result<Network> {
        let [layer] = self.layers.as_slice() else {
            return Err(Error::invalid(format!(
                "expected a single-layer network, found {} layers",
                self.layers.len()
            )));
        };
        Ok(Network::single_layer(layer.renamed(name)?))
    }

    pub fn degree_histogram(&self, layer: &str) -> Result<DegreeHistogram> {
        let l = self.layer(layer)?;
        let mut counts = BTreeMap::new();
        for node in 0..self.n_nodes {
            *counts.entry(l.degree(node)).or_insert(0) += 1;
        }
        Ok(DegreeHistogram {
            layer: layer.to_string(),
            counts,
        })
    }

    /// Mean (unweighted) degree of a layer; zero for an empty node set.
    pub fn mean_degree(&self, layer: &str) -> Result<f64> {
        let l = self.layer(layer)?;
        if self.n_nodes == 0 {
            return Ok(0.0);
        }
        Ok(2.0 * l.n_edges() as f64 / self.n_nodes as f64)
    }

    /// Mean weighted degree. Equals [`Network::mean_degree`] on unweighted
    /// layers.
    pub fn mean_strength(&self, layer: &str) -> Result<f64> {
        let l = self.layer(layer)?;
        if self.n_nodes == 0 {
            return Ok(0.0);
        }
        Ok(2.0 * l.total_weight() / self.n_nodes as f64)
    }

    pub fn count_nodes_with_degree(&self, layer: &str, k: usize) -> Result<usize> {
        let l = self.layer(layer)?;
        Ok((0..self.n_nodes).filter(|&v| l.degree(v) == k).count())
    }

    /// Nodes ordered by degree descending, ties by node id ascending.
    pub fn nodes_by_degree(&self, layer: &str) -> Result<Vec<usize>> {
        let l = self.layer(layer)?;
        let mut nodes: Vec<usize> = (0..self.n_nodes).collect();
        nodes.sort_by(|&a, &b| l.degree(b).cmp(&l.degree(a)).then(a.cmp(&b)));
        Ok(nodes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeHistogram {
    pub layer: String,
    pub counts: BTreeMap<usize, usize>,
}

impl DegreeHistogram {
    pub fn n_nodes(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn degree_sum(&self) -> usize {
        self.counts.iter().map(|(k, c)| k * c).sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.n_nodes();
        if n == 0 {
            0.0
        } else {
            self.degree_sum() as f64 / n as f64
        }
    }

    pub fn max_degree(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}
