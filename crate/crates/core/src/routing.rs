//! Preference-weighted shortest paths.
//!
//! Queries run a backward label-setting search from the target on the key
//! `(cost, hops)` and then walk forward from the source, always taking the
//! smallest edge id that stays on an optimal path. Among equal-cost paths
//! this yields the one with fewest hops, then the lexicographically smallest
//! edge sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CostVector, EdgeId, NodeId, RoadNetwork};

/// Tolerance on `Σα = 1` when constructing a preference vector.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Relative slack used when matching labels during the forward walk.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("preference has {found} weights but the network has {expected} cost dimensions")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid preference vector: {0}")]
    InvalidPreference(String),
    #[error("no path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edges {0} and {1} are not incident")]
    Disconnected(EdgeId, EdgeId),
    #[error("edge weight {weight} on {edge} breaks the nonnegativity precondition")]
    NegativeWeight { edge: EdgeId, weight: f64 },
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, RoutingError> {
        if weights.is_empty() {
            return Err(RoutingError::InvalidPreference("no weights".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(RoutingError::InvalidPreference(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(RoutingError::InvalidPreference(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(PreferenceVector(weights))
    }

    pub fn uniform(dim: usize) -> Self {
        PreferenceVector(vec![1.0 / dim as f64; dim])
    }

    /// All weight on cost dimension `index`.
    pub fn unit(dim: usize, index: usize) -> Result<Self, RoutingError> {
        if index >= dim {
            return Err(RoutingError::InvalidPreference(format!(
                "index {index} out of range for {dim} dimensions"
            )));
        }
        let mut w = vec![0.0; dim];
        w[index] = 1.0;
        Ok(PreferenceVector(w))
    }

    /// Projects a nearly-feasible vector (e.g. an LP solution) onto the
    /// simplex by clamping negatives and renormalizing.
    pub fn from_approximate(values: &[f64]) -> Result<Self, RoutingError> {
        let clamped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(RoutingError::InvalidPreference(format!(
                "cannot normalize {values:?}"
            )));
        }
        Ok(PreferenceVector(clamped.into_iter().map(|v| v / sum).collect()))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A walk through the network, stored as edges. May be empty when
/// `source == target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    source: NodeId,
    target: NodeId,
    edges: Vec<EdgeId>,
}

impl Path {
    pub fn empty(node: NodeId) -> Self {
        Path { source: node, target: node, edges: Vec::new() }
    }

    /// Builds a nonempty path, checking that consecutive edges are incident.
    pub fn from_edges(network: &RoadNetwork, edges: Vec<EdgeId>) -> Result<Self, RoutingError> {
        let (&first, &last) = match (edges.first(), edges.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(RoutingError::InvalidPreference("empty edge list".into())),
        };
        check_connected(network, &edges)?;
        let source = network.edge(first).ok_or(RoutingError::UnknownEdge(first))?.source;
        let target = network.edge(last).ok_or(RoutingError::UnknownEdge(last))?.target;
        Ok(Path { source, target, edges })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<EdgeId> {
        self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Verifies that every edge exists and `target(e_i) == source(e_{i+1})`.
pub fn check_connected(network: &RoadNetwork, edges: &[EdgeId]) -> Result<(), RoutingError> {
    for &e in edges {
        network.edge(e).ok_or(RoutingError::UnknownEdge(e))?;
    }
    for w in edges.windows(2) {
        let a = network.edges()[w[0].index()];
        let b = network.edges()[w[1].index()];
        if a.target != b.source {
            return Err(RoutingError::Disconnected(a.id, b.id));
        }
    }
    Ok(())
}

/// Componentwise sum of the edge cost vectors; the zero vector for no edges.
pub fn path_cost_vector(network: &RoadNetwork, edges: &[EdgeId]) -> Result<CostVector, RoutingError> {
    let mut total = CostVector::zeros(network.cost_dim());
    for &e in edges {
        if network.edge(e).is_none() {
            return Err(RoutingError::UnknownEdge(e));
        }
        total.add_slice(network.costs(e));
    }
    Ok(total)
}

/// `α · c` for a single cost vector.
pub fn cost_under(costs: &CostVector, pref: &PreferenceVector) -> Result<f64, RoutingError> {
    if costs.dim() != pref.dim() {
        return Err(RoutingError::DimensionMismatch { expected: costs.dim(), found: pref.dim() });
    }
    Ok(costs.dot(pref.weights()))
}

/// Personalized cost of a path: the summed cost vector dotted with `α`.
pub fn personalized_cost(
    network: &RoadNetwork,
    edges: &[EdgeId],
    pref: &PreferenceVector,
) -> Result<f64, RoutingError> {
    check_dim(network, pref)?;
    Ok(path_cost_vector(network, edges)?.dot(pref.weights()))
}

fn check_dim(network: &RoadNetwork, pref: &PreferenceVector) -> Result<(), RoutingError> {
    if pref.dim() != network.cost_dim() {
        return Err(RoutingError::DimensionMismatch {
            expected: network.cost_dim(),
            found: pref.dim(),
        });
    }
    Ok(())
}

/// Shortest `s`–`t` path under personalized edge costs `α · c(e)`.
pub fn shortest_path(
    network: &RoadNetwork,
    s: NodeId,
    t: NodeId,
    pref: &PreferenceVector,
) -> Result<Path, RoutingError> {
    check_dim(network, pref)?;
    let alpha = pref.weights();
    let weights: Vec<f64> = network
        .edges()
        .iter()
        .map(|e| {
            network
                .costs(e.id)
                .iter()
                .zip(alpha)
                .map(|(c, a)| c * a)
                .sum::<f64>()
        })
        .collect();
    shortest_path_by_weights(network, s, t, &weights)
}

/// Shortest path under arbitrary nonnegative per-edge weights, indexed by
/// edge id.
pub fn shortest_path_by_weights(
    network: &RoadNetwork,
    s: NodeId,
    t: NodeId,
    weights: &[f64],
) -> Result<Path, RoutingError> {
    for node in [s, t] {
        if !network.contains_node(node) {
            return Err(RoutingError::UnknownNode(node));
        }
    }
    assert_eq!(weights.len(), network.num_edges(), "one weight per edge");
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
        return Err(RoutingError::NegativeWeight { edge: EdgeId(i as u32), weight: w });
    }
    if s == t {
        return Ok(Path::empty(s));
    }

    let n = network.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![u32::MAX; n];
    // edge towards t that produced the current label
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[t.index()] = 0.0;
    hops[t.index()] = 0;
    heap.push(Label { cost: 0.0, hops: 0, node: t });

    while let Some(label) = heap.pop() {
        let v = label.node;
        if label.cost != dist[v.index()] || label.hops != hops[v.index()] {
            continue;
        }
        let bound = dist[s.index()];
        if bound.is_finite() && label.cost > bound + tie_slack(bound) {
            break;
        }
        for &e in network.incoming(v) {
            let u = network.edges()[e.index()].source;
            let cand = (label.cost + weights[e.index()], label.hops + 1);
            if improves(cand, (dist[u.index()], hops[u.index()])) {
                dist[u.index()] = cand.0;
                hops[u.index()] = cand.1;
                parent[u.index()] = Some(e);
                heap.push(Label { cost: cand.0, hops: cand.1, node: u });
            }
        }
    }
    if !dist[s.index()].is_finite() {
        return Err(RoutingError::NoPath { from: s, to: t });
    }

    // Walk forward taking the smallest-id edge that stays on an optimal,
    // hop-minimal route.
    let mut edges = Vec::with_capacity(hops[s.index()] as usize);
    let mut u = s;
    while u != t {
        let here = dist[u.index()];
        let next = network
            .outgoing(u)
            .iter()
            .copied()
            .find(|&e| {
                let v = network.edges()[e.index()].target;
                hops[v.index()] != u32::MAX
                    && hops[v.index()] + 1 == hops[u.index()]
                    && (weights[e.index()] + dist[v.index()] - here).abs() <= tie_slack(here)
            })
            .or(parent[u.index()])
            .expect("labelled node has a parent edge");
        edges.push(next);
        u = network.edges()[next.index()].target;
    }
    Ok(Path { source: s, target: t, edges })
}

#[derive(Debug, Clone, Copy)]
struct Label {
    cost: f64,
    hops: u32,
    node: NodeId,
}

fn cmp_key(a: (f64, u32), b: (f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn tie_slack(cost: f64) -> f64 {
    TIE_TOL * cost.abs().max(1.0)
}

/// Costs within the tie slack count as equal and fewer hops win.
fn improves(cand: (f64, u32), cur: (f64, u32)) -> bool {
    if !cur.0.is_finite() {
        return true;
    }
    let slack = tie_slack(cand.0.max(cur.0));
    if cand.0 < cur.0 - slack {
        true
    } else if cand.0 > cur.0 + slack {
        false
    } else {
        cand.1 < cur.1 || (cand.1 == cur.1 && cand.0 < cur.0)
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl Ord for Label {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_key((other.cost, other.hops), (self.cost, self.hops)).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
