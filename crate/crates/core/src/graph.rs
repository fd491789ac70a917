//! Road network: a directed multigraph with a `d`-dimensional nonnegative
//! cost vector on every edge.
//!
//! Node and edge identifiers are dense indices assigned in file order. The
//! labels used in the interchange format are kept alongside so that files
//! can be written back unchanged.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{AddAssign, Index};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the cost dimension that carries edge length in meters.
pub const LENGTH_DIMENSION: &str = "length_m";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("cost dimension `{name}` is identically zero")]
    DegenerateCost { dimension: usize, name: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A cost vector with one entry per cost dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostVector(pub Vec<f64>);

impl CostVector {
    pub fn zeros(dim: usize) -> Self {
        CostVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), weights.len());
        self.0.iter().zip(weights).map(|(c, w)| c * w).sum()
    }

    /// Componentwise `self - other`.
    pub fn minus(&self, other: &CostVector) -> CostVector {
        CostVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add_slice(&mut self, costs: &[f64]) {
        for (acc, c) in self.0.iter_mut().zip(costs) {
            *acc += c;
        }
    }
}

impl AddAssign<&CostVector> for CostVector {
    fn add_assign(&mut self, rhs: &CostVector) {
        self.add_slice(&rhs.0);
    }
}

impl Index<usize> for CostVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub source: NodeId,
    pub target: NodeId,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

/// Immutable road network. Cheap to share across threads by reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    cost_names: Vec<String>,
    /// Factor that maps stored costs back to the units they were loaded in.
    cost_scale: Vec<f64>,
    node_labels: Vec<u64>,
    edge_labels: Vec<u64>,
    edges: Vec<Edge>,
    costs: Vec<f64>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
    node_index: HashMap<u64, NodeId>,
    edge_index: HashMap<u64, EdgeId>,
}

/// Incremental constructor; all validation happens in [`NetworkBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    cost_names: Vec<String>,
    cost_scale: Option<Vec<f64>>,
    nodes: Vec<u64>,
    edges: Vec<(u64, u64, u64, Vec<f64>)>,
}

impl NetworkBuilder {
    pub fn new<S: Into<String>>(cost_names: impl IntoIterator<Item = S>) -> Self {
        NetworkBuilder {
            cost_names: cost_names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn cost_scale(&mut self, scale: Vec<f64>) -> &mut Self {
        self.cost_scale = Some(scale);
        self
    }

    pub fn node(&mut self, label: u64) -> &mut Self {
        self.nodes.push(label);
        self
    }

    pub fn edge(&mut self, label: u64, source: u64, target: u64, costs: Vec<f64>) -> &mut Self {
        self.edges.push((label, source, target, costs));
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn build(self) -> Result<RoadNetwork, GraphError> {
        let d = self.cost_names.len();
        if d == 0 {
            return Err(GraphError::Validation("cost dimension must be at least 1".into()));
        }
        let cost_scale = self.cost_scale.unwrap_or_else(|| vec![1.0; d]);
        if cost_scale.len() != d || cost_scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(GraphError::Validation(format!(
                "cost scale must hold {d} positive finite factors"
            )));
        }

        let mut node_index = HashMap::with_capacity(self.nodes.len());
        for (i, &label) in self.nodes.iter().enumerate() {
            if node_index.insert(label, NodeId(i as u32)).is_some() {
                return Err(GraphError::Validation(format!("duplicate node {label}")));
            }
        }

        let mut edges = Vec::with_capacity(self.edges.len());
        let mut costs = Vec::with_capacity(self.edges.len() * d);
        let mut edge_labels = Vec::with_capacity(self.edges.len());
        let mut edge_index = HashMap::with_capacity(self.edges.len());
        for (i, (label, src, dst, c)) in self.edges.into_iter().enumerate() {
            let id = EdgeId(i as u32);
            if edge_index.insert(label, id).is_some() {
                return Err(GraphError::Validation(format!("duplicate edge {label}")));
            }
            let lookup = |n: u64| {
                node_index.get(&n).copied().ok_or_else(|| {
                    GraphError::Validation(format!("edge {label} references unknown node {n}"))
                })
            };
            let source = lookup(src)?;
            let target = lookup(dst)?;
            if c.len() != d {
                return Err(GraphError::Validation(format!(
                    "edge {label} has {} costs, expected {d}",
                    c.len()
                )));
            }
            if let Some(bad) = c.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(GraphError::Validation(format!(
                    "edge {label} has invalid cost {bad}"
                )));
            }
            edges.push(Edge { id, source, target });
            costs.extend_from_slice(&c);
            edge_labels.push(label);
        }

        let n = self.nodes.len();
        let (out_offsets, out_edges) = csr(n, &edges, |e| e.source);
        let (in_offsets, in_edges) = csr(n, &edges, |e| e.target);

        Ok(RoadNetwork {
            cost_names: self.cost_names,
            cost_scale,
            node_labels: self.nodes,
            edge_labels,
            edges,
            costs,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
            node_index,
            edge_index,
        })
    }
}

/// Compressed adjacency; edges of each node stay in ascending id order.
fn csr(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> NodeId) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[key(e).index() + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut list = vec![EdgeId(0); edges.len()];
    for e in edges {
        let slot = &mut fill[key(e).index()];
        list[*slot] = e.id;
        *slot += 1;
    }
    (offsets, list)
}

impl RoadNetwork {
    pub fn cost_dim(&self) -> usize {
        self.cost_names.len()
    }

    pub fn cost_names(&self) -> &[String] {
        &self.cost_names
    }

    pub fn cost_index(&self, name: &str) -> Option<usize> {
        self.cost_names.iter().position(|n| n == name)
    }

    pub fn cost_scale(&self) -> &[f64] {
        &self.cost_scale
    }

    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.node_labels.len() as u32).map(NodeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.index())
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        id.index() < self.node_labels.len()
    }

    /// Cost vector of an edge. Panics on an unknown id.
    #[inline]
    pub fn costs(&self, id: EdgeId) -> &[f64] {
        let d = self.cost_dim();
        &self.costs[id.index() * d..(id.index() + 1) * d]
    }

    pub fn outgoing(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[self.out_offsets[node.index()]..self.out_offsets[node.index() + 1]]
    }

    pub fn incoming(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[self.in_offsets[node.index()]..self.in_offsets[node.index() + 1]]
    }

    pub fn node_label(&self, id: NodeId) -> u64 {
        self.node_labels[id.index()]
    }

    pub fn edge_label(&self, id: EdgeId) -> u64 {
        self.edge_labels[id.index()]
    }

    pub fn node_by_label(&self, label: u64) -> Option<NodeId> {
        self.node_index.get(&label).copied()
    }

    pub fn edge_by_label(&self, label: u64) -> Option<EdgeId> {
        self.edge_index.get(&label).copied()
    }

    /// Per-edge values of one dimension, converted back to load-time units.
    pub fn raw_dimension(&self, dim: usize) -> Vec<f64> {
        let scale = self.cost_scale[dim];
        (0..self.num_edges())
            .map(|e| self.costs[e * self.cost_dim() + dim] * scale)
            .collect()
    }

    /// Edge lengths in meters, when the network carries a `length_m` dimension.
    pub fn edge_lengths_m(&self) -> Option<Vec<f64>> {
        self.cost_index(LENGTH_DIMENSION).map(|i| self.raw_dimension(i))
    }

    /// Mean of each cost dimension over all edges.
    pub fn cost_means(&self) -> Vec<f64> {
        let d = self.cost_dim();
        let mut sums = vec![0.0; d];
        for row in self.costs.chunks_exact(d) {
            for (s, c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        let m = self.num_edges().max(1) as f64;
        sums.into_iter().map(|s| s / m).collect()
    }

    /// Rebuilds the network into a builder, e.g. to add edges.
    pub fn to_builder(&self) -> NetworkBuilder {
        let mut b = NetworkBuilder::new(self.cost_names.iter().cloned());
        b.cost_scale(self.cost_scale.clone());
        for &label in &self.node_labels {
            b.node(label);
        }
        for e in &self.edges {
            b.edge(
                self.edge_label(e.id),
                self.node_label(e.source),
                self.node_label(e.target),
                self.costs(e.id).to_vec(),
            );
        }
        b
    }

    /// Returns a copy whose per-edge costs are replaced by `f(edge, costs)`.
    pub fn map_costs(
        &self,
        mut f: impl FnMut(EdgeId, &[f64]) -> Vec<f64>,
    ) -> Result<RoadNetwork, GraphError> {
        let mut b = NetworkBuilder::new(self.cost_names.iter().cloned());
        b.cost_scale(self.cost_scale.clone());
        for &label in &self.node_labels {
            b.node(label);
        }
        for e in &self.edges {
            b.edge(
                self.edge_label(e.id),
                self.node_label(e.source),
                self.node_label(e.target),
                f(e.id, self.costs(e.id)),
            );
        }
        b.build()
    }
}

/// Divides every cost dimension by its mean so that each averages to one.
///
/// The divisor is folded into the network's cost scale so raw units (such as
/// meters for `length_m`) remain recoverable.
pub fn normalize_costs(network: &RoadNetwork) -> Result<RoadNetwork, GraphError> {
    let means = network.cost_means();
    if let Some(dim) = means.iter().position(|m| *m <= 0.0) {
        return Err(GraphError::DegenerateCost {
            dimension: dim,
            name: network.cost_names[dim].clone(),
        });
    }
    let mut out = network.clone();
    let d = out.cost_dim();
    for row in out.costs.chunks_exact_mut(d) {
        for (c, m) in row.iter_mut().zip(&means) {
            *c /= m;
        }
    }
    for (s, m) in out.cost_scale.iter_mut().zip(&means) {
        *s *= m;
    }
    Ok(out)
}

/// Reads the line-oriented network format.
///
/// ```text
/// d <cost_dim> <name_1> ... <name_d>
/// s <scale_1> ... <scale_d>          (optional)
/// n <node_id>
/// e <edge_id> <src> <dst> <c_1> ... <c_d>
/// ```
pub fn load_network<R: BufRead>(reader: R) -> Result<RoadNetwork, GraphError> {
    let mut builder: Option<NetworkBuilder> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| GraphError::Parse { line: lineno, message };
        let mut fields = content.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();
        match (tag, builder.as_mut()) {
            ("d", None) => {
                let (count, names) = rest
                    .split_first()
                    .ok_or_else(|| err("header needs a cost dimension".into()))?;
                let d: usize = count
                    .parse()
                    .map_err(|_| err(format!("bad cost dimension `{count}`")))?;
                if d == 0 || names.len() != d {
                    return Err(err(format!(
                        "header declares {d} costs but names {}",
                        names.len()
                    )));
                }
                builder = Some(NetworkBuilder::new(names.iter().copied()));
            }
            ("d", Some(_)) => return Err(err("duplicate header".into())),
            (_, None) => return Err(err("expected header line `d <cost_dim> <names...>`".into())),
            ("s", Some(b)) => {
                let scale = rest
                    .iter()
                    .map(|f| parse_f64(f).map_err(&err))
                    .collect::<Result<Vec<_>, _>>()?;
                b.cost_scale(scale);
            }
            ("n", Some(b)) => {
                let [id] = rest[..] else {
                    return Err(err("node record is `n <node_id>`".into()));
                };
                b.node(parse_u64(id).map_err(err)?);
            }
            ("e", Some(b)) => {
                if rest.len() < 3 {
                    return Err(err("edge record is `e <edge_id> <src> <dst> <costs...>`".into()));
                }
                let label = parse_u64(rest[0]).map_err(&err)?;
                let src = parse_u64(rest[1]).map_err(&err)?;
                let dst = parse_u64(rest[2]).map_err(&err)?;
                let costs = rest[3..]
                    .iter()
                    .map(|f| parse_f64(f).map_err(&err))
                    .collect::<Result<Vec<_>, _>>()?;
                b.edge(label, src, dst, costs);
            }
            (other, Some(_)) => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    builder
        .ok_or_else(|| GraphError::Parse { line: 0, message: "missing header".into() })?
        .build()
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("bad id `{s}`"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("bad number `{s}`"))
}

/// Writes the network in the format read by [`load_network`]. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_network<W: Write>(network: &RoadNetwork, mut out: W) -> std::io::Result<()> {
    write!(out, "d {}", network.cost_dim())?;
    for name in &network.cost_names {
        write!(out, " {name}")?;
    }
    writeln!(out)?;
    if network.cost_scale.iter().any(|s| *s != 1.0) {
        write!(out, "s")?;
        for s in &network.cost_scale {
            write!(out, " {s:?}")?;
        }
        writeln!(out)?;
    }
    for label in &network.node_labels {
        writeln!(out, "n {label}")?;
    }
    for e in &network.edges {
        write!(
            out,
            "e {} {} {}",
            network.edge_label(e.id),
            network.node_label(e.source),
            network.node_label(e.target)
        )?;
        for c in network.costs(e.id) {
            write!(out, " {c:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
