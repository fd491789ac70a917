//! Synthetic grid networks and trajectories with known ground truth.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::sample_simplex;
use crate::graph::{normalize_costs, EdgeId, GraphError, NodeId, RoadNetwork};
use crate::routing::{self, PreferenceVector, RoutingError};
use crate::stitching::TimedTrajectory;
use crate::trajectory::Trajectory;

/// Name of the constant-one dimension counting traversed intersections.
pub const UNIT_DIMENSION: &str = "intersections";

/// Seconds of driving per edge in generated trip times.
const EDGE_SECONDS: i64 = 20;
const BASE_TIME: i64 = 1_600_000_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("source and target coincide")]
    SameEndpoints,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Stitch(#[from] crate::stitching::StitchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    /// Informative cost dimensions, each drawn i.i.d. uniform per edge.
    pub costs: Vec<CostDistribution>,
    pub include_unit_dim: bool,
    pub seed: u64,
    pub num_trajectories: usize,
    /// Inclusive range of via points per stitched trajectory.
    pub via_points: (usize, usize),
    /// Chance that a via point is forced off the direct route.
    pub off_path_prob: f64,
    /// Inclusive range of gaps between legs, in seconds.
    pub gap_s: (i64, i64),
    /// Preferences to plant; random simplex draws when empty.
    pub preference_pool: Vec<PreferenceVector>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let dist = |name: &str, low, high| CostDistribution { name: name.into(), low, high };
        SynthConfig {
            grid_w: 30,
            grid_h: 30,
            costs: vec![
                dist("travel_time", 0.5, 1.5),
                dist("congestion", 0.2, 1.0),
                dist("crowdedness", 0.2, 1.0),
            ],
            include_unit_dim: true,
            seed: 1,
            num_trajectories: 1000,
            via_points: (1, 3),
            off_path_prob: 1.0,
            gap_s: (4 * 60, 29 * 60),
            preference_pool: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn cost_dim(&self) -> usize {
        self.costs.len() + usize::from(self.include_unit_dim)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.grid_w == 0 || self.grid_h == 0 {
            return bad("grid dimensions must be positive".into());
        }
        if self.include_unit_dim && self.costs.is_empty() {
            return bad("the unit dimension needs at least one informative dimension".into());
        }
        if self.cost_dim() == 0 {
            return bad("no cost dimensions".into());
        }
        for c in &self.costs {
            if !(c.low >= 0.0 && c.low <= c.high && c.high.is_finite()) {
                return bad(format!("bad range for `{}`", c.name));
            }
        }
        if self.via_points.0 > self.via_points.1 {
            return bad("via point range is empty".into());
        }
        if self.gap_s.0 > self.gap_s.1 || self.gap_s.0 < 0 {
            return bad("gap range is empty".into());
        }
        if !(0.0..=1.0).contains(&self.off_path_prob) {
            return bad("off-path probability must be in [0, 1]".into());
        }
        if self.preference_pool.iter().any(|p| p.dim() != self.cost_dim()) {
            return bad("preference pool dimension mismatch".into());
        }
        Ok(())
    }

    pub fn cost_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.costs.iter().map(|c| c.name.clone()).collect();
        if self.include_unit_dim {
            names.push(UNIT_DIMENSION.into());
        }
        names
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn preference(&self, rng: &mut ChaCha8Rng) -> PreferenceVector {
        if self.preference_pool.is_empty() {
            sample_simplex(self.cost_dim(), 1, rng.random()).remove(0)
        } else {
            self.preference_pool[rng.random_range(0..self.preference_pool.len())].clone()
        }
    }
}

/// Node label of grid cell `(x, y)`.
pub fn grid_node(w: usize, x: usize, y: usize) -> u64 {
    (y * w + x) as u64
}

/// Bidirected `grid_w × grid_h` grid with normalized i.i.d. uniform costs.
pub fn generate_grid_network(cfg: &SynthConfig) -> Result<RoadNetwork, SynthError> {
    cfg.validate()?;
    let mut rng = cfg.rng(0);
    let mut b = crate::graph::NetworkBuilder::new(cfg.cost_names());
    let (w, h) = (cfg.grid_w, cfg.grid_h);
    for y in 0..h {
        for x in 0..w {
            b.node(grid_node(w, x, y));
        }
    }
    let mut label = 0u64;
    let mut link = |b: &mut crate::graph::NetworkBuilder, rng: &mut ChaCha8Rng, u: u64, v: u64| {
        for (s, t) in [(u, v), (v, u)] {
            let mut c: Vec<f64> = cfg.costs.iter().map(|d| rng.random_range(d.low..=d.high)).collect();
            if cfg.include_unit_dim {
                c.push(1.0);
            }
            b.edge(label, s, t, c);
            label += 1;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let u = grid_node(w, x, y);
            if x + 1 < w {
                link(&mut b, &mut rng, u, grid_node(w, x + 1, y));
            }
            if y + 1 < h {
                link(&mut b, &mut rng, u, grid_node(w, x, y + 1));
            }
        }
    }
    Ok(normalize_costs(&b.build()?)?)
}

/// The `alpha`-shortest path from `s` to `t`.
pub fn generate_personalized_trajectory(
    network: &RoadNetwork,
    alpha: &PreferenceVector,
    s: NodeId,
    t: NodeId,
) -> Result<Trajectory, SynthError> {
    if s == t {
        return Err(SynthError::SameEndpoints);
    }
    let path = routing::shortest_path(network, s, t, alpha)?;
    Ok(Trajectory::new(network, path.into_edges())?)
}

/// Per-leg trips through `stops` (source, vias, target), each leg driven by
/// its own preference. Returns the trips and the break positions in the
/// concatenated trajectory.
pub fn generate_stitched_trajectory(
    network: &RoadNetwork,
    stops: &[NodeId],
    alphas: &[PreferenceVector],
    gaps_s: &[i64],
    vehicle_id: &str,
    start_time: i64,
) -> Result<(Vec<TimedTrajectory>, Vec<usize>), SynthError> {
    if stops.len() < 2 || alphas.len() != stops.len() - 1 || gaps_s.len() + 1 != alphas.len() {
        return Err(SynthError::Config("need one preference per leg and one gap between legs".into()));
    }
    let mut trips = Vec::with_capacity(alphas.len());
    let mut breaks = Vec::new();
    let (mut clock, mut offset) = (start_time, 0usize);
    for (leg, alpha) in alphas.iter().enumerate() {
        let traj = generate_personalized_trajectory(network, alpha, stops[leg], stops[leg + 1])?;
        let end = clock + EDGE_SECONDS * traj.len() as i64;
        if leg > 0 {
            breaks.push(offset);
        }
        offset += traj.len();
        trips.push(TimedTrajectory::new(format!("{vehicle_id}.{leg}"), traj, vehicle_id, clock, end)?);
        if let Some(g) = gaps_s.get(leg) {
            clock = end + g;
        }
    }
    Ok((trips, breaks))
}

/// A single-leg trajectory with its planted preference.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTrajectory {
    pub id: String,
    pub trajectory: Trajectory,
    pub alpha: PreferenceVector,
}

fn random_node(network: &RoadNetwork, rng: &mut ChaCha8Rng) -> NodeId {
    NodeId(rng.random_range(0..network.num_nodes() as u32))
}

fn distinct_pair(network: &RoadNetwork, rng: &mut ChaCha8Rng) -> Result<(NodeId, NodeId), SynthError> {
    if network.num_nodes() < 2 {
        return Err(SynthError::Config("network needs two nodes".into()));
    }
    loop {
        let (s, t) = (random_node(network, rng), random_node(network, rng));
        if s != t {
            return Ok((s, t));
        }
    }
}

/// `cfg.num_trajectories` planted single-leg trajectories between random
/// distinct endpoints.
pub fn generate_planted_corpus(
    network: &RoadNetwork,
    cfg: &SynthConfig,
) -> Result<Vec<PlantedTrajectory>, SynthError> {
    cfg.validate()?;
    let mut rng = cfg.rng(1);
    (0..cfg.num_trajectories)
        .map(|i| {
            let (s, t) = distinct_pair(network, &mut rng)?;
            let alpha = cfg.preference(&mut rng);
            let trajectory = generate_personalized_trajectory(network, &alpha, s, t)?;
            Ok(PlantedTrajectory { id: format!("p{i}"), trajectory, alpha })
        })
        .collect()
}

/// A multi-leg trip history with its true break positions.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedSample {
    pub vehicle_id: String,
    pub trips: Vec<TimedTrajectory>,
    pub break_points: Vec<usize>,
    pub alphas: Vec<PreferenceVector>,
}

/// Picks a via point between `from` and `to`. When `off_path` is set it
/// avoids the nodes of the `alpha`-route between them.
fn pick_via(
    network: &RoadNetwork,
    rng: &mut ChaCha8Rng,
    from: NodeId,
    to: NodeId,
    alpha: &PreferenceVector,
    off_path: bool,
) -> Result<NodeId, SynthError> {
    let direct: HashSet<NodeId> = if off_path {
        let p = routing::shortest_path(network, from, to, alpha)?;
        let mut nodes: HashSet<NodeId> = p.edges().iter().map(|e| network.edges()[e.index()].target).collect();
        nodes.insert(from);
        nodes
    } else {
        HashSet::from([from, to])
    };
    for _ in 0..10_000 {
        let v = random_node(network, rng);
        if v != from && v != to && !direct.contains(&v) {
            return Ok(v);
        }
    }
    Err(SynthError::Config("could not place a via point".into()))
}

/// `cfg.num_trajectories` multi-leg samples, one vehicle each, spaced a day apart.
pub fn generate_stitched_corpus(
    network: &RoadNetwork,
    cfg: &SynthConfig,
) -> Result<Vec<StitchedSample>, SynthError> {
    cfg.validate()?;
    let mut rng = cfg.rng(2);
    let mut out = Vec::with_capacity(cfg.num_trajectories);
    for i in 0..cfg.num_trajectories {
        let (s, t) = distinct_pair(network, &mut rng)?;
        let vias = rng.random_range(cfg.via_points.0..=cfg.via_points.1);
        let mut stops = vec![s];
        let mut alphas = Vec::with_capacity(vias + 1);
        for _ in 0..vias {
            let alpha = cfg.preference(&mut rng);
            let off = rng.random_bool(cfg.off_path_prob);
            let prev = *stops.last().expect("nonempty");
            stops.push(pick_via(network, &mut rng, prev, t, &alpha, off)?);
            alphas.push(alpha);
        }
        stops.push(t);
        alphas.push(cfg.preference(&mut rng));
        // consecutive stops may coincide only if a via equals t, which pick_via excludes
        let gaps: Vec<i64> = (0..vias).map(|_| rng.random_range(cfg.gap_s.0..=cfg.gap_s.1)).collect();
        let vehicle = format!("v{i}");
        let start = BASE_TIME + 86_400 * i as i64;
        let (trips, break_points) =
            generate_stitched_trajectory(network, &stops, &alphas, &gaps, &vehicle, start)?;
        out.push(StitchedSample { vehicle_id: vehicle, trips, break_points, alphas });
    }
    Ok(out)
}

/// Multiplies every informative cost by an independent factor in
/// `[1 − rel, 1 + rel]`. The unit dimension is left alone.
pub fn perturb_costs(network: &RoadNetwork, rel: f64, seed: u64) -> Result<RoadNetwork, SynthError> {
    let unit = network.cost_index(UNIT_DIMENSION);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(network.map_costs(|_, c| {
        c.iter()
            .enumerate()
            .map(|(i, v)| {
                let f = rng.random_range(1.0 - rel..=1.0 + rel);
                if Some(i) == unit {
                    *v
                } else {
                    v * f
                }
            })
            .collect()
    })?)
}

/// Adds a two-edge bypass around each listed edge, each half costing
/// `factor` times the edge in every informative dimension and one unit in
/// the unit dimension. With `factor < 0.5` the bypass dominates the edge
/// unless the unit dimension is present.
pub fn plant_dominance_bypass(
    network: &RoadNetwork,
    edges: &[EdgeId],
    factor: f64,
) -> Result<RoadNetwork, SynthError> {
    let unit = network.cost_index(UNIT_DIMENSION);
    let mut b = network.to_builder();
    let first_node = (0..network.num_nodes()).map(|i| network.node_label(NodeId(i as u32))).max().map_or(0, |m| m + 1);
    let first_edge = (0..network.num_edges()).map(|i| network.edge_label(EdgeId(i as u32))).max().map_or(0, |m| m + 1);
    for (k, &e) in edges.iter().enumerate() {
        let (next_node, next_edge) = (first_node + k as u64, first_edge + 2 * k as u64);
        let edge = network.edges()[e.index()];
        let half: Vec<f64> = network
            .costs(e)
            .iter()
            .enumerate()
            .map(|(i, c)| if Some(i) == unit { 1.0 } else { c * factor })
            .collect();
        b.node(next_node);
        b.edge(next_edge, network.node_label(edge.source), next_node, half.clone());
        b.edge(next_edge + 1, next_node, network.node_label(edge.target), half);
    }
    Ok(b.build()?)
}

/// A random walk of `len` edges that avoids immediate U-turns when it can.
pub fn random_walk(network: &RoadNetwork, len: usize, seed: u64) -> Result<Trajectory, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'restart: for _ in 0..1000 {
        let mut at = random_node(network, &mut rng);
        let mut prev: Option<NodeId> = None;
        let mut edges = Vec::with_capacity(len);
        while edges.len() < len {
            let out = network.outgoing(at);
            if out.is_empty() {
                continue 'restart;
            }
            let forward: Vec<EdgeId> =
                out.iter().copied().filter(|e| Some(network.edges()[e.index()].target) != prev).collect();
            let pool = if forward.is_empty() { out } else { &forward };
            let e = pool[rng.random_range(0..pool.len())];
            edges.push(e);
            prev = Some(at);
            at = network.edges()[e.index()].target;
        }
        return Ok(Trajectory::new(network, edges)?);
    }
    Err(SynthError::Config("random walk kept hitting dead ends".into()))
}
