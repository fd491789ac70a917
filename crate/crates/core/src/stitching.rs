//! Joining consecutive trips of one vehicle into stitched trajectories.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::RoadNetwork;
use crate::routing::{self, Path, RoutingError};
use crate::trajectory::{Trajectory, TrajectoryRecord, TripMeta};

pub const DEFAULT_GAP_MAX_S: i64 = 30 * 60;
pub const DEFAULT_LEN_MAX_M: f64 = 200.0;

#[derive(Debug, Error)]
pub enum StitchError {
    #[error("vehicle `{vehicle}`: trajectory `{id}` starts before its predecessor")]
    UnsortedInput { vehicle: String, id: String },
    #[error("trajectory `{0}` has no meta record")]
    MissingMeta(String),
    #[error("trajectory `{0}` is empty")]
    EmptyTrajectory(String),
    #[error("trajectory `{0}` ends before it starts")]
    InvalidTimes(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrajectory {
    pub id: String,
    pub trajectory: Trajectory,
    pub start_time: i64,
    pub end_time: i64,
    pub vehicle_id: String,
}

impl TimedTrajectory {
    pub fn new(
        id: impl Into<String>,
        trajectory: Trajectory,
        vehicle_id: impl Into<String>,
        start_time: i64,
        end_time: i64,
    ) -> Result<Self, StitchError> {
        let id = id.into();
        if trajectory.is_empty() {
            return Err(StitchError::EmptyTrajectory(id));
        }
        if start_time > end_time {
            return Err(StitchError::InvalidTimes(id));
        }
        Ok(TimedTrajectory { id, trajectory, start_time, end_time, vehicle_id: vehicle_id.into() })
    }

    pub fn from_record(rec: &TrajectoryRecord) -> Result<Self, StitchError> {
        let meta = rec.meta.as_ref().ok_or_else(|| StitchError::MissingMeta(rec.id.clone()))?;
        TimedTrajectory::new(
            rec.id.clone(),
            rec.trajectory.clone(),
            meta.vehicle_id.clone(),
            meta.start_time,
            meta.end_time,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StitchedTrajectory {
    /// Ids of the joined inputs, in order.
    pub sources: Vec<String>,
    pub vehicle_id: String,
    pub start_time: i64,
    pub end_time: i64,
    /// Carries the break points.
    pub trajectory: Trajectory,
    /// Edge positions of inserted connector edges.
    pub stitch_edges: Vec<usize>,
}

impl StitchedTrajectory {
    fn start(t: &TimedTrajectory) -> Self {
        StitchedTrajectory {
            sources: vec![t.id.clone()],
            vehicle_id: t.vehicle_id.clone(),
            start_time: t.start_time,
            end_time: t.end_time,
            trajectory: t.trajectory.clone(),
            stitch_edges: Vec::new(),
        }
    }

    pub fn break_points(&self) -> &[usize] {
        self.trajectory.break_points()
    }

    pub fn id(&self) -> &str {
        &self.sources[0]
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            id: self.id().to_string(),
            trajectory: self.trajectory.clone(),
            meta: Some(TripMeta {
                vehicle_id: self.vehicle_id.clone(),
                start_time: self.start_time,
                end_time: self.end_time,
            }),
        }
    }

    fn append(&mut self, connector: &Path, next: &TimedTrajectory) {
        let base = self.trajectory.len();
        let resume = base + connector.len();
        let mut edges = self.trajectory.edges().to_vec();
        edges.extend_from_slice(connector.edges());
        edges.extend_from_slice(next.trajectory.edges());
        let mut bps = self.trajectory.break_points().to_vec();
        bps.push(resume);
        bps.extend(next.trajectory.break_points().iter().map(|p| p + resume));
        self.stitch_edges.extend(base..resume);
        self.trajectory = Trajectory::from_parts_unchecked(edges, None, bps);
        self.sources.push(next.id.clone());
        self.end_time = next.end_time;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StitchConfig {
    pub gap_max_s: i64,
    pub len_max_m: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig { gap_max_s: DEFAULT_GAP_MAX_S, len_max_m: DEFAULT_LEN_MAX_M }
    }
}

/// Connector route from the end of `t1` to the start of `t2`, if it has at
/// most one edge or is shorter than `len_max_m`. The route is shortest by
/// length; without a length dimension it is shortest by hop count.
pub fn pseudo_connected(
    network: &RoadNetwork,
    t1: &Trajectory,
    t2: &Trajectory,
    len_max_m: f64,
) -> Result<Option<Path>, RoutingError> {
    let (Some(u), Some(v)) = (t1.target(network), t2.source(network)) else {
        return Ok(None);
    };
    if u == v {
        return Ok(Some(Path::empty(u)));
    }
    let lengths = network.edge_lengths_m();
    let weights = lengths.clone().unwrap_or_else(|| vec![1.0; network.num_edges()]);
    let route = match routing::shortest_path_by_weights(network, u, v, &weights) {
        Ok(p) => p,
        Err(RoutingError::NoPath { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let short = lengths.is_some_and(|l| route.edges().iter().map(|e| l[e.index()]).sum::<f64>() < len_max_m);
    Ok((route.len() <= 1 || short).then_some(route))
}

/// Stitches one vehicle's trips, which must be sorted by start time.
pub fn stitch_vehicle(
    network: &RoadNetwork,
    trips: &[TimedTrajectory],
    cfg: &StitchConfig,
) -> Result<Vec<StitchedTrajectory>, StitchError> {
    if let Some(w) = trips.windows(2).find(|w| w[1].start_time < w[0].start_time) {
        return Err(StitchError::UnsortedInput { vehicle: w[1].vehicle_id.clone(), id: w[1].id.clone() });
    }
    let mut out = Vec::new();
    let Some((first, rest)) = trips.split_first() else {
        return Ok(out);
    };
    let mut current = StitchedTrajectory::start(first);
    for next in rest {
        let connector = if next.start_time - current.end_time <= cfg.gap_max_s {
            pseudo_connected(network, &current.trajectory, &next.trajectory, cfg.len_max_m)?
        } else {
            None
        };
        match connector {
            Some(c) => current.append(&c, next),
            None => out.push(std::mem::replace(&mut current, StitchedTrajectory::start(next))),
        }
    }
    out.push(current);
    Ok(out)
}

/// Groups trips by vehicle, keeping input order within each vehicle.
pub fn group_by_vehicle(trips: &[TimedTrajectory]) -> Vec<Vec<TimedTrajectory>> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<TimedTrajectory>> = Vec::new();
    for t in trips {
        let i = *slot.entry(&t.vehicle_id).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(t.clone());
    }
    groups
}

/// Orders stitched outputs by the input position of their first trip.
pub fn order_by_input(
    trips: &[TimedTrajectory],
    per_vehicle: Vec<Vec<StitchedTrajectory>>,
) -> Vec<StitchedTrajectory> {
    let pos: HashMap<&str, usize> = trips.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let mut all: Vec<StitchedTrajectory> = per_vehicle.into_iter().flatten().collect();
    all.sort_by_key(|s| pos[s.id()]);
    all
}

pub fn stitch_all(
    network: &RoadNetwork,
    trips: &[TimedTrajectory],
    cfg: &StitchConfig,
) -> Result<Vec<StitchedTrajectory>, StitchError> {
    let per_vehicle = group_by_vehicle(trips)
        .iter()
        .map(|g| stitch_vehicle(network, g, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(order_by_input(trips, per_vehicle))
}
