//! Map-matched trajectories and the line-oriented trajectory file format.
//!
//! ```text
//! traj <id> <edge_id>...
//! bp   <id> <node_position>...
//! ts   <id> <t_1> ... <t_n>
//! meta <id> <vehicle_id> <start_unix_s> <end_unix_s>
//! ```
//!
//! Node positions index the node sequence `v_0 … v_n` of a trajectory with
//! `n` edges: position `p` is the node reached after the first `p` edges.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graph::{EdgeId, NodeId, RoadNetwork};
use crate::routing::{self, Path, RoutingError};

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trajectory `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A connected edge sequence, optionally timestamped and carrying break
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    edges: Vec<EdgeId>,
    timestamps: Option<Vec<f64>>,
    break_points: Vec<usize>,
}

impl Trajectory {
    pub fn new(network: &RoadNetwork, edges: Vec<EdgeId>) -> Result<Self, RoutingError> {
        routing::check_connected(network, &edges)?;
        Ok(Trajectory { edges, timestamps: None, break_points: Vec::new() })
    }

    /// Sets break points; they are sorted, deduplicated and range-checked.
    pub fn with_break_points(mut self, mut positions: Vec<usize>) -> Result<Self, String> {
        positions.sort_unstable();
        positions.dedup();
        if let Some(&p) = positions.iter().find(|&&p| p > self.edges.len()) {
            return Err(format!("break point {p} beyond node position {}", self.edges.len()));
        }
        self.break_points = positions;
        Ok(self)
    }

    /// Sets one timestamp per edge; they must be non-decreasing.
    pub fn with_timestamps(mut self, times: Vec<f64>) -> Result<Self, String> {
        if times.len() != self.edges.len() {
            return Err(format!("{} timestamps for {} edges", times.len(), self.edges.len()));
        }
        if times.windows(2).any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
            return Err("timestamps must be non-decreasing".into());
        }
        self.timestamps = Some(times);
        Ok(self)
    }

    pub(crate) fn from_parts_unchecked(
        edges: Vec<EdgeId>,
        timestamps: Option<Vec<f64>>,
        break_points: Vec<usize>,
    ) -> Self {
        Trajectory { edges, timestamps, break_points }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn break_points(&self) -> &[usize] {
        &self.break_points
    }

    pub fn source(&self, network: &RoadNetwork) -> Option<NodeId> {
        self.edges.first().map(|e| network.edges()[e.index()].source)
    }

    pub fn target(&self, network: &RoadNetwork) -> Option<NodeId> {
        self.edges.last().map(|e| network.edges()[e.index()].target)
    }

    /// `v_0 … v_n`; empty for an empty trajectory.
    pub fn node_sequence(&self, network: &RoadNetwork) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(self.edges.len() + 1);
        if let Some(first) = self.source(network) {
            nodes.push(first);
            nodes.extend(self.edges.iter().map(|e| network.edges()[e.index()].target));
        }
        nodes
    }

    /// The whole trajectory as a path.
    pub fn to_path(&self, network: &RoadNetwork) -> Result<Path, RoutingError> {
        Path::from_edges(network, self.edges.clone())
    }

    /// Sub-path between node positions `start < end`.
    pub fn sub_path(&self, network: &RoadNetwork, start: usize, end: usize) -> Result<Path, RoutingError> {
        Path::from_edges(network, self.edges[start..end].to_vec())
    }
}

/// Trip metadata attached by `meta` records.
#[derive(Debug, Clone, PartialEq)]
pub struct TripMeta {
    pub vehicle_id: String,
    pub start_time: i64,
    pub end_time: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub id: String,
    pub trajectory: Trajectory,
    pub meta: Option<TripMeta>,
}

/// Reads a trajectory file. Edge ids are resolved against `network`.
pub fn read_trajectories<R: BufRead>(
    network: &RoadNetwork,
    reader: R,
) -> Result<Vec<TrajectoryRecord>, TrajectoryError> {
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| TrajectoryError::Parse { line: lineno, message };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (tag, id) = match fields.as_slice() {
            [tag, id, ..] => (*tag, id.to_string()),
            _ => return Err(perr(format!("incomplete record `{content}`"))),
        };
        let rest = &fields[2..];
        let invalid = |message: String| TrajectoryError::Invalid { id: id.clone(), message };
        if tag == "traj" {
            if index.contains_key(&id) {
                return Err(invalid("duplicate trajectory".into()));
            }
            let edges = rest
                .iter()
                .map(|f| {
                    let label: u64 = f.parse().map_err(|_| perr(format!("bad edge id `{f}`")))?;
                    network
                        .edge_by_label(label)
                        .ok_or_else(|| invalid(format!("unknown edge {label}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let trajectory = Trajectory::new(network, edges).map_err(|e| invalid(e.to_string()))?;
            index.insert(id.clone(), records.len());
            records.push(TrajectoryRecord { id, trajectory, meta: None });
            continue;
        }
        let slot = *index
            .get(&id)
            .ok_or_else(|| perr(format!("`{tag}` record for unknown trajectory `{id}`")))?;
        let rec = &mut records[slot];
        match tag {
            "bp" => {
                let positions = rest
                    .iter()
                    .map(|f| f.parse::<usize>().map_err(|_| perr(format!("bad position `{f}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                rec.trajectory = rec.trajectory.clone().with_break_points(positions).map_err(invalid)?;
            }
            "ts" => {
                let times = rest
                    .iter()
                    .map(|f| f.parse::<f64>().map_err(|_| perr(format!("bad timestamp `{f}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                rec.trajectory = rec.trajectory.clone().with_timestamps(times).map_err(invalid)?;
            }
            "meta" => {
                let [vehicle, start, end] = rest else {
                    return Err(perr("meta record is `meta <id> <vehicle> <start> <end>`".into()));
                };
                let time = |f: &str| f.parse::<i64>().map_err(|_| perr(format!("bad time `{f}`")));
                let meta = TripMeta {
                    vehicle_id: vehicle.to_string(),
                    start_time: time(start)?,
                    end_time: time(end)?,
                };
                if meta.start_time > meta.end_time {
                    return Err(invalid("start time after end time".into()));
                }
                rec.meta = Some(meta);
            }
            other => return Err(perr(format!("unknown record `{other}`"))),
        }
    }
    Ok(records)
}

/// Writes records in the format read by [`read_trajectories`].
pub fn write_trajectories<W: Write>(
    network: &RoadNetwork,
    records: &[TrajectoryRecord],
    mut out: W,
) -> std::io::Result<()> {
    for rec in records {
        write!(out, "traj {}", rec.id)?;
        for e in rec.trajectory.edges() {
            write!(out, " {}", network.edge_label(*e))?;
        }
        writeln!(out)?;
        if !rec.trajectory.break_points().is_empty() {
            write!(out, "bp {}", rec.id)?;
            for p in rec.trajectory.break_points() {
                write!(out, " {p}")?;
            }
            writeln!(out)?;
        }
        if let Some(ts) = rec.trajectory.timestamps() {
            write!(out, "ts {}", rec.id)?;
            for t in ts {
                write!(out, " {t:?}")?;
            }
            writeln!(out)?;
        }
        if let Some(m) = &rec.meta {
            writeln!(out, "meta {} {} {} {}", rec.id, m.vehicle_id, m.start_time, m.end_time)?;
        }
    }
    Ok(())
}
