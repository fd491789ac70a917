//! Per-trajectory segmentation and mining, fanned out over a worker pool.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use prefmine::eval::{self, EvalFn, SegmentationScore};
use prefmine::graph::RoadNetwork;
use prefmine::preference::{recover_preference, OracleConfig};
use prefmine::routing::PreferenceVector;
use prefmine::segmentation::{strip_self_loops, Criterion, SegmentationError, Segmenter};
use prefmine::trajectory::TrajectoryRecord;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Algorithm {
    /// Personalized-path segmentation.
    Ppts,
    /// Optimal-path segmentation under the named cost.
    Opts(String),
    /// Preference recovery by the cutting-plane LP.
    Rdp,
    /// All weight on travel time.
    Ttp,
    /// Best of a few random preferences.
    Brp,
}

impl Algorithm {
    pub fn is_segmentation(&self) -> bool {
        matches!(self, Algorithm::Ppts | Algorithm::Opts(_))
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ppts" => Ok(Algorithm::Ppts),
            "rdp" => Ok(Algorithm::Rdp),
            "ttp" => Ok(Algorithm::Ttp),
            "brp" => Ok(Algorithm::Brp),
            _ => match s.strip_prefix("opts:") {
                Some(name) if !name.is_empty() => Ok(Algorithm::Opts(name.to_string())),
                _ => Err(format!("unknown algorithm `{s}` (expected ppts, opts:<cost>, rdp, ttp or brp)")),
            },
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Ppts => f.write_str("ppts"),
            Algorithm::Opts(name) => write!(f, "opts:{name}"),
            Algorithm::Rdp => f.write_str("rdp"),
            Algorithm::Ttp => f.write_str("ttp"),
            Algorithm::Brp => f.write_str("brp"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub oracle: OracleConfig,
    pub seed: u64,
    /// Cost dimension the travel-time baseline puts its weight on.
    pub travel_time: String,
    pub workers: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { oracle: OracleConfig::default(), seed: 0, travel_time: "travel_time".into(), workers: 1 }
    }
}

/// Result for one trajectory under one algorithm. Segmentation fields are
/// set by segmentation algorithms, mining fields by mining algorithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub id: String,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmentable: Option<bool>,
    /// Segmentation points, `None` when unsegmentable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preferences: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rrro: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rcrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// Break points after self-loop removal.
    #[serde(skip)]
    pub break_points: Vec<usize>,
    #[serde(skip)]
    pub wall_ms: f64,
}

impl Row {
    fn new(id: &str, algorithm: &Algorithm) -> Self {
        Row {
            id: id.to_string(),
            algorithm: algorithm.to_string(),
            brr: None,
            sr: None,
            sq: None,
            segmentable: None,
            boundaries: None,
            preferences: None,
            rrro: None,
            rcrs: None,
            delta: None,
            iterations: None,
            alpha: None,
            break_points: Vec::new(),
            wall_ms: 0.0,
        }
    }
}

/// All rows of one algorithm, in input order.
#[derive(Debug, Clone)]
pub struct Batch {
    pub algorithm: Algorithm,
    pub rows: Vec<Row>,
    pub wall_ms: f64,
}

enum Job<'a> {
    Segment(Segmenter<'a>),
    Rdp,
    Ttp(PreferenceVector),
    Brp,
}

fn prepare<'a>(network: &'a RoadNetwork, algorithm: &Algorithm, settings: &Settings) -> Result<Job<'a>, CliError> {
    let cost = |name: &str| {
        network.cost_index(name).ok_or_else(|| {
            CliError::Usage(format!(
                "cost `{name}` is not in the network (available: {})",
                network.cost_names().join(", ")
            ))
        })
    };
    Ok(match algorithm {
        Algorithm::Ppts => Job::Segment(Segmenter::new(network, Criterion::PersonalizedPath, settings.oracle)?),
        Algorithm::Opts(name) => {
            Job::Segment(Segmenter::new(network, Criterion::OptimalPath(cost(name)?), settings.oracle)?)
        }
        Algorithm::Rdp => Job::Rdp,
        Algorithm::Ttp => Job::Ttp(eval::ttp_preference(network.cost_dim(), cost(&settings.travel_time)?)?),
        Algorithm::Brp => Job::Brp,
    })
}

fn segment_one(
    network: &RoadNetwork,
    segmenter: &Segmenter<'_>,
    rec: &TrajectoryRecord,
    mut row: Row,
) -> Result<Row, CliError> {
    let traj = strip_self_loops(network, &rec.trajectory);
    let seg = if traj.is_empty() {
        Some((Vec::new(), None))
    } else {
        match segmenter.segment(&traj) {
            Ok(s) => Some((s.boundaries, s.preferences)),
            Err(SegmentationError::Unsegmentable { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let segmentable = seg.is_some();
    let sp = seg.as_ref().map(|s| s.0.clone()).unwrap_or_default();
    row.break_points = traj.break_points().to_vec();
    if !row.break_points.is_empty() {
        let score = SegmentationScore::new(&row.break_points, &sp, segmentable)?;
        row.brr = Some(score.brr);
        row.sr = Some(score.sr);
        row.sq = Some(score.sq);
    }
    row.segmentable = Some(segmentable);
    if let Some((boundaries, prefs)) = seg {
        row.boundaries = Some(boundaries);
        row.preferences = prefs.map(|ps| ps.iter().map(|p| p.weights().to_vec()).collect());
    }
    Ok(row)
}

fn mine_one(
    network: &RoadNetwork,
    job: &Job<'_>,
    rec: &TrajectoryRecord,
    seed: u64,
    settings: &Settings,
    mut row: Row,
) -> Result<Row, CliError> {
    let traj = &rec.trajectory;
    match job {
        Job::Rdp => {
            let res = recover_preference(network, &traj.to_path(network)?, &settings.oracle)?;
            let score = eval::score_route(network, traj, &res.recovered_route, &res.alpha)?;
            row.rrro = Some(score.rrro);
            row.rcrs = Some(score.rcrs);
            row.delta = Some(res.delta);
            row.iterations = Some(res.iterations);
            row.alpha = Some(res.alpha.weights().to_vec());
        }
        Job::Ttp(alpha) => {
            let (score, _) = eval::evaluate_preference(network, traj, alpha)?;
            row.rrro = Some(score.rrro);
            row.rcrs = Some(score.rcrs);
            row.alpha = Some(alpha.weights().to_vec());
        }
        Job::Brp => {
            // one independent draw per evaluation function
            let by_rrro = eval::brp_preference(network, traj, EvalFn::Rrro, eval::item_seed(seed, 0))?;
            let by_rcrs = eval::brp_preference(network, traj, EvalFn::Rcrs, eval::item_seed(seed, 1))?;
            row.rrro = Some(by_rrro.score.rrro);
            row.rcrs = Some(by_rcrs.score.rcrs);
            row.alpha = Some(by_rcrs.alpha.weights().to_vec());
        }
        Job::Segment(_) => unreachable!("segmentation jobs are handled by segment_one"),
    }
    Ok(row)
}

/// Runs every algorithm over every record. Rows come back in input order
/// whatever the worker count; the first failing record in input order
/// decides the error.
pub fn evaluate(
    network: &RoadNetwork,
    records: &[TrajectoryRecord],
    algorithms: &[Algorithm],
    settings: &Settings,
) -> Result<Vec<Batch>, CliError> {
    let jobs = algorithms
        .iter()
        .map(|a| prepare(network, a, settings))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut batches = Vec::with_capacity(jobs.len());
    for (algorithm, job) in algorithms.iter().zip(&jobs) {
        let started = Instant::now();
        let results: Vec<Result<Row, CliError>> = pool.install(|| {
            records
                .par_iter()
                .enumerate()
                .map(|(i, rec)| {
                    let t = Instant::now();
                    let row = Row::new(&rec.id, algorithm);
                    let row = match job {
                        Job::Segment(s) => segment_one(network, s, rec, row),
                        _ => mine_one(network, job, rec, eval::item_seed(settings.seed, i as u64), settings, row),
                    };
                    row.map(|mut r| {
                        r.wall_ms = t.elapsed().as_secs_f64() * 1e3;
                        r
                    })
                    .map_err(|e| e.for_trajectory(&rec.id))
                })
                .collect()
        });
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        batches.push(Batch { algorithm: algorithm.clone(), rows, wall_ms });
    }
    Ok(batches)
}
