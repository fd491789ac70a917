//! Segmentation and preference-mining quality measures, and the baseline
//! preference pickers.

use std::collections::{BTreeSet, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, RoadNetwork};
use crate::preference::EPS_ORACLE;
use crate::routing::{self, Path, PreferenceVector, RoutingError};
use crate::trajectory::Trajectory;

/// Candidates drawn by the random baseline.
pub const BRP_SAMPLES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("trajectory has no break points")]
    NoBreakPoints,
    #[error("trajectory has zero personalized cost")]
    ZeroCost,
    #[error("recovered route costs {route} but the trajectory only {trajectory}")]
    NotShortest { route: f64, trajectory: f64 },
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

fn as_set(points: &[usize]) -> BTreeSet<usize> {
    points.iter().copied().collect()
}

/// Fraction of break points that are also segmentation points.
pub fn brr(break_points: &[usize], seg_points: &[usize]) -> Result<f64, EvalError> {
    let bp = as_set(break_points);
    if bp.is_empty() {
        return Err(EvalError::NoBreakPoints);
    }
    let sp = as_set(seg_points);
    Ok(bp.intersection(&sp).count() as f64 / bp.len() as f64)
}

/// Segmentation points per break point.
pub fn sr(break_points: &[usize], seg_points: &[usize]) -> Result<f64, EvalError> {
    let bp = as_set(break_points);
    if bp.is_empty() {
        return Err(EvalError::NoBreakPoints);
    }
    Ok(as_set(seg_points).len() as f64 / bp.len() as f64)
}

/// Recovered break points per segmentation point; 0 without segmentation points.
pub fn sq(break_points: &[usize], seg_points: &[usize]) -> Result<f64, EvalError> {
    let r = sr(break_points, seg_points)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(brr(break_points, seg_points)? / r)
}

/// Fraction of segmentable trajectories; 0 for an empty slice.
pub fn s_score(segmentable: &[bool]) -> f64 {
    if segmentable.is_empty() {
        return 0.0;
    }
    segmentable.iter().filter(|s| **s).count() as f64 / segmentable.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationScore {
    pub brr: f64,
    pub sr: f64,
    pub sq: f64,
    pub segmentable: bool,
}

impl SegmentationScore {
    /// Unsegmentable trajectories score as if they had no segmentation points.
    pub fn new(break_points: &[usize], seg_points: &[usize], segmentable: bool) -> Result<Self, EvalError> {
        let sp: &[usize] = if segmentable { seg_points } else { &[] };
        Ok(SegmentationScore {
            brr: brr(break_points, sp)?,
            sr: sr(break_points, sp)?,
            sq: sq(break_points, sp)?,
            segmentable,
        })
    }
}

/// Hop distance from each break point to the nearest segmentation point,
/// infinite when there are none.
pub fn distance_to_next_sp(break_points: &[usize], seg_points: &[usize]) -> Vec<f64> {
    let sp = as_set(seg_points);
    break_points
        .iter()
        .map(|&b| {
            let after = sp.range(b..).next().map(|s| s - b);
            let before = sp.range(..b).next_back().map(|s| b - s);
            match (after, before) {
                (Some(a), Some(c)) => a.min(c) as f64,
                (Some(a), None) => a as f64,
                (None, Some(c)) => c as f64,
                (None, None) => f64::INFINITY,
            }
        })
        .collect()
}

/// Fraction of distances at most `d`, for `d = 0..=max_hops`.
pub fn distance_cdf(distances: &[f64], max_hops: usize) -> Vec<f64> {
    (0..=max_hops)
        .map(|d| {
            if distances.is_empty() {
                0.0
            } else {
                distances.iter().filter(|x| **x <= d as f64).count() as f64 / distances.len() as f64
            }
        })
        .collect()
}

/// Shared edges over distinct trajectory edges.
pub fn rrro(traj: &[EdgeId], recovered: &[EdgeId]) -> Result<f64, EvalError> {
    let t: HashSet<EdgeId> = traj.iter().copied().collect();
    if t.is_empty() {
        return Err(EvalError::EmptyTrajectory);
    }
    let shared = recovered.iter().copied().collect::<HashSet<_>>().intersection(&t).count();
    Ok(shared as f64 / t.len() as f64)
}

/// `p(π|α) / p(T|α)`.
pub fn rcrs(
    network: &RoadNetwork,
    traj: &[EdgeId],
    recovered: &[EdgeId],
    alpha: &PreferenceVector,
) -> Result<f64, EvalError> {
    let pt = routing::personalized_cost(network, traj, alpha)?;
    if pt <= 0.0 {
        return Err(EvalError::ZeroCost);
    }
    let pr = routing::personalized_cost(network, recovered, alpha)?;
    if pr > pt + EPS_ORACLE {
        return Err(EvalError::NotShortest { route: pr, trajectory: pt });
    }
    Ok((pr / pt).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningScore {
    pub rrro: f64,
    pub rcrs: f64,
}

/// Scores `alpha` by routing between the trajectory's endpoints under it.
pub fn evaluate_preference(
    network: &RoadNetwork,
    traj: &Trajectory,
    alpha: &PreferenceVector,
) -> Result<(MiningScore, Path), EvalError> {
    let (Some(s), Some(t)) = (traj.source(network), traj.target(network)) else {
        return Err(EvalError::EmptyTrajectory);
    };
    let route = routing::shortest_path(network, s, t, alpha)?;
    let score = score_route(network, traj, &route, alpha)?;
    Ok((score, route))
}

pub fn score_route(
    network: &RoadNetwork,
    traj: &Trajectory,
    route: &Path,
    alpha: &PreferenceVector,
) -> Result<MiningScore, EvalError> {
    Ok(MiningScore {
        rrro: rrro(traj.edges(), route.edges())?,
        rcrs: rcrs(network, traj.edges(), route.edges(), alpha)?,
    })
}

/// All weight on travel time.
pub fn ttp_preference(dim: usize, travel_time_index: usize) -> Result<PreferenceVector, RoutingError> {
    PreferenceVector::unit(dim, travel_time_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalFn {
    Rrro,
    Rcrs,
}

impl EvalFn {
    pub fn pick(self, score: &MiningScore) -> f64 {
        match self {
            EvalFn::Rrro => score.rrro,
            EvalFn::Rcrs => score.rcrs,
        }
    }
}

/// Uniform samples from the probability simplex.
pub fn sample_simplex(dim: usize, count: usize, seed: u64) -> Vec<PreferenceVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let draws: Vec<f64> = (0..dim).map(|_| Exp1.sample(&mut rng)).collect();
            PreferenceVector::from_approximate(&draws).expect("exponential draws are positive")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrpChoice {
    pub alpha: PreferenceVector,
    pub score: MiningScore,
    pub route: Path,
    /// Every candidate with its value under the chosen evaluation function.
    pub candidates: Vec<(PreferenceVector, f64)>,
}

/// Best of [`BRP_SAMPLES`] random preferences under `eval_fn`; the first
/// candidate wins ties.
pub fn brp_preference(
    network: &RoadNetwork,
    traj: &Trajectory,
    eval_fn: EvalFn,
    seed: u64,
) -> Result<BrpChoice, EvalError> {
    let mut best: Option<BrpChoice> = None;
    let mut candidates = Vec::with_capacity(BRP_SAMPLES);
    for alpha in sample_simplex(network.cost_dim(), BRP_SAMPLES, seed) {
        let (score, route) = evaluate_preference(network, traj, &alpha)?;
        let value = eval_fn.pick(&score);
        candidates.push((alpha.clone(), value));
        if best.as_ref().is_none_or(|b| value > eval_fn.pick(&b.score)) {
            best = Some(BrpChoice { alpha, score, route, candidates: Vec::new() });
        }
    }
    let mut best = best.expect("at least one candidate");
    best.candidates = candidates;
    Ok(best)
}

/// Decorrelated per-item seed.
pub fn item_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
