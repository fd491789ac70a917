//! Greedy longest-prefix segmentation under a monotone criterion.
//!
//! A criterion is monotone when every contiguous piece of a segment that
//! satisfies it satisfies it too. For such criteria, repeatedly cutting off
//! the longest satisfying prefix yields a minimum number of segments, and the
//! prefix itself can be found with a logarithmic number of tests by
//! galloping followed by binary search.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, RoadNetwork};
use crate::preference::{self, OracleConfig, PreferenceError};
use crate::routing::{self, Path, PreferenceVector, RoutingError};
use crate::trajectory::Trajectory;

/// Default length cap for [`Segmenter::brute_force_min_segmentation`].
pub const BRUTE_FORCE_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("single edge at position {position} fails the criterion")]
    UnsegmentableEdge { position: usize },
    #[error("trajectory cannot be segmented: edge at position {position} fails the criterion")]
    Unsegmentable { position: usize },
    #[error("trajectory has {len} edges, brute force is capped at {cap}")]
    TooLarge { len: usize, cap: usize },
    #[error("cost index {index} out of range for {dim} cost dimensions")]
    BadCostIndex { index: usize, dim: usize },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Segment must be a shortest path under one cost dimension.
    OptimalPath(usize),
    /// Segment must be a shortest path under some preference vector.
    PersonalizedPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefixSearch {
    #[default]
    Galloping,
    /// Reference scan, one test per extension.
    Linear,
}

/// Segment boundaries of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Interior node positions where one segment ends and the next starts.
    pub boundaries: Vec<usize>,
    /// Number of edges in the segmented trajectory.
    pub len: usize,
    /// One preference per segment for the personalized-path criterion.
    pub preferences: Option<Vec<PreferenceVector>>,
}

impl Segmentation {
    pub fn num_segments(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.boundaries.len() + 1
        }
    }

    /// Edge index ranges of the segments, in order.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut cuts = Vec::with_capacity(self.boundaries.len() + 2);
        cuts.push(0);
        cuts.extend(&self.boundaries);
        cuts.push(self.len);
        cuts.windows(2).map(|w| w[0]..w[1]).collect()
    }
}

/// Removes self-loop edges, remapping break points and timestamps. A break
/// on either side of a removed loop lands on the merged node.
pub fn strip_self_loops(network: &RoadNetwork, traj: &Trajectory) -> Trajectory {
    let keep: Vec<bool> = traj
        .edges()
        .iter()
        .map(|e| !network.edges()[e.index()].is_self_loop())
        .collect();
    if keep.iter().all(|k| *k) {
        return traj.clone();
    }
    // removed_before[p] = loops among the first p edges
    let mut removed_before = Vec::with_capacity(keep.len() + 1);
    removed_before.push(0usize);
    for k in &keep {
        let last = *removed_before.last().unwrap();
        removed_before.push(last + usize::from(!k));
    }
    let edges: Vec<EdgeId> = traj.edges().iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
    let timestamps = traj
        .timestamps()
        .map(|ts| ts.iter().zip(&keep).filter(|(_, k)| **k).map(|(t, _)| *t).collect());
    let mut bps: Vec<usize> = traj.break_points().iter().map(|&p| p - removed_before[p]).collect();
    bps.dedup();
    Trajectory::from_parts_unchecked(edges, timestamps, bps)
}

/// Outcome of one criterion test.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub alpha: Option<PreferenceVector>,
}

/// Applies one criterion to trajectories over a shared network.
#[derive(Debug, Clone)]
pub struct Segmenter<'a> {
    network: &'a RoadNetwork,
    criterion: Criterion,
    oracle: OracleConfig,
    search: PrefixSearch,
}

impl<'a> Segmenter<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        criterion: Criterion,
        oracle: OracleConfig,
    ) -> Result<Self, SegmentationError> {
        if let Criterion::OptimalPath(index) = criterion {
            if index >= network.cost_dim() {
                return Err(SegmentationError::BadCostIndex { index, dim: network.cost_dim() });
            }
        }
        Ok(Segmenter { network, criterion, oracle, search: PrefixSearch::default() })
    }

    pub fn with_search(mut self, search: PrefixSearch) -> Self {
        self.search = search;
        self
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    /// Tests a nonempty connected edge sequence.
    pub fn check(&self, edges: &[EdgeId]) -> Result<Verdict, SegmentationError> {
        let path = Path::from_edges(self.network, edges.to_vec())?;
        match self.criterion {
            Criterion::OptimalPath(i) => {
                let pref = PreferenceVector::unit(self.network.cost_dim(), i)?;
                let best = routing::shortest_path(self.network, path.source(), path.target(), &pref)?;
                let own = routing::personalized_cost(self.network, edges, &pref)?;
                let opt = routing::personalized_cost(self.network, best.edges(), &pref)?;
                Ok(Verdict { holds: own - opt <= self.oracle.eps, alpha: None })
            }
            Criterion::PersonalizedPath => {
                let alpha = preference::is_personalized_path(self.network, &path, &self.oracle)?;
                Ok(Verdict { holds: alpha.is_some(), alpha })
            }
        }
    }

    pub fn satisfies(&self, edges: &[EdgeId]) -> Result<bool, SegmentationError> {
        Ok(self.check(edges)?.holds)
    }

    /// Largest end position `p` such that edges `start..p` satisfy the
    /// criterion, with the witness preference of that prefix.
    pub fn longest_feasible_prefix(
        &self,
        edges: &[EdgeId],
        start: usize,
    ) -> Result<(usize, Option<PreferenceVector>), SegmentationError> {
        let remaining = edges.len() - start;
        assert!(remaining > 0, "prefix search needs at least one edge");
        let first = self.check(&edges[start..start + 1])?;
        if !first.holds {
            return Err(SegmentationError::UnsegmentableEdge { position: start });
        }
        let (mut good, mut witness) = (1usize, first.alpha);
        match self.search {
            PrefixSearch::Linear => {
                while good < remaining {
                    let v = self.check(&edges[start..start + good + 1])?;
                    if !v.holds {
                        break;
                    }
                    good += 1;
                    witness = v.alpha;
                }
            }
            PrefixSearch::Galloping => {
                let mut bad = None;
                let mut probe = 2usize;
                while good < remaining {
                    let len = probe.min(remaining);
                    let v = self.check(&edges[start..start + len])?;
                    if v.holds {
                        good = len;
                        witness = v.alpha;
                        probe *= 2;
                    } else {
                        bad = Some(len);
                        break;
                    }
                }
                if let Some(mut bad) = bad {
                    while bad - good > 1 {
                        let mid = good + (bad - good) / 2;
                        let v = self.check(&edges[start..start + mid])?;
                        if v.holds {
                            good = mid;
                            witness = v.alpha;
                        } else {
                            bad = mid;
                        }
                    }
                }
            }
        }
        Ok((start + good, witness))
    }

    /// Greedy left-to-right segmentation.
    pub fn segment(&self, traj: &Trajectory) -> Result<Segmentation, SegmentationError> {
        let edges = traj.edges();
        if edges.is_empty() {
            return Err(SegmentationError::EmptyTrajectory);
        }
        let mut boundaries = Vec::new();
        let mut prefs = Vec::new();
        let mut start = 0;
        while start < edges.len() {
            let (end, alpha) = self.longest_feasible_prefix(edges, start).map_err(|e| match e {
                SegmentationError::UnsegmentableEdge { position } => {
                    SegmentationError::Unsegmentable { position }
                }
                other => other,
            })?;
            prefs.extend(alpha);
            if end < edges.len() {
                boundaries.push(end);
            }
            start = end;
        }
        let preferences = match self.criterion {
            Criterion::PersonalizedPath => Some(prefs),
            Criterion::OptimalPath(_) => None,
        };
        Ok(Segmentation { boundaries, len: edges.len(), preferences })
    }

    /// Exact minimum segmentation by dynamic programming over all boundary
    /// positions. Intended as a reference for short trajectories.
    pub fn brute_force_min_segmentation(
        &self,
        traj: &Trajectory,
        cap: usize,
    ) -> Result<Segmentation, SegmentationError> {
        let edges = traj.edges();
        let n = edges.len();
        if n == 0 {
            return Err(SegmentationError::EmptyTrajectory);
        }
        if n > cap {
            return Err(SegmentationError::TooLarge { len: n, cap });
        }
        // best[j]: fewest segments covering edges 0..j, with the segment start
        // and witness that achieve it.
        let mut best: Vec<Option<(usize, usize, Option<PreferenceVector>)>> = vec![None; n + 1];
        best[0] = Some((0, 0, None));
        for j in 1..=n {
            for i in 0..j {
                let Some((count, _, _)) = best[i] else { continue };
                if best[j].as_ref().is_some_and(|(c, _, _)| *c <= count + 1) {
                    continue;
                }
                let v = self.check(&edges[i..j])?;
                if v.holds {
                    best[j] = Some((count + 1, i, v.alpha));
                }
            }
        }
        if best[n].is_none() {
            let position = (0..n).find(|&p| best[p].is_some() && best[p + 1].is_none()).unwrap_or(0);
            return Err(SegmentationError::Unsegmentable { position });
        }
        let mut boundaries = Vec::new();
        let mut prefs = Vec::new();
        let mut j = n;
        while j > 0 {
            let (_, i, alpha) = best[j].clone().expect("reachable");
            prefs.extend(alpha);
            if i > 0 {
                boundaries.push(i);
            }
            j = i;
        }
        boundaries.reverse();
        prefs.reverse();
        let preferences = match self.criterion {
            Criterion::PersonalizedPath => Some(prefs),
            Criterion::OptimalPath(_) => None,
        };
        Ok(Segmentation { boundaries, len: n, preferences })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NetworkBuilder, NodeId};

    fn net(d: usize, nodes: u64, edges: &[(u64, u64, &[f64])]) -> RoadNetwork {
        let mut b = NetworkBuilder::new((0..d).map(|i| format!("c{i}")));
        for n in 0..nodes {
            b.node(n);
        }
        for (i, (s, t, c)) in edges.iter().enumerate() {
            b.edge(i as u64, *s, *t, c.to_vec());
        }
        b.build().unwrap()
    }

    fn traj(g: &RoadNetwork, ids: &[u32]) -> Trajectory {
        Trajectory::new(g, ids.iter().map(|&i| EdgeId(i)).collect()).unwrap()
    }

    /// Line 0-1-2-3-4 of unit-ish edges plus a shortcut 1 -> 3 that is cheaper
    /// in the first dimension only. Second dimension is a unit cost.
    fn shortcut() -> RoadNetwork {
        net(
            2,
            5,
            &[
                (0, 1, &[1.0, 1.0]),
                (1, 2, &[1.0, 1.0]),
                (2, 3, &[1.0, 1.0]),
                (3, 4, &[1.0, 1.0]),
                (1, 3, &[1.5, 1.0]),
            ],
        )
    }

    #[test]
    fn strip_self_loops_remaps_breaks() {
        let g = net(1, 3, &[(0, 1, &[1.0]), (1, 1, &[1.0]), (1, 2, &[1.0])]);
        let t = traj(&g, &[0, 1, 2]).with_break_points(vec![2]).unwrap();
        let s = strip_self_loops(&g, &t);
        assert_eq!(s.edges(), &[EdgeId(0), EdgeId(2)]);
        assert_eq!(s.break_points(), &[1]);

        let t = traj(&g, &[0, 1, 2]).with_break_points(vec![1, 2]).unwrap();
        assert_eq!(strip_self_loops(&g, &t).break_points(), &[1]);

        let clean = traj(&g, &[0, 2]);
        assert_eq!(strip_self_loops(&g, &clean), clean);
    }

    #[test]
    fn optimal_path_criterion() {
        let g = shortcut();
        let cfg = OracleConfig::default();
        let tt = Segmenter::new(&g, Criterion::OptimalPath(0), cfg).unwrap();
        let unit = Segmenter::new(&g, Criterion::OptimalPath(1), cfg).unwrap();
        // 1 -> 2 -> 3 costs 2 under c0 (shortcut 1.5) but is one hop longer.
        assert!(!tt.satisfies(&[EdgeId(1), EdgeId(2)]).unwrap());
        assert!(!unit.satisfies(&[EdgeId(1), EdgeId(2)]).unwrap());
        assert!(tt.satisfies(&[EdgeId(0), EdgeId(4), EdgeId(3)]).unwrap());
        assert!(Segmenter::new(&g, Criterion::OptimalPath(2), cfg).is_err());
    }

    #[test]
    fn single_edges_always_pass_with_unit_dimension() {
        let g = shortcut();
        let s = Segmenter::new(&g, Criterion::PersonalizedPath, OracleConfig::default()).unwrap();
        for e in 0..5 {
            assert!(s.satisfies(&[EdgeId(e)]).unwrap());
        }
    }

    #[test]
    fn dominated_edge_fails_without_unit_dimension() {
        let g = net(2, 3, &[(0, 2, &[3.0, 3.0]), (0, 1, &[1.0, 1.0]), (1, 2, &[1.0, 1.0])]);
        let s = Segmenter::new(&g, Criterion::PersonalizedPath, OracleConfig::default()).unwrap();
        assert!(!s.satisfies(&[EdgeId(0)]).unwrap());
        assert!(matches!(
            s.longest_feasible_prefix(&[EdgeId(0)], 0),
            Err(SegmentationError::UnsegmentableEdge { position: 0 })
        ));
        assert!(matches!(
            s.segment(&traj(&g, &[0])),
            Err(SegmentationError::Unsegmentable { position: 0 })
        ));
    }

    #[test]
    fn personalized_trajectory_is_one_segment() {
        let g = shortcut();
        let s = Segmenter::new(&g, Criterion::PersonalizedPath, OracleConfig::default()).unwrap();
        let seg = s.segment(&traj(&g, &[0, 4, 3])).unwrap();
        assert_eq!(seg.num_segments(), 1);
        assert!(seg.boundaries.is_empty());
        assert_eq!(seg.preferences.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn non_optimal_detour_is_split() {
        let g = shortcut();
        let s = Segmenter::new(&g, Criterion::PersonalizedPath, OracleConfig::default()).unwrap();
        let t = traj(&g, &[0, 1, 2, 3]);
        let seg = s.segment(&t).unwrap();
        // 0-1-2 is fine, 0-1-2-3 is beaten by the shortcut in both dimensions.
        assert_eq!(seg.boundaries, vec![2]);
        assert_eq!(seg.segments(), vec![0..2, 2..4]);
        let linear = s.clone().with_search(PrefixSearch::Linear).segment(&t).unwrap();
        assert_eq!(linear, seg);
        let brute = s.brute_force_min_segmentation(&t, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(brute.num_segments(), 2);
    }

    #[test]
    fn brute_force_limits() {
        let g = shortcut();
        let s = Segmenter::new(&g, Criterion::PersonalizedPath, OracleConfig::default()).unwrap();
        let t = traj(&g, &[0, 1, 2, 3]);
        assert!(matches!(
            s.brute_force_min_segmentation(&t, 3),
            Err(SegmentationError::TooLarge { len: 4, cap: 3 })
        ));
        let one = s.brute_force_min_segmentation(&traj(&g, &[2]), BRUTE_FORCE_CAP).unwrap();
        assert_eq!(one.num_segments(), 1);
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let g = shortcut();
        let s = Segmenter::new(&g, Criterion::OptimalPath(0), OracleConfig::default()).unwrap();
        let t = Trajectory::new(&g, vec![]).unwrap();
        assert!(matches!(s.segment(&t), Err(SegmentationError::EmptyTrajectory)));
        let _ = NodeId(0);
    }
}
