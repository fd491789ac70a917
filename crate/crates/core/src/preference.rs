//! Driving-preference recovery with a Dijkstra separation oracle.
//!
//! Both programs range over the preference simplex and have one row per
//! alternative `s`–`t` route. The rows are never enumerated: the loop solves
//! the LP over the rows seen so far, asks a shortest-path query under the
//! current `α` for the most violated route, and appends that route's row
//! until the query finds nothing better than the trajectory.
//!
//! * Feasibility: does some `α` make the trajectory a shortest path?
//! * Robust: minimize the slack `δ` by which the best alternative may beat
//!   the trajectory. Always feasible.

use thiserror::Error;

use crate::graph::{CostVector, NodeId, RoadNetwork};
use crate::lp::{LinearProgram, LpError, LpStatus, Relation, LP_TOL};
use crate::routing::{self, Path, PreferenceVector, RoutingError};

/// Oracle convergence tolerance in normalized personalized-cost units.
pub const EPS_ORACLE: f64 = 1e-6;

/// Iteration cap on oracle rounds.
pub const MAX_ORACLE_ROUNDS: usize = 10_000;

/// Which optimal preference [`recover_preference`] reports when the optimum
/// is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representative {
    /// Point of the optimal face farthest from every cut and simplex facet.
    #[default]
    Centered,
    /// The simplex vertex, as returned by the solver.
    Vertex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub eps: f64,
    pub lp_tol: f64,
    pub max_rounds: usize,
    pub representative: Representative,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            eps: EPS_ORACLE,
            lp_tol: LP_TOL,
            max_rounds: MAX_ORACLE_ROUNDS,
            representative: Representative::default(),
        }
    }
}

impl OracleConfig {
    pub fn with_eps(eps: f64) -> Self {
        OracleConfig { eps, ..Default::default() }
    }
}

#[derive(Debug, Error)]
pub enum PreferenceError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("oracle did not converge within {rounds} rounds")]
    OracleDivergence { rounds: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Program {
    /// No objective; rows `(c(T) − c(π))·α ≤ 0`.
    Feasibility,
    /// Minimize `δ`; rows `(c(T) − c(π))·α − δ ≤ 0`.
    Robust,
}

/// The trajectory as the oracle sees it: endpoints and summed cost vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PathQuery {
    pub source: NodeId,
    pub target: NodeId,
    pub cost: CostVector,
}

impl PathQuery {
    pub fn new(network: &RoadNetwork, path: &Path) -> Result<Self, RoutingError> {
        Ok(PathQuery {
            source: path.source(),
            target: path.target(),
            cost: routing::path_cost_vector(network, path.edges())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleStep {
    /// No route beats the trajectory by more than the current slack.
    Converged { gap: f64, route: Path },
    /// `route` beats the trajectory by `violation` beyond the current slack.
    NewCut { row: Vec<f64>, violation: f64, route: Path },
}

/// One separation-oracle query at preference `alpha` and current slack
/// `delta` (zero for the feasibility program).
pub fn oracle_round(
    network: &RoadNetwork,
    query: &PathQuery,
    program: Program,
    alpha: &PreferenceVector,
    delta: f64,
    eps: f64,
) -> Result<OracleStep, PreferenceError> {
    let route = routing::shortest_path(network, query.source, query.target, alpha)?;
    let route_cost = routing::path_cost_vector(network, route.edges())?;
    let gap = routing::cost_under(&query.cost, alpha)? - routing::cost_under(&route_cost, alpha)?;
    if gap <= delta + eps {
        return Ok(OracleStep::Converged { gap, route });
    }
    let mut row = query.cost.minus(&route_cost).0;
    if program == Program::Robust {
        row.push(-1.0);
    }
    Ok(OracleStep::NewCut { row, violation: gap - delta, route })
}

/// Outcome of the robust program for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    pub alpha: PreferenceVector,
    /// How much cheaper the best alternative is than the trajectory under
    /// `alpha`; exactly zero when within tolerance.
    pub delta: f64,
    /// Shortest path under `alpha` between the trajectory's endpoints.
    pub recovered_route: Path,
    pub iterations: usize,
    pub constraints_added: usize,
    /// Source equals target; the recovered route is empty.
    pub round_trip: bool,
}

struct Solved {
    alpha: PreferenceVector,
    gap: f64,
    route: Path,
    rounds: usize,
    /// Cut rows on the preference variables only.
    cuts: Vec<Vec<f64>>,
    /// LP value of δ behind `alpha`.
    lp_delta: f64,
}

/// Runs the cutting-plane loop. `None` means the feasibility program has no
/// solution (never returned for the robust program).
fn cutting_plane(
    network: &RoadNetwork,
    query: &PathQuery,
    program: Program,
    cfg: &OracleConfig,
) -> Result<Option<Solved>, PreferenceError> {
    let d = network.cost_dim();
    if query.cost.dim() != d {
        return Err(RoutingError::DimensionMismatch { expected: d, found: query.cost.dim() }.into());
    }
    let num_vars = match program {
        Program::Feasibility => d,
        Program::Robust => d + 1,
    };
    let mut objective = vec![0.0; num_vars];
    if program == Program::Robust {
        objective[d] = 1.0;
    }
    let mut lp = LinearProgram::new(objective)?;
    let mut simplex_row = vec![1.0; d];
    if program == Program::Robust {
        simplex_row.push(0.0);
    }
    lp.add_constraint(simplex_row, Relation::Eq, 1.0)?;

    let mut alpha = PreferenceVector::uniform(d);
    let mut delta = 0.0;
    let mut cut_rows: Vec<Vec<f64>> = Vec::new();
    for round in 1..=cfg.max_rounds {
        match oracle_round(network, query, program, &alpha, delta, cfg.eps)? {
            OracleStep::Converged { gap, route } => {
                let cuts = alpha_rows(cut_rows, d);
                return Ok(Some(Solved { alpha, gap, route, rounds: round, cuts, lp_delta: delta }));
            }
            OracleStep::NewCut { row, route, violation } => {
                if cut_rows.contains(&row) {
                    // The LP already holds this row; what is left is rounding.
                    let gap = violation + delta;
                    return Ok(match program {
                        Program::Robust => {
                            let cuts = alpha_rows(cut_rows, d);
                            Some(Solved { alpha, gap, route, rounds: round, cuts, lp_delta: delta })
                        }
                        Program::Feasibility => None,
                    });
                }
                lp.add_constraint(row.clone(), Relation::Le, 0.0)?;
                cut_rows.push(row);
                let sol = lp.solve(cfg.lp_tol)?;
                if sol.status == LpStatus::Infeasible {
                    assert!(program == Program::Feasibility, "robust program is always feasible");
                    return Ok(None);
                }
                alpha = PreferenceVector::from_approximate(&sol.values[..d])?;
                if program == Program::Robust {
                    delta = sol.values[d].max(0.0);
                }
            }
        }
    }
    Err(PreferenceError::OracleDivergence { rounds: cfg.max_rounds })
}

fn alpha_rows(mut rows: Vec<Vec<f64>>, d: usize) -> Vec<Vec<f64>> {
    rows.iter_mut().for_each(|r| r.truncate(d));
    rows
}

/// Moves `solved.alpha` to the Chebyshev center of `{α : r·α ≤ δ* for all
/// cuts r}` within the simplex, adding cuts until the oracle accepts the
/// center. Distances are measured inside the simplex's affine hull.
fn center(
    network: &RoadNetwork,
    query: &PathQuery,
    mut solved: Solved,
    cfg: &OracleConfig,
) -> Result<Solved, PreferenceError> {
    let d = network.cost_dim();
    if d < 2 {
        return Ok(solved);
    }
    let bound = solved.lp_delta + 0.5 * cfg.eps;
    let facet = (d as f64 / (d as f64 - 1.0)).sqrt();
    while solved.rounds < cfg.max_rounds {
        // variables: α_1..α_d, margin m; maximize m
        let mut objective = vec![0.0; d + 1];
        objective[d] = -1.0;
        let mut lp = LinearProgram::new(objective)?;
        let mut row = vec![1.0; d + 1];
        row[d] = 0.0;
        lp.add_constraint(row, Relation::Eq, 1.0)?;
        let mut cap = vec![0.0; d + 1];
        cap[d] = 1.0;
        lp.add_constraint(cap, Relation::Le, 1.0)?;
        for i in 0..d {
            let mut row = vec![0.0; d + 1];
            row[i] = -facet;
            row[d] = 1.0;
            lp.add_constraint(row, Relation::Le, 0.0)?;
        }
        for cut in &solved.cuts {
            let mean = cut.iter().sum::<f64>() / d as f64;
            let norm = cut.iter().map(|c| (c - mean).powi(2)).sum::<f64>().sqrt();
            let mut row = cut.clone();
            row.push(norm);
            lp.add_constraint(row, Relation::Le, bound)?;
        }
        let sol = match lp.solve(cfg.lp_tol) {
            Ok(sol) if sol.status == LpStatus::Optimal => sol,
            _ => return Ok(solved),
        };
        let alpha = PreferenceVector::from_approximate(&sol.values[..d])?;
        solved.rounds += 1;
        match oracle_round(network, query, Program::Feasibility, &alpha, solved.lp_delta, cfg.eps)? {
            OracleStep::Converged { gap, route } => {
                solved.alpha = alpha;
                solved.gap = gap;
                solved.route = route;
                return Ok(solved);
            }
            OracleStep::NewCut { row, .. } => {
                if solved.cuts.contains(&row) {
                    return Ok(solved);
                }
                solved.cuts.push(row);
            }
        }
    }
    Err(PreferenceError::OracleDivergence { rounds: cfg.max_rounds })
}

/// Returns a preference under which `path` is a shortest path between its
/// endpoints (within `cfg.eps`), or `None` if no such preference exists.
pub fn is_personalized_path(
    network: &RoadNetwork,
    path: &Path,
    cfg: &OracleConfig,
) -> Result<Option<PreferenceVector>, PreferenceError> {
    let query = PathQuery::new(network, path)?;
    Ok(cutting_plane(network, &query, Program::Feasibility, cfg)?.map(|s| s.alpha))
}

/// Finds the preference that brings `path` closest to optimal.
pub fn recover_preference(
    network: &RoadNetwork,
    path: &Path,
    cfg: &OracleConfig,
) -> Result<MiningResult, PreferenceError> {
    let query = PathQuery::new(network, path)?;
    let mut solved = cutting_plane(network, &query, Program::Robust, cfg)?
        .expect("robust program always has a solution");
    let delta = if solved.gap <= cfg.eps { 0.0 } else { solved.gap };
    if cfg.representative == Representative::Centered {
        solved = center(network, &query, solved, cfg)?;
    }
    Ok(MiningResult {
        alpha: solved.alpha,
        delta,
        recovered_route: solved.route,
        iterations: solved.rounds,
        constraints_added: solved.cuts.len(),
        round_trip: path.source() == path.target(),
    })
}
