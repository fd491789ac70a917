//! Reference oracles shared by integration tests.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use prefmine::graph::{EdgeId, NetworkBuilder, NodeId, RoadNetwork};
use prefmine::routing::path_cost_vector;
use prefmine::stitching::TimedTrajectory;
use prefmine::synth::random_walk;
use prefmine::trajectory::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every simple path from `s` to `t`, including the empty one when `s == t`.
pub fn simple_paths(net: &RoadNetwork, s: NodeId, t: NodeId) -> Vec<Vec<EdgeId>> {
    fn dfs(
        net: &RoadNetwork,
        at: NodeId,
        t: NodeId,
        seen: &mut Vec<bool>,
        stack: &mut Vec<EdgeId>,
        out: &mut Vec<Vec<EdgeId>>,
    ) {
        if at == t {
            out.push(stack.clone());
            return;
        }
        for &e in net.outgoing(at) {
            let v = net.edges()[e.index()].target;
            if seen[v.index()] {
                continue;
            }
            seen[v.index()] = true;
            stack.push(e);
            dfs(net, v, t, seen, stack, out);
            stack.pop();
            seen[v.index()] = false;
        }
    }
    let mut seen = vec![false; net.num_nodes()];
    seen[s.index()] = true;
    let mut out = Vec::new();
    dfs(net, s, t, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Difference rows `c(T) − c(π)` over all simple alternatives. Walks with
/// repeated nodes never cost less than a simple path, so these suffice.
fn difference_rows(net: &RoadNetwork, traj: &Trajectory) -> Vec<Vec<f64>> {
    let own = path_cost_vector(net, traj.edges()).unwrap();
    let (s, t) = (traj.source(net).unwrap(), traj.target(net).unwrap());
    simple_paths(net, s, t)
        .iter()
        .map(|p| own.minus(&path_cost_vector(net, p).unwrap()).0)
        .collect()
}

/// Optimal `δ` of the robust program with all alternatives listed up front.
pub fn enumeration_delta(net: &RoadNetwork, traj: &Trajectory) -> f64 {
    let d = net.cost_dim();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let alpha: Vec<_> = (0..d).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let delta = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    lp.add_constraint(alpha.iter().map(|&a| (a, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for row in difference_rows(net, traj) {
        let mut expr: Vec<_> = alpha.iter().zip(&row).map(|(&a, &c)| (a, c)).collect();
        expr.push((delta, -1.0));
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    lp.solve().expect("robust program is always feasible and bounded").objective()
}

/// Whether some preference makes the trajectory no worse than every alternative.
pub fn enumeration_feasible(net: &RoadNetwork, traj: &Trajectory) -> bool {
    let d = net.cost_dim();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let alpha: Vec<_> = (0..d).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    lp.add_constraint(alpha.iter().map(|&a| (a, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for row in difference_rows(net, traj) {
        let expr: Vec<_> = alpha.iter().zip(&row).map(|(&a, &c)| (a, c)).collect();
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    match lp.solve() {
        Ok(_) => true,
        Err(minilp::Error::Infeasible) => false,
        Err(e) => panic!("reference LP failed: {e}"),
    }
}

/// Random multigraph with at most `max_nodes` nodes and `d` cost dimensions,
/// plus a random walk on it. Costs are sometimes small integers to force ties.
pub fn random_instance(seed: u64, max_nodes: usize, d: usize) -> (RoadNetwork, Trajectory) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=max_nodes);
        let m = rng.random_range(n..=3 * n);
        let integral = rng.random_bool(0.3);
        let mut b = NetworkBuilder::new((0..d).map(|i| format!("c{i}")));
        for v in 0..n as u64 {
            b.node(v);
        }
        for e in 0..m as u64 {
            let u = rng.random_range(0..n as u64);
            let mut v = rng.random_range(0..n as u64);
            if u == v && rng.random_bool(0.8) {
                v = (v + 1) % n as u64;
            }
            let costs = (0..d)
                .map(|_| if integral { f64::from(rng.random_range(0..4u32)) } else { rng.random_range(0.0..1.0) })
                .collect();
            b.edge(e, u, v, costs);
        }
        let net = b.build().unwrap();
        let len = rng.random_range(1..=6);
        let mut at = NodeId(rng.random_range(0..n as u32));
        let mut edges = Vec::new();
        while edges.len() < len {
            let out = net.outgoing(at);
            if out.is_empty() {
                break;
            }
            let e = out[rng.random_range(0..out.len())];
            edges.push(e);
            at = net.edges()[e.index()].target;
        }
        if edges.is_empty() {
            continue;
        }
        let traj = Trajectory::new(&net, edges).unwrap();
        return (net, traj);
    }
}

/// Random multi-vehicle trip history, sorted by start time per vehicle.
pub fn history(net: &RoadNetwork, seed: u64) -> Vec<TimedTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vehicles = rng.random_range(1..=3);
    let mut clocks = vec![0i64; vehicles];
    let mut last_end: Vec<Option<prefmine::graph::NodeId>> = vec![None; vehicles];
    let mut out = Vec::new();
    for i in 0..rng.random_range(1..=12) {
        let v = rng.random_range(0..vehicles);
        // sometimes continue from where the vehicle stopped
        let traj = loop {
            let t = random_walk(net, rng.random_range(1..=6), rng.random()).unwrap();
            if last_end[v].is_none() || rng.random_bool(0.3) || t.source(net) == last_end[v] {
                break t;
            }
            if rng.random_bool(0.5) {
                break t;
            }
        };
        let start = clocks[v] + rng.random_range(0..3600);
        let end = start + 60 * traj.len() as i64;
        clocks[v] = end;
        last_end[v] = traj.target(net);
        out.push(TimedTrajectory::new(format!("t{i}"), traj, format!("car{v}"), start, end).unwrap());
    }
    out
}
