//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p prefmine-cli --test acceptance -- 3 7`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use prefmine::eval::{self, EvalError, SegmentationScore};
use prefmine::graph::{EdgeId, NetworkBuilder, RoadNetwork};
use prefmine::preference::{is_personalized_path, recover_preference, OracleConfig};
use prefmine::routing::{Path as Route, PreferenceVector};
use prefmine::segmentation::SegmentationError::Unsegmentable;
use prefmine::segmentation::{Criterion, Segmenter, BRUTE_FORCE_CAP};
use prefmine::stitching::{pseudo_connected, stitch_all, StitchConfig, TimedTrajectory};
use prefmine::synth::{self, SynthConfig};
use prefmine::trajectory::{Trajectory, TrajectoryRecord};
use prefmine_cli::report::latency;
use prefmine_cli::{evaluate, summarize, Algorithm, Batch, Settings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn settings(workers: usize) -> Settings {
    Settings { workers, ..Settings::default() }
}

fn planted_records(net: &RoadNetwork, driven: &RoadNetwork, cfg: &SynthConfig) -> Vec<TrajectoryRecord> {
    synth::generate_planted_corpus(driven, cfg)
        .unwrap()
        .into_iter()
        .map(|p| TrajectoryRecord {
            id: p.id,
            trajectory: Trajectory::new(net, p.trajectory.edges().to_vec()).unwrap(),
            meta: None,
        })
        .collect()
}

fn stitched_records(net: &RoadNetwork, cfg: &SynthConfig) -> Vec<TrajectoryRecord> {
    let trips: Vec<TimedTrajectory> =
        synth::generate_stitched_corpus(net, cfg).unwrap().into_iter().flat_map(|s| s.trips).collect();
    stitch_all(net, &trips, &StitchConfig::default()).unwrap().iter().map(|s| s.to_record()).collect()
}

fn batch<'a>(batches: &'a [Batch], algorithm: &Algorithm) -> &'a Batch {
    batches.iter().find(|b| &b.algorithm == algorithm).unwrap()
}

fn s_score(b: &Batch) -> f64 {
    let flags: Vec<bool> = b.rows.iter().map(|r| r.segmentable == Some(true)).collect();
    eval::s_score(&flags)
}

fn instance(seed: u64) -> (RoadNetwork, Trajectory) {
    common::random_instance(seed, 8, 2 + (seed % 3) as usize)
}

const ORACLE_INSTANCES: u64 = 600;

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = OracleConfig::default();
    let (mut worst, mut positive): (f64, usize) = (0.0, 0);
    for seed in 0..ORACLE_INSTANCES {
        let (net, traj) = instance(seed);
        let got = recover_preference(&net, &traj.to_path(&net).unwrap(), &cfg).unwrap().delta;
        positive += usize::from(got > 0.0);
        worst = worst.max((got - common::enumeration_delta(&net, &traj)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 120.0,
        format!(
            "{ORACLE_INSTANCES} graphs, d in 2..=4, {positive} with delta > 0, max |delta - reference| = {worst:.2e}, {secs:.1} s"
        ),
    )
}

fn feasibility_equivalence() -> Outcome {
    let cfg = OracleConfig::default();
    let (mut vs_enum, mut vs_delta, mut feasible) = (0, 0, 0);
    for seed in 0..ORACLE_INSTANCES {
        let (net, traj) = instance(seed);
        let path = traj.to_path(&net).unwrap();
        let some = is_personalized_path(&net, &path, &cfg).unwrap().is_some();
        let small = recover_preference(&net, &path, &cfg).unwrap().delta <= 1e-6;
        feasible += usize::from(some);
        vs_enum += usize::from(some != common::enumeration_feasible(&net, &traj));
        vs_delta += usize::from(some != small);
    }
    outcome(
        vs_enum == 0 && vs_delta == 0,
        format!(
            "{ORACLE_INSTANCES} graphs ({feasible} feasible): {vs_enum} disagreements with enumeration, {vs_delta} with delta"
        ),
    )
}

fn planted_closure() -> Outcome {
    let start = Instant::now();
    let cfg = SynthConfig { seed: 3, num_trajectories: 1000, ..SynthConfig::default() };
    let net = synth::generate_grid_network(&cfg).unwrap();
    let records = planted_records(&net, &net, &cfg);
    let batches = evaluate(&net, &records, &[Algorithm::Rdp, Algorithm::Ppts], &settings(1)).unwrap();
    let (rdp, ppts) = (&batches[0].rows, &batches[1].rows);
    let n = records.len() as f64;
    let closed = rdp.iter().filter(|r| r.delta.unwrap() <= 1e-6).count() as f64 / n;
    let exact = rdp.iter().filter(|r| r.rcrs.unwrap() >= 0.999).count() as f64 / n;
    let single = ppts.iter().filter(|r| r.boundaries.as_deref() == Some(&[])).count();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        closed >= 0.99 && exact >= 0.99 && single == records.len() && secs <= 300.0,
        format!(
            "30x30, d=4, {} planted: delta<=1e-6 {:.1}%, RCRS>=0.999 {:.1}%, single PPTS segment {single}, {secs:.1} s",
            records.len(),
            closed * 100.0,
            exact * 100.0
        ),
    )
}

fn small_grid() -> RoadNetwork {
    synth::generate_grid_network(&SynthConfig { grid_w: 6, grid_h: 6, seed: 21, ..SynthConfig::default() }).unwrap()
}

fn all_criteria(net: &RoadNetwork) -> Vec<Criterion> {
    let mut c: Vec<Criterion> = (0..net.cost_dim()).map(Criterion::OptimalPath).collect();
    c.push(Criterion::PersonalizedPath);
    c
}

fn greedy_minimality() -> Outcome {
    let net = small_grid();
    let segmenters: Vec<Segmenter> =
        all_criteria(&net).into_iter().map(|c| Segmenter::new(&net, c, OracleConfig::default()).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut mismatches, mut unsegmentable) = (0, 0);
    for _ in 0..200 {
        let traj = synth::random_walk(&net, rng.random_range(1..=BRUTE_FORCE_CAP), rng.random()).unwrap();
        for s in &segmenters {
            match (s.segment(&traj), s.brute_force_min_segmentation(&traj, BRUTE_FORCE_CAP)) {
                (Ok(g), Ok(b)) if g.num_segments() == b.num_segments() => {}
                (Err(Unsegmentable { .. }), Err(Unsegmentable { .. }))
                    if s.criterion() != Criterion::PersonalizedPath =>
                {
                    unsegmentable += 1
                }
                _ => mismatches += 1,
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("200 walks x {} criteria: {mismatches} mismatches ({unsegmentable} agreed unsegmentable)", segmenters.len()),
    )
}

fn monotonicity() -> Outcome {
    let net = small_grid();
    let segmenters: Vec<Segmenter> =
        all_criteria(&net).into_iter().map(|c| Segmenter::new(&net, c, OracleConfig::default()).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut pairs, mut violations) = (0, 0);
    while pairs < 1000 {
        let s = &segmenters[pairs % segmenters.len()];
        let traj = synth::random_walk(&net, rng.random_range(2..=14), rng.random()).unwrap();
        let edges = traj.edges();
        let a = rng.random_range(0..edges.len());
        let b = rng.random_range(a + 1..=edges.len());
        if !s.satisfies(&edges[a..b]).unwrap() {
            continue;
        }
        let x = rng.random_range(a..b);
        let y = rng.random_range(x + 1..=b);
        pairs += 1;
        violations += usize::from(!s.satisfies(&edges[x..y]).unwrap());
    }
    outcome(violations == 0, format!("{pairs} (segment, sub-segment) pairs: {violations} violations"))
}

/// Random walks, with a dominating two-edge detour planted next to one edge
/// of every other walk.
fn bypass_corpus(include_unit_dim: bool) -> (RoadNetwork, Vec<TrajectoryRecord>) {
    let cfg = SynthConfig { grid_w: 12, grid_h: 12, seed: 6, include_unit_dim, ..SynthConfig::default() };
    let base = synth::generate_grid_network(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let walks: Vec<Trajectory> = (0..100).map(|_| synth::random_walk(&base, 15, rng.random()).unwrap()).collect();
    let mut targets: Vec<EdgeId> = Vec::new();
    for w in walks.iter().step_by(2) {
        let e = w.edges()[rng.random_range(0..w.len())];
        if !targets.contains(&e) {
            targets.push(e);
        }
    }
    let net = synth::plant_dominance_bypass(&base, &targets, 0.4).unwrap();
    let records = walks
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let edges = w.edges().iter().map(|e| net.edge_by_label(base.edge_label(*e)).unwrap()).collect();
            TrajectoryRecord { id: format!("w{i}"), trajectory: Trajectory::new(&net, edges).unwrap(), meta: None }
        })
        .collect();
    (net, records)
}

fn segmentability() -> Outcome {
    let ppts = [Algorithm::Ppts];
    let mut scores = Vec::new();
    let cfg = SynthConfig { seed: 7, num_trajectories: 200, ..SynthConfig::default() };
    let grid = synth::generate_grid_network(&cfg).unwrap();
    let planted = planted_records(&grid, &grid, &cfg);
    let stitched = stitched_records(&grid, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let walks: Vec<TrajectoryRecord> = (0..200)
        .map(|i| TrajectoryRecord {
            id: format!("w{i}"),
            trajectory: synth::random_walk(&grid, 25, rng.random()).unwrap(),
            meta: None,
        })
        .collect();
    let (bypass_net, bypass) = bypass_corpus(true);
    for (name, net, records) in
        [("planted", &grid, &planted), ("stitched", &grid, &stitched), ("walks", &grid, &walks), ("bypass", &bypass_net, &bypass)]
    {
        let b = evaluate(net, records, &ppts, &settings(1)).unwrap();
        scores.push((name, s_score(&b[0])));
    }
    let (net, records) = bypass_corpus(false);
    let without = s_score(&evaluate(&net, &records, &ppts, &settings(1)).unwrap()[0]);
    let with_unit = scores.iter().all(|(_, s)| *s == 1.0);
    let listed: Vec<String> = scores.iter().map(|(n, s)| format!("{n} {:.1}%", s * 100.0)).collect();
    outcome(
        with_unit && without < 1.0,
        format!("with unit dim: {}; without unit dim + dominance: {:.1}%", listed.join(", "), without * 100.0),
    )
}

fn segmentation_ordering() -> Outcome {
    let cfg = SynthConfig { seed: 8, num_trajectories: 1000, via_points: (1, 3), off_path_prob: 1.0, ..SynthConfig::default() };
    let net = synth::generate_grid_network(&cfg).unwrap();
    let records = stitched_records(&net, &cfg);
    let mut algos = vec![Algorithm::Ppts];
    algos.extend(net.cost_names().iter().map(|n| Algorithm::Opts(n.clone())));
    let summary = summarize(&evaluate(&net, &records, &algos, &settings(1)).unwrap(), records.len());
    let cs = |name: &str| {
        &summary.segmentation.iter().find(|s| s.algorithm == name).unwrap().commonly_segmentable
    };
    let ppts = cs("ppts");
    let tt = cs("opts:travel_time");
    let opts: Vec<_> = summary.segmentation.iter().filter(|s| s.algorithm != "ppts").collect();
    let sq_ok = ppts.sq.unwrap() > tt.sq.unwrap();
    let sr_ok = opts.iter().all(|o| ppts.sr.unwrap() < o.commonly_segmentable.sr.unwrap());
    let srs: Vec<String> =
        opts.iter().map(|o| format!("{} {:.3}", o.algorithm, o.commonly_segmentable.sr.unwrap())).collect();
    outcome(
        sq_ok && sr_ok,
        format!(
            "{} stitched, {} commonly segmentable: SQ ppts {:.3} vs opts:travel_time {:.3}; SR ppts {:.3} vs {}",
            records.len(),
            ppts.trajectories,
            ppts.sq.unwrap(),
            tt.sq.unwrap(),
            ppts.sr.unwrap(),
            srs.join(", ")
        ),
    )
}

fn mining_ordering() -> Outcome {
    let cfg = SynthConfig { seed: 99, num_trajectories: 1000, ..SynthConfig::default() };
    let net = synth::generate_grid_network(&cfg).unwrap();
    let noisy = synth::perturb_costs(&net, 0.1, 99).unwrap();
    let records = planted_records(&net, &noisy, &cfg);
    let batches = evaluate(&net, &records, &[Algorithm::Rdp, Algorithm::Ttp, Algorithm::Brp], &settings(1)).unwrap();
    let summary = summarize(&batches, records.len());
    let m = |i: usize| &summary.mining[i];
    let (rdp, ttp, brp) = (m(0), m(1), m(2));
    let means_ok = rdp.rcrs >= ttp.rcrs && rdp.rcrs >= brp.rcrs && rdp.rrro >= ttp.rrro && rdp.rrro >= brp.rrro;
    let rdp_rows = &batch(&batches, &Algorithm::Rdp).rows;
    let ttp_rows = &batch(&batches, &Algorithm::Ttp).rows;
    let violations = rdp_rows.iter().zip(ttp_rows).filter(|(r, t)| r.rcrs.unwrap() < t.rcrs.unwrap() - 1e-6).count();
    outcome(
        means_ok && violations == 0,
        format!(
            "{} planted, 10% noise: RCRS rdp {:.4} ttp {:.4} brp {:.4}; RRRO rdp {:.4} ttp {:.4} brp {:.4}; {violations} per-trajectory RCRS(RDP) < RCRS(TTP)",
            records.len(),
            rdp.rcrs.unwrap(),
            ttp.rcrs.unwrap(),
            brp.rcrs.unwrap(),
            rdp.rrro.unwrap(),
            ttp.rrro.unwrap(),
            brp.rrro.unwrap()
        ),
    )
}

/// Line 0 -> 1 -> ... -> 6 with lengths in meters, plus a direct 150 m
/// edge 2 -> 4.
fn line_road() -> RoadNetwork {
    let mut b = NetworkBuilder::new(["travel_time", "length_m"]);
    for n in 0..7 {
        b.node(n);
    }
    for (i, l) in [100.0, 100.0, 300.0, 300.0, 300.0, 100.0].iter().enumerate() {
        b.edge(i as u64, i as u64, i as u64 + 1, vec![1.0, *l]);
    }
    b.edge(6, 2, 4, vec![1.0, 150.0]);
    b.build().unwrap()
}

fn stitching_suite() -> Outcome {
    let g = line_road();
    let traj = |e: &[u32]| Trajectory::new(&g, e.iter().map(|&i| EdgeId(i)).collect()).unwrap();
    let trip = |id: &str, e: &[u32], s: i64, t: i64| TimedTrajectory::new(id, traj(e), "car", s, t).unwrap();
    let cfg = StitchConfig::default();
    let mut failures = Vec::new();

    let shared = stitch_all(&g, &[trip("a", &[0, 1], 0, 100), trip("b", &[2, 3], 700, 900)], &cfg).unwrap();
    if !(shared.len() == 1 && shared[0].break_points() == [2]) {
        failures.push("10 min gap");
    }
    let far = stitch_all(&g, &[trip("a", &[0, 1], 0, 100), trip("b", &[2, 3], 100 + 45 * 60, 3000)], &cfg).unwrap();
    if !(far.len() == 2 && far.iter().all(|s| s.break_points().is_empty())) {
        failures.push("45 min gap");
    }
    let chain = [trip("a", &[0, 1], 0, 100), trip("b", &[4], 1000, 1100), trip("c", &[5], 1100 + 29 * 60, 5000)];
    let out = stitch_all(&g, &chain, &cfg).unwrap();
    if !(out.len() == 1 && out[0].break_points().len() == 2 && out[0].end_time == 5000) {
        failures.push("chain of three");
    }
    let connect = |a: &[u32], b: &[u32]| pseudo_connected(&g, &traj(a), &traj(b), 200.0).unwrap().map(Route::into_edges);
    if connect(&[0], &[1]) != Some(vec![]) || connect(&[1], &[4]) != Some(vec![EdgeId(6)]) || connect(&[2], &[5]).is_some() {
        failures.push("pseudo-connection");
    }

    let grid = synth::generate_grid_network(&SynthConfig { grid_w: 4, grid_h: 4, ..SynthConfig::default() }).unwrap();
    let mut broken = 0;
    for seed in 0..100 {
        let trips = common::history(&grid, seed);
        let out = stitch_all(&grid, &trips, &cfg).unwrap();
        let breaks: usize = out.iter().map(|s| s.break_points().len()).sum();
        let mut expected: HashMap<EdgeId, usize> = HashMap::new();
        for e in trips.iter().flat_map(|t| t.trajectory.edges()) {
            *expected.entry(*e).or_default() += 1;
        }
        for s in &out {
            for &p in &s.stitch_edges {
                *expected.entry(s.trajectory.edges()[p]).or_default() += 1;
            }
        }
        let mut produced: HashMap<EdgeId, usize> = HashMap::new();
        for e in out.iter().flat_map(|s| s.trajectory.edges()) {
            *produced.entry(*e).or_default() += 1;
        }
        broken += usize::from(out.len() + breaks != trips.len() || produced != expected);
    }
    if broken > 0 {
        failures.push("conservation");
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "3 traces + pseudo-connection cases exact; conservation holds on 100 histories".to_string()
        } else {
            format!("failed: {} ({broken} histories violate conservation)", failures.join(", "))
        },
    )
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prefmine-acceptance-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn prefmine(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_prefmine")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr)))
    }
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in &names {
        if fs::read(a.join(n)).unwrap() != fs::read(b.join(n)).map_err(|e| e.to_string())? {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn determinism() -> Outcome {
    let dir = scratch_dir("determinism");
    let p = |s: &str| dir.join(s).to_string_lossy().into_owned();
    let run = || -> Result<usize, String> {
        prefmine(&["synth", "--kind", "stitched", "--grid-w", "15", "--grid-h", "15", "--num-trajectories", "60", "--seed", "5", "--out", &p("s")])?;
        prefmine(&["stitch", "--network", &p("s/network.txt"), "--trajectories", &p("s/trajectories.txt"), "--out", &p("stitched.txt")])?;
        let mut files = 0;
        for (cmd, algo, format) in [("segment", "ppts,opts:travel_time,opts:congestion", "csv"), ("mine", "rdp,ttp,brp", "jsonl")] {
            let mut outs = Vec::new();
            for (workers, tag) in [("1", "a"), ("8", "b"), ("1", "c")] {
                let out = p(&format!("{cmd}-{tag}"));
                prefmine(&[
                    cmd, "--network", &p("s/network.txt"), "--trajectories", &p("stitched.txt"), "--algo", algo,
                    "--workers", workers, "--seed", "3", "--format", format, "--out", &out,
                ])?;
                outs.push(PathBuf::from(out));
            }
            files += same_tree(&outs[0], &outs[1])?;
            same_tree(&outs[0], &outs[2])?;
        }
        Ok(files)
    };
    let result = run();
    let _ = fs::remove_dir_all(&dir);
    match result {
        Ok(files) => outcome(true, format!("segment and mine: {files} output files byte-identical for --workers 1 and 8, and on rerun")),
        Err(e) => outcome(false, e),
    }
}

fn performance() -> Outcome {
    let cfg = SynthConfig { grid_w: 100, grid_h: 100, seed: 12, num_trajectories: 100, ..SynthConfig::default() };
    let net = synth::generate_grid_network(&cfg).unwrap();
    let planted = planted_records(&net, &net, &cfg);
    let stitched = stitched_records(&net, &SynthConfig { num_trajectories: 20, ..cfg.clone() });
    let mine = latency(&evaluate(&net, &planted, &[Algorithm::Rdp], &settings(8)).unwrap()[0]);
    let seg = latency(&evaluate(&net, &stitched, &[Algorithm::Ppts], &settings(8)).unwrap()[0]);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let scaling = if cores >= 8 {
        let one = latency(&evaluate(&net, &planted, &[Algorithm::Rdp], &settings(1)).unwrap()[0]);
        let speedup = one.batch_ms / mine.batch_ms;
        (speedup >= 4.0, format!("8-worker speedup {speedup:.2}x"))
    } else {
        (true, format!("scaling not measured on {cores} core(s)"))
    };
    outcome(
        mine.amortized_ms <= 50.0 && seg.amortized_ms <= 500.0 && scaling.0,
        format!(
            "{} edges, 8 workers: mine {:.2} ms/traj, PPTS segment {:.1} ms/traj ({} edges avg); {}",
            net.num_edges(),
            mine.amortized_ms,
            seg.amortized_ms,
            stitched.iter().map(|r| r.trajectory.len()).sum::<usize>() / stitched.len().max(1),
            scaling.1
        ),
    )
}

fn metric_spot_checks() -> Outcome {
    let mut failures: Vec<&str> = Vec::new();
    let mut check = |ok: bool, name: &'static str| {
        if !ok {
            failures.push(name);
        }
    };
    check(eval::brr(&[3], &[3, 7]) == Ok(1.0), "BRR 1.0");
    check(eval::brr(&[3, 9], &[7]) == Ok(0.0), "BRR 0.0");
    check(eval::brr(&[3, 9], &[3]) == Ok(0.5), "BRR 0.5");
    check(eval::brr(&[], &[3]) == Err(EvalError::NoBreakPoints), "BRR without breaks");
    check(eval::sr(&[3], &[3, 7]) == Ok(2.0), "SR 2.0");
    check(eval::sr(&[3], &[]) == Ok(0.0), "SR empty");
    check(eval::sr(&[1, 2], &[1, 2, 3, 4]) == Ok(2.0), "SR 2.0 (4 points)");
    check(eval::sq(&[3], &[3, 7]) == Ok(0.5), "SQ 0.5");
    check(eval::sq(&[2, 5], &[2, 5]) == Ok(1.0), "SQ perfect");
    check(eval::sq(&[3], &[]) == Ok(0.0), "SQ empty");
    check(eval::s_score(&[true; 4]) == 1.0, "S-score 100%");
    check(eval::s_score(&[false; 4]) == 0.0, "S-score 0%");
    check(eval::s_score(&[true, true, false, true]) == 0.75, "S-score 75%");
    check(SegmentationScore::new(&[3], &[3], false).map(|s| s.sq) == Ok(0.0), "unsegmentable scores empty");
    check(eval::distance_to_next_sp(&[3], &[3, 8]) == [0.0], "distance 0");
    check(eval::distance_to_next_sp(&[3], &[]) == [f64::INFINITY], "distance infinite");
    check(eval::distance_to_next_sp(&[4], &[5, 9]) == [1.0], "distance 1");

    let g = line_road();
    let e = |ids: &[u32]| ids.iter().map(|&i| EdgeId(i)).collect::<Vec<_>>();
    check(eval::rrro(&e(&[0, 1, 2]), &e(&[0, 1, 2])) == Ok(1.0), "RRRO identical");
    check(eval::rrro(&e(&[0, 1]), &e(&[3, 4])) == Ok(0.0), "RRRO disjoint");
    check(eval::rrro(&e(&[0, 1, 2, 3]), &e(&[0, 1, 2, 6])) == Ok(0.75), "RRRO 3 of 4");
    let alpha = PreferenceVector::new(vec![0.5, 0.5]).unwrap();
    check(eval::rcrs(&g, &e(&[0, 1, 2]), &e(&[0, 1, 2]), &alpha) == Ok(1.0), "RCRS identical");
    check(eval::ttp_preference(4, 0).map(|p| p.weights().to_vec()) == Ok(vec![1.0, 0.0, 0.0, 0.0]), "TTP d=4");
    check(eval::ttp_preference(4, 4).is_err(), "TTP bad index");
    check(eval::sample_simplex(1, 5, 9).iter().all(|p| p.weights() == [1.0]), "BRP d=1");
    outcome(failures.is_empty(), if failures.is_empty() { "all metric examples exact".into() } else { failures.join(", ") })
}

fn main() {
    let criteria: [Check; 12] = [
        ("oracle equivalence", oracle_equivalence),
        ("feasibility equivalence", feasibility_equivalence),
        ("planted-preference closure", planted_closure),
        ("greedy minimality", greedy_minimality),
        ("monotonicity", monotonicity),
        ("segmentability guarantee", segmentability),
        ("segmentation quality ordering", segmentation_ordering),
        ("mining quality ordering", mining_ordering),
        ("stitching suite", stitching_suite),
        ("determinism across workers", determinism),
        ("desk-scale performance", performance),
        ("metric spot checks", metric_spot_checks),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took: Duration = start.elapsed();
        failed += usize::from(!result.pass);
        println!(
            "{} criterion {n:>2} {name}: {} [{:.1} s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
