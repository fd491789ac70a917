//! Batch front end: synthetic data, stitching, segmentation, preference
//! mining, evaluation reports and latency benchmarks.

pub mod error;
pub mod pipeline;
pub mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use prefmine::graph::{load_network, write_network, RoadNetwork};
use prefmine::preference::OracleConfig;
use prefmine::stitching::{stitch_all, StitchConfig, TimedTrajectory};
use prefmine::synth::{self, SynthConfig};
use prefmine::trajectory::{read_trajectories, write_trajectories, TrajectoryRecord, TripMeta};

pub use error::CliError;
pub use pipeline::{evaluate, Algorithm, Batch, Row, Settings};
pub use report::{summarize, Format, Summary};

/// Overrides the oracle tolerance when set.
pub const EPS_ENV: &str = "PREFMINE_EPS";

#[derive(Debug, Parser)]
#[command(name = "prefmine", version, about = "Trajectory segmentation and driving-preference mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a grid network with planted or multi-leg trajectories.
    Synth(SynthArgs),
    /// Join a vehicle's consecutive trips into longer trajectories.
    Stitch(StitchArgs),
    /// Segment trajectories and score segmentation points against break points.
    Segment(BatchArgs),
    /// Mine one preference per trajectory and score the resulting routes.
    Mine(BatchArgs),
    /// Run segmentation and mining algorithms together.
    Eval(BatchArgs),
    /// Report per-trajectory latency.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    /// Single-leg trajectories, each shortest under its own preference.
    Planted,
    /// Per-leg trips through via points, ready for `stitch`.
    Stitched,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = CorpusKind::Planted)]
    pub kind: CorpusKind,
    #[arg(long, default_value_t = 30)]
    pub grid_w: usize,
    #[arg(long, default_value_t = 30)]
    pub grid_h: usize,
    #[arg(long, default_value_t = 1000)]
    pub num_trajectories: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Leave out the constant-one intersections dimension.
    #[arg(long)]
    pub no_unit_dim: bool,
    /// Relative cost noise of the network the trajectories are driven on;
    /// the written network stays clean.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub via_min: usize,
    #[arg(long, default_value_t = 3)]
    pub via_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub off_path_prob: f64,
    /// Writes network.txt, trajectories.txt and truth.csv here.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub trajectories: PathBuf,
}

#[derive(Debug, Args)]
pub struct StitchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest gap between trips that still joins them, in minutes.
    #[arg(long, default_value_t = 30.0)]
    pub gap_max_min: f64,
    /// Longest connecting route between trips, in meters.
    #[arg(long, default_value_t = 200.0)]
    pub stitch_len_m: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma separated: ppts, opts:<cost>, rdp, ttp, brp.
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<Algorithm>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: u16,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cost the travel-time baseline weighs.
    #[arg(long, default_value = "travel_time")]
    pub travel_time: String,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write per-trajectory wall times to timing.csv.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => run_synth(&a),
        Command::Stitch(a) => run_stitch(&a),
        Command::Segment(a) => run_batch(&a, Stage::Segment),
        Command::Mine(a) => run_batch(&a, Stage::Mine),
        Command::Eval(a) => run_batch(&a, Stage::Eval),
        Command::Bench(a) => run_bench(&a),
    }
}

/// Oracle settings, honoring [`EPS_ENV`].
pub fn oracle_config() -> Result<OracleConfig, CliError> {
    match std::env::var(EPS_ENV) {
        Err(_) => Ok(OracleConfig::default()),
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(eps) if eps > 0.0 && eps.is_finite() => Ok(OracleConfig::with_eps(eps)),
            _ => Err(CliError::Usage(format!("{EPS_ENV} must be a positive number, got `{v}`"))),
        },
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn with_path<E: Into<CliError>>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| match e.into() {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_inputs(input: &InputArgs) -> Result<(RoadNetwork, Vec<TrajectoryRecord>), CliError> {
    let network = load_network(open(&input.network)?).map_err(with_path(&input.network))?;
    let records = read_trajectories(&network, open(&input.trajectories)?).map_err(with_path(&input.trajectories))?;
    Ok((network, records))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&a.noise) {
        return Err(CliError::Usage("--noise must be in [0, 1)".into()));
    }
    let cfg = SynthConfig {
        grid_w: a.grid_w,
        grid_h: a.grid_h,
        include_unit_dim: !a.no_unit_dim,
        seed: a.seed,
        num_trajectories: a.num_trajectories,
        via_points: (a.via_min, a.via_max),
        off_path_prob: a.off_path_prob,
        ..SynthConfig::default()
    };
    let network = synth::generate_grid_network(&cfg)?;
    let driven = if a.noise > 0.0 { synth::perturb_costs(&network, a.noise, a.seed)? } else { network.clone() };
    let (records, truth) = match a.kind {
        CorpusKind::Planted => {
            let planted = synth::generate_planted_corpus(&driven, &cfg)?;
            let mut truth = vec![["id".to_string()].into_iter().chain(cfg.cost_names()).collect::<Vec<_>>()];
            let mut records = Vec::with_capacity(planted.len());
            for p in planted {
                truth.push(std::iter::once(p.id.clone()).chain(p.alpha.weights().iter().map(f64::to_string)).collect());
                records.push(TrajectoryRecord { id: p.id, trajectory: p.trajectory, meta: None });
            }
            (records, truth)
        }
        CorpusKind::Stitched => {
            let samples = synth::generate_stitched_corpus(&driven, &cfg)?;
            let mut truth = vec![vec!["vehicle_id".to_string(), "break_points".to_string()]];
            let mut records = Vec::new();
            for s in samples {
                truth.push(vec![s.vehicle_id.clone(), s.break_points.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")]);
                records.extend(s.trips.into_iter().map(trip_record));
            }
            (records, truth)
        }
    };
    let mut w = create(&a.out.join("network.txt"))?;
    write_network(&network, &mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join("trajectories.txt"))?;
    write_trajectories(&network, &records, &mut w)?;
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&a.out.join("truth.csv"))?);
    for line in truth {
        w.write_record(line)?;
    }
    w.flush()?;
    Ok(())
}

fn trip_record(t: TimedTrajectory) -> TrajectoryRecord {
    TrajectoryRecord {
        id: t.id,
        trajectory: t.trajectory,
        meta: Some(TripMeta { vehicle_id: t.vehicle_id, start_time: t.start_time, end_time: t.end_time }),
    }
}

fn run_stitch(a: &StitchArgs) -> Result<(), CliError> {
    if !(a.gap_max_min.is_finite() && a.gap_max_min >= 0.0 && a.stitch_len_m.is_finite() && a.stitch_len_m >= 0.0) {
        return Err(CliError::Usage("stitching thresholds must be nonnegative".into()));
    }
    let (network, records) = read_inputs(&a.input)?;
    let trips = records
        .iter()
        .map(|r| TimedTrajectory::from_record(r).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = StitchConfig { gap_max_s: (a.gap_max_min * 60.0).round() as i64, len_max_m: a.stitch_len_m };
    let stitched = stitch_all(&network, &trips, &cfg)?;
    let out: Vec<TrajectoryRecord> = stitched.iter().map(|s| s.to_record()).collect();
    let mut w = create(&a.out)?;
    write_trajectories(&network, &out, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Segment,
    Mine,
    Eval,
}

fn settings(run: &RunArgs) -> Result<Settings, CliError> {
    Ok(Settings {
        oracle: oracle_config()?,
        seed: run.seed,
        travel_time: run.travel_time.clone(),
        workers: usize::from(run.workers),
    })
}

/// Algorithms run when `--algo` is not given.
pub fn default_algorithms(network: &RoadNetwork, travel_time: &str, segmentation: bool, mining: bool) -> Vec<Algorithm> {
    let mut algos = Vec::new();
    if segmentation {
        algos.push(Algorithm::Ppts);
        algos.extend(network.cost_names().iter().map(|n| Algorithm::Opts(n.clone())));
    }
    if mining {
        algos.push(Algorithm::Rdp);
        if network.cost_index(travel_time).is_some() {
            algos.push(Algorithm::Ttp);
        }
        algos.push(Algorithm::Brp);
    }
    algos
}

fn check_stage(algos: &[Algorithm], stage: Stage) -> Result<(), CliError> {
    for a in algos {
        let wrong = match stage {
            Stage::Segment => !a.is_segmentation(),
            Stage::Mine => a.is_segmentation(),
            Stage::Eval => false,
        };
        if wrong {
            return Err(CliError::Usage(format!("algorithm `{a}` does not apply to this subcommand")));
        }
    }
    Ok(())
}

fn choose_algorithms(network: &RoadNetwork, run: &RunArgs, stage: Stage) -> Vec<Algorithm> {
    if !run.algo.is_empty() {
        return run.algo.clone();
    }
    match stage {
        Stage::Segment => vec![Algorithm::Ppts],
        Stage::Mine => vec![Algorithm::Rdp],
        Stage::Eval => default_algorithms(network, &run.travel_time, true, true),
    }
}

fn run_batch(a: &BatchArgs, stage: Stage) -> Result<(), CliError> {
    let settings = settings(&a.run)?;
    check_stage(&a.run.algo, stage)?;
    let (network, records) = read_inputs(&a.run.input)?;
    let algos = choose_algorithms(&network, &a.run, stage);
    let batches = evaluate(&network, &records, &algos, &settings)?;
    let name = match stage {
        Stage::Segment => "segments",
        Stage::Mine => "mining",
        Stage::Eval => "report",
    };
    let mut w = create(&a.out.join(format!("{name}.{}", a.format.extension())))?;
    report::write_rows(&batches, a.format, &mut w)?;
    write_json(&summarize(&batches, records.len()), &a.out.join("summary.json"))?;
    if algos.iter().any(Algorithm::is_segmentation) {
        report::write_distance_cdf(&batches, create(&a.out.join("distance_cdf.csv"))?)?;
    }
    if a.timing {
        report::write_timing(&batches, create(&a.out.join("timing.csv"))?)?;
    }
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<(), CliError> {
    let settings = settings(&a.run)?;
    let (network, records) = read_inputs(&a.run.input)?;
    let algos = if a.run.algo.is_empty() { vec![Algorithm::Ppts, Algorithm::Rdp] } else { a.run.algo.clone() };
    let batches = evaluate(&network, &records, &algos, &settings)?;
    let bench = report::BenchReport {
        network: report::NetworkSize {
            nodes: network.num_nodes(),
            edges: network.num_edges(),
            cost_dim: network.cost_dim(),
        },
        workers: settings.workers,
        algorithms: batches.iter().map(report::latency).collect(),
    };
    match &a.out {
        Some(path) => write_json(&bench, path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &bench)?;
            lock.write_all(b"\n")?;
            Ok(())
        }
    }
}
