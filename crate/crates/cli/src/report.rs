//! Aggregate summaries and report files.

use std::io::Write;

use prefmine::eval;
use serde::Serialize;

use crate::error::CliError;
use crate::pipeline::{Batch, Row};

/// Largest hop distance tabulated in the break-point distance CDF.
pub const CDF_MAX_HOPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllStats {
    pub trajectories: usize,
    /// Mean over trajectories with break points.
    pub brr: Option<f64>,
    pub s_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonStats {
    pub trajectories: usize,
    pub brr: Option<f64>,
    pub sr: Option<f64>,
    pub sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationSummary {
    pub algorithm: String,
    pub all: AllStats,
    /// Trajectories segmentable by every segmentation algorithm of the run.
    pub commonly_segmentable: CommonStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiningSummary {
    pub algorithm: String,
    pub trajectories: usize,
    pub rrro: Option<f64>,
    pub rcrs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trajectories: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segmentation: Vec<SegmentationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mining: Vec<MiningSummary>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| eval::mean(&v))
}

fn is_segmentation(b: &Batch) -> bool {
    b.algorithm.is_segmentation()
}

pub fn summarize(batches: &[Batch], trajectories: usize) -> Summary {
    let seg: Vec<&Batch> = batches.iter().filter(|b| is_segmentation(b)).collect();
    let common: Vec<bool> = (0..trajectories)
        .map(|i| seg.iter().all(|b| b.rows[i].segmentable == Some(true)))
        .collect();
    let segmentation = seg
        .iter()
        .map(|b| {
            let flags: Vec<bool> = b.rows.iter().map(|r| r.segmentable == Some(true)).collect();
            let cs: Vec<&Row> = b.rows.iter().zip(&common).filter(|(_, c)| **c).map(|(r, _)| r).collect();
            SegmentationSummary {
                algorithm: b.algorithm.to_string(),
                all: AllStats {
                    trajectories: b.rows.len(),
                    brr: mean_of(b.rows.iter().filter_map(|r| r.brr)),
                    s_score: eval::s_score(&flags),
                },
                commonly_segmentable: CommonStats {
                    trajectories: cs.len(),
                    brr: mean_of(cs.iter().filter_map(|r| r.brr)),
                    sr: mean_of(cs.iter().filter_map(|r| r.sr)),
                    sq: mean_of(cs.iter().filter_map(|r| r.sq)),
                },
            }
        })
        .collect();
    let mining = batches
        .iter()
        .filter(|b| !is_segmentation(b))
        .map(|b| MiningSummary {
            algorithm: b.algorithm.to_string(),
            trajectories: b.rows.len(),
            rrro: mean_of(b.rows.iter().filter_map(|r| r.rrro)),
            rcrs: mean_of(b.rows.iter().filter_map(|r| r.rcrs)),
            delta: mean_of(b.rows.iter().filter_map(|r| r.delta)),
        })
        .collect();
    Summary { trajectories, segmentation, mining }
}

fn join<T: ToString>(values: &[T], sep: &str) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

const CSV_HEADER: [&str; 14] = [
    "id",
    "algorithm",
    "brr",
    "sr",
    "sq",
    "segmentable",
    "segments",
    "boundaries",
    "preferences",
    "rrro",
    "rcrs",
    "delta",
    "iterations",
    "alpha",
];

/// Per-trajectory rows. CSV list cells are space separated, with `;`
/// between per-segment preferences.
pub fn write_rows<W: Write>(batches: &[Batch], format: Format, out: W) -> Result<(), CliError> {
    let rows = batches.iter().flat_map(|b| &b.rows);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in rows {
                let prefs = r
                    .preferences
                    .as_ref()
                    .map(|ps| ps.iter().map(|p| join(p, " ")).collect::<Vec<_>>().join(";"));
                w.write_record([
                    r.id.clone(),
                    r.algorithm.clone(),
                    opt(&r.brr),
                    opt(&r.sr),
                    opt(&r.sq),
                    opt(&r.segmentable),
                    r.boundaries.as_ref().map(|b| (b.len() + 1).to_string()).unwrap_or_default(),
                    r.boundaries.as_ref().map(|b| join(b, " ")).unwrap_or_default(),
                    prefs.unwrap_or_default(),
                    opt(&r.rrro),
                    opt(&r.rcrs),
                    opt(&r.delta),
                    opt(&r.iterations),
                    r.alpha.as_ref().map(|a| join(a, " ")).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut out = out;
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Cumulative distribution of the hop distance from each break point to the
/// nearest segmentation point, per segmentation algorithm.
pub fn write_distance_cdf<W: Write>(batches: &[Batch], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "hops", "fraction"])?;
    for b in batches.iter().filter(|b| is_segmentation(b)) {
        let distances: Vec<f64> = b
            .rows
            .iter()
            .flat_map(|r| {
                let sp = r.boundaries.clone().unwrap_or_default();
                eval::distance_to_next_sp(&r.break_points, &sp)
            })
            .collect();
        for (hops, f) in eval::distance_cdf(&distances, CDF_MAX_HOPS).iter().enumerate() {
            w.write_record([b.algorithm.to_string(), hops.to_string(), f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing<W: Write>(batches: &[Batch], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "algorithm", "wall_ms"])?;
    for r in batches.iter().flat_map(|b| &b.rows) {
        w.write_record([r.id.clone(), r.algorithm.clone(), r.wall_ms.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSize {
    pub nodes: usize,
    pub edges: usize,
    pub cost_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Latency {
    pub algorithm: String,
    pub trajectories: usize,
    /// Wall time of the whole batch.
    pub batch_ms: f64,
    /// Batch wall time per trajectory.
    pub amortized_ms: f64,
    pub throughput_per_s: f64,
    /// Per-trajectory latencies.
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub network: NetworkSize,
    pub workers: usize,
    pub algorithms: Vec<Latency>,
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn latency(batch: &Batch) -> Latency {
    let mut ms: Vec<f64> = batch.rows.iter().map(|r| r.wall_ms).collect();
    ms.sort_by(f64::total_cmp);
    let n = ms.len();
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        ms[n / 2]
    } else {
        (ms[n / 2 - 1] + ms[n / 2]) / 2.0
    };
    Latency {
        algorithm: batch.algorithm.to_string(),
        trajectories: n,
        batch_ms: batch.wall_ms,
        amortized_ms: if n == 0 { 0.0 } else { batch.wall_ms / n as f64 },
        throughput_per_s: if batch.wall_ms > 0.0 { n as f64 / (batch.wall_ms / 1e3) } else { 0.0 },
        mean_ms: if n == 0 { 0.0 } else { ms.iter().sum::<f64>() / n as f64 },
        median_ms: median,
        p99_ms: percentile(&ms, 99.0),
    }
}
