//! Per-edge cost derivation from raw road attributes.

use std::collections::HashMap;
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weight of the estimate against the historical mean.
pub const DEFAULT_CONFIDENCE_K: f64 = 10.0;
/// Estimates implying a slower speed than this are clamped.
pub const MIN_SPEED_KMH: f64 = 5.0;
pub const DEFAULT_GRID: usize = 2000;

pub const MOTORWAY_LIMIT_KMH: f64 = 130.0;
pub const CITY_LIMIT_KMH: f64 = 50.0;
pub const OTHER_LIMIT_KMH: f64 = 80.0;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("edge has zero length")]
    ZeroLength,
    #[error("edge has no geometry points")]
    EmptyGeometry,
    #[error("invalid attributes: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoadClass {
    Motorway,
    City,
    Other,
}

impl RoadClass {
    pub fn default_speed_limit_kmh(self) -> f64 {
        match self {
            RoadClass::Motorway => MOTORWAY_LIMIT_KMH,
            RoadClass::City => CITY_LIMIT_KMH,
            RoadClass::Other => OTHER_LIMIT_KMH,
        }
    }

    /// An edge is in a city if either endpoint is.
    pub fn classify(motorway: bool, source_in_city: bool, target_in_city: bool) -> RoadClass {
        if motorway {
            RoadClass::Motorway
        } else if source_in_city || target_in_city {
            RoadClass::City
        } else {
            RoadClass::Other
        }
    }
}

impl FromStr for RoadClass {
    type Err = CostError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "motorway" => Ok(RoadClass::Motorway),
            "city" => Ok(RoadClass::City),
            "other" => Ok(RoadClass::Other),
            _ => Err(CostError::Invalid(format!("unknown road class `{s}`"))),
        }
    }
}

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttributes {
    pub length_km: f64,
    pub speed_limit_kmh: Option<f64>,
    pub road_class: RoadClass,
    pub travel_time_estimate_s: f64,
    pub historical_travel_times_s: Vec<f64>,
    pub geometry_points: Vec<Point>,
}

impl EdgeAttributes {
    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |m: &str| Err(CostError::Invalid(m.to_string()));
        if !(self.length_km >= 0.0 && self.length_km.is_finite()) {
            return bad("length must be finite and nonnegative");
        }
        if self.speed_limit_kmh.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return bad("speed limit must be positive");
        }
        if !(self.travel_time_estimate_s > 0.0 && self.travel_time_estimate_s.is_finite()) {
            return bad("travel time estimate must be positive");
        }
        if self.historical_travel_times_s.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("historical travel times must be positive");
        }
        Ok(())
    }

    pub fn effective_speed_limit_kmh(&self) -> f64 {
        self.speed_limit_kmh.unwrap_or_else(|| self.road_class.default_speed_limit_kmh())
    }
}

/// `(k·t̂ + n·t̄) / (k + n)` with the estimate clamped to the minimum speed.
pub fn derive_travel_time(attrs: &EdgeAttributes, confidence_k: f64) -> f64 {
    assert!(confidence_k > 0.0, "confidence must be positive");
    let mut estimate = attrs.travel_time_estimate_s;
    if attrs.length_km > 0.0 {
        estimate = estimate.min(3600.0 * attrs.length_km / MIN_SPEED_KMH);
    }
    let n = attrs.historical_travel_times_s.len() as f64;
    let sum: f64 = attrs.historical_travel_times_s.iter().sum();
    (confidence_k * estimate + sum) / (confidence_k + n)
}

/// `max(1 − τ/t, 0)` where τ is the time at the speed limit.
pub fn derive_congestion(attrs: &EdgeAttributes, travel_time_s: f64) -> Result<f64, CostError> {
    if attrs.length_km <= 0.0 {
        return Err(CostError::ZeroLength);
    }
    let tau = 3600.0 * attrs.length_km / attrs.effective_speed_limit_kmh();
    Ok((1.0 - tau / travel_time_s).clamp(0.0, 1.0))
}

pub fn unit_cost() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    min: Point,
    max: Point,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in &points {
            for k in 0..2 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        if points.is_empty() {
            min = [0.0; 2];
            max = [0.0; 2];
        }
        PointSet { points, min, max }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        (self.min, self.max)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Point counts on a regular grid over a point set's bounding box.
#[derive(Debug, Clone)]
pub struct CrowdednessGrid {
    min: Point,
    cell: Point,
    w: usize,
    h: usize,
    counts: Vec<u32>,
}

impl CrowdednessGrid {
    pub fn new(points: &PointSet, grid_w: usize, grid_h: usize) -> Self {
        assert!(grid_w >= 1 && grid_h >= 1, "grid needs at least one cell");
        let (min, max) = points.bounding_box();
        let cell = [(max[0] - min[0]) / grid_w as f64, (max[1] - min[1]) / grid_h as f64];
        let mut grid = CrowdednessGrid { min, cell, w: grid_w, h: grid_h, counts: vec![0; grid_w * grid_h] };
        for p in points.points() {
            let c = grid.cell_of(*p);
            grid.counts[c] += 1;
        }
        grid
    }

    /// Cell index, clamping points outside the box to the border cells.
    fn cell_of(&self, p: Point) -> usize {
        let axis = |k: usize, n: usize| {
            if self.cell[k] > 0.0 {
                (((p[k] - self.min[k]) / self.cell[k]).floor().max(0.0) as usize).min(n - 1)
            } else {
                0
            }
        };
        axis(1, self.h) * self.w + axis(0, self.w)
    }

    pub fn count_at(&self, p: Point) -> u32 {
        self.counts[self.cell_of(p)]
    }

    /// Sum of cell counts over the geometry points; a cell hit twice counts twice.
    pub fn crowdedness(&self, geometry: &[Point]) -> Result<f64, CostError> {
        if geometry.is_empty() {
            return Err(CostError::EmptyGeometry);
        }
        Ok(geometry.iter().map(|p| f64::from(self.count_at(*p))).sum())
    }
}

pub fn derive_crowdedness(
    points: &PointSet,
    grid_w: usize,
    grid_h: usize,
    edge_geometry: &[Point],
) -> Result<f64, CostError> {
    CrowdednessGrid::new(points, grid_w, grid_h).crowdedness(edge_geometry)
}

/// Names of the columns produced by [`derive_edge_costs`].
pub const DERIVED_COST_NAMES: [&str; 4] = ["travel_time", "congestion", "crowdedness", "intersections"];

/// Travel time, congestion, crowdedness and unit cost for one edge. Zero-length
/// edges get congestion 0.
pub fn derive_edge_costs(
    attrs: &EdgeAttributes,
    grid: &CrowdednessGrid,
    confidence_k: f64,
) -> Result<[f64; 4], CostError> {
    attrs.validate()?;
    let tt = derive_travel_time(attrs, confidence_k);
    let congestion = match derive_congestion(attrs, tt) {
        Err(CostError::ZeroLength) => 0.0,
        other => other?,
    };
    Ok([tt, congestion, grid.crowdedness(&attrs.geometry_points)?, unit_cost()])
}

/// Reads `edge_id,length_km,speed_limit_kmh|-,road_class,tt_estimate_s,historical_times`
/// rows. A leading header row is skipped. Geometry is left empty.
pub fn read_edge_attributes<R: Read>(reader: R) -> Result<Vec<(u64, EdgeAttributes)>, CostError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let perr = |message: String| CostError::Parse { line, message };
        if i == 0 && row.get(0) == Some("edge_id") {
            continue;
        }
        if row.len() != 6 {
            return Err(perr(format!("expected 6 fields, found {}", row.len())));
        }
        let num = |k: usize| {
            row[k].parse::<f64>().map_err(|_| perr(format!("bad number `{}`", &row[k])))
        };
        let id = row[0].parse::<u64>().map_err(|_| perr(format!("bad edge id `{}`", &row[0])))?;
        let speed_limit_kmh = match &row[2] {
            "-" | "" => None,
            _ => Some(num(2)?),
        };
        let historical_travel_times_s = row[5]
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| perr(format!("bad time `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let attrs = EdgeAttributes {
            length_km: num(1)?,
            speed_limit_kmh,
            road_class: row[3].parse().map_err(|e: CostError| perr(e.to_string()))?,
            travel_time_estimate_s: num(4)?,
            historical_travel_times_s,
            geometry_points: Vec::new(),
        };
        attrs.validate().map_err(|e| perr(e.to_string()))?;
        out.push((id, attrs));
    }
    Ok(out)
}

fn parse_point(fields: &[&str], line: usize) -> Result<Point, CostError> {
    let perr = |message: String| CostError::Parse { line, message };
    let [x, y] = fields else {
        return Err(perr("expected `x y`".into()));
    };
    let coord = |f: &str| {
        f.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| perr(format!("bad coordinate `{f}`")))
    };
    Ok([coord(x)?, coord(y)?])
}

/// One `x y` point per line; `#` starts a comment.
pub fn read_points<R: BufRead>(reader: R) -> Result<Vec<Point>, CostError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        out.push(parse_point(&fields, i + 1)?);
    }
    Ok(out)
}

/// `g <edge_id>` starts an edge's geometry; the `x y` lines that follow
/// belong to it.
pub fn read_geometry<R: BufRead>(reader: R) -> Result<HashMap<u64, Vec<Point>>, CostError> {
    let mut out: HashMap<u64, Vec<Point>> = HashMap::new();
    let mut current = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields[0] == "g" {
            let id = fields
                .get(1)
                .and_then(|f| f.parse::<u64>().ok())
                .filter(|_| fields.len() == 2)
                .ok_or_else(|| CostError::Parse { line: lineno, message: "expected `g <edge_id>`".into() })?;
            out.entry(id).or_default();
            current = Some(id);
            continue;
        }
        let Some(id) = current else {
            return Err(CostError::Parse { line: lineno, message: "point before any `g` record".into() });
        };
        out.get_mut(&id).expect("entry exists").push(parse_point(&fields, lineno)?);
    }
    Ok(out)
}
