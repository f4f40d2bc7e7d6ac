//! On-disk formats.
//!
//! | artifact | format |
//! |---|---|
//! | geometry | JSON object `{"f", "e", "rf", "re"}`, mm |
//! | prescribed workspace | JSON array of `[x, y, z]` triples, mm |
//! | design bounds | JSON object of `{"lower", "upper"}` per parameter |
//! | GA config | JSON object of [`GaConfig`] fields, missing fields take defaults |
//! | GA report | JSON, see [`GaReport`] |
//! | cut program | JSON, see [`CutProgram`] |
//! | setpoint stream | CSV `t,x,y,z,theta1,theta2,theta3,laser` |
//! | watchdog config | JSON object of [`WatchdogConfig`] fields |
//! | fault script | JSON array of `{"process_name", "start_tick", "end_tick"}` |
//! | trace | text, `tick\tkind\tprocess\tdetail` per line |
//! | workspace grid | text, see [`write_grid`] |
//!
//! Every text output uses LF line endings and every float is printed with 17 significant
//! digits, so identical inputs give identical bytes on every platform.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use deltacut_core::workspace::GridSpec;
use deltacut_core::{
    CutProgram, DesignBounds, DesignError, EventKind, FaultScript, GaConfig, GaResult,
    GenerationStats, GeometryError, JointAngles, Pose, PrescribedWorkspace, RobotGeometry, Sample,
    SetpointStream, SimError, TraceEvent, TrajectoryError, WatchdogConfig, WorkspaceError,
    WorkspaceGrid,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const STREAM_HEADER: [&str; 8] = ["t", "x", "y", "z", "theta1", "theta2", "theta3", "laser"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{what}: {source}")]
    Json {
        what: &'static str,
        source: serde_json::Error,
    },
    #[error("setpoint stream: {0}")]
    Csv(#[from] csv::Error),
    #[error("{what}, line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl FormatError {
    fn parse(what: &'static str, line: usize, reason: impl Into<String>) -> Self {
        FormatError::Parse {
            what,
            line,
            reason: reason.into(),
        }
    }
}

/// Reads a whole file, or standard input when `path` is `-`.
pub fn read_input(path: &Path) -> Result<String, FormatError> {
    let io_err = |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(io_err)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io_err)
    }
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn from_json<T: DeserializeOwned>(what: &'static str, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|source| FormatError::Json { what, source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory JSON serialisation");
    s.push('\n');
    s
}

/// `%.17g`: shortest fixed or scientific rendering carrying 17 significant digits, which
/// round-trips every finite double.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{x:.prec$}", prec = (16 - exp) as usize);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    f: f64,
    e: f64,
    rf: f64,
    re: f64,
}

pub fn parse_geometry(text: &str) -> Result<RobotGeometry, FormatError> {
    let g: GeometryFile = from_json("geometry", text)?;
    Ok(RobotGeometry::new(g.f, g.e, g.rf, g.re)?)
}

pub fn geometry_to_json(g: &RobotGeometry) -> String {
    to_json(&GeometryFile {
        f: g.f(),
        e: g.e(),
        rf: g.rf(),
        re: g.re(),
    })
}

pub fn parse_prescribed(text: &str) -> Result<PrescribedWorkspace, FormatError> {
    let triples: Vec<[f64; 3]> = from_json("prescribed workspace", text)?;
    let points = triples
        .iter()
        .map(|p| Pose::new(p[0], p[1], p[2]))
        .collect();
    Ok(PrescribedWorkspace::new(points)?)
}

pub fn prescribed_to_json(w: &PrescribedWorkspace) -> String {
    let triples: Vec<[f64; 3]> = w.points().iter().map(|p| [p.x, p.y, p.z]).collect();
    to_json(&triples)
}

pub fn parse_bounds(text: &str) -> Result<DesignBounds, FormatError> {
    let b: DesignBounds = from_json("design bounds", text)?;
    b.validate()?;
    Ok(b)
}

pub fn parse_ga_config(text: &str) -> Result<GaConfig, FormatError> {
    from_json("GA config", text)
}

pub fn parse_program(text: &str) -> Result<CutProgram, FormatError> {
    let p: CutProgram = from_json("cut program", text)?;
    p.validate()?;
    Ok(p)
}

pub fn program_to_json(p: &CutProgram) -> String {
    to_json(p)
}

pub fn parse_watchdog_config(text: &str) -> Result<WatchdogConfig, FormatError> {
    let c: WatchdogConfig = from_json("watchdog config", text)?;
    c.validate()?;
    Ok(c)
}

pub fn parse_fault_script(text: &str) -> Result<FaultScript, FormatError> {
    from_json("fault script", text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenomeRecord {
    pub f: f64,
    pub e: f64,
    pub rf: f64,
    pub re: f64,
}

/// Optimisation result plus everything needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaReport {
    pub best: GenomeRecord,
    pub best_fitness: f64,
    /// Coverage of the prescribed set by `best`, without the size penalty.
    pub coverage: f64,
    pub evaluations: usize,
    pub history: Vec<GenerationStats>,
    pub config: GaConfig,
    pub bounds: DesignBounds,
    pub prescribed_points: usize,
}

impl GaReport {
    pub fn new(
        result: &GaResult,
        coverage: f64,
        config: &GaConfig,
        bounds: &DesignBounds,
        prescribed: &PrescribedWorkspace,
    ) -> Self {
        let [f, e, rf, re] = result.best.0;
        GaReport {
            best: GenomeRecord { f, e, rf, re },
            best_fitness: result.best_fitness,
            coverage,
            evaluations: result.evaluations,
            history: result.history.clone(),
            config: *config,
            bounds: *bounds,
            prescribed_points: prescribed.len(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn parse_ga_report(text: &str) -> Result<GaReport, FormatError> {
    from_json("GA report", text)
}

pub fn stream_to_csv(stream: &SetpointStream) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(STREAM_HEADER).expect("write to memory");
    for s in stream.samples() {
        let j = s.joints;
        let mut row: Vec<String> = [
            s.t, s.pose.x, s.pose.y, s.pose.z, j.theta1, j.theta2, j.theta3,
        ]
        .into_iter()
        .map(fmt_f64)
        .collect();
        row.push(if s.laser_on { "1" } else { "0" }.into());
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("ASCII output")
}

pub fn parse_stream(text: &str) -> Result<SetpointStream, FormatError> {
    const WHAT: &str = "setpoint stream";
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers()?;
    if header.iter().ne(STREAM_HEADER) {
        return Err(FormatError::parse(
            WHAT,
            1,
            format!("header must be `{}`", STREAM_HEADER.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != STREAM_HEADER.len() {
            return Err(FormatError::parse(WHAT, line, "expected 8 fields"));
        }
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = record[k].parse().map_err(|_| {
                FormatError::parse(
                    WHAT,
                    line,
                    format!("bad number `{}` in column {}", &record[k], STREAM_HEADER[k]),
                )
            })?;
        }
        let laser_on = match &record[7] {
            "1" => true,
            "0" => false,
            other => {
                return Err(FormatError::parse(
                    WHAT,
                    line,
                    format!("laser must be 0 or 1, got `{other}`"),
                ))
            }
        };
        samples.push(Sample {
            t: v[0],
            pose: Pose::new(v[1], v[2], v[3]),
            joints: JointAngles::new(v[4], v[5], v[6]),
            laser_on,
        });
    }
    Ok(SetpointStream::new(samples)?)
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, FormatError> {
    const WHAT: &str = "trace";
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            let line = i + 1;
            let fields: Vec<&str> = l.splitn(4, '\t').collect();
            let [tick, kind, process, detail] = fields[..] else {
                return Err(FormatError::parse(
                    WHAT,
                    line,
                    "expected 4 tab-separated fields",
                ));
            };
            Ok(TraceEvent {
                tick: tick
                    .parse()
                    .map_err(|_| FormatError::parse(WHAT, line, format!("bad tick `{tick}`")))?,
                kind: kind.parse::<EventKind>().map_err(|_| {
                    FormatError::parse(WHAT, line, format!("unknown event `{kind}`"))
                })?,
                process: (!process.is_empty()).then(|| process.to_string()),
                detail: detail.to_string(),
            })
        })
        .collect()
}

const GRID_MAGIC: &str = "deltacut-grid 1";

/// Text dump of a workspace grid:
///
/// ```text
/// deltacut-grid 1
/// min <x> <y> <z>
/// max <x> <y> <z>
/// resolution <mm>
/// dims <nx> <ny> <nz>
/// occupied <count>
/// <nz * ny rows of nx characters '0' / '1'>
/// ```
///
/// Rows run over `iz` (outer) then `iy`; character `ix` of a row is cell `(ix, iy, iz)`, so
/// the bits appear in storage order.
pub fn write_grid(grid: &WorkspaceGrid) -> String {
    let spec = grid.spec();
    let [nx, ny, nz] = spec.dims();
    let triple = |v: [f64; 3]| v.map(fmt_f64).join(" ");
    let mut out = String::with_capacity(nx * ny * nz + ny * nz + 200);
    writeln!(out, "{GRID_MAGIC}").unwrap();
    writeln!(out, "min {}", triple(spec.min())).unwrap();
    writeln!(out, "max {}", triple(spec.max())).unwrap();
    writeln!(out, "resolution {}", fmt_f64(spec.resolution())).unwrap();
    writeln!(out, "dims {nx} {ny} {nz}").unwrap();
    writeln!(out, "occupied {}", grid.occupied_count()).unwrap();
    for row in grid.occupancy().chunks(nx) {
        out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

pub fn parse_grid(text: &str) -> Result<WorkspaceGrid, FormatError> {
    const WHAT: &str = "workspace grid";
    let mut lines = text.lines().enumerate();
    let mut field = |key: &str| -> Result<(usize, Vec<String>), FormatError> {
        let (i, l) = lines
            .next()
            .ok_or_else(|| FormatError::parse(WHAT, 0, format!("missing `{key}` line")))?;
        let mut parts = l.split(' ');
        if parts.next() != Some(key) {
            return Err(FormatError::parse(WHAT, i + 1, format!("expected `{key}`")));
        }
        Ok((i + 1, parts.map(String::from).collect()))
    };
    let (_, magic) = field("deltacut-grid")?;
    if magic != ["1"] {
        return Err(FormatError::parse(WHAT, 1, "unsupported version"));
    }
    let floats = |(line, v): (usize, Vec<String>), n: usize| -> Result<Vec<f64>, FormatError> {
        let out: Result<Vec<f64>, _> = v.iter().map(|s| s.parse::<f64>()).collect();
        match out {
            Ok(o) if o.len() == n => Ok(o),
            _ => Err(FormatError::parse(
                WHAT,
                line,
                format!("expected {n} numbers"),
            )),
        }
    };
    let min = floats(field("min")?, 3)?;
    let max = floats(field("max")?, 3)?;
    let res = floats(field("resolution")?, 1)?[0];
    let dims_line = field("dims")?;
    let dims = floats(dims_line.clone(), 3)?;
    let occupied_line = field("occupied")?;
    let occupied = floats(occupied_line.clone(), 1)?[0];

    let spec = GridSpec::new([min[0], min[1], min[2]], [max[0], max[1], max[2]], res)?;
    if spec.dims().map(|d| d as f64) != [dims[0], dims[1], dims[2]] {
        return Err(FormatError::parse(
            WHAT,
            dims_line.0,
            "dims disagree with bounds and resolution",
        ));
    }
    let [nx, ny, nz] = spec.dims();
    let mut occupancy = Vec::with_capacity(spec.cell_count());
    let mut rows = 0;
    for (i, l) in lines {
        if l.len() != nx {
            return Err(FormatError::parse(
                WHAT,
                i + 1,
                format!("row must have {nx} cells"),
            ));
        }
        for c in l.chars() {
            occupancy.push(match c {
                '1' => true,
                '0' => false,
                _ => return Err(FormatError::parse(WHAT, i + 1, "cells must be 0 or 1")),
            });
        }
        rows += 1;
    }
    if rows != ny * nz {
        return Err(FormatError::parse(
            WHAT,
            7 + rows,
            format!("expected {} rows", ny * nz),
        ));
    }
    let grid = WorkspaceGrid::from_occupancy(spec, occupancy)?;
    if grid.occupied_count() as f64 != occupied {
        return Err(FormatError::parse(
            WHAT,
            occupied_line.0,
            "occupied count disagrees with cells",
        ));
    }
    Ok(grid)
}
