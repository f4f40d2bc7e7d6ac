//! `deltacut` command line.
//!
//! Results go to `--out` (or stdout when absent); human-readable summaries and diagnostics go
//! to stderr. Exit status is 0 on success, 1 on a domain failure and 2 on a usage or input
//! error.

use std::fmt::{self, Debug};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deltacut_core::workspace::GridSpec;
use deltacut_core::{
    coverage, forward_kinematics, inverse_kinematics, plan_program, simulate, volume_estimate,
    FaultScript, GaConfig, JointAngles, MachineLimits, Pose, RobotGeometry, RunStatus,
    WatchdogConfig,
};

use crate::formats::{self, fmt_f64, FormatError, GaReport};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(
    name = "deltacut",
    version,
    about = "Delta robot laser cutter: kinematics, workspace, design optimisation, cut planning and watchdog simulation",
    long_about = "Delta robot laser cutter: kinematics, workspace, design optimisation, cut planning and watchdog simulation.\n\n\
        Units: lengths in mm, angles in rad, times in s. Results go to --out or stdout; summaries and \
        diagnostics go to stderr. Exit status: 0 success, 1 domain failure (unreachable pose, no \
        solution, coverage shortfall, aborted run), 2 usage or input error."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Robot geometry JSON `{"f", "e", "rf", "re"}` (mm): base and effector triangle sides,
    /// upper arm and forearm lengths.
    #[arg(long, global = true, value_name = "FILE")]
    pub geometry: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides the seed in any config file.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint angles (rad) for an effector position (mm). Prints `theta1 theta2 theta3`.
    #[command(allow_negative_numbers = true)]
    Ik {
        /// x, mm
        x: f64,
        /// y, mm
        y: f64,
        /// z, mm (negative below the base)
        z: f64,
    },
    /// Effector position (mm) for joint angles (rad). Prints `x y z`.
    #[command(allow_negative_numbers = true)]
    Fk {
        /// Arm 1 angle, rad (0 = upper arm horizontal, positive = downward)
        theta1: f64,
        /// Arm 2 angle, rad
        theta2: f64,
        /// Arm 3 angle, rad
        theta3: f64,
    },
    /// Reachable-workspace grid. Writes the grid dump; prints cell counts and volume (mm³) to
    /// stderr.
    Workspace(WorkspaceArgs),
    /// Genetic-algorithm sizing of f, e, rf, re against a prescribed point set. Writes the
    /// result report JSON.
    Optimize(OptimizeArgs),
    /// Samples a cut program into a setpoint stream CSV
    /// (`t,x,y,z,theta1,theta2,theta3,laser`).
    Plan(PlanArgs),
    /// Runs a setpoint stream under the heartbeat watchdog. Writes the event trace; exits 1 if
    /// the run is aborted.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    /// Cell edge length, mm.
    #[arg(long, default_value_t = 10.0)]
    pub resolution: f64,
    /// Lower grid corner `x,y,z`, mm. Defaults to the geometry's enclosing box.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, requires = "max")]
    pub min: Option<[f64; 3]>,
    /// Upper grid corner `x,y,z`, mm.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, requires = "min")]
    pub max: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Search bounds JSON: `{"f": {"lower", "upper"}, "e": …, "rf": …, "re": …}`, mm.
    #[arg(long, value_name = "FILE")]
    pub bounds: PathBuf,
    /// Prescribed workspace JSON: list of `[x, y, z]` points, mm.
    #[arg(long, value_name = "FILE")]
    pub prescribed: PathBuf,
    /// GA config JSON. Missing fields take the defaults: population_size 50, generations
    /// 100, tournament_size 3, crossover_rate 0.9, mutation_sigma_fraction 0.05,
    /// elitism_count 1, seed 42, size_penalty_weight 0.05.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides population_size.
    #[arg(long)]
    pub population: Option<usize>,
    /// Overrides generations.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Overrides size_penalty_weight (fitness = coverage - weight * size / sum of upper bounds).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Exit 1 when the best design covers less than this fraction of the prescribed points.
    #[arg(long, value_name = "FRACTION")]
    pub min_coverage: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Cut program JSON.
    #[arg(long, value_name = "FILE")]
    pub program: PathBuf,
    /// Maximum path speed, mm/s (60 m/min).
    #[arg(long, default_value_t = MachineLimits::DEFAULT_V_MAX)]
    pub v_max: f64,
    /// Maximum path acceleration, mm/s².
    #[arg(long, default_value_t = MachineLimits::DEFAULT_A_MAX)]
    pub a_max: f64,
    /// Setpoint period, s.
    #[arg(long, default_value_t = MachineLimits::DEFAULT_TICK)]
    pub tick: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Setpoint stream CSV as written by `plan`; `-` reads stdin.
    #[arg(long, value_name = "FILE", default_value = "-")]
    pub stream: PathBuf,
    /// Watchdog config JSON. Defaults: pulse_period 1 tick, timeout 4 ticks, motion
    /// critical, laser degraded, logging advisory.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Fault script JSON: list of `{"process_name", "start_tick", "end_tick"}` (inclusive
    /// ticks during which that process sends no pulses). Default: no faults.
    #[arg(long, value_name = "FILE")]
    pub faults: Option<PathBuf>,
    /// Overrides pulse_period, ticks.
    #[arg(long)]
    pub pulse_period: Option<u64>,
    /// Overrides timeout, ticks.
    #[arg(long)]
    pub timeout: Option<u64>,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected three comma-separated numbers".into())
}

/// Failure of one invocation, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input; exit 2.
    Usage(String),
    /// The computation itself failed; exit 1.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    /// Message of the form `<module> error <Variant>: <text>`.
    fn domain<E: Debug + fmt::Display>(module: &str, e: E) -> Self {
        CliError::Domain(format!("{module} error {}: {e}", variant(&e)))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn variant<E: Debug>(e: &E) -> String {
    let d = format!("{e:?}");
    d.split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or_default()
        .to_string()
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> Result<T, FormatError>) -> Result<T, CliError> {
    let text = formats::read_input(path)?;
    parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn geometry(common: &Common) -> Result<RobotGeometry, CliError> {
    let path = common
        .geometry
        .as_deref()
        .ok_or_else(|| CliError::Usage("--geometry <FILE> is required for this command".into()))?;
    load(path, formats::parse_geometry)
}

/// What a command produced: the artifact and an optional stderr summary.
pub struct Output {
    pub body: String,
    pub summary: Option<String>,
    /// Exit 1 after writing the artifact.
    pub failed: Option<String>,
}

impl Output {
    fn body(body: String) -> Self {
        Output {
            body,
            summary: None,
            failed: None,
        }
    }
}

fn join(values: &[f64]) -> String {
    let mut s = values
        .iter()
        .map(|&v| fmt_f64(v))
        .collect::<Vec<_>>()
        .join(" ");
    s.push('\n');
    s
}

/// Runs a parsed command line and returns what it produced, without touching stdout.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Ik { x, y, z } => {
            let g = geometry(common)?;
            let j = inverse_kinematics(&g, &Pose::new(*x, *y, *z))
                .map_err(|e| CliError::domain("kinematics", e))?;
            Ok(Output::body(join(&j.to_array())))
        }
        Command::Fk {
            theta1,
            theta2,
            theta3,
        } => {
            let g = geometry(common)?;
            let p = forward_kinematics(&g, &JointAngles::new(*theta1, *theta2, *theta3))
                .map_err(|e| CliError::domain("kinematics", e))?;
            Ok(Output::body(join(&[p.x, p.y, p.z])))
        }
        Command::Workspace(args) => workspace(common, args),
        Command::Optimize(args) => optimize(common, args),
        Command::Plan(args) => plan(common, args),
        Command::Simulate(args) => simulate_cmd(args),
    }
}

fn workspace(common: &Common, args: &WorkspaceArgs) -> Result<Output, CliError> {
    let g = geometry(common)?;
    let spec = match (args.min, args.max) {
        (Some(min), Some(max)) => GridSpec::new(min, max, args.resolution),
        _ => GridSpec::enclosing(&g, args.resolution),
    }
    .map_err(|e| CliError::Usage(format!("workspace error {}: {e}", variant(&e))))?;
    let grid =
        parallel::compute_workspace(&g, &spec).map_err(|e| CliError::domain("workspace", e))?;
    let [nx, ny, nz] = spec.dims();
    Ok(Output {
        body: formats::write_grid(&grid),
        summary: Some(format!(
            "grid {nx} x {ny} x {nz} = {} cells, {} occupied, volume {} mm^3",
            spec.cell_count(),
            grid.occupied_count(),
            fmt_f64(volume_estimate(&grid)),
        )),
        failed: None,
    })
}

fn optimize(common: &Common, args: &OptimizeArgs) -> Result<Output, CliError> {
    let bounds = load(&args.bounds, formats::parse_bounds)?;
    let prescribed = load(&args.prescribed, formats::parse_prescribed)?;
    let mut config = match &args.config {
        Some(p) => load(p, formats::parse_ga_config)?,
        None => GaConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = args.population {
        config.population_size = n;
    }
    if let Some(n) = args.generations {
        config.generations = n;
    }
    if let Some(l) = args.lambda {
        config.size_penalty_weight = l;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("design_opt error {}: {e}", variant(&e))))?;

    let result = parallel::run_ga(&bounds, &prescribed, &config)
        .map_err(|e| CliError::domain("design_opt", e))?;
    let cov = result
        .best
        .to_geometry()
        .map_or(0.0, |g| coverage(&g, &prescribed));
    let report = GaReport::new(&result, cov, &config, &bounds, &prescribed);
    let [f, e, rf, re] = result.best.0;
    let failed = args.min_coverage.filter(|&m| cov < m).map(|m| {
        format!(
            "design_opt error CoverageShortfall: best design covers {} < {}",
            fmt_f64(cov),
            fmt_f64(m)
        )
    });
    Ok(Output {
        body: report.to_json(),
        summary: Some(format!(
            "best f={} e={} rf={} re={} fitness={} coverage={} after {} evaluations",
            fmt_f64(f),
            fmt_f64(e),
            fmt_f64(rf),
            fmt_f64(re),
            fmt_f64(result.best_fitness),
            fmt_f64(cov),
            result.evaluations
        )),
        failed,
    })
}

fn plan(common: &Common, args: &PlanArgs) -> Result<Output, CliError> {
    let g = geometry(common)?;
    let program = load(&args.program, formats::parse_program)?;
    let limits = MachineLimits {
        v_max: args.v_max,
        a_max: args.a_max,
        tick: args.tick,
    };
    let stream = plan_program(&g, &program, &limits).map_err(|e| match e {
        deltacut_core::TrajectoryError::UnreachableSample { .. } => {
            CliError::domain("trajectory", e)
        }
        _ => CliError::Usage(format!("trajectory error {}: {e}", variant(&e))),
    })?;
    let last = stream
        .samples()
        .last()
        .expect("planned streams are non-empty");
    Ok(Output {
        body: formats::stream_to_csv(&stream),
        summary: Some(format!(
            "{} samples over {} s, v_max {} mm/s, a_max {} mm/s^2, tick {} s",
            stream.len(),
            fmt_f64(last.t),
            fmt_f64(limits.v_max),
            fmt_f64(limits.a_max),
            fmt_f64(limits.tick)
        )),
        failed: None,
    })
}

fn simulate_cmd(args: &SimulateArgs) -> Result<Output, CliError> {
    let stream = load(&args.stream, formats::parse_stream)?;
    let mut config = match &args.config {
        Some(p) => load(p, formats::parse_watchdog_config)?,
        None => WatchdogConfig::default(),
    };
    if let Some(p) = args.pulse_period {
        config.pulse_period = p;
    }
    if let Some(t) = args.timeout {
        config.timeout = t;
    }
    let faults = match &args.faults {
        Some(p) => load(p, formats::parse_fault_script)?,
        None => FaultScript::none(),
    };
    let outcome = simulate(&stream, &config, &faults)
        .map_err(|e| CliError::Usage(format!("control_sim error {}: {e}", variant(&e))))?;
    let p = outcome.final_pose;
    let status = match outcome.status {
        RunStatus::Completed => "complete",
        RunStatus::Aborted => "aborted",
    };
    Ok(Output {
        body: deltacut_core::format_trace(&outcome.trace),
        summary: Some(format!(
            "run {status} at tick {}; final pose {} {} {}; laser {}",
            outcome.final_tick,
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z),
            if outcome.laser_on { "on" } else { "off" }
        )),
        failed: (outcome.status == RunStatus::Aborted)
            .then(|| format!("control_sim run aborted at tick {}", outcome.final_tick)),
    })
}

fn emit(common: &Common, out: &Output) -> Result<(), CliError> {
    match &common.out {
        Some(path) => formats::write_output(path, &out.body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = execute(&cli).and_then(|out| {
        emit(&cli.common, &out)?;
        if let Some(s) = &out.summary {
            eprintln!("{s}");
        }
        match out.failed {
            Some(msg) => Err(CliError::Domain(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deltacut: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn variant_names() {
        let e = deltacut_core::KinematicsError::Unreachable {
            arm: deltacut_core::Arm::One,
        };
        assert_eq!(variant(&e), "Unreachable");
        assert_eq!(
            variant(&deltacut_core::KinematicsError::AboveBase),
            "AboveBase"
        );
    }

    #[test]
    fn triples() {
        assert_eq!(
            parse_triple("-300,-300,-550").unwrap(),
            [-300.0, -300.0, -550.0]
        );
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("1,x,2").is_err());
    }
}
