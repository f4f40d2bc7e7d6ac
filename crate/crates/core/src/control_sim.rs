//! Logical-time simulation of the cell executing a setpoint stream under a safety watchdog.
//!
//! One tick per stream sample. Each supervised process sends a pulse on every tick that is a
//! multiple of `pulse_period` unless a fault suppresses it; a pulse sent on tick `k` is
//! received by the watchdog on tick `k + 1`, and the run start counts as a reception at
//! tick 0. At the start of every tick the watchdog compares the ticks elapsed since each
//! process's last received pulse with `timeout` and trips on the first tick where the gap
//! exceeds it, which is `timeout + 1` ticks after that reception.
//!
//! Corrective action by severity:
//! - critical: laser off and motion hold at the current setpoint, run aborted on the trip tick;
//! - degraded: laser off at once, motion runs to the end of the current cutting contour and
//!   holds there, run aborted;
//! - advisory: logged, run continues. The process is re-armed by its next pulse.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinematics::Pose;
use crate::trajectory::SetpointStream;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid watchdog config: {0}")]
    InvalidConfig(String),
    #[error("fault script names unknown process `{0}`")]
    UnknownProcess(String),
    #[error("fault interval for `{process}` has start_tick {start} > end_tick {end}")]
    InvalidFault {
        process: String,
        start: u64,
        end: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Severity {
    Critical,
    Degraded,
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ProcessSpec {
    pub name: String,
    pub severity: Severity,
}

impl ProcessSpec {
    pub fn new(name: &str, severity: Severity) -> Self {
        ProcessSpec {
            name: name.into(),
            severity,
        }
    }
}

/// Processes every config must supervise.
pub const BUILTIN_PROCESSES: [&str; 3] = ["motion", "laser", "logging"];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct WatchdogConfig {
    /// Ticks between pulses.
    pub pulse_period: u64,
    /// Largest tolerated gap, in ticks, since the last received pulse.
    pub timeout: u64,
    pub processes: Vec<ProcessSpec>,
}

impl Default for WatchdogConfig {
    fn default() -> Self {
        WatchdogConfig {
            pulse_period: 1,
            timeout: 4,
            processes: vec![
                ProcessSpec::new("motion", Severity::Critical),
                ProcessSpec::new("laser", Severity::Degraded),
                ProcessSpec::new("logging", Severity::Advisory),
            ],
        }
    }
}

impl WatchdogConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.into()));
        if self.pulse_period < 1 {
            return bad("pulse_period must be >= 1");
        }
        if self.timeout < self.pulse_period {
            return bad("timeout must be >= pulse_period");
        }
        for (i, p) in self.processes.iter().enumerate() {
            if p.name.is_empty() || p.name.contains(['\t', '\n', '\r']) {
                return Err(SimError::InvalidConfig(format!(
                    "process name {:?} must be non-empty without tabs or line breaks",
                    p.name
                )));
            }
            if self.processes[..i].iter().any(|q| q.name == p.name) {
                return Err(SimError::InvalidConfig(format!(
                    "duplicate process name `{}`",
                    p.name
                )));
            }
        }
        for builtin in BUILTIN_PROCESSES {
            if !self.processes.iter().any(|p| p.name == builtin) {
                return Err(SimError::InvalidConfig(format!(
                    "built-in process `{builtin}` missing"
                )));
            }
        }
        Ok(())
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.name == name)
    }
}

/// Ticks `start_tick..=end_tick` during which `process_name` sends no pulses.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FaultInterval {
    pub process_name: String,
    pub start_tick: u64,
    pub end_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(transparent))]
pub struct FaultScript {
    pub faults: Vec<FaultInterval>,
}

impl FaultScript {
    pub fn none() -> Self {
        FaultScript::default()
    }

    /// Suppresses `process` from `start` for the rest of the run.
    pub fn suppress_from(process: &str, start: u64) -> Self {
        FaultScript {
            faults: vec![FaultInterval {
                process_name: process.into(),
                start_tick: start,
                end_tick: u64::MAX,
            }],
        }
    }

    fn validate(&self, config: &WatchdogConfig) -> Result<(), SimError> {
        for f in &self.faults {
            if config.position(&f.process_name).is_none() {
                return Err(SimError::UnknownProcess(f.process_name.clone()));
            }
            if f.start_tick > f.end_tick {
                return Err(SimError::InvalidFault {
                    process: f.process_name.clone(),
                    start: f.start_tick,
                    end: f.end_tick,
                });
            }
        }
        Ok(())
    }

    fn suppressed(&self, process: &str, tick: u64) -> bool {
        self.faults
            .iter()
            .any(|f| f.process_name == process && f.start_tick <= tick && tick <= f.end_tick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    PulseMissed,
    WatchdogTrip,
    CorrectiveAction,
    LaserOff,
    MotionHold,
    RunComplete,
    RunAborted,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PulseMissed => "pulse_missed",
            EventKind::WatchdogTrip => "watchdog_trip",
            EventKind::CorrectiveAction => "corrective_action",
            EventKind::LaserOff => "laser_off",
            EventKind::MotionHold => "motion_hold",
            EventKind::RunComplete => "run_complete",
            EventKind::RunAborted => "run_aborted",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, EventKind::RunComplete | EventKind::RunAborted)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "pulse_missed" => EventKind::PulseMissed,
            "watchdog_trip" => EventKind::WatchdogTrip,
            "corrective_action" => EventKind::CorrectiveAction,
            "laser_off" => EventKind::LaserOff,
            "motion_hold" => EventKind::MotionHold,
            "run_complete" => EventKind::RunComplete,
            "run_aborted" => EventKind::RunAborted,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub process: Option<String>,
    pub detail: String,
}

impl TraceEvent {
    fn new(tick: u64, kind: EventKind, process: Option<&str>, detail: String) -> Self {
        TraceEvent {
            tick,
            kind,
            process: process.map(String::from),
            detail,
        }
    }
}

/// `tick<TAB>kind<TAB>process<TAB>detail`, empty process field when there is none.
impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.tick,
            self.kind,
            self.process.as_deref().unwrap_or(""),
            self.detail
        )
    }
}

/// Renders a trace in its line format, LF-terminated.
pub fn format_trace(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&format!("{e}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub trace: Vec<TraceEvent>,
    pub status: RunStatus,
    /// Tick of the terminal event.
    pub final_tick: u64,
    /// Commanded (and, with perfect tracking, actual) pose when the run ended.
    pub final_pose: Pose,
    pub laser_on: bool,
}

/// Last sample index of the cutting contour that contains `tick`, or `tick` itself when the
/// laser is off there.
fn contour_end(stream: &SetpointStream, tick: usize) -> usize {
    let s = stream.samples();
    if !s[tick].laser_on {
        return tick;
    }
    let mut j = tick;
    while j + 1 < s.len() && s[j + 1].laser_on {
        j += 1;
    }
    j
}

pub fn simulate(
    stream: &SetpointStream,
    config: &WatchdogConfig,
    faults: &FaultScript,
) -> Result<SimOutcome, SimError> {
    config.validate()?;
    faults.validate(config)?;
    let samples = stream.samples();
    let n = samples.len();

    let mut trace = Vec::new();
    let mut last_received = vec![0u64; config.processes.len()];
    let mut tripped = vec![false; config.processes.len()];
    let mut laser_inhibited = false;
    let mut hold_at: Option<usize> = None;

    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let tick = k as u64;

        for (i, p) in config.processes.iter().enumerate() {
            let elapsed = tick - last_received[i];
            if tripped[i] || elapsed <= config.timeout {
                continue;
            }
            tripped[i] = true;
            let name = Some(p.name.as_str());
            trace.push(TraceEvent::new(
                tick,
                EventKind::PulseMissed,
                name,
                format!("last pulse received at tick {}", last_received[i]),
            ));
            trace.push(TraceEvent::new(
                tick,
                EventKind::WatchdogTrip,
                name,
                format!("elapsed {elapsed} > timeout {}", config.timeout),
            ));
            match p.severity {
                Severity::Critical => {
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::CorrectiveAction,
                        name,
                        "critical: laser off, hold motion, abort".into(),
                    ));
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::LaserOff,
                        name,
                        String::new(),
                    ));
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::MotionHold,
                        name,
                        format!("holding at sample {k}"),
                    ));
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::RunAborted,
                        None,
                        format!("critical process {} failed", p.name),
                    ));
                    return Ok(SimOutcome {
                        trace,
                        status: RunStatus::Aborted,
                        final_tick: tick,
                        final_pose: samples[k].pose,
                        laser_on: false,
                    });
                }
                Severity::Degraded => {
                    let end = contour_end(stream, k);
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::CorrectiveAction,
                        name,
                        format!("degraded: laser off, hold at end of contour (sample {end})"),
                    ));
                    if !laser_inhibited {
                        trace.push(TraceEvent::new(
                            tick,
                            EventKind::LaserOff,
                            name,
                            String::new(),
                        ));
                        laser_inhibited = true;
                    }
                    hold_at = Some(hold_at.map_or(end, |h| h.min(end)));
                }
                Severity::Advisory => {
                    trace.push(TraceEvent::new(
                        tick,
                        EventKind::CorrectiveAction,
                        name,
                        "advisory: warning logged, run continues".into(),
                    ));
                }
            }
        }

        if hold_at == Some(k) {
            trace.push(TraceEvent::new(
                tick,
                EventKind::MotionHold,
                None,
                format!("holding at sample {k}"),
            ));
            trace.push(TraceEvent::new(
                tick,
                EventKind::RunAborted,
                None,
                "degraded process failed".into(),
            ));
            return Ok(SimOutcome {
                trace,
                status: RunStatus::Aborted,
                final_tick: tick,
                final_pose: samples[k].pose,
                laser_on: false,
            });
        }

        for (i, p) in config.processes.iter().enumerate() {
            if tick.is_multiple_of(config.pulse_period) && !faults.suppressed(&p.name, tick) {
                last_received[i] = tick + 1;
                tripped[i] = false;
            }
        }
    }

    let last = n - 1;
    trace.push(TraceEvent::new(
        last as u64,
        EventKind::RunComplete,
        None,
        format!("{n} samples executed"),
    ));
    Ok(SimOutcome {
        trace,
        status: RunStatus::Completed,
        final_tick: last as u64,
        final_pose: samples[last].pose,
        laser_on: samples[last].laser_on && !laser_inhibited,
    })
}

/// Re-runs the simulation and compares the rendered traces byte for byte.
pub fn replay_check(
    trace: &[TraceEvent],
    stream: &SetpointStream,
    config: &WatchdogConfig,
    faults: &FaultScript,
) -> bool {
    match simulate(stream, config, faults) {
        Ok(outcome) => format_trace(&outcome.trace) == format_trace(trace),
        Err(_) => false,
    }
}
