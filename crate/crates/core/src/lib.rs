//! Kinematics, workspace synthesis, cut planning and watchdog simulation for a
//! 3-DOF translational Delta robot carrying a laser cutting head.
//!
//! Everything here is pure computation over `alloc`; file formats and the command line
//! live in the `deltacut` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control_sim;
pub mod design_opt;
pub mod kinematics;
pub mod trajectory;
pub mod workspace;

pub use control_sim::{
    format_trace, replay_check, simulate, EventKind, FaultInterval, FaultScript, ProcessSpec,
    RunStatus, Severity, SimError, SimOutcome, TraceEvent, WatchdogConfig,
};
pub use design_opt::{
    fitness, random_search, run_ga, run_ga_with, DesignBounds, DesignError, GaConfig, GaResult,
    GenerationStats, Genome, ParamRange,
};
pub use kinematics::{
    forward_kinematics, inverse_kinematics, is_reachable, solve_arm_angle, Arm, ArmSolution,
    GeometryError, JointAngles, KinematicsError, Pose, RobotGeometry,
};
pub use trajectory::{
    plan_profile, plan_program, validate_stream, ArcDirection, Contour, CutProgram, MachineLimits,
    MotionProfile, Sample, Segment, SetpointStream, StreamReport, TrajectoryError,
};
pub use workspace::{
    compute_workspace, coverage, volume_estimate, GridSpec, PrescribedWorkspace, WorkspaceError,
    WorkspaceGrid,
};
