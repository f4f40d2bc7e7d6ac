//! Laser-cut planning: trapezoidal speed profiles along lines and arcs, sampled at the
//! control tick and converted to joint setpoints.
//!
//! Every segment starts and ends at rest. Contours are joined by straight laser-off rapids
//! under the same limits. On arcs the speed is capped at `sqrt(a_max · R / √2)` and the
//! tangential acceleration at `a_max / √2`, which keeps the total (tangential plus
//! centripetal) acceleration within `a_max`.

use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};

use libm::{atan2, ceil, cos, fmod, sin, sqrt};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinematics::{
    forward_kinematics, inverse_kinematics, JointAngles, KinematicsError, Pose, RobotGeometry,
};

/// Tolerance (mm) on arc radius consistency.
pub const ARC_TOLERANCE: f64 = 1e-6;

/// Relative slack on the finite-difference speed check.
pub const SPEED_TOLERANCE: f64 = 1e-9;

/// Relative slack on the finite-difference acceleration check; one-tick transitions at
/// profile corners make the sampled estimate overshoot slightly.
pub const ACCEL_TOLERANCE: f64 = 0.05;

/// Joint/pose consistency tolerance (mm) used by [`validate_stream`].
pub const POSE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("machine limits must be finite and > 0")]
    InvalidLimits,
    #[error("feed {feed} mm/s must be in (0, v_max = {v_max}]")]
    InvalidFeed { feed: f64, v_max: f64 },
    #[error("path length must be finite and > 0, got {0}")]
    InvalidLength(f64),
    #[error("program has no contours")]
    EmptyProgram,
    #[error("contour {contour}: {reason}")]
    InvalidContour {
        contour: usize,
        reason: &'static str,
    },
    #[error("contour {contour} segment {segment}: {reason}")]
    InvalidSegment {
        contour: usize,
        segment: usize,
        reason: &'static str,
    },
    #[error("sample at t = {t} s, pose ({}, {}, {}) fails inverse kinematics: {source}", pose.x, pose.y, pose.z)]
    UnreachableSample {
        t: f64,
        pose: Pose,
        source: KinematicsError,
    },
    #[error("setpoint stream invalid at sample {index}: {reason}")]
    InvalidStream { index: usize, reason: &'static str },
}

/// Cartesian path limits and control period.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MachineLimits {
    /// mm/s
    pub v_max: f64,
    /// mm/s²
    pub a_max: f64,
    /// s
    pub tick: f64,
}

impl MachineLimits {
    /// 60 m/min.
    pub const DEFAULT_V_MAX: f64 = 1000.0;
    /// 23 m/s².
    pub const DEFAULT_A_MAX: f64 = 23_000.0;
    /// 2.5 ms.
    pub const DEFAULT_TICK: f64 = 0.0025;

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let ok = [self.v_max, self.a_max, self.tick]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(TrajectoryError::InvalidLimits)
        }
    }
}

impl Default for MachineLimits {
    fn default() -> Self {
        MachineLimits {
            v_max: Self::DEFAULT_V_MAX,
            a_max: Self::DEFAULT_A_MAX,
            tick: Self::DEFAULT_TICK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum ArcDirection {
    Ccw,
    Cw,
}

/// Path element in a contour's z plane. Coordinates are `[x, y]` in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(tag = "type", rename_all = "lowercase")
)]
pub enum Segment {
    Line {
        end: [f64; 2],
    },
    /// Arc from the previous point to `end` about `center`; `end` equal to the start point
    /// makes a full circle.
    Arc {
        end: [f64; 2],
        center: [f64; 2],
        direction: ArcDirection,
    },
}

impl Segment {
    pub fn end(&self) -> [f64; 2] {
        match *self {
            Segment::Line { end } | Segment::Arc { end, .. } => end,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Contour {
    pub z_plane: f64,
    pub laser_on: bool,
    pub start: [f64; 2],
    pub segments: Vec<Segment>,
    /// Cutting speed for this contour, mm/s; `v_max` when absent.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub feed_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CutProgram {
    pub contours: Vec<Contour>,
}

impl CutProgram {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.contours.is_empty() {
            return Err(TrajectoryError::EmptyProgram);
        }
        for (ci, c) in self.contours.iter().enumerate() {
            let bad = |reason| TrajectoryError::InvalidContour {
                contour: ci,
                reason,
            };
            if !(c.z_plane.is_finite() && c.z_plane < 0.0) {
                return Err(bad("z_plane must be finite and < 0"));
            }
            if !(c.start[0].is_finite() && c.start[1].is_finite()) {
                return Err(bad("start point must be finite"));
            }
            if c.segments.is_empty() {
                return Err(bad("contour needs at least one segment"));
            }
            if let Some(feed) = c.feed_override {
                if !feed.is_finite() {
                    return Err(bad("feed_override must be finite"));
                }
            }
            let mut from = c.start;
            for (si, s) in c.segments.iter().enumerate() {
                let bad = |reason| TrajectoryError::InvalidSegment {
                    contour: ci,
                    segment: si,
                    reason,
                };
                let end = s.end();
                if !(end[0].is_finite() && end[1].is_finite()) {
                    return Err(bad("end point must be finite"));
                }
                if let Segment::Arc { center, .. } = s {
                    if !(center[0].is_finite() && center[1].is_finite()) {
                        return Err(bad("arc center must be finite"));
                    }
                    let r0 = dist2(from, *center);
                    let r1 = dist2(end, *center);
                    if r0 <= ARC_TOLERANCE {
                        return Err(bad("arc radius is zero"));
                    }
                    if (r0 - r1).abs() > ARC_TOLERANCE {
                        return Err(bad("arc start and end are at different radii"));
                    }
                }
                from = end;
            }
        }
        Ok(())
    }

    /// Last point of the last contour.
    pub fn final_point(&self) -> Option<Pose> {
        let c = self.contours.last()?;
        let end = c.segments.last().map(|s| s.end()).unwrap_or(c.start);
        Some(Pose::new(end[0], end[1], c.z_plane))
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    sqrt(dx * dx + dy * dy)
}

/// Rest-to-rest trapezoidal (or triangular) speed law over a path of known length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfile {
    pub length: f64,
    pub accel: f64,
    /// Highest speed attained.
    pub peak_speed: f64,
    pub accel_time: f64,
    pub cruise_time: f64,
    pub total_time: f64,
}

impl MotionProfile {
    pub fn is_triangular(&self) -> bool {
        self.cruise_time == 0.0
    }

    /// Distance travelled at time `t`, clamped to `[0, total_time]`.
    pub fn position(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_time);
        if t >= self.total_time {
            return self.length;
        }
        let accel_end = self.accel_time;
        let cruise_end = self.accel_time + self.cruise_time;
        if t <= accel_end {
            0.5 * self.accel * t * t
        } else if t <= cruise_end {
            0.5 * self.peak_speed * self.accel_time + self.peak_speed * (t - accel_end)
        } else {
            let r = self.total_time - t;
            self.length - 0.5 * self.accel * r * r
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_time);
        if t <= self.accel_time {
            self.accel * t
        } else if t <= self.accel_time + self.cruise_time {
            self.peak_speed
        } else {
            self.accel * (self.total_time - t)
        }
    }
}

/// Plans the speed law for a path of `path_length` mm at the requested `feed`.
pub fn plan_profile(
    path_length: f64,
    limits: &MachineLimits,
    feed: f64,
) -> Result<MotionProfile, TrajectoryError> {
    limits.validate()?;
    if !(feed.is_finite() && feed > 0.0 && feed <= limits.v_max) {
        return Err(TrajectoryError::InvalidFeed {
            feed,
            v_max: limits.v_max,
        });
    }
    if !(path_length.is_finite() && path_length > 0.0) {
        return Err(TrajectoryError::InvalidLength(path_length));
    }
    let a = limits.a_max;
    if path_length <= feed * feed / a {
        let peak = sqrt(a * path_length);
        let ta = peak / a;
        Ok(MotionProfile {
            length: path_length,
            accel: a,
            peak_speed: peak,
            accel_time: ta,
            cruise_time: 0.0,
            total_time: 2.0 * ta,
        })
    } else {
        let ta = feed / a;
        let cruise = path_length / feed - ta;
        Ok(MotionProfile {
            length: path_length,
            accel: a,
            peak_speed: feed,
            accel_time: ta,
            cruise_time: cruise,
            total_time: path_length / feed + feed / a,
        })
    }
}

/// Number of samples a motion of `total_time` produces: one per whole tick plus the
/// clamped final sample.
pub fn sample_count(total_time: f64, tick: f64) -> usize {
    let q = total_time / tick;
    ceil(q - 1e-9 * q.max(1.0)) as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Sample {
    /// s
    pub t: f64,
    pub pose: Pose,
    pub joints: JointAngles,
    pub laser_on: bool,
}

/// Time-ordered setpoints, one per control tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetpointStream {
    samples: Vec<Sample>,
}

impl SetpointStream {
    /// Checks the time base: non-empty, starting at 0, strictly increasing, all finite.
    pub fn new(samples: Vec<Sample>) -> Result<Self, TrajectoryError> {
        let bad = |index, reason| TrajectoryError::InvalidStream { index, reason };
        let first = samples.first().ok_or(bad(0, "stream is empty"))?;
        if first.t != 0.0 {
            return Err(bad(0, "stream must start at t = 0"));
        }
        for (i, s) in samples.iter().enumerate() {
            let finite = s.t.is_finite()
                && s.pose.is_finite()
                && s.joints.to_array().iter().all(|v| v.is_finite());
            if !finite {
                return Err(bad(i, "non-finite value"));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(bad(i, "timestamps must be strictly increasing"));
            }
        }
        Ok(SetpointStream { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

/// A rest-to-rest move along one geometric primitive.
#[derive(Debug, Clone, Copy)]
enum Path {
    Line {
        from: Pose,
        to: Pose,
    },
    Arc {
        center: Pose,
        radius: f64,
        start_angle: f64,
        sweep: f64,
        to: Pose,
    },
}

impl Path {
    fn length(&self) -> f64 {
        match *self {
            Path::Line { from, to } => from.distance(&to),
            Path::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    fn point_at(&self, s: f64, length: f64) -> Pose {
        match *self {
            Path::Line { from, to } => {
                if s >= length {
                    to
                } else {
                    from + (to - from) * (s / length)
                }
            }
            Path::Arc {
                center,
                radius,
                start_angle,
                sweep,
                to,
            } => {
                if s >= length {
                    to
                } else {
                    let phi = start_angle + sweep * (s / length);
                    Pose::new(
                        center.x + radius * cos(phi),
                        center.y + radius * sin(phi),
                        center.z,
                    )
                }
            }
        }
    }

    /// Limits and feed to plan this path with.
    fn effective(&self, limits: &MachineLimits, feed: f64) -> (MachineLimits, f64) {
        match *self {
            Path::Line { .. } => (*limits, feed),
            Path::Arc { radius, .. } => {
                let cap = sqrt(limits.a_max * radius / SQRT_2);
                let scaled = MachineLimits {
                    a_max: limits.a_max / SQRT_2,
                    ..*limits
                };
                (scaled, feed.min(cap))
            }
        }
    }
}

fn arc_path(from: [f64; 2], end: [f64; 2], center: [f64; 2], dir: ArcDirection, z: f64) -> Path {
    let radius = dist2(from, center);
    let a0 = atan2(from[1] - center[1], from[0] - center[0]);
    let a1 = atan2(end[1] - center[1], end[0] - center[0]);
    let raw = match dir {
        ArcDirection::Ccw => a1 - a0,
        ArcDirection::Cw => a0 - a1,
    };
    let mut sweep = fmod(raw, TAU);
    if sweep < 0.0 {
        sweep += TAU;
    }
    if dist2(from, end) <= ARC_TOLERANCE || sweep == 0.0 {
        sweep = TAU;
    }
    if dir == ArcDirection::Cw {
        sweep = -sweep;
    }
    Path::Arc {
        center: Pose::new(center[0], center[1], z),
        radius,
        start_angle: a0,
        sweep,
        to: Pose::new(end[0], end[1], z),
    }
}

/// Turns a cut program into joint setpoints.
///
/// Samples of each motion sit at whole ticks from its start plus one clamped sample at its
/// end; the next motion begins at that instant, so its first sample (which would repeat the
/// pose) is dropped. A boundary sample carries the laser flag of the motion arriving there.
pub fn plan_program(
    geometry: &RobotGeometry,
    program: &CutProgram,
    limits: &MachineLimits,
) -> Result<SetpointStream, TrajectoryError> {
    limits.validate()?;
    program.validate()?;

    let mut moves: Vec<(Path, f64, bool)> = Vec::new();
    let mut cursor: Option<Pose> = None;
    for c in &program.contours {
        let feed = c.feed_override.unwrap_or(limits.v_max);
        if !(feed > 0.0 && feed <= limits.v_max) {
            return Err(TrajectoryError::InvalidFeed {
                feed,
                v_max: limits.v_max,
            });
        }
        let start = Pose::new(c.start[0], c.start[1], c.z_plane);
        if let Some(prev) = cursor {
            moves.push((
                Path::Line {
                    from: prev,
                    to: start,
                },
                limits.v_max,
                false,
            ));
        }
        let mut from = c.start;
        for s in &c.segments {
            let path = match *s {
                Segment::Line { end } => Path::Line {
                    from: Pose::new(from[0], from[1], c.z_plane),
                    to: Pose::new(end[0], end[1], c.z_plane),
                },
                Segment::Arc {
                    end,
                    center,
                    direction,
                } => arc_path(from, end, center, direction, c.z_plane),
            };
            moves.push((path, feed, c.laser_on));
            from = s.end();
        }
        cursor = Some(Pose::new(from[0], from[1], c.z_plane));
    }

    let mut samples = Vec::new();
    let mut push = |t: f64, pose: Pose, laser_on: bool| -> Result<(), TrajectoryError> {
        let joints = inverse_kinematics(geometry, &pose)
            .map_err(|source| TrajectoryError::UnreachableSample { t, pose, source })?;
        samples.push(Sample {
            t,
            pose,
            joints,
            laser_on,
        });
        Ok(())
    };
    let first = &program.contours[0];
    push(
        0.0,
        Pose::new(first.start[0], first.start[1], first.z_plane),
        first.laser_on,
    )?;

    let mut clock = 0.0;
    for (path, feed, laser_on) in moves {
        let length = path.length();
        if length <= 0.0 {
            continue;
        }
        let (lim, feed) = path.effective(limits, feed);
        let profile = plan_profile(length, &lim, feed)?;
        let n = sample_count(profile.total_time, limits.tick);
        for k in 1..n {
            let local = if k == n - 1 {
                profile.total_time
            } else {
                k as f64 * limits.tick
            };
            let pose = path.point_at(profile.position(local), length);
            push(clock + local, pose, laser_on)?;
        }
        clock += profile.total_time;
    }
    SetpointStream::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Speed,
    Acceleration,
    /// Joints disagree with the pose under inverse or forward kinematics.
    Kinematics,
    /// Sample spacing is not positive or exceeds one tick.
    TimeBase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
    pub value: f64,
}

/// Independent finite-difference audit of a stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamReport {
    pub max_speed: f64,
    pub max_accel: f64,
    /// Largest joint change between consecutive samples, rad.
    pub max_joint_step: f64,
    /// Largest `|FK(joints) - pose|∞`, mm.
    pub max_pose_error: f64,
    pub violations: Vec<Violation>,
}

impl StreamReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes speed and acceleration from the Cartesian samples and checks every sample's
/// joints against its pose.
///
/// Speed over `[k, k+1]` is reported at `k + 1`; acceleration from the two adjacent speed
/// estimates at `k`.
pub fn validate_stream(
    geometry: &RobotGeometry,
    stream: &SetpointStream,
    limits: &MachineLimits,
) -> StreamReport {
    let s = stream.samples();
    let mut report = StreamReport::default();
    let speed_limit = limits.v_max * (1.0 + SPEED_TOLERANCE);
    let accel_limit = limits.a_max * (1.0 + ACCEL_TOLERANCE);

    for (i, sample) in s.iter().enumerate() {
        let fk_err = forward_kinematics(geometry, &sample.joints)
            .map(|p| p.max_abs_diff(&sample.pose))
            .unwrap_or(f64::INFINITY);
        let ik_err = inverse_kinematics(geometry, &sample.pose)
            .map(|j| j.max_abs_diff(&sample.joints))
            .unwrap_or(f64::INFINITY);
        report.max_pose_error = report.max_pose_error.max(fk_err);
        if !(fk_err <= POSE_TOLERANCE && ik_err <= 1e-9) {
            report.violations.push(Violation {
                index: i,
                kind: ViolationKind::Kinematics,
                value: fk_err.max(ik_err),
            });
        }
    }

    let mut velocity: Vec<(Pose, f64)> = Vec::with_capacity(s.len().saturating_sub(1));
    for (k, w) in s.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0 && dt <= limits.tick * (1.0 + 1e-9)) {
            report.violations.push(Violation {
                index: k + 1,
                kind: ViolationKind::TimeBase,
                value: dt,
            });
        }
        let v = (w[1].pose - w[0].pose) * (1.0 / dt);
        let speed = v.norm();
        report.max_speed = report.max_speed.max(speed);
        if speed > speed_limit {
            report.violations.push(Violation {
                index: k + 1,
                kind: ViolationKind::Speed,
                value: speed,
            });
        }
        report.max_joint_step = report
            .max_joint_step
            .max(w[1].joints.max_abs_diff(&w[0].joints));
        velocity.push((v, dt));
    }

    for (k, w) in velocity.windows(2).enumerate() {
        let span = 0.5 * (w[0].1 + w[1].1);
        let accel = (w[1].0 - w[0].0).norm() / span;
        report.max_accel = report.max_accel.max(accel);
        if accel > accel_limit {
            report.violations.push(Violation {
                index: k + 1,
                kind: ViolationKind::Acceleration,
                value: accel,
            });
        }
    }
    report.violations.sort_by_key(|v| v.index);
    report
}
