//! Closed-form inverse and forward kinematics of the 3-DOF translational Delta robot.
//!
//! Frame conventions: the origin sits at the centroid of the fixed base triangle, z points
//! up, so every working pose has z < 0. Arm 1 lies in the YZ half-plane on the negative y
//! side; arms 2 and 3 are arm 1 rotated by +120° and +240° about z. A joint angle of zero
//! means the upper arm is horizontal, positive angles swing the knee downward.

use core::f64::consts::PI;
use core::fmt;
use core::ops::{Add, Mul, Sub};

use libm::{atan2, cos, sin, sqrt};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Residual tolerance (mm) used for geometric self-checks.
pub const GEOMETRIC_TOLERANCE: f64 = 1e-9;

/// Relative rank tolerance for the forward-kinematics plane intersection.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// Relative tolerance on squared-length discriminants below which two circles or spheres
/// are taken to be tangent.
pub const TANGENCY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("geometry parameter `{name}` must be finite and > 0, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(
        "home pose cannot assemble: need re > |a + rf - b| but re = {re}, |a + rf - b| = {reach}"
    )]
    HomeUnreachable { re: f64, reach: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("pose has a non-finite coordinate")]
    NonFinitePose,
    #[error("pose is not below the base plane (z >= 0)")]
    AboveBase,
    #[error("pose unreachable by arm {arm}")]
    Unreachable { arm: Arm },
    #[error("pose lies on or above the plane of the knee spheres (folded assembly)")]
    FoldedAssembly,
    #[error("joint angle of arm {arm} is {theta} rad, outside (-pi/2, pi)")]
    JointOutOfRange { arm: Arm, theta: f64 },
    #[error("forearm spheres share no point below the base")]
    NoSolution,
    #[error("knee sphere centres are collinear; forward kinematics undefined")]
    Singular,
}

/// One of the three actuated arms, numbered 1 to 3 counter-clockwise from the -y axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Arm {
    One,
    Two,
    Three,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::One, Arm::Two, Arm::Three];

    /// 1-based index.
    pub fn index(self) -> usize {
        match self {
            Arm::One => 1,
            Arm::Two => 2,
            Arm::Three => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Arm> {
        match index {
            1 => Some(Arm::One),
            2 => Some(Arm::Two),
            3 => Some(Arm::Three),
            _ => None,
        }
    }

    /// Rotation of this arm's plane about z relative to arm 1.
    pub fn azimuth(self) -> f64 {
        (self.index() - 1) as f64 * 2.0 * PI / 3.0
    }

    fn slot(self) -> usize {
        self.index() - 1
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// The four sizing parameters of the mechanism, all in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct RobotGeometry {
    f: f64,
    e: f64,
    rf: f64,
    re: f64,
}

impl RobotGeometry {
    /// Builds a geometry from base side `f`, effector side `e`, upper arm `rf` and forearm `re`.
    pub fn new(f: f64, e: f64, rf: f64, re: f64) -> Result<Self, GeometryError> {
        for (name, value) in [("f", f), ("e", e), ("rf", rf), ("re", re)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::NonPositive { name, value });
            }
        }
        let geometry = RobotGeometry { f, e, rf, re };
        let reach = (geometry.base_offset() + rf - geometry.effector_offset()).abs();
        if re <= reach {
            return Err(GeometryError::HomeUnreachable { re, reach });
        }
        Ok(geometry)
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn rf(&self) -> f64 {
        self.rf
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    /// Distance from the base centroid to a side midpoint, `f / (2√3)`.
    pub fn base_offset(&self) -> f64 {
        self.f / (2.0 * SQRT_3)
    }

    /// Distance from the effector centroid to a side midpoint, `e / (2√3)`.
    pub fn effector_offset(&self) -> f64 {
        self.e / (2.0 * SQRT_3)
    }

    /// z of the effector when all three joint angles are zero.
    pub fn home_z(&self) -> f64 {
        let reach = self.base_offset() + self.rf - self.effector_offset();
        -sqrt(self.re * self.re - reach * reach)
    }

    pub fn home_pose(&self) -> Pose {
        Pose::new(0.0, 0.0, self.home_z())
    }

    /// Sum of the four parameters, used as the size measure in synthesis.
    pub fn size(&self) -> f64 {
        self.f + self.e + self.rf + self.re
    }

    /// Every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self, GeometryError> {
        RobotGeometry::new(self.f * s, self.e * s, self.rf * s, self.re * s)
    }

    /// Shifted centre `J'` of the forearm sphere of `arm` for joint angle `theta`: the knee
    /// moved horizontally toward the arm axis by the effector offset.
    pub fn shifted_knee(&self, arm: Arm, theta: f64) -> Pose {
        let y = -self.base_offset() - self.rf * cos(theta) + self.effector_offset();
        let z = -self.rf * sin(theta);
        Pose::new(0.0, y, z).rotate_z(arm.azimuth())
    }

    /// Knee position `J` of `arm` in the base frame.
    pub fn knee(&self, arm: Arm, theta: f64) -> Pose {
        let y = -self.base_offset() - self.rf * cos(theta);
        let z = -self.rf * sin(theta);
        Pose::new(0.0, y, z).rotate_z(arm.azimuth())
    }
}

/// Actuator-space state: one angle per arm, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub const fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        JointAngles {
            theta1,
            theta2,
            theta3,
        }
    }

    pub fn from_array(theta: [f64; 3]) -> Self {
        JointAngles::new(theta[0], theta[1], theta[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn get(&self, arm: Arm) -> f64 {
        self.to_array()[arm.slot()]
    }

    /// Largest absolute per-joint difference.
    pub fn max_abs_diff(&self, other: &JointAngles) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Cartesian position of the effector centre, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Pose { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Pose) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Pose) -> Pose {
        Pose::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (*self - *other).norm()
    }

    /// Chebyshev distance, the `|·|∞` norm of the difference.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        let d = *self - *other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    /// Rotation about the z axis by `angle` radians (counter-clockwise seen from above).
    pub fn rotate_z(&self, angle: f64) -> Pose {
        let (s, c) = (sin(angle), cos(angle));
        Pose::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Pose {
    type Output = Pose;
    fn add(self, rhs: Pose) -> Pose {
        Pose::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Pose {
    type Output = Pose;
    fn sub(self, rhs: Pose) -> Pose {
        Pose::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Pose {
    type Output = Pose;
    fn mul(self, rhs: f64) -> Pose {
        Pose::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Solution of a single arm: its angle and the knee position in the arm's own YZ plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSolution {
    pub arm: Arm,
    pub theta: f64,
    /// `(y, z)` of the knee in the arm's rotated frame.
    pub knee: (f64, f64),
}

/// Angle of one arm for the given effector pose.
///
/// The pose is rotated into the arm's frame, where the upper arm sweeps a circle about the
/// base pivot `F = (-a, 0)` in the YZ plane. The forearm sphere about the effector joint
/// cuts that plane in a second circle; of their two intersections the one with the smaller
/// y (outward knee) is kept.
pub fn solve_arm_angle(
    geometry: &RobotGeometry,
    pose: &Pose,
    arm: Arm,
) -> Result<ArmSolution, KinematicsError> {
    if !pose.is_finite() {
        return Err(KinematicsError::NonFinitePose);
    }
    let unreachable = KinematicsError::Unreachable { arm };
    let local = pose.rotate_z(-arm.azimuth());
    let a = geometry.base_offset();
    let rf = geometry.rf;
    let re = geometry.re;

    // Section of the forearm sphere by the arm plane.
    let mut r2_sq = re * re - local.x * local.x;
    if r2_sq < 0.0 {
        if r2_sq < -TANGENCY_TOLERANCE * re * re {
            return Err(unreachable);
        }
        r2_sq = 0.0;
    }
    let center = (local.y - geometry.effector_offset(), local.z);

    let dy = center.0 + a;
    let dz = center.1;
    let d = sqrt(dy * dy + dz * dz);
    if d == 0.0 {
        return Err(unreachable);
    }
    let along = (rf * rf - r2_sq + d * d) / (2.0 * d);
    let mut h_sq = rf * rf - along * along;
    if h_sq < 0.0 {
        if h_sq < -TANGENCY_TOLERANCE * re * re {
            return Err(unreachable);
        }
        h_sq = 0.0;
    }
    let h = sqrt(h_sq);
    let (uy, uz) = (dy / d, dz / d);
    let base = (-a + along * uy, along * uz);
    let p1 = (base.0 - h * uz, base.1 + h * uy);
    let p2 = (base.0 + h * uz, base.1 - h * uy);
    let knee = if p1.0 <= p2.0 { p1 } else { p2 };

    let theta = atan2(-knee.1, -(knee.0 + a));
    Ok(ArmSolution { arm, theta, knee })
}

/// Joint angles that place the effector at `pose`.
///
/// Fails with the first arm that cannot reach or whose angle leaves the canonical range, or
/// with [`KinematicsError::FoldedAssembly`]
/// when every arm reaches but the effector would sit on the upper side of the knee plane,
/// an assembly this machine never uses and forward kinematics never returns. Poses at or
/// above the base plane are rejected up front.
pub fn inverse_kinematics(
    geometry: &RobotGeometry,
    pose: &Pose,
) -> Result<JointAngles, KinematicsError> {
    if pose.is_finite() && pose.z >= 0.0 {
        return Err(KinematicsError::AboveBase);
    }
    let mut theta = [0.0; 3];
    for arm in Arm::ALL {
        let t = solve_arm_angle(geometry, pose, arm)?.theta;
        if !in_canonical_range(t) {
            return Err(KinematicsError::JointOutOfRange { arm, theta: t });
        }
        theta[arm.slot()] = t;
    }
    let joints = JointAngles::from_array(theta);

    let [c1, c2, c3] = Arm::ALL.map(|arm| geometry.shifted_knee(arm, theta[arm.slot()]));
    let normal = (c2 - c1).cross(&(c3 - c1));
    let normal_len = normal.norm();
    if normal.z == 0.0 || normal_len == 0.0 {
        return Err(KinematicsError::Singular);
    }
    // Height of the pose above the knee plane, measured along its upward normal.
    let height = (*pose - c1).dot(&normal) / normal_len * normal.z.signum();
    if height > TANGENCY_TOLERANCE * geometry.re {
        return Err(KinematicsError::FoldedAssembly);
    }
    Ok(joints)
}

/// Joint angles are meaningful in `(-π/2, π)`.
pub fn in_canonical_range(theta: f64) -> bool {
    theta.is_finite() && theta > -PI / 2.0 && theta < PI
}

/// Effector pose for the given joint angles: the lower intersection point of the three
/// forearm spheres about the shifted knees.
pub fn forward_kinematics(
    geometry: &RobotGeometry,
    joints: &JointAngles,
) -> Result<Pose, KinematicsError> {
    for arm in Arm::ALL {
        let theta = joints.get(arm);
        if !in_canonical_range(theta) {
            return Err(KinematicsError::JointOutOfRange { arm, theta });
        }
    }
    let [c1, c2, c3] = Arm::ALL.map(|arm| geometry.shifted_knee(arm, joints.get(arm)));
    let re = geometry.re;

    // Relative to c1, the radical planes are n·q = |n|²/2.
    let n1 = c2 - c1;
    let n2 = c3 - c1;
    let dir = n1.cross(&n2);
    let dir_norm = dir.norm();
    if dir_norm <= SINGULARITY_TOLERANCE * n1.norm() * n2.norm() {
        return Err(KinematicsError::Singular);
    }
    let q0 = (n2.cross(&dir) * (0.5 * n1.dot(&n1)) + dir.cross(&n1) * (0.5 * n2.dot(&n2)))
        * (1.0 / (dir_norm * dir_norm));
    let u = dir * (1.0 / dir_norm);

    let half_b = q0.dot(&u);
    let mut disc = half_b * half_b - (q0.dot(&q0) - re * re);
    if disc < 0.0 {
        if disc < -TANGENCY_TOLERANCE * re * re {
            return Err(KinematicsError::NoSolution);
        }
        disc = 0.0;
    }
    let root = sqrt(disc);
    let t = if u.z >= 0.0 {
        -half_b - root
    } else {
        -half_b + root
    };
    let pose = c1 + q0 + u * t;
    if pose.z >= 0.0 {
        return Err(KinematicsError::NoSolution);
    }
    Ok(pose)
}

/// Whether inverse kinematics succeeds at `pose`.
pub fn is_reachable(geometry: &RobotGeometry, pose: &Pose) -> bool {
    inverse_kinematics(geometry, pose).is_ok()
}

/// Signed residuals `|E - J'_i| - re` of a pose against the three forearm spheres.
pub fn sphere_residuals(geometry: &RobotGeometry, joints: &JointAngles, pose: &Pose) -> [f64; 3] {
    Arm::ALL.map(|arm| pose.distance(&geometry.shifted_knee(arm, joints.get(arm))) - geometry.re)
}
