//! Shared fixtures and an independent reachability oracle.
//!
//! The oracle writes the forearm-sphere condition of each arm as
//! `A cos θ + B sin θ + C = 0`, solvable iff `C² ≤ A² + B²`, and takes the root with the
//! larger `cos θ` (outward knee). It shares no code with the crate's circle-intersection
//! solver. `oracle/freeze_fixtures.py` is the same construction in 40-digit arithmetic and
//! produced the frozen constants below.
#![allow(dead_code)]
// Constants keep every digit the oracle printed.
#![allow(clippy::excessive_precision)]

use deltacut_core::{Pose, RobotGeometry};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

pub fn g0() -> RobotGeometry {
    RobotGeometry::new(200.0 * SQRT_3, 60.0 * SQRT_3, 150.0, 350.0).unwrap()
}

/// Symmetric angle for the pose (0, 0, -350).
pub const THETA_350: f64 = 0.456_158_488_402_905_915_13;

/// Joint angles at (50, 0, -300).
pub const THETA_50_0_300: [f64; 3] = [
    0.201_095_030_324_855_709_12,
    -0.007_253_058_735_378_525_983_6,
    0.397_105_608_600_815_497_33,
];

/// Ten-point mixed set; the oracle marks points 0, 1, 4, 7 reachable.
pub const MIXED_POINTS: [[f64; 3]; 10] = [
    [0.0, 0.0, -272.2],
    [0.0, 0.0, -350.0],
    [0.0, 0.0, -1000.0],
    [0.0, 0.0, 100.0],
    [50.0, 0.0, -300.0],
    [0.0, -420.0, -200.0],
    [200.0, 150.0, -400.0],
    [-120.0, 80.0, -250.0],
    [300.0, 300.0, -300.0],
    [0.0, 0.0, -550.0],
];
pub const MIXED_REACHABLE: [bool; 10] = [
    true, true, false, false, true, false, false, true, false, false,
];

/// Occupied cells of the reference grid x, y in [-300, 300], z in [-550, -50], 10 mm.
pub const REFERENCE_GRID_OCCUPIED: usize = 83_276;

pub fn mixed_points() -> Vec<Pose> {
    MIXED_POINTS
        .iter()
        .map(|p| Pose::new(p[0], p[1], p[2]))
        .collect()
}

fn rotate(p: [f64; 3], phi: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

const AZIMUTHS: [f64; 3] = [
    0.0,
    2.0 * std::f64::consts::PI / 3.0,
    4.0 * std::f64::consts::PI / 3.0,
];

/// Outward-knee angle of one arm, `None` when the forearm sphere misses the knee circle.
pub fn oracle_arm_theta(g: &RobotGeometry, p: [f64; 3], arm: usize) -> Option<f64> {
    let [x, y, z] = rotate(p, -AZIMUTHS[arm]);
    let (a0, b0, rf, re) = (g.base_offset(), g.effector_offset(), g.rf(), g.re());
    let ye = y - b0;
    let a = 2.0 * rf * (a0 + ye);
    let b = 2.0 * rf * z;
    let c = x * x + (a0 + ye).powi(2) + z * z + rf * rf - re * re;
    let amp = a.hypot(b);
    if c.abs() > amp {
        return None;
    }
    let base = b.atan2(a);
    let delta = (-c / amp).clamp(-1.0, 1.0).acos();
    let (t1, t2) = (base + delta, base - delta);
    let t = if t1.cos() >= t2.cos() { t1 } else { t2 };
    Some(t.sin().atan2(t.cos()))
}

/// Full inverse kinematics by the oracle, including the joint range and the below-base and
/// below-knee-plane assembly conditions.
pub fn oracle_ik(g: &RobotGeometry, p: [f64; 3]) -> Option<[f64; 3]> {
    if p[2] >= 0.0 {
        return None;
    }
    let mut th = [0.0; 3];
    for (arm, t) in th.iter_mut().enumerate() {
        *t = oracle_arm_theta(g, p, arm)?;
        if !(*t > -std::f64::consts::FRAC_PI_2 && *t < std::f64::consts::PI) {
            return None;
        }
    }
    let c: Vec<[f64; 3]> = (0..3)
        .map(|i| {
            let y = -g.base_offset() - g.rf() * th[i].cos() + g.effector_offset();
            rotate([0.0, y, -g.rf() * th[i].sin()], AZIMUTHS[i])
        })
        .collect();
    let u = [c[1][0] - c[0][0], c[1][1] - c[0][1], c[1][2] - c[0][2]];
    let v = [c[2][0] - c[0][0], c[2][1] - c[0][1], c[2][2] - c[0][2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let h = ((p[0] - c[0][0]) * n[0] + (p[1] - c[0][1]) * n[1] + (p[2] - c[0][2]) * n[2])
        * n[2].signum();
    (h <= 0.0).then_some(th)
}

pub fn oracle_reachable(g: &RobotGeometry, p: &Pose) -> bool {
    oracle_ik(g, [p.x, p.y, p.z]).is_some()
}
