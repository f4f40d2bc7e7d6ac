//! Discretised reachable workspace and coverage of prescribed point sets.
//!
//! A [`WorkspaceGrid`] stores one flag per cell, set when the cell centre passes inverse
//! kinematics. Cells are laid out z-major: `index = (iz * ny + iy) * nx + ix`.

use alloc::vec::Vec;

use libm::ceil;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::kinematics::{is_reachable, Pose, RobotGeometry};

/// Upper bound on the number of cells a grid may hold.
pub const MAX_CELLS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum WorkspaceError {
    #[error("grid bounds on axis {axis} must satisfy finite min < max, got [{min}, {max}]")]
    InvalidBounds { axis: char, min: f64, max: f64 },
    #[error("grid resolution must be finite and > 0, got {0}")]
    InvalidResolution(f64),
    #[error("grid would hold {cells} cells, over the budget of {MAX_CELLS}")]
    CellBudgetExceeded { cells: u64 },
    #[error("occupancy has {actual} cells but the grid spec needs {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("prescribed workspace is empty")]
    EmptyPrescribed,
    #[error("prescribed point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
}

/// Axis-aligned box and cell edge of a workspace grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct GridSpec {
    min: [f64; 3],
    max: [f64; 3],
    resolution: f64,
    dims: [usize; 3],
}

impl GridSpec {
    pub fn new(min: [f64; 3], max: [f64; 3], resolution: f64) -> Result<Self, WorkspaceError> {
        for (axis, (lo, hi)) in ['x', 'y', 'z'].into_iter().zip(min.into_iter().zip(max)) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(WorkspaceError::InvalidBounds {
                    axis,
                    min: lo,
                    max: hi,
                });
            }
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(WorkspaceError::InvalidResolution(resolution));
        }
        let mut dims = [0usize; 3];
        let mut cells = 1u64;
        for k in 0..3 {
            let q = (max[k] - min[k]) / resolution;
            // Absorb rounding so that an exact multiple of the resolution is not padded.
            let n = ceil(q - 1e-9 * q.max(1.0)).max(1.0);
            if n > MAX_CELLS as f64 {
                return Err(WorkspaceError::CellBudgetExceeded { cells: u64::MAX });
            }
            dims[k] = n as usize;
            cells = cells.saturating_mul(n as u64);
        }
        if cells > MAX_CELLS {
            return Err(WorkspaceError::CellBudgetExceeded { cells });
        }
        Ok(GridSpec {
            min,
            max,
            resolution,
            dims,
        })
    }

    /// Box guaranteed to contain the whole workspace of `geometry`: horizontal half-width
    /// `a + rf + re`, z from `-(rf + re)` up to the base plane.
    pub fn enclosing(geometry: &RobotGeometry, resolution: f64) -> Result<Self, WorkspaceError> {
        let r = geometry.base_offset() + geometry.rf() + geometry.re();
        let depth = geometry.rf() + geometry.re();
        GridSpec::new([-r, -r, -depth], [r, r, 0.0], resolution)
    }

    pub fn min(&self) -> [f64; 3] {
        self.min
    }

    pub fn max(&self) -> [f64; 3] {
        self.max
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Cell counts `[nx, ny, nz]`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims[1] + iy) * self.dims[0] + ix
    }

    /// Inverse of [`GridSpec::index`].
    pub fn cell_of(&self, index: usize) -> [usize; 3] {
        let ix = index % self.dims[0];
        let rest = index / self.dims[0];
        [ix, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Pose {
        let c = |k: usize, i: usize| self.min[k] + (i as f64 + 0.5) * self.resolution;
        Pose::new(c(0, ix), c(1, iy), c(2, iz))
    }

    pub fn center_of(&self, index: usize) -> Pose {
        let [ix, iy, iz] = self.cell_of(index);
        self.cell_center(ix, iy, iz)
    }
}

/// Occupancy lattice over a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceGrid {
    spec: GridSpec,
    occupancy: Vec<bool>,
}

impl WorkspaceGrid {
    /// Wraps precomputed occupancy flags, which must be in the documented cell order.
    pub fn from_occupancy(spec: GridSpec, occupancy: Vec<bool>) -> Result<Self, WorkspaceError> {
        if occupancy.len() != spec.cell_count() {
            return Err(WorkspaceError::DimensionMismatch {
                expected: spec.cell_count(),
                actual: occupancy.len(),
            });
        }
        Ok(WorkspaceGrid { spec, occupancy })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_occupied(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.occupancy[self.spec.index(ix, iy, iz)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Centres of all occupied cells in storage order.
    pub fn occupied_centers(&self) -> impl Iterator<Item = Pose> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| self.spec.center_of(i))
    }
}

/// Reachability of every cell centre, evaluated in storage order.
pub fn compute_workspace(
    geometry: &RobotGeometry,
    spec: &GridSpec,
) -> Result<WorkspaceGrid, WorkspaceError> {
    let occupancy = (0..spec.cell_count())
        .map(|i| is_reachable(geometry, &spec.center_of(i)))
        .collect();
    WorkspaceGrid::from_occupancy(*spec, occupancy)
}

/// Occupied cell count times the cell volume, mm³.
pub fn volume_estimate(grid: &WorkspaceGrid) -> f64 {
    let r = grid.spec.resolution;
    grid.occupied_count() as f64 * r * r * r
}

/// Target point set a synthesised robot has to reach.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(try_from = "Vec<Pose>", into = "Vec<Pose>")
)]
pub struct PrescribedWorkspace {
    points: Vec<Pose>,
}

impl PrescribedWorkspace {
    pub fn new(points: Vec<Pose>) -> Result<Self, WorkspaceError> {
        if points.is_empty() {
            return Err(WorkspaceError::EmptyPrescribed);
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(WorkspaceError::NonFinitePoint { index });
        }
        Ok(PrescribedWorkspace { points })
    }

    pub fn points(&self) -> &[Pose] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<Pose>> for PrescribedWorkspace {
    type Error = WorkspaceError;
    fn try_from(points: Vec<Pose>) -> Result<Self, Self::Error> {
        PrescribedWorkspace::new(points)
    }
}

impl From<PrescribedWorkspace> for Vec<Pose> {
    fn from(w: PrescribedWorkspace) -> Self {
        w.points
    }
}

/// Fraction of prescribed points the geometry reaches, tested exactly per point.
pub fn coverage(geometry: &RobotGeometry, prescribed: &PrescribedWorkspace) -> f64 {
    let hits = prescribed
        .points
        .iter()
        .filter(|p| is_reachable(geometry, p))
        .count();
    hits as f64 / prescribed.points.len() as f64
}

/// Draws `count` points uniformly from the interior of the workspace by rejection sampling
/// inside [`GridSpec::enclosing`]. A point counts as interior when it and its six axis
/// neighbours at distance `margin` are all reachable.
pub fn sample_interior(
    geometry: &RobotGeometry,
    count: usize,
    margin: f64,
    seed: u64,
) -> PrescribedWorkspace {
    let bounds = GridSpec::enclosing(geometry, 1.0e3).expect("enclosing box of a valid geometry");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let offsets = [
        Pose::new(0.0, 0.0, 0.0),
        Pose::new(margin, 0.0, 0.0),
        Pose::new(-margin, 0.0, 0.0),
        Pose::new(0.0, margin, 0.0),
        Pose::new(0.0, -margin, 0.0),
        Pose::new(0.0, 0.0, margin),
        Pose::new(0.0, 0.0, -margin),
    ];
    while points.len() < count {
        let p = Pose::new(
            rng.random_range(bounds.min[0]..bounds.max[0]),
            rng.random_range(bounds.min[1]..bounds.max[1]),
            rng.random_range(bounds.min[2]..bounds.max[2]),
        );
        if offsets.iter().all(|o| is_reachable(geometry, &(p + *o))) {
            points.push(p);
        }
    }
    PrescribedWorkspace { points }
}
