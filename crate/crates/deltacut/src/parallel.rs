//! Rayon-backed versions of the two expensive loops. Results are identical to the
//! sequential core functions: each cell or genome is evaluated independently and collected
//! in input order.

use deltacut_core::workspace::GridSpec;
use deltacut_core::{
    fitness, is_reachable, run_ga_with, DesignBounds, DesignError, GaConfig, GaResult,
    PrescribedWorkspace, RobotGeometry, WorkspaceError, WorkspaceGrid,
};
use rayon::prelude::*;

pub fn compute_workspace(
    geometry: &RobotGeometry,
    spec: &GridSpec,
) -> Result<WorkspaceGrid, WorkspaceError> {
    let occupancy = (0..spec.cell_count())
        .into_par_iter()
        .map(|i| is_reachable(geometry, &spec.center_of(i)))
        .collect();
    WorkspaceGrid::from_occupancy(*spec, occupancy)
}

pub fn run_ga(
    bounds: &DesignBounds,
    prescribed: &PrescribedWorkspace,
    config: &GaConfig,
) -> Result<GaResult, DesignError> {
    run_ga_with(bounds, config, |genomes| {
        genomes
            .par_iter()
            .map(|g| fitness(g, prescribed, config.size_penalty_weight, bounds))
            .collect()
    })
}
