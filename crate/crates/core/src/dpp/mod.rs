//! The orthogonal polynomial ensemble as a determinantal point process:
//! an independent sampler, joint intensities over cells, the gauge identity
//! between the two limiting kernels, and kernel convergence tables.

mod cells;
mod convergence;
mod gauge;
mod intensities;
mod sampler;

pub use cells::{Cell, CellPartition, Ring};
pub use convergence::{GRID_RADIUS_LIMIT, convergence_profile, default_grid, write_convergence_csv, ConvergenceRow};
pub use gauge::{gauge_identity_check, random_tuple, GaugeCheck, MAX_GAUGE_POINTS};
pub use intensities::{
    cell_moments, expected_cell_counts, verify_intensities, CellMoments, CellStat, CorrelationReport, PairStat,
    MIN_CONFIGURATIONS,
};
pub use sampler::{sample_projection_dpp, sample_projection_ensemble, ProjectionDpp};
