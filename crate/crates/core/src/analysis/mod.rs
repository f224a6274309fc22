//! Executable error theory: local and global order ladders, the
//! comparison-function mechanism, Gronwall separation bounds, and the fan
//! decomposition of the global error.

mod comparison;
mod fan;
mod gronwall;
mod mechanism;
mod tables;

pub use comparison::{
    ball_samples, comparison_family, max_p_alpha, p_alpha, ComparisonFamily, CUTOFF_SMOOTHNESS,
    LIPSCHITZ_INFLATION,
};
pub use fan::{
    growth_factor, windermere_decomposition, FanReport, FanStep, CLOSING_SLACK, TRANSPORT_SLACK,
    TRIANGLE_SLACK,
};
pub use gronwall::{gronwall_check, gronwall_constant, GronwallCheck, GronwallReport, GRONWALL_INFLATION};
pub use mechanism::{
    comparability, mechanism_ladder, mechanism_check, ComparabilityReport, ComparabilityRow,
    MechanismLadder, MechanismReport, MechanismSample, INVARIANCE_TOL, ROUNDING_SLACK, MECHANISM_GRID, SPREAD_LIMIT,
};
pub use tables::{
    convergence_slope, dyadic_steps, fit_slope, global_error, global_error_table, local_error_table,
    local_errors, Column, ErrorRow, ErrorTable, SlopeReport, FP_FLOOR, MIN_FIT_ROWS,
};
