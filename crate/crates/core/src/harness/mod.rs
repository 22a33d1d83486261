//! Configuration, ε-sweeps, convergence fitting and CSV output.

mod checks;
mod config;
mod output;
mod sweep;

pub use checks::{check_assumptions, mobility_info};
pub use config::{ConfigMap, GridSpec, InitialSpec, RunConfig, SolverKind};
pub use output::{
    epsilon_dir, write_density_dump, write_diagnostics_csv, write_ensemble_dump, write_limit_series,
    write_mobility_csv, write_phase_dump, write_sweep, SLOPES_HEADER, SUMMARY_HEADER,
};
pub use sweep::{
    fit_order, run_epsilon, run_limit, run_sweep, EpsilonRun, EpsilonSummary, LimitSeries, OrderFit, SlopeTarget,
    SweepReport, MASS_TOL, MAX_FIT_RESIDUAL, MAX_PRINCIPLE_TOL, MIN_SLOPE,
};
