//! Config-level entry points for the assumption report and mobility summaries.

use super::config::RunConfig;
use crate::assumptions::{
    check_a1, check_a2_a3, check_prop1, check_theorem1, AssumptionReport, LimitRun, SampleBox, Sampling,
};
use crate::mobility::{min_eigenvalue_scaling, MobilityModel, PairSpectrum};
use crate::smoluchowski::SmoluchowskiSolver;
use crate::{Result, UniformGrid};

/// Limit-run checkpoints used by the boundary-zone proxy.
const A3_CHECKPOINTS: usize = 20;

/// All sampled checks on the simulation box `[-L_x, L_x]ⁿ`. The density
/// checks need a one-dimensional grid and are skipped otherwise.
pub fn check_assumptions(cfg: &RunConfig) -> Result<AssumptionReport> {
    let sampling = Sampling::new(SampleBox::cube(cfg.dimension, cfg.grid.lx), cfg.assumption_samples, cfg.seed);
    let mut report = check_theorem1(&cfg.mobility, &cfg.potential, &sampling)
        .merge(check_a1(&cfg.mobility, &cfg.potential, &sampling))
        .merge(check_prop1(&cfg.mobility, &cfg.potential, &sampling, cfg.grid.lv));
    if cfg.dimension == 1 {
        let grid = UniformGrid::symmetric(cfg.grid.lx, cfg.grid.nx);
        let rho0 = cfg.initial_density(grid)?;
        let run = SmoluchowskiSolver::new(grid, &cfg.mobility, &cfg.potential).ok();
        report = report.merge(check_a2_a3(
            &rho0,
            &cfg.potential,
            cfg.t_final,
            run.as_ref().map(|solver| LimitRun { solver, dt: cfg.smoluchowski_dt, checkpoints: A3_CHECKPOINTS }),
        ));
    }
    Ok(report)
}

/// Two-sphere RPY spectra at the configured centre distances. Non-hydrodynamic
/// models use unit radius and viscosity.
pub fn mobility_info(cfg: &RunConfig) -> Result<Vec<PairSpectrum>> {
    let (radius, viscosity) = match cfg.mobility {
        MobilityModel::Oseen { radius, viscosity } | MobilityModel::Rpy { radius, viscosity } => (radius, viscosity),
        _ => (1.0, 1.0),
    };
    min_eigenvalue_scaling(radius, viscosity, &cfg.mobility_gaps)
}
