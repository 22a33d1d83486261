//! The ε-scaled kinetic Fokker–Planck problem, advanced either on a phase
//! grid (one space dimension) or by a particle ensemble (any dimension).

mod ensemble;
mod phase_grid;

pub use ensemble::{init_local_equilibrium_ensemble, particle_rng, step_sde, EnsembleState};
pub use phase_grid::{
    discrete_maxwellian, init_local_equilibrium, step_grid, CollisionScheme, PhaseGridSolver, PhaseGridState, CFL_LIMIT,
};

use crate::diagnostics::{diagnose, DiagnosticsRecord, RemainderAccumulator};
use crate::mobility::MobilityModel;
use crate::potentials::PotentialModel;
use crate::smoluchowski::{DensityState, SmoluchowskiSolver};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ScaledParams {
    pub epsilon: f64,
    pub t_final: f64,
    pub dt: f64,
    pub mobility: MobilityModel,
    pub potential: PotentialModel,
}

impl ScaledParams {
    pub fn new(
        epsilon: f64,
        t_final: f64,
        dt: f64,
        mobility: MobilityModel,
        potential: PotentialModel,
    ) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("t_final", t_final), ("dt", dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigInvalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { epsilon, t_final, dt, mobility, potential })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KineticState {
    Grid(PhaseGridState),
    Ensemble(EnsembleState),
}

impl KineticState {
    pub fn time(&self) -> f64 {
        match self {
            Self::Grid(g) => g.time,
            Self::Ensemble(e) => e.time,
        }
    }

    fn set_time(&mut self, t: f64) {
        match self {
            Self::Grid(g) => g.time = t,
            Self::Ensemble(e) => e.time = t,
        }
    }
}

/// The limiting density evolved alongside a kinetic run.
#[derive(Debug, Clone)]
pub struct LimitProblem {
    pub solver: SmoluchowskiSolver,
    pub initial: DensityState,
    /// Largest implicit step.
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct KineticSnapshot {
    pub time: f64,
    pub state: KineticState,
    pub diagnostics: DiagnosticsRecord,
}

enum Stepper {
    Grid(PhaseGridSolver),
    Ensemble,
}

impl Stepper {
    fn step(&self, state: &KineticState, p: &ScaledParams, dt: f64) -> Result<KineticState> {
        match (self, state) {
            (Stepper::Grid(s), KineticState::Grid(g)) => Ok(KineticState::Grid(s.step(g, dt)?)),
            (Stepper::Ensemble, KineticState::Ensemble(e)) => {
                let mut q = p.clone();
                q.dt = dt;
                Ok(KineticState::Ensemble(step_sde(e, &q)?))
            }
            _ => unreachable!("stepper built for the state kind"),
        }
    }
}

fn validate_times(times: &[f64], start: f64, t_final: f64) -> Result<()> {
    let mut last = start;
    for &t in times {
        if !(t >= last - 1e-12 && t <= t_final + 1e-12) {
            return Err(Error::ConfigInvalid(format!(
                "snapshot times must be sorted within [{start}, {t_final}], got {t}"
            )));
        }
        last = t;
    }
    Ok(())
}

/// Advances `f0` through the snapshot times, handing each snapshot to
/// `visit` as it is reached, and returns the last state.
///
/// Steps are shortened so that snapshots are hit exactly. With an empty
/// list the run goes to `t_final` and reports that state. When a limit
/// problem is given, grid runs also accumulate the remainder integrals
/// across snapshots.
pub fn run_kinetic_with(
    p: &ScaledParams,
    f0: KineticState,
    snapshot_times: &[f64],
    limit: Option<&LimitProblem>,
    mut visit: impl FnMut(&KineticSnapshot) -> Result<()>,
) -> Result<KineticState> {
    let start = f0.time();
    validate_times(snapshot_times, start, p.t_final)?;
    let final_only = [p.t_final];
    let times: &[f64] = if snapshot_times.is_empty() { &final_only } else { snapshot_times };
    let stepper = match &f0 {
        KineticState::Grid(g) => Stepper::Grid(PhaseGridSolver::for_params(g.x_grid, g.v_grid, p)?),
        KineticState::Ensemble(_) => Stepper::Ensemble,
    };
    let mut state = f0;
    let mut rho = limit.map(|l| l.initial.clone());
    let mut remainders = RemainderAccumulator::new();
    for &t in times {
        let span = t - state.time();
        if span > 1e-12 {
            let steps = (span / p.dt - 1e-9).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            let t0 = state.time();
            for k in 0..steps {
                state = stepper.step(&state, p, dt)?;
                state.set_time(t0 + dt * (k + 1) as f64);
            }
        }
        state.set_time(t);
        if let (Some(l), Some(r)) = (limit, rho.as_mut()) {
            *r = l.solver.advance_to(r, t, l.dt)?;
        }
        let mut record = diagnose(&state, p.epsilon, &p.mobility, &p.potential, rho.as_ref())?;
        if let (KineticState::Grid(g), Some(r)) = (&state, rho.as_ref()) {
            remainders.push(g, r, p.epsilon, &p.mobility, &p.potential)?;
            record.remainder_r1 = remainders.r1;
            record.remainder_r2 = remainders.r2;
            record.r2_bound = remainders.r2_bound(p.epsilon);
        }
        visit(&KineticSnapshot { time: t, state: state.clone(), diagnostics: record })?;
    }
    Ok(state)
}

/// Collects every snapshot of [`run_kinetic_with`].
pub fn run_kinetic(
    p: &ScaledParams,
    f0: KineticState,
    snapshot_times: &[f64],
    limit: Option<&LimitProblem>,
) -> Result<Vec<KineticSnapshot>> {
    let mut out = Vec::new();
    run_kinetic_with(p, f0, snapshot_times, limit, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}
