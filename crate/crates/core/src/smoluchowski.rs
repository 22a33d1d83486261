//! The limiting drift-diffusion equation `∂t ρ = ∂x(G⁻¹(∂x ρ + V' ρ))`.
//!
//! Fluxes use Scharfetter–Gummel exponential fitting, so `e^{-V}` is an exact
//! discrete stationary state; time stepping is implicit Euler, which keeps the
//! scheme positive and makes `h₀ = ρ e^{V}` obey a discrete maximum principle.

use crate::grid::UniformGrid;
use crate::linalg::{bernoulli, solve_tridiagonal};
use crate::mobility::MobilityModel;
use crate::potentials::PotentialModel;
use crate::{Error, Result};

/// Floor guarding `log ρ` in the stability fields.
pub const RHO_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub grid: UniformGrid,
    pub rho: Vec<f64>,
    pub time: f64,
}

impl DensityState {
    pub fn new(grid: UniformGrid, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.cells {
            return Err(Error::IncompatibleGrids(format!("{} density values for {} cells", rho.len(), grid.cells)));
        }
        if let Some((index, &value)) = rho.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity { index, value });
        }
        Ok(Self { grid, rho, time: 0.0 })
    }

    /// Density proportional to `shape(x_i)`, normalised to unit discrete mass.
    pub fn from_shape(grid: UniformGrid, shape: impl Fn(f64) -> f64) -> Result<Self> {
        let raw: Vec<f64> = (0..grid.cells).map(|i| shape(grid.center(i))).collect();
        let mass: f64 = raw.iter().sum::<f64>() * grid.spacing();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::ConfigInvalid(format!("initial density has mass {mass}")));
        }
        Self::new(grid, raw.into_iter().map(|r| r / mass).collect())
    }

    pub fn gaussian(grid: UniformGrid, mean: f64, variance: f64) -> Result<Self> {
        Self::from_shape(grid, |x| (-(x - mean) * (x - mean) / (2.0 * variance)).exp())
    }

    /// `e^{-V} / ∫ e^{-V}` on the grid.
    pub fn equilibrium(grid: UniformGrid, potential: &PotentialModel) -> Result<Self> {
        let vmin = (0..grid.cells).map(|i| potential.value_1d(grid.center(i))).fold(f64::INFINITY, f64::min);
        Self::from_shape(grid, |x| (-(potential.value_1d(x) - vmin)).exp())
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn moment(&self, k: i32) -> f64 {
        let h = self.grid.spacing();
        self.rho.iter().enumerate().map(|(i, r)| self.grid.center(i).powi(k) * r).sum::<f64>() * h
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        self.moment(2) - m1 * m1
    }

    /// `h₀ = ρ e^{V}` per cell.
    pub fn h0(&self, potential: &PotentialModel) -> Vec<f64> {
        self.rho.iter().enumerate().map(|(i, r)| r * potential.value_1d(self.grid.center(i)).exp()).collect()
    }
}

/// Precomputed implicit-Euler operator for one grid, mobility and potential.
#[derive(Debug, Clone)]
pub struct SmoluchowskiSolver {
    grid: UniformGrid,
    /// `g B(ΔV)/Δx²` on the face between cells `i` and `i + 1`.
    forward: Vec<f64>,
    /// `g B(−ΔV)/Δx²` on the same face.
    backward: Vec<f64>,
}

impl SmoluchowskiSolver {
    pub fn new(grid: UniformGrid, mobility: &MobilityModel, potential: &PotentialModel) -> Result<Self> {
        let h = grid.spacing();
        let n = grid.cells;
        let mut forward = Vec::with_capacity(n.saturating_sub(1));
        let mut backward = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n.saturating_sub(1) {
            let dv = potential.value_1d(grid.center(i + 1)) - potential.value_1d(grid.center(i));
            let g = 1.0 / mobility.scalar_friction(grid.face(i + 1))?;
            forward.push(g * bernoulli(dv) / (h * h));
            backward.push(g * bernoulli(-dv) / (h * h));
        }
        Ok(Self { grid, forward, backward })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn step(&self, state: &DensityState, dt: f64) -> Result<DensityState> {
        if !state.grid.same_as(&self.grid) {
            return Err(Error::IncompatibleGrids("density and solver grids differ".into()));
        }
        let n = self.grid.cells;
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        for f in 0..n.saturating_sub(1) {
            diag[f] += dt * self.forward[f];
            diag[f + 1] += dt * self.backward[f];
            upper[f] = -dt * self.backward[f];
            lower[f + 1] = -dt * self.forward[f];
        }
        let mut rho = state.rho.clone();
        let mut scratch = vec![0.0; n];
        solve_tridiagonal(&lower, &diag, &upper, &mut rho, &mut scratch)?;
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::LinearSolveFailure("non-finite density".into()));
        }
        // the M-matrix inverse is nonnegative; clip round-off below zero
        for r in rho.iter_mut() {
            if *r < 0.0 {
                *r = 0.0;
            }
        }
        Ok(DensityState { grid: self.grid, rho, time: state.time + dt })
    }

    /// Advances to `t_end` with steps no larger than `dt_max`.
    pub fn advance_to(&self, state: &DensityState, t_end: f64, dt_max: f64) -> Result<DensityState> {
        let span = t_end - state.time;
        if span <= 0.0 {
            return Ok(state.clone());
        }
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let start = state.time;
        let mut s = state.clone();
        for k in 0..steps {
            s = self.step(&s, dt)?;
            s.time = start + dt * (k + 1) as f64;
        }
        s.time = t_end;
        Ok(s)
    }

    /// States at each of `times` (sorted, `≥ state.time`).
    pub fn run(&self, state: &DensityState, times: &[f64], dt_max: f64) -> Result<Vec<DensityState>> {
        let mut out = Vec::with_capacity(times.len());
        let mut s = state.clone();
        for &t in times {
            s = self.advance_to(&s, t, dt_max)?;
            out.push(s.clone());
        }
        Ok(out)
    }
}

pub fn step_smoluchowski(
    state: &DensityState,
    mobility: &MobilityModel,
    potential: &PotentialModel,
    dt: f64,
) -> Result<DensityState> {
    SmoluchowskiSolver::new(state.grid, mobility, potential)?.step(state, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

/// Closed-form variance for `∂t ρ = g ∂x(∂x ρ + k x ρ)` from a centred Gaussian.
pub fn analytic_ou(sigma0_sq: f64, k: f64, g: f64, t: f64) -> GaussianParams {
    let eq = 1.0 / k;
    GaussianParams { mean: 0.0, variance: eq + (sigma0_sq - eq) * (-2.0 * g * k * t).exp() }
}

pub fn h0_extrema(state: &DensityState, potential: &PotentialModel) -> (f64, f64) {
    state.h0(potential).into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)))
}

/// Sup norms of `D = ∂x E`, `E = G⁻¹(∂x log ρ + V')` and `F = G⁻¹ ∂x ∂t log ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityFields {
    pub d_sup: f64,
    pub e_sup: f64,
    pub f_sup: f64,
    pub e: Vec<f64>,
    pub d: Vec<f64>,
}

/// Central difference with one-sided ends.
pub(crate) fn central_difference(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / h
            } else if i + 1 == n {
                (values[n - 1] - values[n - 2]) / h
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// `E = G⁻¹ ∂x log(ρ e^{V})` by central differences; `E` vanishes exactly on
/// the discrete equilibrium.
pub fn drift_field(state: &DensityState, mobility: &MobilityModel, potential: &PotentialModel) -> Result<Vec<f64>> {
    let min = state.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min >= RHO_FLOOR) {
        return Err(Error::DegenerateDensity { min, floor: RHO_FLOOR });
    }
    let g = &state.grid;
    let log_h: Vec<f64> = state.rho.iter().enumerate().map(|(i, r)| r.ln() + potential.value_1d(g.center(i))).collect();
    let grad = central_difference(&log_h, g.spacing());
    grad.iter().enumerate().map(|(i, d)| Ok(d / mobility.scalar_friction(g.center(i))?)).collect()
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn stability_fields(
    state: &DensityState,
    mobility: &MobilityModel,
    potential: &PotentialModel,
    dt_for_time_derivative: f64,
) -> Result<StabilityFields> {
    let e = drift_field(state, mobility, potential)?;
    let h = state.grid.spacing();
    let d = central_difference(&e, h);
    let next = step_smoluchowski(state, mobility, potential, dt_for_time_derivative)?;
    let min_next = next.rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_next >= RHO_FLOOR) {
        return Err(Error::DegenerateDensity { min: min_next, floor: RHO_FLOOR });
    }
    let dt_log: Vec<f64> =
        next.rho.iter().zip(&state.rho).map(|(a, b)| (a.ln() - b.ln()) / dt_for_time_derivative).collect();
    let grad = central_difference(&dt_log, h);
    let mut f_sup: f64 = 0.0;
    for (i, gr) in grad.iter().enumerate() {
        f_sup = f_sup.max((gr / mobility.scalar_friction(state.grid.center(i))?).abs());
    }
    Ok(StabilityFields { d_sup: sup(&d), e_sup: sup(&e), f_sup, e, d })
}
