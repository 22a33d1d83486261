//! Functionals of kinetic states: hydrodynamic moments, entropies, free
//! energy and its dissipation, distances to local equilibrium, the flux and
//! pressure residuals of the diffusive closure, and the two remainder terms
//! of the relative-entropy estimate.

use crate::grid::UniformGrid;
use crate::kinetic::{discrete_maxwellian, EnsembleState, KineticState, PhaseGridState};
use crate::linalg::bernoulli;
use crate::mobility::MobilityModel;
use crate::potentials::{maxwellian, PotentialModel};
use crate::smoluchowski::{central_difference, drift_field, DensityState};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "t,epsilon,mass,free_energy,dissipation,weighted_l2,H_f_rhoM,H_rho_rho,\
L1_f_rhoM,L1_rho_rho,flux_residual,pressure_dev,r1,r2";

/// Slack added to the Csiszár–Kullback–Pinsker bound.
pub const CKP_SLACK: f64 = 1e-8;

/// Velocity moments per `x`-cell: density, flux and pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub rho: Vec<f64>,
    pub j: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn moments(state: &PhaseGridState) -> Moments {
    let nv = state.nv();
    let dv = state.v_grid.spacing();
    let v: Vec<f64> = state.v_grid.centers();
    let mut rho = Vec::with_capacity(state.nx());
    let mut j = Vec::with_capacity(state.nx());
    let mut p = Vec::with_capacity(state.nx());
    for row in state.f.chunks(nv) {
        let (mut r, mut jj, mut pp) = (0.0, 0.0, 0.0);
        for (f, vj) in row.iter().zip(&v) {
            r += f;
            jj += f * vj;
            pp += f * vj * vj;
        }
        rho.push(r * dv);
        j.push(jj * dv);
        p.push(pp * dv);
    }
    Moments { rho, j, p }
}

/// Binned ensemble moments as densities on `bins`; `counts` records the
/// number of particles per bin. Flux and pressure are masked (`NaN`) in
/// empty bins, where a per-bin average is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMoments {
    pub moments: Moments,
    pub counts: Vec<usize>,
    pub outside: usize,
}

pub fn ensemble_moments(state: &EnsembleState, bins: &UniformGrid) -> Result<EnsembleMoments> {
    if state.dim != 1 {
        return Err(Error::Unsupported("binned moments are one-dimensional".into()));
    }
    let n = bins.cells;
    let mut counts = vec![0usize; n];
    let mut j = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut outside = 0;
    for (x, v) in state.positions.iter().zip(&state.velocities) {
        match bins.locate(*x) {
            Some(i) => {
                counts[i] += 1;
                j[i] += v;
                p[i] += v * v;
            }
            None => outside += 1,
        }
    }
    let w = 1.0 / (state.len() as f64 * bins.spacing());
    let rho = counts.iter().map(|&c| c as f64 * w).collect();
    for i in 0..n {
        if counts[i] == 0 {
            j[i] = f64::NAN;
            p[i] = f64::NAN;
        } else {
            j[i] *= w;
            p[i] *= w;
        }
    }
    Ok(EnsembleMoments { moments: Moments { rho, j, p }, counts, outside })
}

pub fn kinetic_moments(state: &KineticState, bins: &UniformGrid) -> Result<Moments> {
    match state {
        KineticState::Grid(g) => Ok(moments(g)),
        KineticState::Ensemble(e) => Ok(ensemble_moments(e, bins)?.moments),
    }
}

/// Scharfetter–Gummel approximation of `∂v f + v f` on interior velocity faces.
fn collision_flux(row: &[f64], v_grid: &UniformGrid, out: &mut Vec<f64>) {
    let dv = v_grid.spacing();
    out.clear();
    for j in 0..row.len().saturating_sub(1) {
        let dphi = 0.5 * (v_grid.center(j + 1).powi(2) - v_grid.center(j).powi(2));
        out.push((bernoulli(-dphi) * row[j + 1] - bernoulli(dphi) * row[j]) / dv);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureDeviation {
    /// `∫ M v ∂v(f/M) dv` per cell.
    pub field: Vec<f64>,
    /// `Σ |field| Δx`.
    pub norm: f64,
}

/// `ℙ − ρ` through the identity `ℙ = ρ + ∫ M ∂v(f/M) v dv`.
pub fn pressure_deviation(state: &PhaseGridState) -> PressureDeviation {
    let dv = state.v_grid.spacing();
    let mut flux = Vec::new();
    let field: Vec<f64> = state
        .f
        .chunks(state.nv())
        .map(|row| {
            collision_flux(row, &state.v_grid, &mut flux);
            flux.iter().enumerate().map(|(j, fl)| state.v_grid.face(j + 1) * fl).sum::<f64>() * dv
        })
        .collect();
    let norm = field.iter().map(|x| x.abs()).sum::<f64>() * state.x_grid.spacing();
    PressureDeviation { field, norm }
}

pub fn pressure_deviation_of(state: &KineticState) -> Result<PressureDeviation> {
    match state {
        KineticState::Grid(g) => Ok(pressure_deviation(g)),
        KineticState::Ensemble(_) => Err(Error::GridOnly("pressure_deviation")),
    }
}

/// `ℙ − ρ` from the raw second moment; agrees with [`pressure_deviation`] to quadrature accuracy.
pub fn pressure_deviation_direct(state: &PhaseGridState) -> Vec<f64> {
    let m = moments(state);
    m.p.iter().zip(&m.rho).map(|(p, r)| p - r).collect()
}

/// Exponentially fitted `∂x ρ + V' ρ` on interior faces; exactly zero on `e^{-V}`.
fn drift_diffusion_faces(rho: &[f64], x_grid: &UniformGrid, potential: &PotentialModel) -> Vec<f64> {
    let dx = x_grid.spacing();
    (0..rho.len().saturating_sub(1))
        .map(|i| {
            let dv = potential.value_1d(x_grid.center(i + 1)) - potential.value_1d(x_grid.center(i));
            (bernoulli(-dv) * rho[i + 1] - bernoulli(dv) * rho[i]) / dx
        })
        .collect()
}

/// Cell values of `G⁻¹(∂x ρ + V' ρ)`, averaging the neighbouring faces.
pub fn closure_flux(
    rho: &[f64],
    x_grid: &UniformGrid,
    mobility: &MobilityModel,
    potential: &PotentialModel,
) -> Result<Vec<f64>> {
    let faces = drift_diffusion_faces(rho, x_grid, potential);
    let n = rho.len();
    (0..n)
        .map(|i| {
            let (mut s, mut k) = (0.0, 0.0);
            if i > 0 {
                s += faces[i - 1];
                k += 1.0;
            }
            if i + 1 < n {
                s += faces[i];
                k += 1.0;
            }
            let s = if k > 0.0 { s / k } else { 0.0 };
            Ok(s / mobility.scalar_friction(x_grid.center(i))?)
        })
        .collect()
}

/// `‖J/ε + G⁻¹(∂x ρ + V' ρ)‖_{L¹}`.
pub fn flux_residual(
    state: &PhaseGridState,
    epsilon: f64,
    mobility: &MobilityModel,
    potential: &PotentialModel,
) -> Result<f64> {
    let m = moments(state);
    let closure = closure_flux(&m.rho, &state.x_grid, mobility, potential)?;
    Ok(m.j.iter().zip(&closure).map(|(j, c)| (j / epsilon + c).abs()).sum::<f64>() * state.x_grid.spacing())
}

pub fn flux_residual_of(
    state: &KineticState,
    epsilon: f64,
    mobility: &MobilityModel,
    potential: &PotentialModel,
) -> Result<f64> {
    match state {
        KineticState::Grid(g) => flux_residual(g, epsilon, mobility, potential),
        KineticState::Ensemble(_) => Err(Error::GridOnly("flux_residual")),
    }
}

/// `Σ f log(f/g) · cell` with `0 log 0 = 0`; `+∞` where `g = 0 < f`.
pub fn relative_entropy(f: &[f64], g: &[f64], cell: f64) -> f64 {
    let mut h = 0.0;
    for (&a, &b) in f.iter().zip(g) {
        if a > 0.0 {
            if !(b > 0.0) {
                return f64::INFINITY;
            }
            h += a * (a / b).ln();
        }
    }
    h * cell
}

pub fn l1_distance(f: &[f64], g: &[f64], cell: f64) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell
}

/// `‖f − g‖₁ ≤ √(2 H(f|g))` up to [`CKP_SLACK`].
pub fn ckp_check(f: &[f64], g: &[f64], cell: f64) -> bool {
    let h = relative_entropy(f, g, cell);
    l1_distance(f, g, cell) <= (2.0 * h.max(0.0)).sqrt() + CKP_SLACK
}

/// `ρ(x) M(v)` on the phase grid of `like`.
pub fn local_gibbs(rho: &[f64], v_grid: &UniformGrid) -> Vec<f64> {
    let m = discrete_maxwellian(v_grid);
    let mut out = Vec::with_capacity(rho.len() * m.len());
    for r in rho {
        out.extend(m.iter().map(|mj| r * mj));
    }
    out
}

/// `∬ f (ln f + v²/2 + V)`.
pub fn free_energy(state: &PhaseGridState, potential: &PotentialModel) -> f64 {
    let nv = state.nv();
    let phi: Vec<f64> = (0..nv).map(|j| 0.5 * state.v_grid.center(j).powi(2)).collect();
    let mut e = 0.0;
    for (i, row) in state.f.chunks(nv).enumerate() {
        let v = potential.value_1d(state.x_grid.center(i));
        for (f, p) in row.iter().zip(&phi) {
            if *f > 0.0 {
                e += f * (f.ln() + p + v);
            }
        }
    }
    e * state.cell_area()
}

/// `(1/ε²) ∬ G |v√f + 2∂v√f|²`, discretised on velocity faces so that it
/// vanishes exactly on `ρ(x) M(v)`.
pub fn dissipation_rate(state: &PhaseGridState, mobility: &MobilityModel, epsilon: f64) -> Result<f64> {
    let nv = state.nv();
    let dv = state.v_grid.spacing();
    let weights: Vec<(f64, f64)> = (0..nv.saturating_sub(1))
        .map(|j| {
            let dphi = 0.5 * (state.v_grid.center(j + 1).powi(2) - state.v_grid.center(j).powi(2));
            (bernoulli(dphi), bernoulli(-dphi))
        })
        .collect();
    let mut total = 0.0;
    for (i, row) in state.f.chunks(nv).enumerate() {
        let g = mobility.scalar_friction(state.x_grid.center(i))?;
        let mut s = 0.0;
        for (j, (bp, bm)) in weights.iter().enumerate() {
            let d = (bm * row[j + 1]).sqrt() - (bp * row[j]).sqrt();
            s += 4.0 * d * d / (dv * dv);
        }
        total += g * s;
    }
    Ok(total * state.cell_area() / (epsilon * epsilon))
}

pub fn dissipation_rate_of(state: &KineticState, mobility: &MobilityModel, epsilon: f64) -> Result<f64> {
    match state {
        KineticState::Grid(g) => dissipation_rate(g, mobility, epsilon),
        KineticState::Ensemble(_) => Err(Error::GridOnly("dissipation_rate")),
    }
}

/// Discrete global equilibrium `e^{-V} M / Z` with unit mass on the grid.
pub fn global_equilibrium(state: &PhaseGridState, potential: &PotentialModel) -> Result<Vec<f64>> {
    let rho = DensityState::equilibrium(state.x_grid, potential)?;
    Ok(local_gibbs(&rho.rho, &state.v_grid))
}

/// `∬ (f/M_eq)² M_eq`.
pub fn weighted_l2(state: &PhaseGridState, potential: &PotentialModel) -> Result<f64> {
    let eq = global_equilibrium(state, potential)?;
    let mut s = 0.0;
    for (f, m) in state.f.iter().zip(&eq) {
        if *f > 0.0 {
            if !(*m > 0.0) {
                return Ok(f64::INFINITY);
            }
            s += f * f / m;
        }
    }
    Ok(s * state.cell_area())
}

/// One row of diagnostics. Quantities that need the limiting density are
/// `NaN` when none is supplied; ensemble rows are histogram estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub epsilon: f64,
    pub mass: f64,
    pub rho_field: Vec<f64>,
    pub j_field: Vec<f64>,
    pub p_field: Vec<f64>,
    pub free_energy: f64,
    pub dissipation_rate: f64,
    pub weighted_l2: f64,
    pub h_f_vs_rho_m: f64,
    pub h_rho_vs_rho_limit: f64,
    pub l1_f_vs_rho_m: f64,
    pub l1_rho_vs_rho_limit: f64,
    pub flux_residual: f64,
    pub pressure_deviation_norm: f64,
    pub remainder_r1: f64,
    pub remainder_r2: f64,
    /// Running Cauchy–Schwarz bound on `|∫ r₂|`; see [`RemainderAccumulator::r2_bound`].
    pub r2_bound: f64,
    /// `∬ |v|² f`.
    pub second_moment: f64,
    /// CKP held on every pair compared in this record.
    pub ckp_ok: bool,
    pub estimate: bool,
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        [
            self.time,
            self.epsilon,
            self.mass,
            self.free_energy,
            self.dissipation_rate,
            self.weighted_l2,
            self.h_f_vs_rho_m,
            self.h_rho_vs_rho_limit,
            self.l1_f_vs_rho_m,
            self.l1_rho_vs_rho_limit,
            self.flux_residual,
            self.pressure_deviation_norm,
            self.remainder_r1,
            self.remainder_r2,
        ]
        .iter()
        .map(|x| fmt(*x))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn diagnose_grid(
    state: &PhaseGridState,
    epsilon: f64,
    mobility: &MobilityModel,
    potential: &PotentialModel,
    limit: Option<&DensityState>,
) -> Result<DiagnosticsRecord> {
    let m = moments(state);
    let area = state.cell_area();
    let dx = state.x_grid.spacing();
    let local = local_gibbs(&m.rho, &state.v_grid);
    let mut ckp_ok = ckp_check(&state.f, &local, area);
    let (h_f, h_rho, l1_rho) = match limit {
        Some(l) => {
            if !l.grid.same_as(&state.x_grid) {
                return Err(Error::IncompatibleGrids("limit density and kinetic x-grid differ".into()));
            }
            let lim_local = local_gibbs(&l.rho, &state.v_grid);
            ckp_ok &= ckp_check(&state.f, &lim_local, area);
            ckp_ok &= ckp_check(&m.rho, &l.rho, dx);
            (
                relative_entropy(&state.f, &lim_local, area),
                relative_entropy(&m.rho, &l.rho, dx),
                l1_distance(&m.rho, &l.rho, dx),
            )
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(DiagnosticsRecord {
        time: state.time,
        epsilon,
        mass: m.rho.iter().sum::<f64>() * dx,
        free_energy: free_energy(state, potential),
        dissipation_rate: dissipation_rate(state, mobility, epsilon)?,
        weighted_l2: weighted_l2(state, potential)?,
        h_f_vs_rho_m: h_f,
        h_rho_vs_rho_limit: h_rho,
        l1_f_vs_rho_m: l1_distance(&state.f, &local, area),
        l1_rho_vs_rho_limit: l1_rho,
        flux_residual: flux_residual(state, epsilon, mobility, potential)?,
        pressure_deviation_norm: pressure_deviation(state).norm,
        remainder_r1: f64::NAN,
        remainder_r2: f64::NAN,
        r2_bound: f64::NAN,
        second_moment: state.second_moment(),
        ckp_ok,
        estimate: false,
        rho_field: m.rho,
        j_field: m.j,
        p_field: m.p,
    })
}

/// Scott's-rule bin width `3.49 σ M^{-1/3}`.
pub fn scott_bin_width(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    3.49 * var.sqrt() * n.powf(-1.0 / 3.0)
}

fn scott_grid(samples: &[f64]) -> UniformGrid {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = scott_bin_width(samples);
    if !(w > 0.0) || !(hi > lo) {
        return UniformGrid::new(lo - 0.5, lo + 0.5, 1);
    }
    let cells = ((hi - lo) / w).ceil().max(1.0) as usize;
    // widen slightly so the maximum falls inside the last bin
    UniformGrid::new(lo, lo + (cells as f64 + 1e-9) * w, cells)
}

/// Histogram estimates for a one-dimensional ensemble. Entropies and
/// distances use a Scott's-rule `(x, v)` histogram and are biased.
pub fn diagnose_ensemble(
    state: &EnsembleState,
    epsilon: f64,
    potential: &PotentialModel,
    limit: Option<&DensityState>,
) -> Result<DiagnosticsRecord> {
    if state.dim != 1 {
        return Err(Error::Unsupported("ensemble diagnostics are one-dimensional".into()));
    }
    let gx = scott_grid(&state.positions);
    let gv = scott_grid(&state.velocities);
    let (nx, nv) = (gx.cells, gv.cells);
    let area = gx.spacing() * gv.spacing();
    let m = state.len() as f64;
    let mut f = vec![0.0; nx * nv];
    for (x, v) in state.positions.iter().zip(&state.velocities) {
        let i = gx.locate(*x).unwrap_or(nx - 1);
        let j = gv.locate(*v).unwrap_or(nv - 1);
        f[i * nv + j] += 1.0 / (m * area);
    }
    let rho: Vec<f64> = f.chunks(nv).map(|r| r.iter().sum::<f64>() * gv.spacing()).collect();
    let mv: Vec<f64> = (0..nv).map(|j| maxwellian(&[gv.center(j)])).collect();
    let local: Vec<f64> = rho.iter().flat_map(|r| mv.iter().map(move |mj| r * mj)).collect();
    let mut ckp_ok = ckp_check(&f, &local, area);

    let mut energy = 0.0;
    for p in &f {
        if *p > 0.0 {
            energy += p * p.ln() * area;
        }
    }
    energy += state.mean_of(|x, v| 0.5 * v[0] * v[0] + potential.value(x));

    let eq_rho = DensityState::equilibrium(gx, potential)?;
    let mut wl2 = 0.0;
    for i in 0..nx {
        for j in 0..nv {
            let p = f[i * nv + j];
            let q = eq_rho.rho[i] * mv[j];
            if p > 0.0 {
                wl2 += if q > 0.0 { p * p / q * area } else { f64::INFINITY };
            }
        }
    }

    let (h_f, h_rho, l1_rho) = match limit {
        Some(l) => {
            let lim: Vec<f64> = (0..nx).map(|i| l.grid.locate(gx.center(i)).map(|k| l.rho[k]).unwrap_or(0.0)).collect();
            let lim_local: Vec<f64> = lim.iter().flat_map(|r| mv.iter().map(move |mj| r * mj)).collect();
            ckp_ok &= ckp_check(&f, &lim_local, area);
            (
                relative_entropy(&f, &lim_local, area),
                relative_entropy(&rho, &lim, gx.spacing()),
                l1_distance(&rho, &lim, gx.spacing()),
            )
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let binned = ensemble_moments(state, &gx)?;
    Ok(DiagnosticsRecord {
        time: state.time,
        epsilon,
        mass: 1.0,
        rho_field: binned.moments.rho,
        j_field: binned.moments.j,
        p_field: binned.moments.p,
        free_energy: energy,
        dissipation_rate: f64::NAN,
        weighted_l2: wl2,
        h_f_vs_rho_m: h_f,
        h_rho_vs_rho_limit: h_rho,
        l1_f_vs_rho_m: l1_distance(&f, &local, area),
        l1_rho_vs_rho_limit: l1_rho,
        flux_residual: f64::NAN,
        pressure_deviation_norm: f64::NAN,
        remainder_r1: f64::NAN,
        remainder_r2: f64::NAN,
        r2_bound: f64::NAN,
        second_moment: state.mean_of(|_, v| v.iter().map(|x| x * x).sum()),
        ckp_ok,
        estimate: true,
    })
}

pub fn diagnose(
    state: &KineticState,
    epsilon: f64,
    mobility: &MobilityModel,
    potential: &PotentialModel,
    limit: Option<&DensityState>,
) -> Result<DiagnosticsRecord> {
    match state {
        KineticState::Grid(g) => diagnose_grid(g, epsilon, mobility, potential, limit),
        KineticState::Ensemble(e) => diagnose_ensemble(e, epsilon, potential, limit),
    }
}

#[derive(Debug, Clone)]
struct RemainderSample {
    time: f64,
    j: Vec<f64>,
    e: Vec<f64>,
    pressure_dot_d: f64,
    dissipation: f64,
    second_moment: f64,
}

/// Running time integrals of the two remainder terms,
/// `r₁ = −ε ∬ ∂t J · E` and `r₂ = ∬ (ℙ − ρ) : D`, with
/// `E = G⁻¹ ∂x log(ρ e^V)` and `D = ∂x E` taken from the limiting density.
///
/// `∂t J` enters only through increments between consecutive samples, so
/// the initial layer of `J` is captured however coarse the sampling.
#[derive(Debug, Clone, Default)]
pub struct RemainderAccumulator {
    prev: Option<RemainderSample>,
    pub r1: f64,
    pub r2: f64,
    pub dissipation_integral: f64,
    pub second_moment_integral: f64,
    pub d_sup: f64,
}

impl RemainderAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        state: &PhaseGridState,
        limit: &DensityState,
        epsilon: f64,
        mobility: &MobilityModel,
        potential: &PotentialModel,
    ) -> Result<()> {
        if !limit.grid.same_as(&state.x_grid) {
            return Err(Error::IncompatibleGrids("limit density and kinetic x-grid differ".into()));
        }
        let dx = state.x_grid.spacing();
        let e = drift_field(limit, mobility, potential)?;
        let d = central_difference(&e, dx);
        let pd = pressure_deviation(state);
        let sample = RemainderSample {
            time: state.time,
            j: moments(state).j,
            pressure_dot_d: pd.field.iter().zip(&d).map(|(p, d)| p * d).sum::<f64>() * dx,
            dissipation: dissipation_rate(state, mobility, epsilon)?,
            second_moment: state.second_moment(),
            e,
        };
        self.d_sup = d.iter().fold(self.d_sup, |m, x| m.max(x.abs()));
        if let Some(prev) = &self.prev {
            let dt = sample.time - prev.time;
            let mut inc = 0.0;
            for i in 0..sample.j.len() {
                inc += (sample.j[i] - prev.j[i]) * 0.5 * (sample.e[i] + prev.e[i]);
            }
            self.r1 -= epsilon * inc * dx;
            self.r2 += 0.5 * dt * (sample.pressure_dot_d + prev.pressure_dot_d);
            self.dissipation_integral += 0.5 * dt * (sample.dissipation + prev.dissipation);
            self.second_moment_integral += 0.5 * dt * (sample.second_moment + prev.second_moment);
        }
        self.prev = Some(sample);
        Ok(())
    }

    /// Cauchy–Schwarz bound `ε ‖D‖∞ (∫ dissipation)^{1/2} (∫∬|v|² f)^{1/2}` on `|∫ r₂|`.
    pub fn r2_bound(&self, epsilon: f64) -> f64 {
        epsilon * self.d_sup * self.dissipation_integral.sqrt() * self.second_moment_integral.sqrt()
    }
}

/// `(∫ r₁, ∫ r₂)` over a stored trajectory and the matching limit densities.
pub fn remainder_terms(
    trajectory: &[PhaseGridState],
    limit: &[DensityState],
    mobility: &MobilityModel,
    potential: &PotentialModel,
    epsilon: f64,
) -> Result<(f64, f64)> {
    if trajectory.len() != limit.len() {
        return Err(Error::IncompatibleGrids(format!(
            "{} kinetic snapshots but {} limit snapshots",
            trajectory.len(),
            limit.len()
        )));
    }
    let mut acc = RemainderAccumulator::new();
    for (f, r) in trajectory.iter().zip(limit) {
        acc.push(f, r, epsilon, mobility, potential)?;
    }
    Ok((acc.r1, acc.r2))
}
