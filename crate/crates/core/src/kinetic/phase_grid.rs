//! Deterministic finite-volume solver on the one-dimensional phase space.
//!
//! Transport is written for `h = f/m` with `m = e^{-V(x)} e^{-v²/2}` and
//! upwinded at cell faces, with the discrete speeds chosen so that `m` is an
//! exact stationary state. Each explicit transport step is then a Markov
//! matrix with invariant vector `m`, and the relative entropy to `m` cannot
//! grow. Collisions are an implicit Chang–Cooper/Scharfetter–Gummel step per
//! `x`-slice, which keeps the same invariant vector. By default that step is
//! integrated exactly through the symmetrised eigen-decomposition of the
//! velocity generator; implicit Euler is available as an alternative.

use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::ScaledParams;
use crate::grid::UniformGrid;
use crate::linalg::{bernoulli, solve_tridiagonal};
use crate::mobility::MobilityModel;
use crate::potentials::PotentialModel;
use crate::smoluchowski::DensityState;
use crate::{Error, Result};

/// Largest accepted value of `(dt/2) · max outflow rate`.
pub const CFL_LIMIT: f64 = 1.0;

/// Columns per block in the dense collision update; fixed so that results
/// do not depend on the thread count.
const COLUMN_BLOCK: usize = 32;

/// Time integration of the velocity collision operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionScheme {
    /// `exp(dt G/ε² L)` of the Chang–Cooper generator `L`.
    #[default]
    Exact,
    ImplicitEuler,
}

/// Phase-space density as cell averages, stored `x`-major: `f[i * nv + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridState {
    pub x_grid: UniformGrid,
    pub v_grid: UniformGrid,
    pub f: Vec<f64>,
    pub time: f64,
}

/// Normalised discrete Maxwellian on `v_grid`: `Σ M_j Δv = 1`.
pub fn discrete_maxwellian(v_grid: &UniformGrid) -> Vec<f64> {
    let raw: Vec<f64> = (0..v_grid.cells).map(|j| (-0.5 * v_grid.center(j).powi(2)).exp()).collect();
    let s: f64 = raw.iter().sum::<f64>() * v_grid.spacing();
    raw.into_iter().map(|m| m / s).collect()
}

impl PhaseGridState {
    pub fn new(x_grid: UniformGrid, v_grid: UniformGrid, f: Vec<f64>) -> Result<Self> {
        if f.len() != x_grid.cells * v_grid.cells {
            return Err(Error::IncompatibleGrids(format!(
                "{} values for a {}x{} phase grid",
                f.len(),
                x_grid.cells,
                v_grid.cells
            )));
        }
        if let Some((k, &value)) = f.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeCell { ix: k / v_grid.cells, iv: k % v_grid.cells, value });
        }
        Ok(Self { x_grid, v_grid, f, time: 0.0 })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.x_grid.cells
    }

    #[inline]
    pub fn nv(&self) -> usize {
        self.v_grid.cells
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.v_grid.cells + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.x_grid.spacing() * self.v_grid.spacing()
    }

    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.cell_area()
    }

    /// Velocity slice at `x`-cell `i`.
    pub fn slice(&self, i: usize) -> &[f64] {
        let nv = self.nv();
        &self.f[i * nv..(i + 1) * nv]
    }

    /// `∬ |v|² f`.
    pub fn second_moment(&self) -> f64 {
        let nv = self.nv();
        let v2: Vec<f64> = (0..nv).map(|j| self.v_grid.center(j).powi(2)).collect();
        self.f.chunks(nv).map(|row| row.iter().zip(&v2).map(|(f, w)| f * w).sum::<f64>()).sum::<f64>()
            * self.cell_area()
    }

    /// `f = ρ(x) M(v)` with the discrete Maxwellian.
    pub fn local_equilibrium(rho: &DensityState, v_grid: UniformGrid) -> Result<Self> {
        if let Some((index, &value)) = rho.rho.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity { index, value });
        }
        let m = discrete_maxwellian(&v_grid);
        let mut f = Vec::with_capacity(rho.grid.cells * v_grid.cells);
        for r in &rho.rho {
            f.extend(m.iter().map(|mj| r * mj));
        }
        let mut s = Self::new(rho.grid, v_grid, f)?;
        s.time = rho.time;
        Ok(s)
    }

    /// The global equilibrium `e^{-V} M / Z` on the grid, with unit mass.
    pub fn global_equilibrium(x_grid: UniformGrid, v_grid: UniformGrid, potential: &PotentialModel) -> Result<Self> {
        Self::local_equilibrium(&DensityState::equilibrium(x_grid, potential)?, v_grid)
    }
}

pub fn init_local_equilibrium(rho0: &DensityState, v_grid: UniformGrid) -> Result<PhaseGridState> {
    PhaseGridState::local_equilibrium(rho0, v_grid)
}

/// Precomputed coefficients for one `(grid, ε, G, V)` combination.
#[derive(Debug, Clone)]
pub struct PhaseGridSolver {
    x_grid: UniformGrid,
    v_grid: UniformGrid,
    epsilon: f64,
    /// `e^{V_i − V(face)}` towards the right/left neighbour, 0 at walls.
    a_right: Vec<f64>,
    a_left: Vec<f64>,
    /// `e^{φ_j − φ(face)}` with `φ = v²/2`, 0 at walls.
    b_up: Vec<f64>,
    b_down: Vec<f64>,
    /// Discrete velocity `ṽ_j`.
    speed_v: Vec<f64>,
    /// Discrete force `−Ṽ'_i`.
    force: Vec<f64>,
    /// `B(±(φ_{j+1} − φ_j))` on interior velocity faces.
    sg_forward: Vec<f64>,
    sg_backward: Vec<f64>,
    friction: Vec<f64>,
    max_rate: f64,
    scheme: CollisionScheme,
    spectral: Arc<CollisionSpectra>,
    propagators: Arc<Mutex<Option<(f64, Arc<Vec<DMatrix<f64>>>)>>>,
}

/// Eigen-decompositions of the symmetrised generator `M^{-1/2} L M^{1/2}`,
/// one per distinct friction value.
#[derive(Debug)]
struct CollisionSpectra {
    /// Friction value and slices using it.
    groups: Vec<(f64, Vec<usize>)>,
    /// Per group: eigenvalues and `M^{1/2} Q`, `Qᵀ M^{-1/2}`.
    factors: Vec<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)>,
}

impl CollisionSpectra {
    fn new(friction: &[f64], v_grid: &UniformGrid) -> Self {
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, g) in friction.iter().enumerate() {
            match groups.iter_mut().find(|(v, _)| v.to_bits() == g.to_bits()) {
                Some((_, idx)) => idx.push(i),
                None => groups.push((*g, vec![i])),
            }
        }
        let nv = v_grid.cells;
        let dv = v_grid.spacing();
        let m = discrete_maxwellian(v_grid);
        let mut sym = DMatrix::zeros(nv, nv);
        for j in 0..nv.saturating_sub(1) {
            let dphi = 0.5 * (v_grid.center(j + 1).powi(2) - v_grid.center(j).powi(2));
            let bp = bernoulli(dphi);
            let bm = bernoulli(-dphi);
            let off = bp * (0.5 * dphi).exp() / (dv * dv);
            sym[(j, j + 1)] = off;
            sym[(j + 1, j)] = off;
            sym[(j, j)] -= bp / (dv * dv);
            sym[(j + 1, j + 1)] -= bm / (dv * dv);
        }
        let eig = nalgebra::SymmetricEigen::new(sym);
        let left = DMatrix::from_fn(nv, nv, |r, c| m[r].sqrt() * eig.eigenvectors[(r, c)]);
        let right = DMatrix::from_fn(nv, nv, |r, c| eig.eigenvectors[(c, r)] / m[c].sqrt());
        let values: Vec<f64> = eig.eigenvalues.iter().map(|l| l.min(0.0)).collect();
        let factors = groups.iter().map(|_| (values.clone(), left.clone(), right.clone())).collect();
        Self { groups, factors }
    }

    /// Column-stochastic `exp(dt G/ε² L)` per group, clipped at zero and
    /// renormalised so that mass is conserved to round-off.
    fn propagators(&self, dt: f64, eps2: f64) -> Vec<DMatrix<f64>> {
        self.groups
            .iter()
            .zip(&self.factors)
            .map(|((g, _), (values, left, right))| {
                let k = dt * g / eps2;
                let mut scaled = left.clone();
                for (mut col, l) in scaled.column_iter_mut().zip(values) {
                    col *= (k * l).exp();
                }
                let mut e = scaled * right;
                for mut col in e.column_iter_mut() {
                    col.iter_mut().for_each(|x| *x = x.max(0.0));
                    let s: f64 = col.sum();
                    col /= s;
                }
                e
            })
            .collect()
    }
}

impl PhaseGridSolver {
    pub fn new(
        x_grid: UniformGrid,
        v_grid: UniformGrid,
        epsilon: f64,
        mobility: &MobilityModel,
        potential: &PotentialModel,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::ConfigInvalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let (nx, nv) = (x_grid.cells, v_grid.cells);
        let (dx, dv) = (x_grid.spacing(), v_grid.spacing());
        let vc: Vec<f64> = (0..nx).map(|i| potential.value_1d(x_grid.center(i))).collect();
        let vf: Vec<f64> = (0..=nx).map(|i| potential.value_1d(x_grid.face(i))).collect();
        let a_right: Vec<f64> = (0..nx).map(|i| if i + 1 < nx { (vc[i] - vf[i + 1]).exp() } else { 0.0 }).collect();
        let a_left: Vec<f64> = (0..nx).map(|i| if i > 0 { (vc[i] - vf[i]).exp() } else { 0.0 }).collect();
        let phi = |v: f64| 0.5 * v * v;
        let pc: Vec<f64> = (0..nv).map(|j| phi(v_grid.center(j))).collect();
        let pf: Vec<f64> = (0..=nv).map(|j| phi(v_grid.face(j))).collect();
        let b_up: Vec<f64> = (0..nv).map(|j| if j + 1 < nv { (pc[j] - pf[j + 1]).exp() } else { 0.0 }).collect();
        let b_down: Vec<f64> = (0..nv).map(|j| if j > 0 { (pc[j] - pf[j]).exp() } else { 0.0 }).collect();
        let speed_v: Vec<f64> = (0..nv).map(|j| -(b_up[j] - b_down[j]) / dv).collect();
        let force: Vec<f64> = (0..nx).map(|i| (a_right[i] - a_left[i]) / dx).collect();
        let sg_forward: Vec<f64> = (0..nv.saturating_sub(1)).map(|j| bernoulli(pc[j + 1] - pc[j])).collect();
        let sg_backward: Vec<f64> = (0..nv.saturating_sub(1)).map(|j| bernoulli(pc[j] - pc[j + 1])).collect();
        let friction = (0..nx).map(|i| mobility.scalar_friction(x_grid.center(i))).collect::<Result<Vec<_>>>()?;
        let spectral = Arc::new(CollisionSpectra::new(&friction, &v_grid));

        let mut max_rate: f64 = 0.0;
        for i in 0..nx {
            let c = force[i] / epsilon;
            for j in 0..nv {
                let s = speed_v[j] / epsilon;
                let rx = if s > 0.0 { s * a_right[i] } else { -s * a_left[i] } / dx;
                let rv = if c > 0.0 { c * b_up[j] } else { -c * b_down[j] } / dv;
                max_rate = max_rate.max(rx + rv);
            }
        }
        Ok(Self {
            x_grid,
            v_grid,
            epsilon,
            a_right,
            a_left,
            b_up,
            b_down,
            speed_v,
            force,
            sg_forward,
            sg_backward,
            friction,
            max_rate,
            scheme: CollisionScheme::default(),
            spectral,
            propagators: Arc::new(Mutex::new(None)),
        })
    }

    pub fn with_scheme(mut self, scheme: CollisionScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn scheme(&self) -> CollisionScheme {
        self.scheme
    }

    pub fn for_params(x_grid: UniformGrid, v_grid: UniformGrid, p: &ScaledParams) -> Result<Self> {
        Self::new(x_grid, v_grid, p.epsilon, &p.mobility, &p.potential)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Largest total outflow rate of the transport generator.
    pub fn max_transport_rate(&self) -> f64 {
        self.max_rate
    }

    /// Largest Strang step allowed at a target CFL number.
    pub fn stable_dt(&self, cfl: f64) -> f64 {
        2.0 * cfl / self.max_rate
    }

    pub fn cfl(&self, dt: f64) -> f64 {
        0.5 * dt * self.max_rate
    }

    fn check(&self, state: &PhaseGridState) -> Result<()> {
        if !state.x_grid.same_as(&self.x_grid) || !state.v_grid.same_as(&self.v_grid) {
            return Err(Error::IncompatibleGrids("phase state and solver grids differ".into()));
        }
        Ok(())
    }

    /// One explicit Euler step of joint `x`/`v` transport over time `tau`.
    fn transport(&self, f: &[f64], out: &mut [f64], tau: f64) {
        let (nx, nv) = (self.x_grid.cells, self.v_grid.cells);
        let (dx, dv) = (self.x_grid.spacing(), self.v_grid.spacing());
        let eps = self.epsilon;
        out.par_chunks_mut(nv).enumerate().for_each(|(i, row)| {
            let c = self.force[i] / eps;
            let here = &f[i * nv..(i + 1) * nv];
            for j in 0..nv {
                let s = self.speed_v[j] / eps;
                let mut delta;
                if s > 0.0 {
                    delta = -s * self.a_right[i] * here[j];
                    if i > 0 {
                        delta += s * self.a_right[i - 1] * f[(i - 1) * nv + j];
                    }
                } else {
                    delta = s * self.a_left[i] * here[j];
                    if i + 1 < nx {
                        delta -= s * self.a_left[i + 1] * f[(i + 1) * nv + j];
                    }
                }
                let mut delta_v;
                if c > 0.0 {
                    delta_v = -c * self.b_up[j] * here[j];
                    if j > 0 {
                        delta_v += c * self.b_up[j - 1] * here[j - 1];
                    }
                } else {
                    delta_v = c * self.b_down[j] * here[j];
                    if j + 1 < nv {
                        delta_v -= c * self.b_down[j + 1] * here[j + 1];
                    }
                }
                row[j] = here[j] + tau * (delta / dx + delta_v / dv);
            }
        });
    }

    fn collide(&self, f: &mut [f64], dt: f64) -> Result<()> {
        match self.scheme {
            CollisionScheme::Exact => {
                self.collide_exact(f, dt);
                Ok(())
            }
            CollisionScheme::ImplicitEuler => self.collide_implicit(f, dt),
        }
    }

    fn propagators_for(&self, dt: f64) -> Arc<Vec<DMatrix<f64>>> {
        let mut cache = self.propagators.lock().expect("propagator cache poisoned");
        if let Some((t, p)) = cache.as_ref() {
            if t.to_bits() == dt.to_bits() {
                return p.clone();
            }
        }
        let p = Arc::new(self.spectral.propagators(dt, self.epsilon * self.epsilon));
        *cache = Some((dt, p.clone()));
        p
    }

    /// Exact collision flow, applied to blocks of velocity slices.
    fn collide_exact(&self, f: &mut [f64], dt: f64) {
        let nv = self.v_grid.cells;
        let props = self.propagators_for(dt);
        let rows: Vec<usize> = (0..self.x_grid.cells).collect();
        let mut group_of = vec![0usize; self.x_grid.cells];
        for (g, (_, idx)) in self.spectral.groups.iter().enumerate() {
            for &i in idx {
                group_of[i] = g;
            }
        }
        f.par_chunks_mut(nv * COLUMN_BLOCK).zip(rows.par_chunks(COLUMN_BLOCK)).for_each(|(block, ids)| {
            let mut k = 0;
            while k < ids.len() {
                // run of consecutive slices sharing a propagator
                let g = group_of[ids[k]];
                let mut end = k + 1;
                while end < ids.len() && group_of[ids[end]] == g {
                    end += 1;
                }
                let cols = DMatrix::from_column_slice(nv, end - k, &block[k * nv..end * nv]);
                let out = &props[g] * cols;
                block[k * nv..end * nv].copy_from_slice(out.as_slice());
                k = end;
            }
        });
    }

    /// Implicit Euler collision step per `x`-slice.
    fn collide_implicit(&self, f: &mut [f64], dt: f64) -> Result<()> {
        let nv = self.v_grid.cells;
        let dv = self.v_grid.spacing();
        let eps2 = self.epsilon * self.epsilon;
        f.par_chunks_mut(nv).enumerate().try_for_each_init(
            || (vec![0.0; nv], vec![0.0; nv], vec![0.0; nv], vec![0.0; nv]),
            |(lower, diag, upper, scratch), (i, row)| {
                let k = dt * self.friction[i] / (eps2 * dv * dv);
                lower.fill(0.0);
                upper.fill(0.0);
                diag.fill(1.0);
                for j in 0..nv - 1 {
                    diag[j] += k * self.sg_forward[j];
                    diag[j + 1] += k * self.sg_backward[j];
                    upper[j] = -k * self.sg_backward[j];
                    lower[j + 1] = -k * self.sg_forward[j];
                }
                solve_tridiagonal(lower, diag, upper, row, scratch)
            },
        )
    }

    /// Strang step `T(dt/2) C(dt) T(dt/2)`.
    pub fn step(&self, state: &PhaseGridState, dt: f64) -> Result<PhaseGridState> {
        self.check(state)?;
        let cfl = self.cfl(dt);
        if cfl > CFL_LIMIT {
            return Err(Error::CflViolation { cfl });
        }
        let mut a = vec![0.0; state.f.len()];
        self.transport(&state.f, &mut a, 0.5 * dt);
        if self.v_grid.cells > 1 {
            self.collide(&mut a, dt)?;
        }
        let mut b = vec![0.0; state.f.len()];
        self.transport(&a, &mut b, 0.5 * dt);
        let nv = self.v_grid.cells;
        for (k, value) in b.iter_mut().enumerate() {
            if *value < 0.0 {
                // exact arithmetic keeps f ≥ 0; allow round-off only
                if *value < -1e-13 * (1.0 + state.f[k].abs()) {
                    return Err(Error::NegativeCell { ix: k / nv, iv: k % nv, value: *value });
                }
                *value = 0.0;
            } else if !value.is_finite() {
                return Err(Error::NonFiniteState { step: 0 });
            }
        }
        Ok(PhaseGridState { x_grid: self.x_grid, v_grid: self.v_grid, f: b, time: state.time + dt })
    }
}

pub fn step_grid(state: &PhaseGridState, p: &ScaledParams) -> Result<PhaseGridState> {
    PhaseGridSolver::for_params(state.x_grid, state.v_grid, p)?.step(state, p.dt)
}
