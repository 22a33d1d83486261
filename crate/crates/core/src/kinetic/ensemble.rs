//! Particle ensemble for the scaled Langevin system
//! `dx = v/ε dt`, `dv = (−∇V/ε − G v/ε²) dt + (√2/ε) G^{1/2} dW`.
//!
//! Integrator: half kick, half drift, exact Ornstein–Uhlenbeck flow of the
//! velocity with `G` frozen at the midpoint position, half drift, half kick. Every
//! particle/step pair draws from its own ChaCha stream, so results do not
//! depend on how particles are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::ScaledParams;
use crate::linalg::Spectrum;
use crate::mobility::MobilityModel;
use crate::smoluchowski::DensityState;
use crate::{Error, Result};

/// Stream index reserved for initial sampling.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    /// `M × n`, particle-major.
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub dim: usize,
    pub time: f64,
    pub rng_root_seed: u64,
    /// Number of steps taken; keys the per-step random streams.
    pub step_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(root seed, particle, step)`.
pub fn particle_rng(root: u64, particle: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(root ^ splitmix64(particle)));
    rng.set_stream(step);
    rng
}

impl EnsembleState {
    pub fn new(positions: Vec<f64>, velocities: Vec<f64>, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || !positions.len().is_multiple_of(dim) || positions.len() != velocities.len() {
            return Err(Error::ConfigInvalid("ensemble arrays must be non-empty M×n arrays".into()));
        }
        if positions.iter().chain(&velocities).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: 0 });
        }
        Ok(Self { positions, velocities, dim, time: 0.0, rng_root_seed: seed, step_index: 0 })
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, p: usize) -> &[f64] {
        &self.positions[p * self.dim..(p + 1) * self.dim]
    }

    pub fn velocity(&self, p: usize) -> &[f64] {
        &self.velocities[p * self.dim..(p + 1) * self.dim]
    }

    /// Empirical mean of `g(x, v)` with equal weights `1/M`, summed serially.
    pub fn mean_of(&self, g: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let m = self.len();
        (0..m).map(|p| g(self.position(p), self.velocity(p))).sum::<f64>() / m as f64
    }

    /// `x` drawn from the cell-wise constant density `ρ₀`, `v` from `M`.
    pub fn local_equilibrium(rho0: &DensityState, size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::ConfigInvalid("ensemble size must be at least 1".into()));
        }
        if let Some((index, &value)) = rho0.rho.iter().enumerate().find(|(_, r)| !(**r >= 0.0)) {
            return Err(Error::NegativeDensity { index, value });
        }
        let g = rho0.grid;
        let mut cdf = Vec::with_capacity(g.cells);
        let mut acc = 0.0;
        for r in &rho0.rho {
            acc += r;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::ConfigInvalid("initial density has zero mass".into()));
        }
        let h = g.spacing();
        let pairs: Vec<(f64, f64)> = (0..size)
            .into_par_iter()
            .map(|p| {
                let mut rng = particle_rng(seed, p as u64, INIT_STREAM);
                let u: f64 = rng.random::<f64>() * acc;
                let cell = cdf.partition_point(|&c| c <= u).min(g.cells - 1);
                let x = g.face(cell) + rng.random::<f64>() * h;
                let v: f64 = rng.sample(StandardNormal);
                (x, v)
            })
            .collect();
        let (positions, velocities) = pairs.into_iter().unzip();
        let mut s = Self::new(positions, velocities, 1, seed)?;
        s.time = rho0.time;
        Ok(s)
    }
}

pub fn init_local_equilibrium_ensemble(rho0: &DensityState, size: usize, seed: u64) -> Result<EnsembleState> {
    EnsembleState::local_equilibrium(rho0, size, seed)
}

/// Velocity update `v ← A v + B ξ` of the exact OU flow over `h = dt/ε²`.
enum OuFlow {
    Scalar { decay: f64, noise: f64 },
    Matrix { decay: DMatrix<f64>, noise: DMatrix<f64> },
}

fn ou_from_mobility_spectrum(s: &Spectrum, h: f64) -> OuFlow {
    // friction eigenvalue 1/λ; λ → 0 means infinite friction and full damping
    let decay = |l: f64| {
        if l > 0.0 && l.is_finite() {
            (-h / l).exp()
        } else if l.is_infinite() {
            1.0
        } else {
            0.0
        }
    };
    OuFlow::Matrix {
        decay: s.map(decay),
        noise: s.map(|l| {
            let a = decay(l);
            (1.0 - a * a).max(0.0).sqrt()
        }),
    }
}

fn ou_flow(mobility: &MobilityModel, x: &[f64], h: f64) -> Result<OuFlow> {
    match mobility {
        MobilityModel::Isotropic { gamma } => {
            let decay = (-gamma * h).exp();
            Ok(OuFlow::Scalar { decay, noise: (1.0 - decay * decay).max(0.0).sqrt() })
        }
        _ => Ok(ou_from_mobility_spectrum(&mobility.mobility_spectrum(x)?, h)),
    }
}

impl OuFlow {
    fn apply(&self, v: &mut [f64], rng: &mut ChaCha8Rng) {
        match self {
            OuFlow::Scalar { decay, noise } => {
                for vi in v.iter_mut() {
                    let xi: f64 = rng.sample(StandardNormal);
                    *vi = decay * *vi + noise * xi;
                }
            }
            OuFlow::Matrix { decay, noise } => {
                let n = v.len();
                let xi = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let out = decay * DVector::from_column_slice(v) + noise * xi;
                v.copy_from_slice(out.as_slice());
            }
        }
    }
}

/// Steps all particles once; particles are independent, so the loop runs in parallel.
pub fn step_sde(state: &EnsembleState, p: &ScaledParams) -> Result<EnsembleState> {
    let n = state.dim;
    let eps = p.epsilon;
    let dt = p.dt;
    let h = dt / (eps * eps);
    let constant = match &p.mobility {
        MobilityModel::Isotropic { .. } => Some(ou_flow(&p.mobility, &state.positions[..n], h)?),
        MobilityModel::Matrix(_) => {
            Some(ou_from_mobility_spectrum(&p.mobility.mobility_spectrum(&state.positions[..n])?, h))
        }
        _ => None,
    };
    let mut next = state.clone();
    let step = state.step_index;
    let seed = state.rng_root_seed;
    next.positions.par_chunks_mut(n).zip(next.velocities.par_chunks_mut(n)).enumerate().try_for_each(
        |(particle, (x, v))| -> Result<()> {
            let mut rng = particle_rng(seed, particle as u64, step);
            let mut grad = vec![0.0; n];
            p.potential.gradient_into(x, &mut grad);
            for (vi, gi) in v.iter_mut().zip(&grad) {
                *vi -= 0.5 * dt * gi / eps;
            }
            // drift halves on either side of the OU flow keep the step symmetric;
            // a single drift after it leaves an O(dt) bias in the position moments
            for (xi, vi) in x.iter_mut().zip(v.iter()) {
                *xi += 0.5 * vi * dt / eps;
            }
            match &constant {
                Some(flow) => flow.apply(v, &mut rng),
                None => ou_flow(&p.mobility, x, h)?.apply(v, &mut rng),
            }
            for (xi, vi) in x.iter_mut().zip(v.iter()) {
                *xi += 0.5 * vi * dt / eps;
            }
            p.potential.gradient_into(x, &mut grad);
            for (vi, gi) in v.iter_mut().zip(&grad) {
                *vi -= 0.5 * dt * gi / eps;
            }
            Ok(())
        },
    )?;
    if next.positions.iter().chain(&next.velocities).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { step });
    }
    next.time = state.time + dt;
    next.step_index = step + 1;
    Ok(next)
}
