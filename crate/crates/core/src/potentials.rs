//! Confining potentials `V(x)` and the associated Gibbs quantities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::grid::UniformGrid;
use crate::{Error, Result};

/// Maximum tail mass of `e^{-V}` tolerated outside a truncated domain.
pub const TAIL_TOL: f64 = 1e-8;

type ScalarField = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied potential; the gradient is taken by central differences.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub value: Arc<ScalarField>,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential").field("name", &self.name).finish()
    }
}

/// Natural cubic spline through tabulated one-dimensional values.
///
/// Outside the table the spline is continued linearly with the end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(Error::ConfigInvalid("tabulated potential needs at least 3 knots with matching values".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::ConfigInvalid("tabulated knots must be strictly increasing".into()));
        }
        // tridiagonal system for the second derivatives, natural ends
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (knots[i] - knots[i - 1]) / (knots[i + 1] - knots[i - 1]);
            let p = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / p;
            let dy = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
                - (values[i] - values[i - 1]) / (knots[i] - knots[i - 1]);
            u[i] = (6.0 * dy / (knots[i + 1] - knots[i - 1]) - sig * u[i - 1]) / p;
        }
        second[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            second[k] = second[k] * second[k + 1] + u[k];
        }
        second[0] = 0.0;
        Ok(Self { knots, values, second })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.knots.len();
        let (lo, hi) = (self.knots[0], self.knots[n - 1]);
        if x < lo {
            let (v, d) = self.eval(lo);
            return (v + d * (x - lo), d);
        }
        if x > hi {
            let (v, d) = self.eval(hi);
            return (v + d * (x - hi), d);
        }
        let k = self.segment(x);
        let h = self.knots[k + 1] - self.knots[k];
        let a = (self.knots[k + 1] - x) / h;
        let b = (x - self.knots[k]) / h;
        let (y0, y1, s0, s1) = (self.values[k], self.values[k + 1], self.second[k], self.second[k + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * s0 + (b * b * b - b) * s1) * h * h / 6.0;
        let d = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * s0 + (3.0 * b * b - 1.0) / 6.0 * h * s1;
        (v, d)
    }
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// `k|x|²/2`
    Harmonic {
        k: f64,
    },
    /// `α Σ (x_i² − β²)²`
    DoubleWell {
        alpha: f64,
        beta: f64,
    },
    Tabulated(TabulatedPotential),
    Custom(CustomPotential),
}

#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub dim: usize,
}

impl PotentialModel {
    pub fn harmonic(k: f64, dim: usize) -> Self {
        Self { kind: PotentialKind::Harmonic { k }, dim }
    }

    pub fn double_well(alpha: f64, beta: f64) -> Self {
        Self { kind: PotentialKind::DoubleWell { alpha, beta }, dim: 1 }
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self { kind: PotentialKind::Tabulated(TabulatedPotential::new(knots, values)?), dim: 1 })
    }

    pub fn custom(name: impl Into<String>, dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: PotentialKind::Custom(CustomPotential { name: name.into(), value: Arc::new(value) }), dim }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::DoubleWell { .. } => "double_well",
            PotentialKind::Tabulated(_) => "tabulated",
            PotentialKind::Custom(c) => &c.name,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { k } => 0.5 * k * x.iter().map(|xi| xi * xi).sum::<f64>(),
            PotentialKind::DoubleWell { alpha, beta } => x
                .iter()
                .map(|xi| {
                    let w = xi * xi - beta * beta;
                    alpha * w * w
                })
                .sum(),
            PotentialKind::Tabulated(t) => t.eval(x[0]).0,
            PotentialKind::Custom(c) => (c.value)(x),
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            PotentialKind::Harmonic { k } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = k * xi;
                }
            }
            PotentialKind::DoubleWell { alpha, beta } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = 4.0 * alpha * xi * (xi * xi - beta * beta);
                }
            }
            PotentialKind::Tabulated(t) => out[0] = t.eval(x[0]).1,
            PotentialKind::Custom(c) => {
                let mut y = x.to_vec();
                for i in 0..x.len() {
                    let h = 1e-5 * (1.0 + x[i].abs());
                    y[i] = x[i] + h;
                    let fp = (c.value)(&y);
                    y[i] = x[i] - h;
                    let fm = (c.value)(&y);
                    y[i] = x[i];
                    out[i] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn value_1d(&self, x: f64) -> f64 {
        self.value(&[x])
    }

    pub fn derivative_1d(&self, x: f64) -> f64 {
        let mut g = [0.0];
        self.gradient_into(&[x], &mut g);
        g[0]
    }

    /// Smallest symmetric half-width `L` such that `e^{-(V - min V)}` has
    /// dropped below `tail_tol` at `±L` along every axis (probed in 1D).
    pub fn suggested_half_width(&self, tail_tol: f64) -> f64 {
        let threshold = -tail_tol.ln();
        let probe = |x: f64| {
            let mut p = vec![0.0; self.dim.max(1)];
            p[0] = x;
            self.value(&p)
        };
        let step = 0.01;
        let mut vmin = probe(0.0);
        let mut x = 0.0;
        while x < 50.0 {
            vmin = vmin.min(probe(x)).min(probe(-x));
            if probe(x) - vmin > threshold && probe(-x) - vmin > threshold {
                return x;
            }
            x += step;
        }
        x
    }
}

pub fn eval_potential(p: &PotentialModel, x: &[f64]) -> f64 {
    p.value(x)
}

pub fn grad_potential(p: &PotentialModel, x: &[f64]) -> Vec<f64> {
    p.gradient(x)
}

/// Standard Maxwellian `e^{-|v|²/2} / (2π)^{n/2}`.
pub fn maxwellian(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    (-0.5 * v.iter().map(|x| x * x).sum::<f64>()).exp() / (2.0 * PI).powf(0.5 * n)
}

/// Gibbs weights `e^{-V}` on a tensor grid and the partition constant
/// `Z = (2π)^{n/2} ∫ e^{-V} dx`.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub grid: UniformGrid,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub z: f64,
    pub tail_mass: f64,
}

impl GibbsState {
    pub fn cell_volume(&self) -> f64 {
        self.grid.spacing().powi(self.dim as i32)
    }

    /// Spatial equilibrium density `e^{-V}/∫e^{-V}` per cell.
    pub fn equilibrium_density(&self) -> Vec<f64> {
        let s = self.z / (2.0 * PI).powf(0.5 * self.dim as f64);
        self.weights.iter().map(|w| w / s).collect()
    }

    /// `Σ M_eq · cell volume` over the phase-space grid `grid × v_grid^n`.
    pub fn phase_space_mass(&self, v_grid: &UniformGrid) -> f64 {
        let mv: f64 = (0..v_grid.cells).map(|j| maxwellian(&[v_grid.center(j)])).sum::<f64>() * v_grid.spacing();
        let sx: f64 = self.weights.iter().sum::<f64>() * self.cell_volume();
        sx * (mv * (2.0 * PI).sqrt()).powi(self.dim as i32) / self.z
    }
}

fn tensor_index(mut flat: usize, cells: usize, dim: usize, out: &mut [usize]) {
    for o in out.iter_mut().take(dim) {
        *o = flat % cells;
        flat /= cells;
    }
}

pub fn gibbs_state(p: &PotentialModel, grid: &UniformGrid) -> Result<GibbsState> {
    let dim = p.dim;
    let n = grid.cells;
    let total = n.pow(dim as u32);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        tensor_index(flat, n, dim, &mut idx);
        for d in 0..dim {
            x[d] = grid.center(idx[d]);
        }
        values.push(p.value(&x));
    }
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !vmin.is_finite() {
        return Err(Error::NotIntegrable { tail_mass: f64::INFINITY });
    }
    // shift by min V to avoid overflow; restore through Z
    let shifted: Vec<f64> = values.iter().map(|v| (-(v - vmin)).exp()).collect();
    let mut boundary = 0.0;
    for (flat, w) in shifted.iter().enumerate() {
        tensor_index(flat, n, dim, &mut idx);
        if idx.iter().any(|&i| i == 0 || i + 1 == n) {
            boundary += w;
        }
    }
    let sum: f64 = shifted.iter().sum();
    let tail_mass = boundary / sum;
    if !(tail_mass <= TAIL_TOL) {
        return Err(Error::NotIntegrable { tail_mass });
    }
    let scale = (-vmin).exp();
    let weights: Vec<f64> = shifted.iter().map(|w| w * scale).collect();
    let vol = grid.spacing().powi(dim as i32);
    let z = (2.0 * PI).powf(0.5 * dim as f64) * sum * scale * vol;
    Ok(GibbsState { grid: *grid, dim, weights, z, tail_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn potential_values() {
        assert_eq!(PotentialModel::harmonic(1.0, 1).value(&[0.0]), 0.0);
        assert_eq!(PotentialModel::harmonic(2.0, 2).value(&[1.0, 1.0]), 2.0);
        let dw = PotentialModel::double_well(1.0, 1.0);
        assert_eq!(dw.value(&[1.0]), 0.0);
        assert_eq!(dw.value(&[-1.0]), 0.0);
    }

    #[test]
    fn potential_gradients() {
        assert_eq!(PotentialModel::harmonic(1.0, 1).gradient(&[3.0]), vec![3.0]);
        assert_eq!(PotentialModel::double_well(1.0, 1.0).gradient(&[0.0]), vec![0.0]);
    }

    #[test]
    fn maxwellian_values() {
        assert!((maxwellian(&[0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
        let g = UniformGrid::symmetric(6.0, 128);
        let h = g.spacing();
        let (mut m0, mut m2) = (0.0, 0.0);
        for j in 0..g.cells {
            let v = g.center(j);
            m0 += maxwellian(&[v]) * h;
            m2 += v * v * maxwellian(&[v]) * h;
        }
        assert!((m0 - 1.0).abs() < 1e-8);
        assert!((m2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn harmonic_partition_constant() {
        let g = UniformGrid::symmetric(8.0, 256);
        let s = gibbs_state(&PotentialModel::harmonic(1.0, 1), &g).unwrap();
        // (2π)^{1/2} · √(2π)
        assert!((s.z - 2.0 * PI).abs() < 1e-9, "Z = {}", s.z);
        let vg = UniformGrid::symmetric(6.0, 128);
        let pm = s.phase_space_mass(&vg);
        assert!((pm - 1.0).abs() < 1e-8, "{pm}");
        let rho = s.equilibrium_density();
        let mass: f64 = rho.iter().sum::<f64>() * g.spacing();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_partition_constant() {
        let g = UniformGrid::symmetric(7.0, 96);
        let s = gibbs_state(&PotentialModel::harmonic(2.0, 2), &g).unwrap();
        // (2π)·(π)
        assert!((s.z - 2.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn divergent_weight_is_rejected() {
        let g = UniformGrid::symmetric(6.0, 64);
        let p = PotentialModel::harmonic(-2.0, 1); // V = -x²
        assert!(matches!(gibbs_state(&p, &g), Err(Error::NotIntegrable { .. })));
    }

    #[test]
    fn suggested_width_covers_tail() {
        let l = PotentialModel::harmonic(1.0, 1).suggested_half_width(TAIL_TOL);
        assert!(l > 6.0 && l < 6.2, "{l}");
        let dw = PotentialModel::double_well(1.0, 1.0).suggested_half_width(TAIL_TOL);
        assert!(dw > 2.0 && dw < 2.5, "{dw}");
    }

    #[test]
    fn tabulated_interpolates_quadratic() {
        let knots: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
        let values: Vec<f64> = knots.iter().map(|x| 0.5 * x * x).collect();
        let p = PotentialModel::tabulated(knots, values).unwrap();
        assert!((p.value(&[1.05]) - 0.5 * 1.05 * 1.05).abs() < 1e-3);
        assert!((p.derivative_1d(1.05) - 1.05).abs() < 1e-2);
    }

    fn fd_check(p: &PotentialModel, x: &[f64]) -> f64 {
        let h = 1e-4;
        let g = p.gradient(x);
        let mut y = x.to_vec();
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            y[i] = x[i] + h;
            let fp = p.value(&y);
            y[i] = x[i] - h;
            let fm = p.value(&y);
            y[i] = x[i];
            worst = worst.max((g[i] - (fp - fm) / (2.0 * h)).abs());
        }
        worst
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(x in prop::collection::vec(-2.5f64..2.5, 1..4)) {
            let n = x.len();
            prop_assert!(fd_check(&PotentialModel::harmonic(1.7, n), &x) <= 1e-6);
            prop_assert!(fd_check(&PotentialModel::double_well(0.8, 1.2), &x[..1]) <= 1e-5);
            let knots: Vec<f64> = (0..61).map(|i| -3.0 + 0.1 * i as f64).collect();
            let values: Vec<f64> = knots.iter().map(|x| x.cos() + 0.3 * x * x).collect();
            let tab = PotentialModel::tabulated(knots, values).unwrap();
            prop_assert!(fd_check(&tab, &x[..1]) <= 1e-5);
        }

        #[test]
        fn shipped_potentials_bounded_below(x in -50.0f64..50.0) {
            prop_assert!(PotentialModel::harmonic(1.0, 1).value(&[x]) >= 0.0);
            prop_assert!(PotentialModel::double_well(1.0, 1.0).value(&[x]) >= 0.0);
        }
    }
}
