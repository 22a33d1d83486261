//! Sampled certification of the structural hypotheses on `G`, `V` and `ρ₀`.
//!
//! The hypotheses are statements over all of `ℝⁿ`; here they are checked on
//! a finite box by sampling and finite differences. Every growth-type
//! quantity is also evaluated on the doubled box and flagged as
//! box-dependent when it grows noticeably, which signals that the sampled
//! value does not bound the whole-space quantity.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::UniformGrid;
use crate::mobility::MobilityModel;
use crate::potentials::{gibbs_state, PotentialModel, TAIL_TOL};
use crate::smoluchowski::{DensityState, SmoluchowskiSolver};
use crate::{Error, Result};

pub const GROWTH_CAP: f64 = 1e6;
pub const DERIVATIVE_CAP: f64 = 1e6;
/// Lower eigenvalue bound on `G⁻¹`, relative to the largest sampled eigenvalue.
pub const A1_RELATIVE_FLOOR: f64 = 1e-8;
/// A sampled sup is box-dependent when the doubled box exceeds it by this factor.
const GROWTH_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SampleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::ConfigInvalid("sample box needs lower < upper in every axis".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self { lower: vec![-half_width; dim], upper: vec![half_width; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Same centre, twice the side lengths.
    pub fn doubled(&self) -> Self {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let (c, h) = (0.5 * (l + u), u - l);
                (c - h, c + h)
            })
            .unzip();
        Self { lower, upper }
    }

    fn describe(&self) -> String {
        let axes: Vec<String> = self.lower.iter().zip(&self.upper).map(|(l, u)| format!("[{l}, {u}]")).collect();
        axes.join(" x ")
    }

    /// Centre, corners (for `n ≤ 10`) and `n_random` uniform points.
    pub fn points(&self, n_random: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut pts = vec![self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect::<Vec<_>>()];
        if n <= 10 {
            for mask in 0..(1usize << n) {
                pts.push((0..n).map(|d| if mask >> d & 1 == 1 { self.upper[d] } else { self.lower[d] }).collect());
            }
        }
        pts.extend(self.random_points(n_random, seed));
        pts
    }

    /// `n` uniform points only; used for Monte Carlo quadrature, where the
    /// centre and corners would bias the average.
    pub fn random_points(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..self.dim()).map(|d| rng.random_range(self.lower[d]..self.upper[d])).collect()).collect()
    }
}

/// Where and how a hypothesis is probed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    pub region: SampleBox,
    pub n_samples: usize,
    pub seed: u64,
    /// Points always included, e.g. near-contact sphere configurations.
    pub extra_points: Vec<Vec<f64>>,
}

impl Sampling {
    pub fn new(region: SampleBox, n_samples: usize, seed: u64) -> Self {
        Self { region, n_samples, seed, extra_points: Vec::new() }
    }

    pub fn with_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.extra_points = points;
        self
    }

    fn points(&self) -> Vec<Vec<f64>> {
        let mut p = self.region.points(self.n_samples, self.seed);
        p.extend(self.extra_points.iter().cloned());
        p
    }

    fn doubled_points(&self) -> Vec<Vec<f64>> {
        let mut p = self.region.doubled().points(self.n_samples, self.seed);
        p.extend(self.extra_points.iter().cloned());
        p
    }
}

/// One probed condition with its worst sampled value and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub ok: bool,
    pub worst: f64,
    pub witness: Vec<f64>,
    pub box_dependent: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssumptionReport {
    pub theorem1_ok: Option<bool>,
    pub a1_ok: Option<bool>,
    pub lambda: Option<f64>,
    pub a2_ok: Option<bool>,
    pub a_lower: Option<f64>,
    pub a_upper: Option<f64>,
    pub a3_ok: Option<bool>,
    pub c_k: Vec<f64>,
    pub prop1_ok: Option<bool>,
    pub conditions: Vec<Condition>,
    pub sample_points: usize,
    pub regions: Vec<String>,
}

impl AssumptionReport {
    pub fn merge(mut self, other: AssumptionReport) -> Self {
        self.theorem1_ok = other.theorem1_ok.or(self.theorem1_ok);
        self.a1_ok = other.a1_ok.or(self.a1_ok);
        self.lambda = other.lambda.or(self.lambda);
        self.a2_ok = other.a2_ok.or(self.a2_ok);
        self.a_lower = other.a_lower.or(self.a_lower);
        self.a_upper = other.a_upper.or(self.a_upper);
        self.a3_ok = other.a3_ok.or(self.a3_ok);
        if !other.c_k.is_empty() {
            self.c_k = other.c_k;
        }
        self.prop1_ok = other.prop1_ok.or(self.prop1_ok);
        self.conditions.extend(other.conditions);
        self.sample_points += other.sample_points;
        for r in other.regions {
            if !self.regions.contains(&r) {
                self.regions.push(r);
            }
        }
        self
    }

    /// True when every check that ran passed.
    pub fn passed(&self) -> bool {
        [self.theorem1_ok, self.a1_ok, self.a2_ok, self.a3_ok, self.prop1_ok].iter().all(|c| c.unwrap_or(true))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.ok)
    }

    pub fn to_text(&self) -> String {
        let verdict = |o: Option<bool>| match o {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "not checked",
        };
        let mut s = String::new();
        let _ = writeln!(s, "sampled checks on a finite box; box-dependent values may not bound the whole space");
        for r in &self.regions {
            let _ = writeln!(s, "region: {r}");
        }
        let _ = writeln!(s, "sample points: {}", self.sample_points);
        let _ = writeln!(s, "theorem1: {}", verdict(self.theorem1_ok));
        let _ = writeln!(s, "A1: {} (lambda = {})", verdict(self.a1_ok), opt(self.lambda));
        let _ = writeln!(s, "A2: {} (a = {}, A = {})", verdict(self.a2_ok), opt(self.a_lower), opt(self.a_upper));
        let ck: Vec<String> = self.c_k.iter().map(|c| format!("{c:.6e}")).collect();
        let _ = writeln!(s, "A3: {} (C_k = [{}])", verdict(self.a3_ok), ck.join(", "));
        let _ = writeln!(s, "prop1: {}", verdict(self.prop1_ok));
        for c in &self.conditions {
            let pt: Vec<String> = c.witness.iter().map(|x| format!("{x:.6}")).collect();
            let _ = writeln!(
                s,
                "  [{}] {}: worst {:.6e} at ({}){}",
                if c.ok { "ok" } else { "FAIL" },
                c.name,
                c.worst,
                pt.join(", "),
                if c.box_dependent { " box-dependent" } else { "" }
            );
        }
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

/// Largest value of `f` over `points`; errors and NaN count as `+∞`.
fn sup_over(points: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<f64>) -> (f64, Vec<f64>) {
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for p in points {
        let v = match f(p) {
            Ok(v) if !v.is_nan() => v,
            _ => f64::INFINITY,
        };
        if v > worst || witness.is_empty() {
            worst = v;
            witness = p.clone();
        }
    }
    (worst, witness)
}

/// Largest `|∂^k F / ∂x_d^k|` over axes `d` and components, by central differences.
fn axis_derivative(f: &dyn Fn(&[f64]) -> Result<Vec<f64>>, x: &[f64], k: usize) -> Result<f64> {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = match k {
        1 => 1e-5,
        2 => 1e-4,
        _ => 1e-3,
    } * scale;
    let at = |d: usize, s: f64| -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        y[d] += s * h;
        f(&y)
    };
    let mut worst: f64 = 0.0;
    for d in 0..x.len() {
        let vals: Vec<f64> = match k {
            1 => {
                let (p, m) = (at(d, 1.0)?, at(d, -1.0)?);
                p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            }
            2 => {
                let (p, c, m) = (at(d, 1.0)?, f(x)?, at(d, -1.0)?);
                (0..c.len()).map(|i| (p[i] - 2.0 * c[i] + m[i]) / (h * h)).collect()
            }
            _ => {
                let (p2, p1, m1, m2) = (at(d, 2.0)?, at(d, 1.0)?, at(d, -1.0)?, at(d, -2.0)?);
                (0..p1.len()).map(|i| (p2[i] - 2.0 * p1[i] + 2.0 * m1[i] - m2[i]) / (2.0 * h * h * h)).collect()
            }
        };
        worst = vals.iter().fold(worst, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
    }
    Ok(worst)
}

fn growth_condition(name: String, sampling: &Sampling, cap: f64, f: impl Fn(&[f64]) -> Result<f64>) -> Condition {
    let (worst, witness) = sup_over(&sampling.points(), &f);
    let (wider, _) = sup_over(&sampling.doubled_points(), &f);
    Condition {
        name,
        ok: worst.is_finite() && worst <= cap,
        worst,
        witness,
        box_dependent: wider > GROWTH_FACTOR * worst + 1e-6 * (1.0 + worst.abs()),
    }
}

fn mobility_flat(mobility: &MobilityModel, x: &[f64]) -> Result<Vec<f64>> {
    Ok(mobility.mobility(x)?.as_slice().to_vec())
}

fn friction_flat(mobility: &MobilityModel, x: &[f64]) -> Result<Vec<f64>> {
    Ok(mobility.friction(x)?.as_slice().to_vec())
}

/// `G⁻¹ ∇V`.
fn drift(mobility: &MobilityModel, potential: &PotentialModel, x: &[f64]) -> Result<Vec<f64>> {
    let mu = mobility.mobility(x)?;
    let g = nalgebra::DVector::from_vec(potential.gradient(x));
    Ok((mu * g).as_slice().to_vec())
}

fn region_line(sampling: &Sampling) -> String {
    format!("{} ({} random samples, seed {})", sampling.region.describe(), sampling.n_samples, sampling.seed)
}

/// `G⁻¹ ≥ λ I` and bounded derivatives of `G⁻¹` and `G⁻¹∇V` up to third order.
pub fn check_a1(mobility: &MobilityModel, potential: &PotentialModel, sampling: &Sampling) -> AssumptionReport {
    let points = sampling.points();
    let mut lambda = f64::INFINITY;
    let mut lambda_max: f64 = 0.0;
    let mut witness = Vec::new();
    for p in &points {
        match mobility.mobility_spectrum(p) {
            Ok(s) => {
                if s.min() < lambda || witness.is_empty() {
                    lambda = s.min();
                    witness = p.clone();
                }
                lambda_max = lambda_max.max(s.max());
            }
            Err(_) => {
                lambda = f64::NEG_INFINITY;
                witness = p.clone();
            }
        }
    }
    let lower_ok = lambda.is_finite() && lambda > A1_RELATIVE_FLOOR * lambda_max && lambda > 0.0;
    let mut conditions = vec![Condition {
        name: "A1 lambda_min(G^-1)".into(),
        ok: lower_ok,
        worst: lambda,
        witness,
        box_dependent: false,
    }];
    for k in 1..=3 {
        conditions.push(growth_condition(format!("A1 |d^{k} G^-1|"), sampling, DERIVATIVE_CAP, |x| {
            axis_derivative(&|y| mobility_flat(mobility, y), x, k)
        }));
        conditions.push(growth_condition(format!("A1 |d^{k} (G^-1 grad V)|"), sampling, DERIVATIVE_CAP, |x| {
            axis_derivative(&|y| drift(mobility, potential, y), x, k)
        }));
    }
    let ok = conditions.iter().all(|c| c.ok);
    AssumptionReport {
        a1_ok: Some(ok),
        lambda: Some(lambda),
        sample_points: points.len(),
        regions: vec![region_line(sampling)],
        conditions,
        ..Default::default()
    }
}

/// Optional limit run used for the admissibility proxy.
#[derive(Debug, Clone, Copy)]
pub struct LimitRun<'a> {
    pub solver: &'a SmoluchowskiSolver,
    pub dt: f64,
    pub checkpoints: usize,
}

/// Sup norms of `h₀` and its first three grid differences, over all cells
/// and over the outer boundary zone.
fn h0_derivative_sups(h0: &[f64], dx: f64) -> ([f64; 4], [f64; 4]) {
    let n = h0.len();
    let zone = (n / 10).max(3);
    let in_zone = |i: usize| i < zone || i + zone >= n;
    let mut all = [0.0f64; 4];
    let mut edge = [0.0f64; 4];
    let mut record = |k: usize, i: usize, v: f64| {
        let v = if v.is_nan() { f64::INFINITY } else { v.abs() };
        all[k] = all[k].max(v);
        if in_zone(i) {
            edge[k] = edge[k].max(v);
        }
    };
    for i in 0..n {
        record(0, i, h0[i]);
        if i >= 1 && i + 1 < n {
            record(1, i, (h0[i + 1] - h0[i - 1]) / (2.0 * dx));
            record(2, i, (h0[i + 1] - 2.0 * h0[i] + h0[i - 1]) / (dx * dx));
        }
        if i >= 2 && i + 2 < n {
            record(3, i, (h0[i + 2] - 2.0 * h0[i + 1] + 2.0 * h0[i - 1] - h0[i - 2]) / (2.0 * dx * dx * dx));
        }
    }
    (all, edge)
}

/// Two-sided bound `a e^{-V} ≤ ρ₀ ≤ A e^{-V}` with bounded derivatives of
/// `h₀ = ρ₀ e^{V}`, and a boundary-zone proxy for the admissibility condition
/// at infinity along an optional limit run up to `t_final`.
pub fn check_a2_a3(
    rho0: &DensityState,
    potential: &PotentialModel,
    t_final: f64,
    run: Option<LimitRun<'_>>,
) -> AssumptionReport {
    let g = rho0.grid;
    let h0 = rho0.h0(potential);
    let (mut a, mut big_a) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut i_min, mut i_max) = (0, 0);
    for (i, h) in h0.iter().enumerate() {
        if *h < a {
            a = *h;
            i_min = i;
        }
        if *h > big_a {
            big_a = *h;
            i_max = i;
        }
    }
    let at_edge = |i: usize| i == 0 || i + 1 == g.cells;
    let constant = big_a - a <= 1e-12 * big_a.abs();
    let edge_extremum = !constant && (at_edge(i_min) || at_edge(i_max));
    let (sups, _) = h0_derivative_sups(&h0, g.spacing());
    let mut conditions = vec![
        Condition {
            name: "A2 a = min h0 > 0".into(),
            ok: a > 0.0,
            worst: a,
            witness: vec![g.center(i_min)],
            box_dependent: edge_extremum,
        },
        Condition {
            name: "A2 A = max h0 finite".into(),
            ok: big_a.is_finite(),
            worst: big_a,
            witness: vec![g.center(i_max)],
            box_dependent: edge_extremum,
        },
    ];
    for (k, s) in sups.iter().enumerate().skip(1) {
        conditions.push(Condition {
            name: format!("A2 |d^{k} h0|"),
            ok: s.is_finite() && *s <= DERIVATIVE_CAP,
            worst: *s,
            witness: Vec::new(),
            box_dependent: edge_extremum,
        });
    }
    let a2_ok = conditions.iter().all(|c| c.ok);

    let mut report = AssumptionReport {
        a2_ok: Some(a2_ok),
        a_lower: Some(a),
        a_upper: Some(big_a),
        sample_points: g.cells,
        regions: vec![format!("density grid [{}, {}] with {} cells", g.lower, g.upper, g.cells)],
        ..Default::default()
    };

    if let Some(run) = run {
        let mut c_k = [0.0f64; 4];
        let checkpoints = run.checkpoints.max(1);
        let mut state = rho0.clone();
        let mut failed = None;
        for c in 0..=checkpoints {
            let t = rho0.time + t_final * c as f64 / checkpoints as f64;
            match run.solver.advance_to(&state, t, run.dt) {
                Ok(s) => state = s,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
            let (_, edge) = h0_derivative_sups(&state.h0(potential), g.spacing());
            for k in 0..4 {
                c_k[k] = c_k[k].max(edge[k]);
            }
        }
        let ok = failed.is_none() && c_k.iter().all(|c| c.is_finite() && *c <= DERIVATIVE_CAP);
        conditions.push(Condition {
            name: "A3 boundary-zone sup |d^k h0| along run".into(),
            ok,
            worst: c_k.iter().cloned().fold(0.0, f64::max),
            witness: vec![t_final],
            box_dependent: true,
        });
        report.a3_ok = Some(ok);
        report.c_k = c_k.to_vec();
    }
    report.conditions = conditions;
    report
}

/// Growth and local-regularity conditions of the well-posedness result,
/// with velocities sampled from `[-v_max, v_max]ⁿ`.
pub fn check_prop1(
    mobility: &MobilityModel,
    potential: &PotentialModel,
    sampling: &Sampling,
    v_max: f64,
) -> AssumptionReport {
    let n = sampling.region.dim();
    let mut conditions = Vec::new();
    conditions.push(growth_condition("prop1 (i) |d G| + |d^2 V| on box".into(), sampling, DERIVATIVE_CAP, |x| {
        let dg = axis_derivative(&|y| friction_flat(mobility, y), x, 1)?;
        let dv = axis_derivative(&|y| Ok(potential.gradient(y)), x, 1)?;
        Ok(dg + dv)
    }));
    conditions
        .push(growth_condition("prop1 (ii) tr G".into(), sampling, GROWTH_CAP, |x| Ok(mobility.friction(x)?.trace())));
    // the ratio is linear in v for fixed x, so its sup over the velocity box sits at a corner
    let corners: Vec<Vec<f64>> = if n <= 10 {
        (0..(1usize << n)).map(|m| (0..n).map(|d| if m >> d & 1 == 1 { v_max } else { -v_max }).collect()).collect()
    } else {
        vec![vec![v_max; n], vec![-v_max; n]]
    };
    conditions.push(growth_condition(
        "prop1 (iii) |Gv + grad V| / (1 + |x| + |v|)".into(),
        sampling,
        GROWTH_CAP,
        |x| {
            let g = mobility.friction(x)?;
            let grad = nalgebra::DVector::from_vec(potential.gradient(x));
            let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let mut worst: f64 = 0.0;
            for v in corners.iter().chain(std::iter::once(&vec![0.0; n])) {
                let vv = nalgebra::DVector::from_column_slice(v);
                let r = (&g * &vv + &grad).norm() / (1.0 + xn + vv.norm());
                worst = worst.max(r);
            }
            Ok(worst)
        },
    ));
    conditions.push(growth_condition("prop1 (iv) |d G^1/2| on box".into(), sampling, DERIVATIVE_CAP, |x| {
        axis_derivative(&|y| Ok(crate::mobility::sqrt_psd(&mobility.friction(y)?)?.as_slice().to_vec()), x, 1)
    }));
    conditions.push(growth_condition("prop1 (v) |G^1/2| / (1 + |x|)".into(), sampling, GROWTH_CAP, |x| {
        let s = mobility.mobility_spectrum(x)?;
        let g_max = 1.0 / s.min();
        if !(g_max > 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(g_max.sqrt() / (1.0 + x.iter().map(|a| a * a).sum::<f64>().sqrt()))
    }));
    let ok = conditions.iter().all(|c| c.ok);
    AssumptionReport {
        prop1_ok: Some(ok),
        sample_points: sampling.points().len(),
        regions: vec![region_line(sampling)],
        conditions,
        ..Default::default()
    }
}

/// Local integrability of `G`, `G⁻¹`, `∇V`, `G^{-1/2}∇V` on the box (Monte
/// Carlo quadrature) and integrability of `e^{-V}`.
pub fn check_theorem1(mobility: &MobilityModel, potential: &PotentialModel, sampling: &Sampling) -> AssumptionReport {
    let points = sampling.region.random_points(sampling.n_samples.max(1), sampling.seed);
    let vol = sampling.region.volume();
    let mc = |name: &str, f: &dyn Fn(&[f64]) -> Result<f64>| -> Condition {
        let mut sum = 0.0;
        let mut worst = f64::NEG_INFINITY;
        let mut witness = Vec::new();
        for p in &points {
            let v = f(p).unwrap_or(f64::INFINITY);
            let v = if v.is_nan() { f64::INFINITY } else { v };
            sum += v;
            if v > worst {
                worst = v;
                witness = p.clone();
            }
        }
        let integral = vol * sum / points.len() as f64;
        Condition {
            name: name.into(),
            ok: integral.is_finite() && integral <= GROWTH_CAP * vol.max(1.0),
            worst: integral,
            witness,
            box_dependent: false,
        }
    };
    let mut conditions = vec![
        mc("theorem1 |G| in L1(box)", &|x| Ok(crate::linalg::frobenius(&mobility.friction(x)?))),
        mc("theorem1 |G^-1| in L1(box)", &|x| Ok(crate::linalg::frobenius(&mobility.mobility(x)?))),
        mc("theorem1 |grad V|^2 in L1(box)", &|x| Ok(potential.gradient(x).iter().map(|g| g * g).sum())),
        mc("theorem1 |G^-1/2 grad V|^2 in L1(box)", &|x| {
            let g = nalgebra::DVector::from_vec(potential.gradient(x));
            Ok(g.dot(&(mobility.mobility(x)? * &g)))
        }),
    ];
    conditions.push(exp_minus_v_integrable(potential, &sampling.region));
    let ok = conditions.iter().all(|c| c.ok);
    AssumptionReport {
        theorem1_ok: Some(ok),
        sample_points: points.len(),
        regions: vec![region_line(sampling)],
        conditions,
        ..Default::default()
    }
}

fn exp_minus_v_integrable(potential: &PotentialModel, region: &SampleBox) -> Condition {
    let name = "theorem1 e^-V in L1".to_string();
    let dim = potential.dim.max(1);
    let half = region
        .lower
        .iter()
        .zip(&region.upper)
        .fold(0.0f64, |m, (l, u)| m.max(l.abs()).max(u.abs()))
        .max(potential.suggested_half_width(TAIL_TOL).min(50.0));
    if dim <= 3 {
        let cells = match dim {
            1 => 2048,
            2 => 256,
            _ => 64,
        };
        return match gibbs_state(potential, &UniformGrid::symmetric(half, cells)) {
            Ok(s) => Condition { name, ok: true, worst: s.tail_mass, witness: vec![half], box_dependent: false },
            Err(Error::NotIntegrable { tail_mass }) => {
                Condition { name, ok: false, worst: tail_mass, witness: vec![half], box_dependent: false }
            }
            Err(_) => Condition { name, ok: false, worst: f64::INFINITY, witness: vec![half], box_dependent: false },
        };
    }
    // higher dimensions: e^{-(V - V(0))} must fall below the tail tolerance along
    // every axis and diagonal direction by radius 50
    let threshold = -TAIL_TOL.ln();
    let v0 = potential.value(&vec![0.0; dim]);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for d in 0..dim {
        for s in [-1.0, 1.0] {
            let mut u = vec![0.0; dim];
            u[d] = s;
            dirs.push(u);
        }
    }
    dirs.push(vec![1.0 / (dim as f64).sqrt(); dim]);
    dirs.push(vec![-1.0 / (dim as f64).sqrt(); dim]);
    for u in dirs {
        let p: Vec<f64> = u.iter().map(|c| c * 50.0).collect();
        let drop = potential.value(&p) - v0;
        if !(drop > threshold) {
            return Condition { name, ok: false, worst: (-drop).exp(), witness: p, box_dependent: false };
        }
    }
    Condition { name, ok: true, worst: 0.0, witness: Vec::new(), box_dependent: false }
}
