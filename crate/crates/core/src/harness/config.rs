//! Run configuration and its plain-text file format.
//!
//! The format is line based: `key = value`, `#` starts a comment, and a
//! `[section]` header prefixes the keys that follow with `section.`; dotted
//! keys such as `potential.kind = harmonic` work without a header. Lists are
//! comma separated, optionally wrapped in brackets. Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::kinetic::CollisionScheme;
use crate::mobility::MobilityModel;
use crate::potentials::{PotentialModel, TAIL_TOL};
use crate::smoluchowski::DensityState;
use crate::{Error, Result, UniformGrid};

const KNOWN_KEYS: &[&str] = &[
    "run_id",
    "seed",
    "dimension",
    "t_final",
    "epsilons",
    "solver",
    "snapshots",
    "output",
    "potential.kind",
    "potential.k",
    "potential.alpha",
    "potential.beta",
    "potential.knots",
    "potential.values",
    "mobility.kind",
    "mobility.gamma",
    "mobility.radius",
    "mobility.viscosity",
    "mobility.matrix",
    "mobility.gaps",
    "initial.kind",
    "initial.mean",
    "initial.variance",
    "initial.tilt",
    "grid.lx",
    "grid.nx",
    "grid.lv",
    "grid.nv",
    "grid.dx_per_eps",
    "grid.cfl",
    "grid.collision",
    "smoluchowski.dt",
    "ensemble.size",
    "ensemble.dt_per_eps",
    "assumptions.samples",
];

/// Flat `key → value` map read from a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::ConfigInvalid(format!("line {}: unterminated section header", n + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::ConfigInvalid(format!("line {}: empty key", n + 1)));
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::ConfigInvalid(format!("line {}: unknown key `{key}`", n + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::ConfigInvalid(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::ConfigInvalid(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
        inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| Error::ConfigInvalid(format!("`{key}`: cannot parse `{s}`"))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Grid,
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpec {
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Equilibrium,
    /// `ρ₀ ∝ e^{-V}(1 + tilt·tanh x)`, `|tilt| < 1`.
    Tilted {
        tilt: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    /// Minimum number of `x`-cells.
    pub nx: usize,
    pub lv: f64,
    pub nv: usize,
    /// When set, `Δx ≤ dx_per_eps · ε` is enforced by raising `N_x`.
    pub dx_per_eps: Option<f64>,
    pub cfl: f64,
    pub collision: CollisionScheme,
}

impl GridSpec {
    pub fn x_grid(&self, epsilon: f64) -> UniformGrid {
        let mut nx = self.nx;
        if let Some(c) = self.dx_per_eps {
            nx = nx.max((2.0 * self.lx / (c * epsilon)).ceil() as usize);
        }
        UniformGrid::symmetric(self.lx, nx)
    }

    pub fn v_grid(&self) -> UniformGrid {
        UniformGrid::symmetric(self.lv, self.nv)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub run_id: String,
    pub seed: u64,
    pub dimension: usize,
    pub t_final: f64,
    pub epsilons: Vec<f64>,
    pub solver: SolverKind,
    pub snapshots: usize,
    pub output: PathBuf,
    pub potential: PotentialModel,
    pub mobility: MobilityModel,
    /// Centre distances probed by `mobility-info`.
    pub mobility_gaps: Vec<f64>,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub smoluchowski_dt: f64,
    pub ensemble_size: usize,
    pub ensemble_dt_per_eps: f64,
    pub assumption_samples: usize,
}

fn parse_potential(m: &ConfigMap, dim: usize) -> Result<PotentialModel> {
    match m.get("potential.kind").unwrap_or("harmonic") {
        "harmonic" => {
            let k = m.f64_or("potential.k", 1.0)?;
            if !(k > 0.0) {
                return Err(Error::ConfigInvalid("potential.k must be positive".into()));
            }
            Ok(PotentialModel::harmonic(k, dim))
        }
        "double_well" => {
            if dim != 1 {
                return Err(Error::ConfigInvalid("double_well is one-dimensional".into()));
            }
            Ok(PotentialModel::double_well(m.f64_or("potential.alpha", 1.0)?, m.f64_or("potential.beta", 1.0)?))
        }
        "tabulated" => {
            let knots =
                m.list("potential.knots")?.ok_or_else(|| Error::ConfigInvalid("potential.knots missing".into()))?;
            let values =
                m.list("potential.values")?.ok_or_else(|| Error::ConfigInvalid("potential.values missing".into()))?;
            PotentialModel::tabulated(knots, values).map_err(|e| Error::ConfigInvalid(e.to_string()))
        }
        other => Err(Error::ConfigInvalid(format!("unknown potential.kind `{other}`"))),
    }
}

fn parse_mobility(m: &ConfigMap, dim: usize) -> Result<MobilityModel> {
    let positive = |key: &str, default: f64| -> Result<f64> {
        let v = m.f64_or(key, default)?;
        if !(v > 0.0) {
            return Err(Error::ConfigInvalid(format!("{key} must be positive")));
        }
        Ok(v)
    };
    match m.get("mobility.kind").unwrap_or("isotropic") {
        "isotropic" => MobilityModel::isotropic(positive("mobility.gamma", 1.0)?),
        kind @ ("oseen" | "rpy") => {
            let radius = positive("mobility.radius", 1.0)?;
            let viscosity = positive("mobility.viscosity", 1.0)?;
            Ok(if kind == "oseen" {
                MobilityModel::Oseen { radius, viscosity }
            } else {
                MobilityModel::Rpy { radius, viscosity }
            })
        }
        "matrix" => {
            let entries =
                m.list("mobility.matrix")?.ok_or_else(|| Error::ConfigInvalid("mobility.matrix missing".into()))?;
            if entries.len() != dim * dim {
                return Err(Error::ConfigInvalid(format!(
                    "mobility.matrix needs {} entries for dimension {dim}",
                    dim * dim
                )));
            }
            MobilityModel::matrix(DMatrix::from_row_slice(dim, dim, &entries))
                .map_err(|e| Error::ConfigInvalid(e.to_string()))
        }
        other => Err(Error::ConfigInvalid(format!("unknown mobility.kind `{other}`"))),
    }
}

impl RunConfig {
    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        let dimension = m.usize_or("dimension", 1)?;
        if dimension == 0 {
            return Err(Error::ConfigInvalid("dimension must be at least 1".into()));
        }
        let potential = parse_potential(m, dimension)?;
        let mobility = parse_mobility(m, dimension)?;
        let epsilons = m.list("epsilons")?.unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05]);
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::ConfigInvalid("epsilons must be a non-empty list of positive values".into()));
        }
        if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::ConfigInvalid("epsilons must be strictly decreasing".into()));
        }
        let t_final = m.f64_or("t_final", 1.0)?;
        if !(t_final > 0.0) {
            return Err(Error::ConfigInvalid("t_final must be positive".into()));
        }
        let solver = match m.get("solver").unwrap_or("grid") {
            "grid" => SolverKind::Grid,
            "ensemble" => SolverKind::Ensemble,
            other => return Err(Error::ConfigInvalid(format!("unknown solver `{other}`"))),
        };
        let initial = match m.get("initial.kind").unwrap_or("gaussian") {
            "gaussian" => {
                let variance = m.f64_or("initial.variance", 2.0)?;
                if !(variance > 0.0) {
                    return Err(Error::ConfigInvalid("initial.variance must be positive".into()));
                }
                InitialSpec::Gaussian { mean: m.f64_or("initial.mean", 0.0)?, variance }
            }
            "equilibrium" => InitialSpec::Equilibrium,
            "tilted" => {
                let tilt = m.f64_or("initial.tilt", 0.5)?;
                if !(tilt.abs() < 1.0) {
                    return Err(Error::ConfigInvalid("initial.tilt must lie in (-1, 1)".into()));
                }
                InitialSpec::Tilted { tilt }
            }
            other => return Err(Error::ConfigInvalid(format!("unknown initial.kind `{other}`"))),
        };
        let lx = match m.parsed::<f64>("grid.lx")? {
            Some(v) => v,
            None => (potential.suggested_half_width(TAIL_TOL) * 2.0).ceil() / 2.0,
        };
        let dx_per_eps = match m.get("grid.dx_per_eps") {
            Some("none") => None,
            _ => Some(m.f64_or("grid.dx_per_eps", 0.5)?),
        };
        let collision = match m.get("grid.collision").unwrap_or("exact") {
            "exact" => CollisionScheme::Exact,
            "implicit" => CollisionScheme::ImplicitEuler,
            other => return Err(Error::ConfigInvalid(format!("unknown grid.collision `{other}`"))),
        };
        let grid = GridSpec {
            lx,
            nx: m.usize_or("grid.nx", 128)?,
            lv: m.f64_or("grid.lv", 6.0)?,
            nv: m.usize_or("grid.nv", 128)?,
            dx_per_eps,
            cfl: m.f64_or("grid.cfl", 0.9)?,
            collision,
        };
        if !(grid.lx > 0.0 && grid.lv > 0.0) || grid.nx < 8 || grid.nv < 8 {
            return Err(Error::ConfigInvalid("grid needs positive extents and at least 8 cells per axis".into()));
        }
        if !(grid.cfl > 0.0 && grid.cfl <= 1.0) {
            return Err(Error::ConfigInvalid("grid.cfl must lie in (0, 1]".into()));
        }
        if dx_per_eps.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::ConfigInvalid("grid.dx_per_eps must be positive".into()));
        }
        if solver == SolverKind::Grid && dimension != 1 {
            return Err(Error::ConfigInvalid("the grid solver is one-dimensional; use solver = ensemble".into()));
        }
        let snapshots = m.usize_or("snapshots", 200)?;
        let ensemble_size = m.usize_or("ensemble.size", 100_000)?;
        if ensemble_size == 0 {
            return Err(Error::ConfigInvalid("ensemble.size must be at least 1".into()));
        }
        let seed = match m.get("seed") {
            None => 0,
            Some(s) => s.parse::<u64>().map_err(|_| Error::ConfigInvalid(format!("seed `{s}` is not a u64")))?,
        };
        Ok(Self {
            run_id: m.get("run_id").unwrap_or("run").to_string(),
            seed,
            dimension,
            t_final,
            epsilons,
            solver,
            snapshots,
            output: PathBuf::from(m.get("output").unwrap_or("out")),
            potential,
            mobility,
            mobility_gaps: m.list("mobility.gaps")?.unwrap_or_else(|| vec![1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2]),
            initial,
            grid,
            smoluchowski_dt: m.f64_or("smoluchowski.dt", 1e-4)?,
            ensemble_size,
            ensemble_dt_per_eps: m.f64_or("ensemble.dt_per_eps", 0.02)?,
            assumption_samples: m.usize_or("assumptions.samples", 200)?,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The reference benchmark shipped as `configs/benchmark.conf`: harmonic
    /// `V`, `G = 1`, Gaussian `ρ₀` with variance 2.
    pub fn benchmark() -> Self {
        Self::parse(include_str!("../../../../configs/benchmark.conf")).expect("shipped benchmark is valid")
    }

    /// Snapshot times `kT/N`, `k = 0..=N`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let n = self.snapshots.max(1);
        (0..=n).map(|k| self.t_final * k as f64 / n as f64).collect()
    }

    pub fn initial_density(&self, grid: UniformGrid) -> Result<DensityState> {
        match self.initial {
            InitialSpec::Gaussian { mean, variance } => DensityState::gaussian(grid, mean, variance),
            InitialSpec::Equilibrium => DensityState::equilibrium(grid, &self.potential),
            InitialSpec::Tilted { tilt } => {
                let v_min = grid.centers().iter().map(|&x| self.potential.value_1d(x)).fold(f64::INFINITY, f64::min);
                DensityState::from_shape(grid, |x| (v_min - self.potential.value_1d(x)).exp() * (1.0 + tilt * x.tanh()))
            }
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.join(&self.run_id)
    }
}
