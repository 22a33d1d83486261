//! Friction and mobility tensors for spheres immersed in a Stokes fluid.
//!
//! The mobility `μ(x)` maps forces on the spheres to their velocities; the
//! friction tensor is its inverse, `G(x) = μ(x)⁻¹`. Both are dense symmetric
//! `3N × 3N` matrices assembled from `3 × 3` pair blocks.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::linalg::{frobenius, inf_norm, symmetrize, Spectrum};
use crate::{Error, Result};

/// Relative tolerance below which a negative eigenvalue counts as round-off.
pub const PSD_RELATIVE_TOL: f64 = 1e-10;
/// Relative tolerance below which a mobility eigenvalue counts as singular.
pub const INVERSION_RELATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereConfiguration {
    pub centers: Vec<Vector3<f64>>,
    pub radius: f64,
    pub viscosity: f64,
}

impl SphereConfiguration {
    pub fn new(centers: Vec<Vector3<f64>>, radius: f64, viscosity: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfiguration(format!("radius must be positive, got {radius}")));
        }
        if !(viscosity > 0.0 && viscosity.is_finite()) {
            return Err(Error::InvalidConfiguration(format!("viscosity must be positive, got {viscosity}")));
        }
        if let Some(i) = centers.iter().position(|c| !c.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidConfiguration(format!("center {i} is not finite")));
        }
        if centers.is_empty() {
            return Err(Error::InvalidConfiguration("no spheres".into()));
        }
        Ok(Self { centers, radius, viscosity })
    }

    /// Builds a configuration from a flat `3N` coordinate vector.
    pub fn from_flat(x: &[f64], radius: f64, viscosity: f64) -> Result<Self> {
        if x.is_empty() || !x.len().is_multiple_of(3) {
            return Err(Error::InvalidConfiguration(format!(
                "sphere coordinates need a multiple of 3 entries, got {}",
                x.len()
            )));
        }
        let centers = x.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        Self::new(centers, radius, viscosity)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn self_mobility(&self) -> f64 {
        1.0 / (6.0 * PI * self.viscosity * self.radius)
    }
}

/// Oseen mobility together with its degeneracy status.
///
/// The Oseen tensor loses positivity for close pairs; `degenerate` is set when
/// its smallest eigenvalue is negative.
#[derive(Debug, Clone)]
pub struct OseenMobility {
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub degenerate: bool,
}

fn outer(r: &Vector3<f64>) -> Matrix3<f64> {
    r * r.transpose()
}

fn assemble(n: usize, mut block: impl FnMut(usize, usize) -> Matrix3<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in i..n {
            let b = block(i, j);
            m.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(&b);
            if i != j {
                m.fixed_view_mut::<3, 3>(3 * j, 3 * i).copy_from(&b.transpose());
            }
        }
    }
    m
}

pub fn oseen_pair_block(r: &Vector3<f64>, viscosity: f64) -> Matrix3<f64> {
    let d = r.norm();
    let rh = r / d;
    (Matrix3::identity() + outer(&rh)) / (8.0 * PI * viscosity * d)
}

/// RPY block for a pair at separation `r`, picking the branch by `|r|` vs `2a`.
pub fn rpy_pair_block(r: &Vector3<f64>, radius: f64, viscosity: f64) -> Matrix3<f64> {
    let d = r.norm();
    if d > 2.0 * radius {
        rpy_far_block(r, radius, viscosity)
    } else {
        rpy_near_block(r, radius, viscosity)
    }
}

pub fn rpy_far_block(r: &Vector3<f64>, radius: f64, viscosity: f64) -> Matrix3<f64> {
    let d = r.norm();
    let rh = r / d;
    let a2 = radius * radius / (d * d);
    ((1.0 + 2.0 * a2 / 3.0) * Matrix3::identity() + (1.0 - 2.0 * a2) * outer(&rh)) / (8.0 * PI * viscosity * d)
}

pub fn rpy_near_block(r: &Vector3<f64>, radius: f64, viscosity: f64) -> Matrix3<f64> {
    let d = r.norm();
    let rr = if d > 0.0 { outer(&(r / d)) } else { Matrix3::zeros() };
    ((1.0 - 9.0 * d / (32.0 * radius)) * Matrix3::identity() + (3.0 * d / (32.0 * radius)) * rr)
        / (6.0 * PI * viscosity * radius)
}

pub fn build_oseen(cfg: &SphereConfiguration) -> Result<OseenMobility> {
    let n = cfg.len();
    for i in 0..n {
        for j in i + 1..n {
            if (cfg.centers[i] - cfg.centers[j]).norm() == 0.0 {
                return Err(Error::CoincidentCenters(i, j));
            }
        }
    }
    let self_mob = cfg.self_mobility();
    let matrix = assemble(n, |i, j| {
        if i == j {
            Matrix3::identity() * self_mob
        } else {
            oseen_pair_block(&(cfg.centers[i] - cfg.centers[j]), cfg.viscosity)
        }
    });
    let min_eigenvalue = Spectrum::of(&matrix).min();
    Ok(OseenMobility { matrix, min_eigenvalue, degenerate: min_eigenvalue < 0.0 })
}

/// Assembles the RPY mobility. Total for every configuration, overlapping
/// spheres included; errors only if round-off pushes it visibly non-PSD.
pub fn build_rpy(cfg: &SphereConfiguration) -> Result<DMatrix<f64>> {
    let self_mob = cfg.self_mobility();
    let matrix = assemble(cfg.len(), |i, j| {
        if i == j {
            Matrix3::identity() * self_mob
        } else {
            rpy_pair_block(&(cfg.centers[i] - cfg.centers[j]), cfg.radius, cfg.viscosity)
        }
    });
    let min_eigenvalue = Spectrum::of(&matrix).min();
    if min_eigenvalue < -PSD_RELATIVE_TOL * frobenius(&matrix) {
        return Err(Error::NumericalPsdViolation { min_eigenvalue });
    }
    Ok(matrix)
}

pub fn isotropic_friction(gamma: f64, total_dim: usize) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositiveGamma(gamma));
    }
    Ok(DMatrix::identity(total_dim, total_dim) * gamma)
}

/// Inverts a symmetric mobility into a friction tensor.
pub fn friction_from_mobility(mu: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = Spectrum::of(mu);
    let tolerance = INVERSION_RELATIVE_TOL * frobenius(mu);
    if spec.min() <= tolerance {
        return Err(Error::SingularMobility { min_eigenvalue: spec.min(), tolerance });
    }
    Ok(spec.map(|l| 1.0 / l))
}

/// Symmetric PSD square root by spectral decomposition.
///
/// Eigenvalues in `[-tol_psd, 0)` are clamped to zero.
pub fn sqrt_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = Spectrum::of(a);
    let tol = PSD_RELATIVE_TOL * frobenius(a);
    if spec.min() < -tol {
        return Err(Error::NotPsd { min_eigenvalue: spec.min() });
    }
    Ok(spec.map(|l| l.max(0.0).sqrt()))
}

/// Extreme eigenvalues of the two-sphere RPY mobility at a given center distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSpectrum {
    pub distance: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl PairSpectrum {
    /// Largest eigenvalue of the friction `G = μ⁻¹`.
    pub fn friction_max(&self) -> f64 {
        1.0 / self.lambda_min
    }
}

/// Extreme RPY eigenvalues of two spheres whose centers are `d` apart,
/// for each `d` in `distances`.
pub fn min_eigenvalue_scaling(radius: f64, viscosity: f64, distances: &[f64]) -> Result<Vec<PairSpectrum>> {
    distances
        .iter()
        .map(|&d| {
            let cfg = SphereConfiguration::new(vec![Vector3::zeros(), Vector3::new(d, 0.0, 0.0)], radius, viscosity)?;
            let spec = Spectrum::of(&build_rpy(&cfg)?);
            Ok(PairSpectrum { distance: d, lambda_min: spec.min(), lambda_max: spec.max() })
        })
        .collect()
}

/// Friction/mobility model evaluated at a configuration point `x`.
///
/// For `Oseen` and `Rpy`, `x` holds the `3N` sphere coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityModel {
    Isotropic {
        gamma: f64,
    },
    Oseen {
        radius: f64,
        viscosity: f64,
    },
    Rpy {
        radius: f64,
        viscosity: f64,
    },
    /// Constant user-supplied friction matrix `G`.
    Matrix(DMatrix<f64>),
}

impl MobilityModel {
    pub fn isotropic(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::NonPositiveGamma(gamma));
        }
        Ok(Self::Isotropic { gamma })
    }

    pub fn matrix(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(Error::InvalidConfiguration("friction matrix must be square".into()));
        }
        let asym = inf_norm(&(&g - g.transpose()));
        if asym > 1e-12 * inf_norm(&g) {
            return Err(Error::InvalidConfiguration("friction matrix must be symmetric".into()));
        }
        Ok(Self::Matrix(symmetrize(&g)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Isotropic { .. } => "isotropic",
            Self::Oseen { .. } => "oseen",
            Self::Rpy { .. } => "rpy",
            Self::Matrix(_) => "matrix",
        }
    }

    fn spheres(x: &[f64], radius: f64, viscosity: f64) -> Result<SphereConfiguration> {
        SphereConfiguration::from_flat(x, radius, viscosity)
    }

    /// `μ(x) = G(x)⁻¹`.
    pub fn mobility(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            Self::Isotropic { gamma } => Ok(DMatrix::identity(x.len(), x.len()) / *gamma),
            Self::Oseen { radius, viscosity } => Ok(build_oseen(&Self::spheres(x, *radius, *viscosity)?)?.matrix),
            Self::Rpy { radius, viscosity } => build_rpy(&Self::spheres(x, *radius, *viscosity)?),
            Self::Matrix(g) => {
                self.check_dim(x.len())?;
                friction_from_mobility(g)
            }
        }
    }

    /// `G(x)`.
    pub fn friction(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            Self::Isotropic { gamma } => isotropic_friction(*gamma, x.len()),
            Self::Matrix(g) => {
                self.check_dim(x.len())?;
                Ok(g.clone())
            }
            _ => friction_from_mobility(&self.mobility(x)?),
        }
    }

    /// Spectrum of the mobility `μ(x)`; eigenvectors are shared with `G(x)`.
    pub fn mobility_spectrum(&self, x: &[f64]) -> Result<Spectrum> {
        match self {
            Self::Matrix(g) => {
                self.check_dim(x.len())?;
                let mut s = Spectrum::of(g);
                // invert and re-sort ascending
                let n = s.values.len();
                let vals: Vec<f64> = s.values.iter().map(|l| 1.0 / l).collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
                let vecs = s.vectors.clone();
                for (dst, &src) in order.iter().enumerate() {
                    s.values[dst] = vals[src];
                    s.vectors.set_column(dst, &vecs.column(src));
                }
                Ok(s)
            }
            _ => Ok(Spectrum::of(&self.mobility(x)?)),
        }
    }

    /// Scalar friction `G(x)` for one-dimensional grid solvers.
    pub fn scalar_friction(&self, _x: f64) -> Result<f64> {
        match self {
            Self::Isotropic { gamma } => Ok(*gamma),
            Self::Matrix(g) if g.nrows() == 1 => {
                let v = g[(0, 0)];
                if v > 0.0 {
                    Ok(v)
                } else {
                    Err(Error::NonPositiveGamma(v))
                }
            }
            other => Err(Error::Unsupported(format!(
                "{} mobility has no scalar form for one-dimensional solvers",
                other.name()
            ))),
        }
    }

    /// Isotropic friction coefficient, if the model is isotropic.
    pub fn isotropic_gamma(&self) -> Option<f64> {
        match self {
            Self::Isotropic { gamma } => Some(*gamma),
            _ => None,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if let Self::Matrix(g) = self {
            if g.nrows() != n {
                return Err(Error::InvalidConfiguration(format!(
                    "friction matrix is {}x{} but the configuration has dimension {n}",
                    g.nrows(),
                    g.nrows()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn pair(d: f64, a: f64, eta: f64) -> SphereConfiguration {
        SphereConfiguration::new(vec![Vector3::zeros(), Vector3::new(d, 0.0, 0.0)], a, eta).unwrap()
    }

    fn unit(theta: f64, phi: f64) -> Vector3<f64> {
        Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    #[test]
    fn oseen_single_sphere_is_identity_for_unit_drag() {
        let cfg = SphereConfiguration::new(vec![Vector3::zeros()], 1.0, 1.0 / (6.0 * PI)).unwrap();
        let m = build_oseen(&cfg).unwrap();
        assert!((m.matrix - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        assert!(!m.degenerate);
    }

    #[test]
    fn oseen_pair_off_diagonal_block() {
        let (r, eta) = (5.0, 0.7);
        let m = build_oseen(&pair(r, 1.0, eta)).unwrap().matrix;
        let c = 1.0 / (8.0 * PI * eta * r);
        let expected = Matrix3::from_diagonal(&Vector3::new(2.0 * c, c, c));
        let block = m.fixed_view::<3, 3>(0, 3).into_owned();
        assert!((block - expected).amax() < 1e-15);
    }

    #[test]
    fn oseen_degenerates_for_close_pair() {
        let m = build_oseen(&pair(0.05, 1.0, 1.0)).unwrap();
        assert!(m.min_eigenvalue < 0.0);
        assert!(m.degenerate);
        let far = build_oseen(&pair(10.0, 1.0, 1.0)).unwrap();
        assert!(!far.degenerate);
    }

    #[test]
    fn oseen_rejects_coincident_centers() {
        assert!(matches!(build_oseen(&pair(0.0, 1.0, 1.0)), Err(Error::CoincidentCenters(0, 1))));
    }

    #[test]
    fn rpy_branches_agree_at_contact() {
        let (a, eta) = (0.8, 1.3);
        let r = Vector3::new(2.0 * a, 0.0, 0.0);
        let far = rpy_far_block(&r, a, eta);
        let near = rpy_near_block(&r, a, eta);
        let expected =
            Matrix3::identity() * (7.0 / (96.0 * PI * eta * a)) + outer(&Vector3::x()) / (32.0 * PI * eta * a);
        assert!((far - near).amax() <= 1e-12 * far.amax());
        assert!((far - expected).amax() <= 1e-12 * far.amax());
    }

    #[test]
    fn rpy_coincident_pair_is_singular_but_psd() {
        let (a, eta) = (1.0, 1.0);
        let m = build_rpy(&pair(0.0, a, eta)).unwrap();
        let self_block = m.fixed_view::<3, 3>(0, 0).into_owned();
        let off = m.fixed_view::<3, 3>(0, 3).into_owned();
        assert!((self_block - off).amax() < 1e-15);
        let spec = Spectrum::of(&m);
        assert!(spec.min().abs() < 1e-14);
        assert!(spec.min() >= -PSD_RELATIVE_TOL * frobenius(&m));
    }

    #[test]
    fn rpy_single_sphere_matches_oseen() {
        let cfg = SphereConfiguration::new(vec![Vector3::new(1.0, 2.0, 3.0)], 0.5, 2.0).unwrap();
        let rpy = build_rpy(&cfg).unwrap();
        let os = build_oseen(&cfg).unwrap().matrix;
        assert!((rpy - os).amax() < 1e-16);
    }

    #[test]
    fn isotropic_cases() {
        assert_eq!(isotropic_friction(1.0, 2).unwrap(), DMatrix::<f64>::identity(2, 2));
        assert_eq!(isotropic_friction(3.0, 1).unwrap()[(0, 0)], 3.0);
        assert!(matches!(isotropic_friction(0.0, 2), Err(Error::NonPositiveGamma(_))));
    }

    #[test]
    fn friction_inversion_cases() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((friction_from_mobility(&id).unwrap() - &id).amax() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let g = friction_from_mobility(&d).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-15 && (g[(1, 1)] - 0.25).abs() < 1e-15);
        let near = build_rpy(&pair(1e-14, 1.0, 1.0)).unwrap();
        assert!(matches!(friction_from_mobility(&near), Err(Error::SingularMobility { .. })));
    }

    #[test]
    fn sqrt_cases() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((sqrt_psd(&id).unwrap() - &id).amax() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let s = sqrt_psd(&d).unwrap();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-14 && (s[(1, 1)] - 3.0).abs() < 1e-14);
        let a = build_rpy(&pair(6.0, 1.0, 1.0)).unwrap();
        let s = sqrt_psd(&a).unwrap();
        assert!(frobenius(&(&s * &s - &a)) <= 1e-10 * (1.0 + frobenius(&a)));
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(sqrt_psd(&bad), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn near_contact_eigenvalues_scale_linearly() {
        let (a, eta) = (1.0, 1.0);
        let gaps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let spec = min_eigenvalue_scaling(a, eta, &gaps).unwrap();
        for w in spec.windows(2) {
            let ratio = w[1].lambda_min / w[0].lambda_min;
            assert!((ratio - 0.5).abs() < 0.1, "ratio {ratio}");
            // the smallest mode is along the line of centers: (6πηa)⁻¹·6d/(32a)
        }
        let exact = 6.0 * gaps[0] / (32.0 * a) / (6.0 * PI * eta * a);
        assert!((spec[0].lambda_min - exact).abs() < 1e-12 * exact);
        let touching = min_eigenvalue_scaling(a, eta, &[2.0 * a]).unwrap();
        assert!(touching[0].lambda_min > 0.0);
    }

    #[test]
    fn model_dispatch() {
        let iso = MobilityModel::isotropic(2.0).unwrap();
        assert_eq!(iso.friction(&[0.0, 1.0]).unwrap()[(1, 1)], 2.0);
        assert_eq!(iso.mobility(&[0.0]).unwrap()[(0, 0)], 0.5);
        assert_eq!(iso.scalar_friction(3.0).unwrap(), 2.0);
        let rpy = MobilityModel::Rpy { radius: 1.0, viscosity: 1.0 };
        assert!(rpy.scalar_friction(0.0).is_err());
        let x = [0.0, 0.0, 0.0, 3.0, 0.0, 0.0];
        let g = rpy.friction(&x).unwrap();
        let mu = rpy.mobility(&x).unwrap();
        assert!((g * mu - DMatrix::<f64>::identity(6, 6)).amax() < 1e-10);
        let m = MobilityModel::matrix(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let s = m.mobility_spectrum(&[0.0, 0.0]).unwrap();
        let mu = m.mobility(&[0.0, 0.0]).unwrap();
        assert!((s.map(|l| l) - mu).amax() < 1e-12);
        assert!(s.values[0] <= s.values[1]);
    }

    fn random_config(coords: &[f64], radius: f64) -> SphereConfiguration {
        SphereConfiguration::from_flat(coords, radius, 1.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rpy_symmetric_and_psd(
            coords in prop::collection::vec(-2.0f64..2.0, 3..=15),
            radius in 0.2f64..1.5,
        ) {
            let n = coords.len() / 3 * 3;
            let cfg = random_config(&coords[..n], radius);
            let m = build_rpy(&cfg).unwrap();
            prop_assert!(inf_norm(&(&m - m.transpose())) <= 1e-12 * inf_norm(&m));
            prop_assert!(Spectrum::of(&m).min() >= -1e-10 * frobenius(&m));
        }

        #[test]
        fn rpy_branch_continuity(theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), radius in 0.1f64..3.0) {
            let r = unit(theta, phi) * (2.0 * radius);
            let far = rpy_far_block(&r, radius, 1.0);
            let near = rpy_near_block(&r, radius, 1.0);
            prop_assert!((far - near).amax() <= 1e-12 * far.amax());
        }

        #[test]
        fn sqrt_reconstructs(coords in prop::collection::vec(-3.0f64..3.0, 6..=12)) {
            let n = coords.len() / 3 * 3;
            let a = build_rpy(&random_config(&coords[..n], 0.5)).unwrap();
            let s = sqrt_psd(&a).unwrap();
            prop_assert!(frobenius(&(&s * &s - &a)) <= 1e-10 * (1.0 + frobenius(&a)));
        }

        #[test]
        fn inversion_is_an_involution(diag in prop::collection::vec(0.5f64..4.0, 2..6), seed in 0u64..1000) {
            let n = diag.len();
            // well-conditioned SPD: rotate a positive diagonal
            let mut q = DMatrix::<f64>::identity(n, n);
            let angle = seed as f64 * 0.37;
            if n >= 2 {
                q[(0, 0)] = angle.cos();
                q[(0, 1)] = -angle.sin();
                q[(1, 0)] = angle.sin();
                q[(1, 1)] = angle.cos();
            }
            let mu = &q * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.transpose();
            let g = friction_from_mobility(&mu).unwrap();
            let back = friction_from_mobility(&g).unwrap();
            prop_assert!((back - &mu).amax() <= 1e-9);
        }
    }
}
