use hydrolimit::assumptions::{check_a1, check_a2_a3, check_prop1, check_theorem1, LimitRun, SampleBox, Sampling};
use hydrolimit::mobility::MobilityModel;
use hydrolimit::potentials::PotentialModel;
use hydrolimit::smoluchowski::{DensityState, SmoluchowskiSolver};
use hydrolimit::UniformGrid;

fn sampling(dim: usize, half_width: f64) -> Sampling {
    Sampling::new(SampleBox::cube(dim, half_width), 200, 31)
}

#[test]
fn identity_friction_in_a_harmonic_well_passes() {
    let mob = MobilityModel::isotropic(1.0).unwrap();
    let pot = PotentialModel::harmonic(1.0, 1);
    let s = sampling(1, 4.0);
    let report = check_theorem1(&mob, &pot, &s).merge(check_a1(&mob, &pot, &s)).merge(check_prop1(&mob, &pot, &s, 6.0));
    assert!(report.passed(), "{}", report.to_text());
    assert_eq!(report.lambda, Some(1.0));
    assert_eq!(report.failures().count(), 0);
}

#[test]
fn near_contact_rpy_spheres_fail_the_lower_bound() {
    let mob = MobilityModel::Rpy { radius: 1.0, viscosity: 1.0 };
    let pot = PotentialModel::harmonic(1.0, 6);
    // second sphere kept about five radii from the first
    let region = SampleBox::new(vec![-0.5, -0.5, -0.5, 4.5, -0.5, -0.5], vec![0.5, 0.5, 0.5, 5.5, 0.5, 0.5]).unwrap();
    let separated = check_a1(&mob, &pot, &Sampling::new(region.clone(), 100, 5));
    assert!(separated.lambda.unwrap() > 0.0);
    let lower = separated.conditions.iter().find(|c| c.name.starts_with("A1 lambda")).unwrap();
    assert!(lower.ok, "{lower:?}");

    let s = Sampling::new(region, 100, 5).with_points(vec![vec![0.0, 0.0, 0.0, 1e-9, 0.0, 0.0]]);
    let report = check_a1(&mob, &pot, &s);
    assert_eq!(report.a1_ok, Some(false));
    let lower = report.conditions.iter().find(|c| c.name.starts_with("A1 lambda")).unwrap();
    assert!(!lower.ok);
    assert_eq!(lower.witness, vec![0.0, 0.0, 0.0, 1e-9, 0.0, 0.0]);
}

#[test]
fn well_separated_rpy_spheres_have_a_positive_floor() {
    let mob = MobilityModel::Rpy { radius: 1.0, viscosity: 1.0 };
    let far = [0.0, 0.0, 0.0, 10.0, 0.0, 0.0];
    let s = mob.mobility_spectrum(&far).unwrap();
    assert!(s.min() > 0.0);
}

#[test]
fn quartic_growth_is_flagged_as_box_dependent() {
    let mob = MobilityModel::isotropic(1.0).unwrap();
    let pot = PotentialModel::custom("quartic", 1, |x| x[0].powi(4));
    let report = check_prop1(&mob, &pot, &sampling(1, 3.0), 4.0);
    let growth = report.conditions.iter().find(|c| c.name.starts_with("prop1 (iii)")).unwrap();
    assert!(growth.ok, "finite on the box");
    assert!(growth.box_dependent, "cubic gradient outgrows the linear bound");
    let harmonic = check_prop1(&mob, &PotentialModel::harmonic(1.0, 1), &sampling(1, 3.0), 4.0);
    assert!(harmonic.conditions.iter().all(|c| !c.box_dependent || !c.name.starts_with("prop1 (iii)")));
}

#[test]
fn super_exponential_potential_fails_linear_growth() {
    let mob = MobilityModel::isotropic(1.0).unwrap();
    let pot = PotentialModel::custom("gaussian wall", 1, |x| (x[0] * x[0]).exp());
    let report = check_prop1(&mob, &pot, &sampling(1, 4.0), 4.0);
    assert_eq!(report.prop1_ok, Some(false));
    assert!(report.failures().any(|c| c.name.starts_with("prop1 (iii)")));
}

#[test]
fn inverted_well_fails_integrability() {
    let mob = MobilityModel::isotropic(1.0).unwrap();
    let pot = PotentialModel::custom("inverted", 1, |x| -x[0] * x[0]);
    let report = check_theorem1(&mob, &pot, &sampling(1, 2.0));
    assert_eq!(report.theorem1_ok, Some(false));
    assert!(report.failures().any(|c| c.name == "theorem1 e^-V in L1"));
}

#[test]
fn compactly_supported_start_fails_the_lower_gibbs_bound() {
    let grid = UniformGrid::symmetric(3.0, 120);
    let pot = PotentialModel::harmonic(1.0, 1);
    let rho0 = DensityState::from_shape(grid, |x| (1.0 - x * x).max(0.0)).unwrap();
    let report = check_a2_a3(&rho0, &pot, 1.0, None);
    assert_eq!(report.a2_ok, Some(false));
    assert_eq!(report.a_lower, Some(0.0));
}

#[test]
fn wide_gaussian_passes_on_the_box_but_is_box_dependent() {
    let grid = UniformGrid::symmetric(3.0, 120);
    let pot = PotentialModel::harmonic(1.0, 1);
    let rho0 = DensityState::gaussian(grid, 0.0, 4.0).unwrap();
    let report = check_a2_a3(&rho0, &pot, 1.0, None);
    assert_eq!(report.a2_ok, Some(true));
    // h0 grows like e^{3x^2/8}, so its maximum sits on the box edge
    let upper = report.conditions.iter().find(|c| c.name.starts_with("A2 A")).unwrap();
    assert!(upper.box_dependent);
    assert!((upper.witness[0].abs() - grid.center(0).abs()).abs() < 1e-12);
}

#[test]
fn gibbs_proportional_start_passes_with_a_limit_run() {
    let grid = UniformGrid::symmetric(4.0, 128);
    let pot = PotentialModel::harmonic(1.0, 1);
    let mob = MobilityModel::isotropic(1.0).unwrap();
    let rho0 = DensityState::from_shape(grid, |x| (-0.5 * x * x).exp() * (1.0 + 0.5 * x.tanh())).unwrap();
    let solver = SmoluchowskiSolver::new(grid, &mob, &pot).unwrap();
    let report = check_a2_a3(&rho0, &pot, 1.0, Some(LimitRun { solver: &solver, dt: 1e-3, checkpoints: 10 }));
    assert!(report.passed(), "{}", report.to_text());
    assert_eq!(report.a3_ok, Some(true));
    assert_eq!(report.c_k.len(), 4);
    let (a, big_a) = (report.a_lower.unwrap(), report.a_upper.unwrap());
    assert!(a > 0.0 && big_a / a < 3.0 + 1e-9, "a = {a}, A = {big_a}");
}

#[test]
fn isotropic_trace_is_gamma_times_dimension() {
    let mob = MobilityModel::isotropic(2.5).unwrap();
    for dim in [1, 3, 6] {
        let g = mob.friction(&vec![0.3; dim]).unwrap();
        assert!((g.trace() - 2.5 * dim as f64).abs() < 1e-14);
    }
}

#[test]
fn rpy_friction_is_locally_integrable_in_six_dimensions() {
    let mob = MobilityModel::Rpy { radius: 1.0, viscosity: 1.0 };
    let pot = PotentialModel::harmonic(1.0, 6);
    let report = check_theorem1(&mob, &pot, &sampling(6, 3.0));
    let g = report.conditions.iter().find(|c| c.name == "theorem1 |G| in L1(box)").unwrap();
    assert!(g.ok && g.worst.is_finite() && g.worst > 0.0, "{g:?}");
}

#[test]
fn reports_are_deterministic() {
    let mob = MobilityModel::Rpy { radius: 1.0, viscosity: 1.0 };
    let pot = PotentialModel::harmonic(1.0, 6);
    let run = || {
        let s = sampling(6, 3.0);
        check_theorem1(&mob, &pot, &s).merge(check_a1(&mob, &pot, &s)).merge(check_prop1(&mob, &pot, &s, 3.0))
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
    let other = check_theorem1(&mob, &pot, &Sampling::new(SampleBox::cube(6, 3.0), 200, 32));
    assert_ne!(other.conditions[0].worst, a.conditions[0].worst, "a new seed draws new points");
}

#[test]
fn sample_box_rejects_inverted_bounds() {
    assert!(SampleBox::new(vec![1.0], vec![0.0]).is_err());
    assert!(SampleBox::new(vec![], vec![]).is_err());
    let b = SampleBox::cube(2, 1.0);
    assert_eq!(b.doubled().lower, vec![-2.0, -2.0]);
    assert!(b.random_points(50, 1).iter().flatten().all(|c| c.abs() <= 1.0));
}
