use std::f64::consts::PI;
use std::sync::OnceLock;

use choquard::ground_state::GroundState;
use choquard::potential::{check_well, QuadraticWell, Region, ScalarPotential, VectorPotential, Well};
use choquard::semiclassical::{
    build_ansatz, cutoff, decay_envelope_check, decomposition_remainder, gamma_eps, gauge_shift, local_maxima,
    magnetic_residual, norm_eps, relax, Bump, BumpSet, PotentialSpec,
};
use choquard::{coulomb, make_grid, norms, ComplexField, Grid3, Kernel, RealField};
use num_complex::Complex64;
use proptest::prelude::*;

fn well(center: [f64; 3], radius: f64) -> Well {
    Well { region: Region::Ball { center, radius }, minimum: 1.0, minimizers: vec![center] }
}

fn single() -> PotentialSpec {
    PotentialSpec {
        v: ScalarPotential::QuadraticWells {
            baseline: 2.0,
            wells: vec![QuadraticWell { center: [0.0; 3], depth: 1.0, curvature: 0.25 }],
        },
        a: VectorPotential::uniform_field([0.0, 0.0, 0.3]),
        wells: vec![well([0.0; 3], 1.5)],
        zero_set: vec![],
        m_tilde: 0.5,
        eps: 0.5,
        mu: 6.0,
        beta: 0.1,
        delta_fraction: 0.1,
    }
}

fn pair() -> PotentialSpec {
    PotentialSpec {
        v: ScalarPotential::QuadraticWells {
            baseline: 2.0,
            wells: vec![
                QuadraticWell { center: [-1.5, 0.0, 0.0], depth: 1.0, curvature: 1.0 },
                QuadraticWell { center: [1.5, 0.0, 0.0], depth: 1.0, curvature: 1.0 },
            ],
        },
        wells: vec![well([-1.5, 0.0, 0.0], 1.0), well([1.5, 0.0, 0.0], 1.0)],
        beta: 0.2,
        delta_fraction: 0.45,
        ..single()
    }
}

fn setup() -> &'static (Grid3, Kernel, GroundState) {
    static S: OnceLock<(Grid3, Kernel, GroundState)> = OnceLock::new();
    S.get_or_init(|| {
        let grid = make_grid(32, 8.0).unwrap();
        let kern = coulomb(grid).unwrap();
        let profile = RealField::from_fn(grid, |x| 0.6 * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
        let gs = GroundState::from_profile(profile, 1.0, &kern).unwrap();
        (grid, kern, gs)
    })
}

#[test]
fn delta_follows_geometry() {
    assert!((single().delta() - 0.15).abs() < 1e-12);
    // depth 1, separation 1: δ = 0.45
    assert!((pair().delta() - 0.45).abs() < 1e-12);
    let with_zero = PotentialSpec { zero_set: vec![[0.0, 1.8, 0.0]], ..single() };
    assert!((with_zero.delta() - 0.1 * 0.3).abs() < 1e-12);
    assert!((single().with_eps(0.125).chi() - 8.0).abs() < 1e-12);
}

#[test]
fn validation_catches_bad_setups() {
    let (grid, _, _) = setup();
    single().validate(grid).unwrap();
    assert!(PotentialSpec { beta: 0.2, ..single() }.validate(grid).is_err());
    assert!(PotentialSpec { eps: 0.0, ..single() }.validate(grid).is_err());
    assert!(PotentialSpec { m_tilde: 1.0, ..single() }.validate(grid).is_err());
    assert!(PotentialSpec { wells: vec![], ..single() }.validate(grid).is_err());
    let v = single().v;
    assert!(check_well(&v, &Well { minimum: 0.5, ..well([0.0; 3], 1.5) }).is_err());
    // V = 1.25 on the sphere of radius 1 is above 1, but radius 3 meets the plateau at 2
    check_well(&v, &well([0.0; 3], 1.0)).unwrap();
    assert!(check_well(&v, &Well { minimizers: vec![[0.5, 0.0, 0.0]], ..well([0.0; 3], 1.0) }).is_err());
    let flat = ScalarPotential::Constant { value: 1.0 };
    assert!(check_well(&flat, &well([0.0; 3], 1.0)).is_err());
}

#[test]
fn bump_set_rules() {
    let (_, _, gs) = setup();
    let p = pair();
    let b = |c: [f64; 3]| Bump { center: c, profile: gs.clone(), phase: 0.0 };
    assert!(BumpSet::new(vec![b([-1.5, 0.0, 0.0]), b([1.5, 0.0, 0.0])], &p).is_ok());
    assert!(BumpSet::new(vec![], &p).is_err());
    assert!(BumpSet::new(vec![b([0.0, 0.0, 0.0])], &p).is_err());
    assert!(BumpSet::new(vec![b([-1.5, 0.5, 0.0])], &p).is_err());
    let two_in_one = vec![b([-1.5, 0.0, 0.0]), b([-1.5, 0.15, 0.0])];
    assert!(BumpSet::new(two_in_one, &p).is_err());
}

#[test]
fn ansatz_diagnostics_single_bump() {
    let (grid, kern, gs) = setup();
    let pot = single();
    let set = BumpSet::new(vec![Bump { center: [0.0; 3], profile: gs.clone(), phase: 0.7 }], &pot).unwrap();
    let u = build_ansatz(&set, &pot, *grid).unwrap();
    let g = gamma_eps(&u, &pot, kern).unwrap();
    assert_eq!(g.q_eps, 0.0);
    assert_eq!(g.q_per_well, vec![0.0]);
    assert!((g.gamma_eps - g.f_eps).abs() == 0.0);
    assert!(norm_eps(&u, &pot) > 0.0);
    let m = local_maxima(&u, &pot);
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].point, [0.0; 3]);
    assert_eq!(m[0].well, Some(0));
    assert_eq!(m[0].distance_to_minimizers, Some(0.0));
    let d = decomposition_remainder(&u, &set, &pot).unwrap();
    assert!(d.remainder < 1e-12);
    assert!((d.phases[0] - 0.7).abs() < 1e-12);
    // the cutoff vanishes beyond 2β/ε = 0.4 in scaled units, so nodes with |y| > 0.4 are zero
    for i in 0..grid.len() {
        let y = grid.point(i);
        if (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() > 0.4 + 1e-12 {
            assert_eq!(u.values()[i], Complex64::new(0.0, 0.0));
        }
    }
}

#[test]
fn global_phase_and_constant_gauge_leave_energy_unchanged() {
    let (grid, kern, _) = setup();
    let pot = single();
    let u = ComplexField::from_fn(*grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::from_polar((-r2 / 3.0).exp(), PI / 8.0 * x[1])
    });
    let g0 = gamma_eps(&u, &pot, kern).unwrap();
    let g1 = gamma_eps(&u.scaled(Complex64::from_polar(1.0, 1.3)), &pot, kern).unwrap();
    assert!((g1.gamma_eps - g0.gamma_eps).abs() < 1e-12 * g0.gamma_eps.abs());
    let a0 = [PI / 8.0, 0.0, 3.0 * PI / 8.0];
    let (v, shifted) = gauge_shift(&u, &pot, a0).unwrap();
    let g2 = gamma_eps(&v, &shifted, kern).unwrap();
    assert!((g2.gamma_eps - g0.gamma_eps).abs() < 1e-10 * g0.gamma_eps.abs());
    let r0 = magnetic_residual(&u, &pot, kern).unwrap().norm;
    let r2 = magnetic_residual(&v, &shifted, kern).unwrap().norm;
    assert!((r2 - r0).abs() < 1e-10 * r0, "{r0} {r2}");
}

#[test]
fn penalty_matches_outside_mass_formula() {
    let (grid, kern, _) = setup();
    let pot = single();
    // supported where |εy| > 1.5, i.e. |y| > 3
    for amp in [0.05, 0.3, 1.0] {
        let u = ComplexField::from_fn(*grid, |x| {
            if x[0] > 3.5 {
                Complex64::new(amp * (-((x[0] - 5.0).powi(2) + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let m = norms(&u).l2_sq;
        let expected = (pot.chi() * m - 1.0).max(0.0).powf(2.5);
        let q = gamma_eps(&u, &pot, kern).unwrap().q_eps;
        assert!((q - expected).abs() <= 1e-12 * expected.max(1.0), "{q} vs {expected}");
    }
}

#[test]
fn exponential_envelope_is_recovered() {
    let grid = make_grid(48, 16.0).unwrap();
    let c = [1.0, -2.0, 0.0];
    let u = ComplexField::from_fn(grid, |x| {
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
        Complex64::new(3.0 * (-1.2 * r).exp(), 0.0)
    });
    let e = decay_envelope_check(&u, &[c]).unwrap();
    assert!((e.c2 - 1.2).abs() < 1e-8, "{}", e.c2);
    assert!((e.c1 - 3.0).abs() < 1e-6, "{}", e.c1);
    assert!(e.pass);
    assert!(decay_envelope_check(&u, &[]).is_err());
}

#[test]
fn relaxation_lowers_energy_and_keeps_cell_mass() {
    let (grid, kern, gs) = setup();
    let pot = pair();
    let bumps = [-1.5, 1.5].iter().map(|&x| Bump { center: [x, 0.0, 0.0], profile: gs.clone(), phase: 0.0 }).collect();
    let set = BumpSet::new(bumps, &pot).unwrap();
    let u = build_ansatz(&set, &pot, *grid).unwrap();
    let r = relax(&u, &pot, kern, 8).unwrap();
    let g0 = gamma_eps(&u, &pot, kern).unwrap().gamma_eps;
    let g1 = gamma_eps(&r, &pot, kern).unwrap().gamma_eps;
    assert!(g1 <= g0, "{g1} > {g0}");
    let half = |f: &ComplexField, left: bool| -> f64 {
        (0..grid.len())
            .filter(|&i| (grid.point(i)[0] <= 0.0) == left)
            .map(|i| f.values()[i].norm_sqr())
            .sum::<f64>()
    };
    for left in [true, false] {
        assert!((half(&r, left) / half(&u, left) - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn cutoff_shape(beta in 0.05f64..2.0, s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let (a, b) = (s.min(t) * beta, s.max(t) * beta);
        let (ca, cb) = (cutoff(a, beta), cutoff(b, beta));
        prop_assert!((0.0..=1.0).contains(&ca));
        prop_assert!(cb <= ca);
        if a <= beta { prop_assert_eq!(ca, 1.0); }
        if b >= 2.0 * beta { prop_assert_eq!(cb, 0.0); }
        prop_assert!((cutoff(1.5 * beta, beta) - 0.5).abs() < 1e-12);
    }
}
