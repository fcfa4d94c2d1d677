use std::f64::consts::PI;

use choquard::dynamics::{
    band_limited_perturbation, charge_energy, evolve, orbit_distance, stability_experiment, step_strang,
    EvolutionState, OrbitReference, Propagator,
};
use choquard::ground_state::GroundState;
use choquard::{coulomb, make_grid, norms, shift_field, ComplexField, Grid3, RealField};
use num_complex::Complex64;
use proptest::prelude::*;

fn blob(grid: Grid3) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::from_polar(0.8 * (-r2 / 4.0).exp(), 0.2 * x[0])
    })
}

#[test]
fn free_plane_wave_is_exact() {
    let grid = make_grid(16, 4.0).unwrap();
    let k = [PI / 4.0, -2.0 * PI / 4.0, 3.0 * PI / 4.0];
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    let u0 = ComplexField::from_fn(grid, |x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]));
    let mut u = u0.clone();
    let mut p = Propagator::new(grid, 0.05, None).unwrap();
    for _ in 0..40 {
        p.step(&mut u).unwrap();
    }
    let phase = Complex64::from_polar(1.0, -k2 * 2.0);
    let err = u.values().iter().zip(u0.values()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max);
    assert!(err < 1e-11, "{err}");
}

#[test]
fn strang_step_is_reversible() {
    let grid = make_grid(16, 6.0).unwrap();
    let kern = coulomb(grid).unwrap();
    let u0 = blob(grid);
    let mut u = u0.clone();
    let mut fwd = Propagator::new(grid, 0.02, Some(&kern)).unwrap();
    for _ in 0..10 {
        fwd.step(&mut u).unwrap();
    }
    let mut back = Propagator::new(grid, -0.02, Some(&kern)).unwrap();
    for _ in 0..10 {
        back.step(&mut u).unwrap();
    }
    let err = u.values().iter().zip(u0.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn single_step_helper_matches_propagator() {
    let grid = make_grid(16, 6.0).unwrap();
    let kern = coulomb(grid).unwrap();
    let s0 = EvolutionState::new(blob(grid), Some(&kern)).unwrap();
    let s1 = step_strang(&s0, 0.01, Some(&kern)).unwrap();
    let mut u = blob(grid);
    Propagator::new(grid, 0.01, Some(&kern)).unwrap().step(&mut u).unwrap();
    assert_eq!(s1.u.values(), u.values());
    assert!((s1.t - 0.01).abs() < 1e-15);
    assert!((s0.charge0() - norms(&blob(grid)).l2_sq).abs() < 1e-12);
}

#[test]
fn charge_is_conserved_and_energy_drift_small() {
    let grid = make_grid(24, 8.0).unwrap();
    let kern = coulomb(grid).unwrap();
    let s = evolve(&blob(grid), 1.0, 5e-3, Some(&kern), 50, None).unwrap();
    assert_eq!(s.len(), 5);
    assert!((s.last().unwrap().t - 1.0).abs() < 1e-12);
    for p in &s {
        assert!(p.charge_drift < 1e-12);
        assert!(p.energy_drift < 1e-4);
        assert!(p.orbit.is_none());
    }
    let (c, e) = charge_energy(&blob(grid), None).unwrap();
    assert!(c > 0.0 && e > 0.0);
}

#[test]
fn orbit_distance_recovers_shift_and_phase() {
    let grid = make_grid(24, 8.0).unwrap();
    let kern = coulomb(grid).unwrap();
    let profile = RealField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
    let gs = GroundState::from_profile(profile.clone(), 1.0, &kern).unwrap();
    let u = shift_field(&profile.to_complex(), [3, -2, 5]).scaled(Complex64::from_polar(1.0, 2.0));
    let d = orbit_distance(&u, &gs).unwrap();
    assert!(d.value < 1e-10, "{}", d.value);
    assert_eq!(d.best_shift, [3, -2, 5]);
    assert!((d.best_phase - 2.0).abs() < 1e-10);
    let r = OrbitReference::new(profile.to_complex());
    let far = r.distance(&profile.to_complex().scaled(Complex64::new(0.0, 0.0))).unwrap();
    assert!((far.value - norms(&profile.to_complex()).h1_sq.sqrt()).abs() < 1e-10);
}

#[test]
fn perturbations_are_seeded_and_normalised() {
    let grid = make_grid(32, 8.0).unwrap();
    let a = band_limited_perturbation(grid, 0.01, 4).unwrap();
    let b = band_limited_perturbation(grid, 0.01, 4).unwrap();
    let c = band_limited_perturbation(grid, 0.01, 5).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
    assert!((norms(&a).h1_sq.sqrt() / 0.01 - 1.0).abs() < 1e-12);
    // only modes |j| <= n/16 are populated
    let s = a.spectrum();
    for (i, v) in s.iter().enumerate() {
        let [x, y, z] = grid.unindex(i);
        if grid.mode(x).abs() > 2 || grid.mode(y).abs() > 2 || grid.mode(z).abs() > 2 {
            assert!(v.norm() < 1e-12);
        }
    }
}

#[test]
fn stability_results_do_not_depend_on_threads() {
    let grid = make_grid(16, 6.0).unwrap();
    let kern = coulomb(grid).unwrap();
    let profile = RealField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
    let gs = GroundState::from_profile(profile, 1.0, &kern).unwrap();
    let one = stability_experiment(&gs, 0.01, 0.2, 0.02, &kern, 4, 9, 2, 1).unwrap();
    let many = stability_experiment(&gs, 0.01, 0.2, 0.02, &kern, 4, 9, 2, 4).unwrap();
    assert_eq!(one.trials.len(), 4);
    for (a, b) in one.trials.iter().zip(&many.trials) {
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.series, b.series);
    }
    assert_eq!(one.max_distance, many.max_distance);
    assert!(stability_experiment(&gs, -1.0, 0.2, 0.02, &kern, 1, 0, 1, 1).is_err());
    assert!(stability_experiment(&gs, 0.1, 0.2, 0.02, &kern, 0, 0, 1, 1).is_err());
}

#[test]
fn bad_evolution_parameters() {
    let grid = make_grid(16, 6.0).unwrap();
    assert!(evolve(&blob(grid), 1.0, 0.0, None, 1, None).is_err());
    assert!(evolve(&blob(grid), -1.0, 0.1, None, 1, None).is_err());
    assert!(evolve(&blob(grid), 1.0, 0.1, None, 0, None).is_err());
    assert!(Propagator::new(grid, f64::NAN, None).is_err());
    let other = coulomb(make_grid(32, 6.0).unwrap()).unwrap();
    assert!(Propagator::new(grid, 0.1, Some(&other)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_flow_conserves_charge_and_energy(amp in 0.1f64..2.0, k in -1.0f64..1.0, dt in 0.01f64..0.2) {
        let grid = make_grid(16, 6.0).unwrap();
        let u0 = ComplexField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar(amp * (-r2 / 3.0).exp(), k * x[1])
        });
        let s = evolve(&u0, 10.0 * dt, dt, None, 5, None).unwrap();
        for p in &s {
            prop_assert!(p.charge_drift < 1e-12);
            prop_assert!(p.energy_drift < 1e-11);
        }
    }
}
