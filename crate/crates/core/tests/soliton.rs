use std::f64::consts::PI;

use choquard::config::{parse_multibump, parse_ode};
use choquard::potential::{ScalarPotential, VectorPotential};
use choquard::soliton::{
    hamiltonian, integrate, magnetic_power, rhs, rk4_step, stationary_spectrum, ForceField, NewtonState, PairKernel,
};
use proptest::prelude::*;

fn field(v: ScalarPotential, w: PairKernel, b: [f64; 3], eps: f64) -> ForceField {
    ForceField { v, w, a: VectorPotential::uniform_field(b), eps }
}

#[test]
fn cyclotron_orbit_is_a_circle() {
    // ξ̇ = -ξ × B with ξ = (v, 0, 0), B = b e_z: radius v/b about (0, v/b)
    let (v, b) = (0.8, 2.0);
    let f = field(ScalarPotential::Constant { value: 0.0 }, PairKernel::None, [0.0, 0.0, b], 0.0);
    let s = NewtonState::new(vec![[0.0; 3]], vec![[v, 0.0, 0.0]], vec![1.0]).unwrap();
    let tr = integrate(&s, &f, 10.0, 1e-3, 100, 1e-6).unwrap();
    let r = v / b;
    for p in &tr.samples {
        let x = p.x[0];
        let d = (x[0] * x[0] + (x[1] - r).powi(2)).sqrt();
        assert!((d - r).abs() < 1e-10, "t = {}: {d}", p.t);
        assert_eq!(x[2], 0.0);
    }
    assert!(tr.h_drift < 1e-12);
}

#[test]
fn repulsive_cluster_conserves_energy() {
    let f = field(
        ScalarPotential::Quadratic { stiffness: [1.0, 1.5, 0.5] },
        PairKernel::Coulomb,
        [0.2, -0.4, 1.0],
        0.3,
    );
    let s = NewtonState::new(
        vec![[1.0, 0.0, 0.0], [-0.5, 0.8, 0.1], [0.0, -0.9, -0.4]],
        vec![[0.0, 0.3, 0.0], [0.2, 0.0, -0.1], [-0.1, 0.1, 0.2]],
        vec![1.0, 2.0, 0.5],
    )
    .unwrap();
    let h0 = hamiltonian(&s, &f);
    let tr = integrate(&s, &f, 20.0, 2e-3, 500, 1e-6).unwrap();
    assert!(tr.h_drift < 1e-8 * h0.abs(), "{} vs {h0}", tr.h_drift);
    assert!(tr.samples.iter().all(|p| p.min_pair > 0.1));
    assert_eq!(tr.samples.len(), 21);
}

#[test]
fn head_on_collision_is_reported() {
    let f = field(ScalarPotential::Constant { value: 0.0 }, PairKernel::Coulomb, [0.0; 3], -1.0);
    let s = NewtonState::new(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], vec![[0.0; 3]; 2], vec![1.0, 1.0]).unwrap();
    // the approach check runs at step ends, so the threshold must exceed one step of travel
    let e = integrate(&s, &f, 10.0, 1e-3, 10, 0.1).unwrap_err();
    assert!(!e.is_config(), "{e}");
    let same = NewtonState::new(vec![[0.0; 3]; 2], vec![[0.0; 3]; 2], vec![1.0, 1.0]).unwrap();
    assert!(rhs(&same, &f).is_err());
}

#[test]
fn pair_forces_obey_newton_third_law() {
    let f = field(ScalarPotential::Constant { value: 3.0 }, PairKernel::Coulomb, [0.0; 3], 0.7);
    let s = NewtonState::new(vec![[0.3, -0.2, 1.0], [-1.0, 0.5, 0.0]], vec![[0.0; 3]; 2], vec![2.0, 3.0]).unwrap();
    let d = rhs(&s, &f).unwrap();
    // m_j ξ̇_j is antisymmetric: ε m_j m_i ∇W
    for c in 0..3 {
        assert!((2.0 * d.dxi[0][c] + 3.0 * d.dxi[1][c]).abs() < 1e-14);
    }
    // repulsive for ε > 0
    assert!(d.dxi[0][0] > 0.0 && d.dxi[1][0] < 0.0);
}

#[test]
fn critical_point_classification() {
    let min = field(ScalarPotential::Quadratic { stiffness: [1.0, 2.0, 0.5] }, PairKernel::None, [0.0, 0.0, 1.0], 0.0);
    assert!(stationary_spectrum(&min, [0.0; 3], 1e-3, 50.0, 1e-2).unwrap().is_bounded());
    let saddle = field(ScalarPotential::Quadratic { stiffness: [1.0, -1.0, 1.0] }, PairKernel::None, [0.0; 3], 0.0);
    assert!(!stationary_spectrum(&saddle, [0.0; 3], 1e-3, 50.0, 1e-2).unwrap().is_bounded());
    assert!(stationary_spectrum(&min, [0.5, 0.0, 0.0], 1e-3, 1.0, 1e-2).is_err());
    assert!(stationary_spectrum(&min, [0.0; 3], 0.0, 1.0, 1e-2).is_err());
}

#[test]
fn rk4_is_fourth_order_on_the_oscillator() {
    // x'' = -x: exact (x, ξ) = (cos t, -sin t)
    let f = field(ScalarPotential::Quadratic { stiffness: [1.0; 3] }, PairKernel::None, [0.0; 3], 0.0);
    let s = NewtonState::new(vec![[1.0, 0.0, 0.0]], vec![[0.0; 3]], vec![1.0]).unwrap();
    // phase-space error, so amplitude and phase errors cannot cancel
    let err = |h: f64| {
        let e = integrate(&s, &f, 3.0, h, 1_000_000, 1e-6).unwrap().last().clone();
        ((e.x[0][0] - 3f64.cos()).powi(2) + (e.xi[0][0] + 3f64.sin()).powi(2)).sqrt()
    };
    let r = err(0.1) / err(0.05);
    assert!((14.0..18.0).contains(&r), "{r}");
    let one = rk4_step(&s, &f, 0.1).unwrap();
    assert!((one.t - 0.1).abs() < 1e-15);
}

#[test]
fn bad_states_and_parameters() {
    assert!(NewtonState::new(vec![], vec![], vec![]).is_err());
    assert!(NewtonState::new(vec![[0.0; 3]], vec![[0.0; 3]], vec![0.0]).is_err());
    assert!(NewtonState::new(vec![[f64::NAN, 0.0, 0.0]], vec![[0.0; 3]], vec![1.0]).is_err());
    let f = field(ScalarPotential::Constant { value: 0.0 }, PairKernel::None, [0.0; 3], 0.0);
    let s = NewtonState::new(vec![[0.0; 3]], vec![[0.0; 3]], vec![1.0]).unwrap();
    assert!(integrate(&s, &f, 0.0, 0.1, 1, 1e-6).is_err());
    assert!(integrate(&s, &f, 1.0, 0.1, 0, 1e-6).is_err());
}

#[test]
fn configs_parse() {
    let ode = parse_ode(
        r#"
        [field]
        w = "coulomb"
        eps = -1.0
        v = { kind = "quadratic", stiffness = [0.2, 0.2, 0.2] }
        [[particles]]
        x = [1.0, 0.0, 0.0]
        [[particles]]
        x = [-1.0, 0.0, 0.0]
        m = 2.0
        "#,
    )
    .unwrap();
    assert_eq!(ode.stride, 1);
    assert_eq!(ode.field.a, VectorPotential::zero());
    let s = ode.initial_state().unwrap();
    assert_eq!(s.m, vec![1.0, 2.0]);
    assert_eq!(s.xi, vec![[0.0; 3]; 2]);
    assert!(parse_ode("[field]\nw = \"yukawa\"\neps = 1.0").unwrap_err().is_config());

    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/two_wells.toml")).unwrap();
    let mb = parse_multibump(&text).unwrap();
    assert_eq!(mb.bumps.len(), 2);
    assert_eq!(mb.eps, vec![0.5, 0.25]);
    assert_eq!(mb.potential.a.curl(), [0.0, 0.0, 0.2]);
    assert!((mb.bumps[1].phase - 1.0).abs() < 1e-15);
    assert!(parse_multibump("grid = 3").unwrap_err().is_config());
}

proptest! {
    #[test]
    fn magnetic_force_does_no_work(b in prop::array::uniform3(-5.0f64..5.0), xi in prop::array::uniform3(-5.0f64..5.0)) {
        let f = field(ScalarPotential::Constant { value: 0.0 }, PairKernel::None, b, 0.0);
        let s = NewtonState::new(vec![[0.0; 3]], vec![xi], vec![1.0]).unwrap();
        prop_assert!(magnetic_power(&s, &f).abs() <= 1e-13);
    }

    #[test]
    fn larmor_frequency(b in 0.5f64..4.0) {
        let f = field(ScalarPotential::Constant { value: 0.0 }, PairKernel::None, [0.0, 0.0, b], 0.0);
        let s = NewtonState::new(vec![[0.0; 3]], vec![[1.0, 0.0, 0.0]], vec![1.0]).unwrap();
        let t = 2.0 * PI / b;
        let end = integrate(&s, &f, t, t / 2000.0, 1_000_000, 1e-6).unwrap();
        let xi = end.last().xi[0];
        prop_assert!((xi[0] - 1.0).abs() < 1e-9 && xi[1].abs() < 1e-9);
    }
}
