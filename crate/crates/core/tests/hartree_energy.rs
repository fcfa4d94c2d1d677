use std::f64::consts::PI;

use choquard::energy::{
    dd, diamagnetic_gap, energy_report, hartree_potential, hls_ratio, limiting_residual, magnetic_gradient,
    sample_vector_potential,
};
use choquard::ground_state::dilate;
use choquard::{coulomb, make_grid, norms, ComplexField, Grid3};
use num_complex::Complex64;
use proptest::prelude::*;

fn gauss(grid: Grid3, s: f64) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * s * s)).exp(), 0.0)
    })
}

#[test]
fn gaussian_self_energy_closed_form() {
    // D = √2 π^{5/2} s^5 for exp(-|x|²/(2s²))
    let grid = make_grid(48, 12.0).unwrap();
    let k = coulomb(grid).unwrap();
    for s in [0.8, 1.0, 1.3] {
        let d = dd(&gauss(grid, s), &k).unwrap();
        let exact = 2f64.sqrt() * PI.powf(2.5) * s.powi(5);
        assert!((d / exact - 1.0).abs() < 1e-3, "s = {s}: {d} vs {exact}");
    }
}

#[test]
fn hartree_potential_matches_erf_profile() {
    // |u|² = exp(-|x|²) and W * exp(-|x|²) = π^{3/2} erf(r)/r
    let grid = make_grid(48, 10.0).unwrap();
    let k = coulomb(grid).unwrap();
    let u = gauss(grid, 1.0);
    let phi = hartree_potential(&u, &k).unwrap();
    let mut worst: f64 = 0.0;
    for i in (0..grid.len()).step_by(97) {
        let p = grid.point(i);
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let exact = if r == 0.0 { 2.0 * PI } else { PI.powf(1.5) * libm::erf(r) / r };
        worst = worst.max((phi.values()[i] - exact).abs() / exact);
    }
    assert!(worst < 2e-3, "{worst}");
}

#[test]
fn energy_report_parts_are_consistent() {
    let grid = make_grid(32, 8.0).unwrap();
    let k = coulomb(grid).unwrap();
    let u = ComplexField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::from_polar((-r2 / 3.0).exp(), 0.3 * x[2])
    });
    let a = 0.7;
    let r = energy_report(&u, a, &k).unwrap();
    let nr = norms(&u);
    assert!((r.mass - nr.l2_sq).abs() < 1e-12 * nr.l2_sq);
    assert!((r.kinetic - nr.kinetic()).abs() < 1e-10 * nr.kinetic());
    assert!((r.energy - (0.5 * r.kinetic - 0.25 * r.dd)).abs() < 1e-12 * r.dd);
    assert!((r.j - (r.energy + 0.5 * a * r.mass)).abs() < 1e-12 * r.dd);
}

#[test]
fn residual_of_zero_field_is_zero_and_scales() {
    let grid = make_grid(16, 4.0).unwrap();
    let k = coulomb(grid).unwrap();
    assert!(limiting_residual(&ComplexField::zeros(grid), 1.0, &k).is_ok_and(|r| r.norm == 0.0));
    // linear part only: r(cu) = c·r(u) + O(c³)
    let u = gauss(grid, 1.0);
    let r1 = limiting_residual(&u.scaled(Complex64::new(1e-4, 0.0)), 1.0, &k).unwrap().norm;
    let r2 = limiting_residual(&u.scaled(Complex64::new(2e-4, 0.0)), 1.0, &k).unwrap().norm;
    assert!((r2 / r1 - 2.0).abs() < 1e-6);
}

#[test]
fn hls_ratio_stays_below_gaussian_limit() {
    let grid = make_grid(48, 12.0).unwrap();
    let k = coulomb(grid).unwrap();
    let bound = (4.0 / (3.0 * PI)).sqrt();
    for s in [0.7, 1.0, 2.0] {
        let q = hls_ratio(&gauss(grid, s), &k).unwrap();
        assert!(q > 0.0 && q < bound, "s = {s}: {q}");
    }
    assert!(hls_ratio(&ComplexField::zeros(grid), &k).is_err());
}

#[test]
fn constant_gauge_is_removable() {
    // u = |v| e^{i a0·x} with A ≡ a0: D u = -i e^{i a0·x} ∇|v|, so the gap is zero
    let grid = make_grid(32, 8.0).unwrap();
    let a0 = [PI / 8.0, -2.0 * PI / 8.0, 0.0];
    let u = ComplexField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::from_polar((-r2 / 2.0).exp(), a0[0] * x[0] + a0[1] * x[1] + a0[2] * x[2])
    });
    let a = sample_vector_potential(grid, 1.0, |_| a0).unwrap();
    let gap = diamagnetic_gap(&u, &a).unwrap();
    assert!(gap.abs() < 1e-8, "{gap}");
    let d = magnetic_gradient(&u, &a).unwrap();
    let m: f64 = d.iter().flat_map(|c| c.values()).map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_volume();
    assert!((m - norms(&u).kinetic()).abs() > 1e-3, "magnetic kinetic should differ from the plain one");
}

#[test]
fn vector_potential_samples_use_scaled_point() {
    let grid = make_grid(8, 2.0).unwrap();
    let a = sample_vector_potential(grid, 0.5, |x| x).unwrap();
    for i in 0..grid.len() {
        let p = grid.point(i);
        for c in 0..3 {
            assert_eq!(a[c].values()[i], 0.5 * p[c]);
        }
    }
    let other = make_grid(16, 2.0).unwrap();
    let u = ComplexField::zeros(other);
    assert!(diamagnetic_gap(&u, &a).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dd_is_quartic_and_phase_blind(c in 0.1f64..3.0, theta in 0.0f64..6.3, k in -1.0f64..1.0) {
        let grid = make_grid(16, 6.0).unwrap();
        let kern = coulomb(grid).unwrap();
        let u = gauss(grid, 1.0);
        let v = ComplexField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar(c * (-r2 / 2.0).exp(), theta + k * x[0])
        });
        let d0 = dd(&u, &kern).unwrap();
        let d1 = dd(&v, &kern).unwrap();
        prop_assert!((d1 / (c.powi(4) * d0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diamagnetic_gap_is_nonnegative(b in prop::array::uniform3(-2.0f64..2.0), k in prop::array::uniform3(-1.5f64..1.5), eps in 0.1f64..1.0) {
        let grid = make_grid(16, 4.0).unwrap();
        let u = ComplexField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::from_polar((-r2 / 2.0).exp() * (1.0 + 0.2 * x[1]), k[0] * x[0] + k[1] * x[1] * x[1] + k[2] * x[2])
        });
        let a = sample_vector_potential(grid, eps, |x| {
            [0.5 * (b[1] * x[2] - b[2] * x[1]), 0.5 * (b[2] * x[0] - b[0] * x[2]), 0.5 * (b[0] * x[1] - b[1] * x[0])]
        }).unwrap();
        let gap = diamagnetic_gap(&u, &a).unwrap();
        prop_assert!(gap >= -1e-10 * norms(&u).h1_sq);
    }
}

#[test]
fn dilation_scales_self_energy() {
    // D(u(λ·)) = λ^{-5} D(u)
    let grid = make_grid(48, 12.0).unwrap();
    let k = coulomb(grid).unwrap();
    let u = gauss(grid, 1.2);
    let d0 = dd(&u, &k).unwrap();
    for lambda in [0.8, 1.25] {
        let d = dd(&dilate(&u, lambda).unwrap(), &k).unwrap();
        assert!((d * lambda.powi(5) / d0 - 1.0).abs() < 1e-3, "λ = {lambda}");
    }
}
