//! Nonlocal energy, the Hartree functionals and identity checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{gradient, laplacian, norms, ComplexField, Grid3, RealField};
use crate::kernel::{free_space_convolve, Kernel};

/// W * |u|^2.
pub fn hartree_potential(u: &ComplexField, kern: &Kernel) -> Result<RealField> {
    free_space_convolve(&u.density(), kern)
}

/// D(u) = ∫∫ W(x - y) |u(x)|^2 |u(y)|^2.
pub fn dd(u: &ComplexField, kern: &Kernel) -> Result<f64> {
    let rho = u.density();
    let phi = free_space_convolve(&rho, kern)?;
    phi.dot(&rho)
}

/// Energy ledger of a field at multiplier `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    /// ‖∇u‖^2
    pub kinetic: f64,
    /// ‖u‖^2
    pub mass: f64,
    pub dd: f64,
    /// kinetic/2 - dd/4
    pub energy: f64,
    /// energy + a mass / 2
    pub j: f64,
    pub a: f64,
    pub pohozaev_residual: f64,
}

impl EnergyReport {
    pub fn from_parts(kinetic: f64, mass: f64, dd: f64, a: f64) -> Self {
        let energy = 0.5 * kinetic - 0.25 * dd;
        EnergyReport {
            kinetic,
            mass,
            dd,
            energy,
            j: energy + 0.5 * a * mass,
            a,
            pohozaev_residual: 0.5 * kinetic + 1.5 * a * mass - 1.25 * dd,
        }
    }
}

pub fn energy_report(u: &ComplexField, a: f64, kern: &Kernel) -> Result<EnergyReport> {
    let nr = norms(u);
    let d = dd(u, kern)?;
    Ok(EnergyReport::from_parts(nr.kinetic(), nr.l2_sq, d, a))
}

/// Residual field with its L2 norm, absolute and relative to ‖u‖_{H1}.
#[derive(Clone, Debug)]
pub struct Residual {
    pub field: ComplexField,
    pub norm: f64,
    pub relative: f64,
}

impl Residual {
    pub(crate) fn new(field: ComplexField, h1_sq: f64) -> Self {
        let norm = norms_l2(&field);
        let relative = if h1_sq > 0.0 { norm / h1_sq.sqrt() } else { norm };
        Residual { field, norm, relative }
    }
}

pub(crate) fn norms_l2(u: &ComplexField) -> f64 {
    (u.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * u.grid().cell_volume()).sqrt()
}

/// r = -Δu + a u - (W * |u|^2) u.
pub fn limiting_residual(u: &ComplexField, a: f64, kern: &Kernel) -> Result<Residual> {
    let phi = hartree_potential(u, kern)?;
    let lap = laplacian(u);
    let vals: Vec<Complex64> = u
        .values()
        .iter()
        .zip(lap.values())
        .zip(phi.values())
        .map(|((v, l), p)| -l + (a - p) * v)
        .collect();
    let field = ComplexField::from_values(*u.grid(), vals)?;
    Ok(Residual::new(field, norms(u).h1_sq))
}

/// D(u) / (‖u‖^3 ‖u‖_{H1}).
pub fn hls_ratio(u: &ComplexField, kern: &Kernel) -> Result<f64> {
    let nr = norms(u);
    if nr.l2_sq == 0.0 {
        return Err(Error::Degenerate("zero field".into()));
    }
    let d = dd(u, kern)?;
    Ok(d / (nr.l2_sq.powf(1.5) * nr.h1_sq.sqrt()))
}

/// Magnetic derivatives D_a u = -i ∂_a u - A_a u.
pub fn magnetic_gradient(u: &ComplexField, a: &[RealField; 3]) -> Result<[ComplexField; 3]> {
    for c in a {
        c.grid().check_same(u.grid())?;
    }
    let mut g = gradient(u);
    let mi = Complex64::new(0.0, -1.0);
    for (axis, comp) in g.iter_mut().enumerate() {
        let av = a[axis].values();
        for ((d, v), s) in comp.values_mut().iter_mut().zip(u.values()).zip(av) {
            *d = mi * *d - s * v;
        }
    }
    Ok(g)
}

/// ∫|D u|^2 - ∫|∇|u||^2 for a vector potential sampled on the grid (the
/// caller passes A_ε, i.e. A evaluated at ε x). ∇|u| is Re(ū∇u)/|u|.
pub fn diamagnetic_gap(u: &ComplexField, a: &[RealField; 3]) -> Result<f64> {
    for c in a {
        c.grid().check_same(u.grid())?;
    }
    let grad = gradient(u);
    let w = u.grid().cell_volume();
    let mut gap = 0.0;
    for axis in 0..3 {
        let av = a[axis].values();
        let gv = grad[axis].values();
        for i in 0..u.values().len() {
            let v = u.values()[i];
            let d = gv[i];
            // |(-i ∂ - A) u|^2 = |∂u - i A u|^2
            let du = d - Complex64::new(0.0, av[i]) * v;
            let m2 = v.norm_sqr();
            let abs_grad = if m2 > 0.0 { (v.conj() * d).re.powi(2) / m2 } else { 0.0 };
            gap += du.norm_sqr() - abs_grad;
        }
    }
    Ok(gap * w)
}

/// Samples of x ↦ A(ε x) on the grid.
pub fn sample_vector_potential(
    grid: Grid3,
    eps: f64,
    a: impl Fn([f64; 3]) -> [f64; 3],
) -> Result<[RealField; 3]> {
    let mut comps = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..grid.len() {
        let p = grid.point(i);
        let v = a([eps * p[0], eps * p[1], eps * p[2]]);
        for c in 0..3 {
            comps[c].push(v[c]);
        }
    }
    let [x, y, z] = comps;
    Ok([
        RealField::from_values(grid, x)?,
        RealField::from_values(grid, y)?,
        RealField::from_values(grid, z)?,
    ])
}
