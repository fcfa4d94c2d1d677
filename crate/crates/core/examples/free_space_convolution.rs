//! Free-space Coulomb potential of a Gaussian density against the erf profile,
//! for the exact kernel and a tabulated one, on a few grid sizes.
use std::f64::consts::PI;

use choquard::kernel::{build_kernel, free_space_convolve, KernelSpec, TabulatedKernel};
use choquard::{coulomb, make_grid, RealField};

fn main() -> choquard::Result<()> {
    for n in [24, 32, 48] {
        let grid = make_grid(n, 10.0)?;
        let rho = RealField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        let exact = |x: [f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r < 1e-12 { 2.0 * PI } else { PI.powf(1.5) * libm::erf(r) / r }
        };
        let table = build_kernel(&KernelSpec::Tabulated(TabulatedKernel::coulomb()), grid, 4.0 * grid.half_width())?;
        for (name, kern) in [("vico", coulomb(grid)?), ("table", table)] {
            let phi = free_space_convolve(&rho, &kern)?;
            let worst = (0..grid.len())
                .map(|i| (phi.values()[i] - exact(grid.point(i))).abs() / exact(grid.point(i)))
                .fold(0.0, f64::max);
            println!("n = {n:<3} {name:<6} max relative error {worst:.3e}");
        }
    }
    Ok(())
}

