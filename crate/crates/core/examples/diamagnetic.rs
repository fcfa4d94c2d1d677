//! Diamagnetic inequality ∫|∇_A u|² ≥ ∫|∇|u||² for a vortex-like field in a
//! uniform magnetic field, as the field strength grows.
use choquard::energy::{diamagnetic_gap, sample_vector_potential};
use choquard::{make_grid, norms, ComplexField};
use num_complex::Complex64;

fn main() -> choquard::Result<()> {
    let grid = make_grid(32, 6.0)?;
    let u = ComplexField::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::new(x[0], x[1]) * (-r2 / 2.0).exp()
    });
    let h1 = norms(&u).h1_sq;
    for b in [0.0, 0.5, 1.0, 2.0, 4.0] {
        // symmetric gauge for B = b e_z
        let a = sample_vector_potential(grid, 1.0, |x| [-0.5 * b * x[1], 0.5 * b * x[0], 0.0])?;
        let gap = diamagnetic_gap(&u, &a)?;
        println!("B = {b:<4} gap {gap:+.6e}  (gap / |u|²_H1 = {:+.3e})", gap / h1);
    }
    Ok(())
}
