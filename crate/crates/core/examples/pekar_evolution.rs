//! Conservation of charge and energy for a moving, breathing ground state, and
//! the second-order energy drift of the splitting.
//!
//! Usage: pekar_evolution [T] [dt] [kick] [amp]
use std::time::Instant;

use choquard::dynamics::evolve;
use choquard::ground_state::{solve_free, SolverParams};
use choquard::{coulomb, make_grid, ComplexField};
use num_complex::Complex64;

fn main() -> choquard::Result<()> {
    let mut args = std::env::args().skip(1);
    let t_final: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let dt: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let kick: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let amp: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.1);
    let grid = make_grid(48, 12.0)?;
    let kern = coulomb(grid)?;
    let gs = solve_free(1.0, &kern, &SolverParams::default())?;
    // kick in units of the lowest box wavenumber keeps the phase periodic
    let k = kick * std::f64::consts::PI / grid.half_width();
    let vals = (0..grid.len())
        .map(|i| Complex64::from_polar(amp * gs.profile.values()[i], k * grid.point(i)[0]))
        .collect();
    let u0 = ComplexField::from_values(grid, vals)?;
    for h in [dt, dt / 2.0] {
        let t = Instant::now();
        let s = evolve(&u0, t_final, h, Some(&kern), 100, None)?;
        let charge = s.iter().fold(0.0f64, |m, p| m.max(p.charge_drift));
        let energy = s.iter().fold(0.0f64, |m, p| m.max(p.energy_drift));
        println!("dt = {h:e}: max charge drift {charge:.3e}, max energy drift {energy:.3e} ({:.1?})", t.elapsed());
    }
    Ok(())
}
