//! Energy functional pieces on the Coulomb ground state: the energy report,
//! the limiting residual, the HLS quotient, and the scale path t ↦ u_t whose
//! energy peaks at t = 1.
use choquard::energy::{energy_report, hls_ratio, limiting_residual};
use choquard::ground_state::{scale_path_energy, solve_free, virial_report, SolverParams};
use choquard::{coulomb, make_grid};

fn main() -> choquard::Result<()> {
    let grid = make_grid(48, 12.0)?;
    let kern = coulomb(grid)?;
    let gs = solve_free(1.0, &kern, &SolverParams::default())?;
    let u = gs.profile.to_complex();
    let r = energy_report(&u, gs.a, &kern)?;
    println!("mass {:.6}  kinetic {:.6}  D {:.6}  E {:.6}  J {:.6}", r.mass, r.kinetic, r.dd, r.energy, r.j);
    println!("residual {:.3e}", limiting_residual(&u, gs.a, &kern)?.norm);
    println!("HLS quotient {:.6} (Gaussian bound {:.6})", hls_ratio(&u, &kern)?, (4.0 / (3.0 * std::f64::consts::PI)).sqrt());
    let v = virial_report(&gs);
    println!("worst virial deviation {:.3e}", v.max_deviation());
    println!("{:>6} {:>12} {:>12}", "t", "quadrature", "closed form");
    for t in [0.5, 0.7, 0.9, 0.95, 1.0, 1.05, 1.1] {
        let (j, c) = scale_path_energy(&gs, t, &kern)?;
        println!("{t:>6.2} {j:>12.6} {c:>12.6}");
    }
    Ok(())
}
