//! Coulomb ground state at a = 1 with its energy ledger.
use std::time::Instant;

use choquard::ground_state::{solve_free, virial_report, SolverParams};
use choquard::{coulomb, make_grid};

fn main() -> choquard::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(48);
    let l: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(12.0);
    let a: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let grid = make_grid(n, l)?;
    let kern = coulomb(grid)?;
    let t = Instant::now();
    let gs = solve_free(a, &kern, &SolverParams::default())?;
    println!("n = {n}, L = {l}, solved in {:.2?} ({} iterations)", t.elapsed(), gs.iterations);
    println!("a = {}  rho = {:.8}  Gamma = {:.8}  Lambda = {:.8}  E_a = {:.8}", gs.a, gs.rho, gs.gamma, gs.lambda_cap, gs.energy_ea);
    println!("residual = {:.3e}  phase defect = {:.3e}", gs.residual, gs.phase_defect);
    let v = virial_report(&gs);
    println!("virial: kinetic {:.2e} mass {:.2e} pohozaev {:.2e} balance {:.2e} energy {:.2e}", v.kinetic, v.mass, v.pohozaev, v.dd_balance, v.energy);
    if let Some(d) = gs.decay {
        println!("decay: C = {:.4} sigma = {:.4} (curvature {:.3}, envelope ratio {:.3})", d.c, d.sigma, d.curvature, d.worst_ratio);
    }
    Ok(())
}
