//! Perturb the ground state by small random band-limited kicks and track the
//! distance to its orbit. Doubling δ should roughly double the peak distance.
//!
//! Usage: orbital_stability [T] [trials]
use choquard::dynamics::stability_experiment;
use choquard::ground_state::{solve_free, SolverParams};
use choquard::{coulomb, make_grid};

fn main() -> choquard::Result<()> {
    let mut args = std::env::args().skip(1);
    let t_final: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let trials: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(4);
    let grid = make_grid(48, 12.0)?;
    let kern = coulomb(grid)?;
    let gs = solve_free(1.0, &kern, &SolverParams::default())?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    for delta in [0.0, 1e-3, 2e-3, 4e-3] {
        let r = stability_experiment(&gs, delta, t_final, 1e-2, &kern, trials, 7, 10, threads)?;
        let ratio = if delta > 0.0 { format!("{:.3}", r.max_distance / delta) } else { "-".into() };
        println!("delta {delta:.0e}: sup orbit distance {:.3e}  ratio {ratio}", r.max_distance);
    }
    Ok(())
}
