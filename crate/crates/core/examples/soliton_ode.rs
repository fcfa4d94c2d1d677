//! Point-soliton dynamics from a TOML config: energy drift, closest approach,
//! and the fourth-order convergence of the integrator.
//!
//! Usage: soliton_ode [config] [T]
use choquard::config::parse_ode;
use choquard::soliton::integrate;

fn main() -> choquard::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/binary.toml").into());
    let t_final: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(10.0);
    let cfg = parse_ode(&std::fs::read_to_string(&path)?)?;
    let s0 = cfg.initial_state()?;
    let reference = integrate(&s0, &cfg.field, t_final, 1e-3, usize::MAX, cfg.min_distance)?;
    let end = reference.last();
    println!("{} particles, B = {:?}", s0.len(), cfg.field.b());
    println!("H drift {:.3e}, closest approach {:.4}", reference.h_drift, reference.samples.iter().map(|p| p.min_pair).fold(f64::INFINITY, f64::min));
    let mut prev = None;
    for dt in [0.04, 0.02, 0.01] {
        let tr = integrate(&s0, &cfg.field, t_final, dt, usize::MAX, cfg.min_distance)?;
        let e = tr.last().x.iter().zip(&end.x).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).powi(2))).sum::<f64>().sqrt();
        match prev {
            Some(p) => println!("dt {dt:<5} error {e:.3e}  ratio {:.2}", p / e),
            None => println!("dt {dt:<5} error {e:.3e}"),
        }
        prev = Some(e);
    }
    for (i, x) in end.x.iter().enumerate() {
        println!("particle {i} at t = {t_final}: ({:.5}, {:.5}, {:.5})", x[0], x[1], x[2]);
    }
    Ok(())
}
