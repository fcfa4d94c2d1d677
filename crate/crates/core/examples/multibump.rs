//! Two-well multi-bump ansatz: penalized energy, local maxima, decomposition
//! remainder and decay envelope before and after a short relaxation, for a
//! sweep of ε. Also the single-well energy approaching E at small ε.
use choquard::ground_state::{solve_free, SolverParams};
use choquard::potential::{QuadraticWell, Region, ScalarPotential, VectorPotential, Well};
use choquard::semiclassical::{
    build_ansatz, decay_envelope_check, decomposition_remainder, gamma_eps, local_maxima, relax, Bump,
    BumpSet, PotentialSpec,
};
use choquard::{coulomb, make_grid};

fn main() -> choquard::Result<()> {
    let grid = make_grid(64, 16.0)?;
    let kern = coulomb(grid)?;
    let gs = solve_free(1.0, &kern, &SolverParams::default())?;
    println!("E_1 = {:.6}", gs.gamma);

    let single = PotentialSpec {
        v: ScalarPotential::QuadraticWells {
            baseline: 2.0,
            wells: vec![QuadraticWell { center: [0.0; 3], depth: 1.0, curvature: 0.25 }],
        },
        a: VectorPotential::uniform_field([0.0, 0.0, 0.2]),
        wells: vec![Well { region: Region::Ball { center: [0.0; 3], radius: 10.0 }, minimum: 1.0, minimizers: vec![[0.0; 3]] }],
        zero_set: vec![],
        m_tilde: 0.5,
        eps: 0.5,
        mu: 6.0,
        beta: 0.9,
        delta_fraction: 0.1,
    };
    for eps in [0.5, 0.25, 0.125] {
        let pot = single.with_eps(eps);
        pot.validate(&grid)?;
        let set = BumpSet::new(vec![Bump { center: [0.0; 3], profile: gs.clone(), phase: 0.0 }], &pot)?;
        let u = build_ansatz(&set, &pot, grid)?;
        let g = gamma_eps(&u, &pot, &kern)?;
        println!("single  eps {eps:<6} Γ_ε {:.6}  Q_ε {:.3e}  Γ_ε/E - 1 = {:+.3e}", g.gamma_eps, g.q_eps, g.gamma_eps / gs.gamma - 1.0);
    }

    let c = 2.0;
    let pot0 = PotentialSpec {
        v: ScalarPotential::QuadraticWells {
            baseline: 2.0,
            wells: vec![
                QuadraticWell { center: [-c, 0.0, 0.0], depth: 1.0, curvature: 0.5 },
                QuadraticWell { center: [c, 0.0, 0.0], depth: 1.0, curvature: 0.5 },
            ],
        },
        a: VectorPotential::uniform_field([0.0, 0.0, 0.2]),
        wells: [-c, c]
            .iter()
            .map(|&x| Well {
                region: Region::Ball { center: [x, 0.0, 0.0], radius: 4.0 / 3.0 },
                minimum: 1.0,
                minimizers: vec![[x, 0.0, 0.0]],
            })
            .collect(),
        zero_set: vec![],
        m_tilde: 0.5,
        eps: 0.5,
        mu: 6.0,
        beta: 0.55,
        delta_fraction: 0.45,
    };
    for eps in [0.5, 0.25] {
        let pot = pot0.with_eps(eps);
        pot.validate(&grid)?;
        let bumps: Vec<Bump> = [-c, c]
            .iter()
            .map(|&x| Bump { center: [x, 0.0, 0.0], profile: gs.clone(), phase: 0.0 })
            .collect();
        let set = BumpSet::new(bumps.clone(), &pot)?;
        let u = build_ansatz(&set, &pot, grid)?;
        let g = gamma_eps(&u, &pot, &kern)?;
        let maxima = local_maxima(&u, &pot);
        let centres: Vec<[f64; 3]> = maxima.iter().map(|m| m.point).collect();
        let rem = decomposition_remainder(&u, &set, &pot)?;
        let env = decay_envelope_check(&u, &centres)?;
        println!(
            "ansatz  eps {eps:<5} Γ_ε {:.6} Q_ε {:.1e} maxima {:?} remainder {:.2e} envelope C2 {:.3} ratio {:.3} pass {}",
            g.gamma_eps,
            g.q_eps,
            maxima.iter().map(|m| (m.point[0], m.well)).collect::<Vec<_>>(),
            rem.remainder,
            env.c2,
            env.worst_ratio,
            env.pass
        );
        let t = std::time::Instant::now();
        let r = relax(&u, &pot, &kern, 50)?;
        let g = gamma_eps(&r, &pot, &kern)?;
        let maxima = local_maxima(&r, &pot);
        let moved: Vec<Bump> = maxima
            .iter()
            .map(|m| Bump { center: [eps * m.point[0], eps * m.point[1], eps * m.point[2]], profile: gs.clone(), phase: 0.0 })
            .collect();
        let rem = decomposition_remainder(&r, &BumpSet::new(moved, &pot)?, &pot)?;
        let centres: Vec<[f64; 3]> = maxima.iter().map(|m| m.point).collect();
        let env = decay_envelope_check(&r, &centres)?;
        println!(
            "relaxed eps {eps:<5} Γ_ε {:.6} maxima {:?} remainder {:.4e} envelope ratio {:.3} pass {} ({:.1?})",
            g.gamma_eps,
            maxima.iter().map(|m| (m.point, m.distance_to_minimizers)).collect::<Vec<_>>(),
            rem.remainder,
            env.worst_ratio,
            env.pass,
            t.elapsed()
        );
    }
    Ok(())
}
