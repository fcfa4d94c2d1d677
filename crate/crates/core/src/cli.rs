//! The `choquard` command line: argument parsing, pipelines, CSV output and
//! run manifests. Exit codes: 0 success, 2 bad input, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::{load_multibump, load_ode, MultibumpConfig};
use crate::dynamics::{evolve_with, stability_experiment, Monitors, OrbitReference};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid3, RealField};
use crate::ground_state::{decay_fit, solve_constrained, solve_free, virial_report, GroundState, SolverParams};
use crate::io::{read_field, read_kernel, write_real, FieldData};
use crate::kernel::{coulomb, Kernel};
use crate::semiclassical::{
    build_ansatz, decay_envelope_check, decomposition_remainder, gamma_eps, local_maxima, magnetic_residual, relax,
    Bump, BumpSet,
};
use crate::soliton::integrate;
use crate::verify::{run_suite, SUITES};

#[derive(Debug, Parser)]
#[command(name = "choquard", version, about = "Hartree/Choquard ground states, dynamics and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state at a given mass or multiplier.
    Ground {
        #[arg(long, conflicts_with = "a", required_unless_present = "a")]
        rho: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        /// `coulomb` or `table:<kernel file>`
        #[arg(long, default_value = "coulomb")]
        kernel: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long = "L", default_value_t = 16.0)]
        half_width: f64,
        #[arg(long, default_value_t = 3000)]
        max_iter: usize,
        #[arg(long, default_value = "ground")]
        out: PathBuf,
    },
    /// Split-step evolution with conservation monitors.
    Evolve {
        /// Field file or `ground:<dir>`.
        #[arg(long)]
        init: String,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value = "charge,energy,orbit")]
        monitor: String,
        /// `coulomb`, `table:<kernel file>` or `none`
        #[arg(long, default_value = "coulomb")]
        kernel: String,
        /// Ground-state directory for the orbit distance.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        sample_every: usize,
        #[arg(long, default_value = "evolve.csv")]
        out: PathBuf,
    },
    /// Orbit distance of perturbed ground states.
    Stability {
        #[arg(long)]
        ground: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "coulomb")]
        kernel: String,
        #[arg(long, default_value_t = 100)]
        sample_every: usize,
        #[arg(long, default_value = "stability.csv")]
        out: PathBuf,
    },
    /// Multi-bump ansatz diagnostics over an ε sweep.
    Multibump {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ε values; overrides the config.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, default_value = "multibump")]
        out: PathBuf,
    },
    /// Particle system with pair forces and a magnetic field.
    Ode {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value = "ode.csv")]
        out: PathBuf,
    },
    /// Built-in self-checks.
    Verify {
        /// One of identities, oracles, conservation, semiclassical, ode, all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Parses `argv` (program name first), runs and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                3
            }
        }
    }
}

/// Worker count from CHOQUARD_THREADS, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("CHOQUARD_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn load_kernel(spec: &str, grid: Grid3) -> Result<Option<Kernel>> {
    match spec {
        "coulomb" => Ok(Some(coulomb(grid)?)),
        "none" => Ok(None),
        s if s.starts_with("table:") => {
            let k = read_kernel(&s["table:".len()..])?;
            k.grid().check_same(&grid)?;
            Ok(Some(k))
        }
        s => Err(Error::Config(format!("unknown kernel '{s}' (coulomb, table:<file>, none)"))),
    }
}

fn need_kernel(spec: &str, grid: Grid3) -> Result<Kernel> {
    load_kernel(spec, grid)?.ok_or_else(|| Error::Config("this command needs a kernel".into()))
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Ground-state directory: profile.chqf plus report.txt.
fn load_ground(dir: &Path, kern: &Kernel) -> Result<GroundState> {
    let report = fs::read_to_string(dir.join("report.txt"))
        .map_err(|e| Error::Config(format!("{}: {e}", dir.join("report.txt").display())))?;
    let a = report
        .lines()
        .find_map(|l| l.strip_prefix("a = "))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::Format("report.txt has no 'a = ' line".into()))?;
    let profile = match read_field(dir.join("profile.chqf"))? {
        FieldData::Real(r) => r,
        FieldData::Complex(c) => c.real_part(),
    };
    profile.grid().check_same(kern.grid())?;
    GroundState::from_profile(profile, a, kern)
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Key-value manifest next to the outputs.
fn write_manifest(path: &Path, command: &str, config: &str, seconds: f64, outputs: &[PathBuf]) -> Result<()> {
    let mut m = String::new();
    let _ = writeln!(m, "program = choquard {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "command = {command}");
    let _ = writeln!(m, "threads = {}", thread_count());
    let _ = writeln!(m, "seconds = {seconds:.3}");
    for o in outputs {
        let _ = writeln!(m, "sha256 {} = {}", o.file_name().and_then(|s| s.to_str()).unwrap_or("?"), sha256_hex(o)?);
    }
    let _ = writeln!(m, "[config]");
    m.push_str(config);
    if !config.ends_with('\n') {
        m.push('\n');
    }
    fs::write(path, m)?;
    Ok(())
}

fn manifest_for(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".manifest");
    PathBuf::from(p)
}

fn ensure_parent(p: &Path) -> Result<()> {
    if let Some(d) = p.parent() {
        if !d.as_os_str().is_empty() {
            fs::create_dir_all(d)?;
        }
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    let start = Instant::now();
    let echo = format!("{cmd:?}");
    match cmd {
        Command::Ground { rho, a, kernel, n, half_width, max_iter, out } => {
            let grid = make_grid(n, half_width)?;
            let kern = need_kernel(&kernel, grid)?;
            let params = SolverParams { max_iter, ..SolverParams::default() };
            let gs = match (rho, a) {
                (Some(r), _) => solve_constrained(r, &kern, &params)?,
                (None, Some(a)) => solve_free(a, &kern, &params)?,
                _ => return Err(Error::Config("give --rho or --a".into())),
            };
            fs::create_dir_all(&out)?;
            let field = out.join("profile.chqf");
            write_real(&field, &gs.profile)?;
            let v = virial_report(&gs);
            let mut r = String::new();
            let _ = writeln!(r, "a = {}", f(gs.a));
            let _ = writeln!(r, "rho = {}", f(gs.rho));
            let _ = writeln!(r, "gamma = {}", f(gs.gamma));
            let _ = writeln!(r, "lambda = {}", f(gs.lambda_cap));
            let _ = writeln!(r, "kinetic = {}", f(gs.report.kinetic));
            let _ = writeln!(r, "dd = {}", f(gs.report.dd));
            let _ = writeln!(r, "residual = {}", f(gs.residual));
            let _ = writeln!(r, "iterations = {}", gs.iterations);
            let _ = writeln!(r, "phase_defect = {}", f(gs.phase_defect));
            let _ = writeln!(r, "virial_kinetic = {}", f(v.kinetic));
            let _ = writeln!(r, "virial_mass = {}", f(v.mass));
            let _ = writeln!(r, "virial_pohozaev = {}", f(v.pohozaev));
            let _ = writeln!(r, "virial_dd_balance = {}", f(v.dd_balance));
            match decay_fit(&gs) {
                Ok(d) => {
                    let _ = writeln!(r, "decay_c = {}", f(d.c));
                    let _ = writeln!(r, "decay_sigma = {}", f(d.sigma));
                    let _ = writeln!(r, "decay_worst_ratio = {}", f(d.worst_ratio));
                }
                Err(e) => {
                    let _ = writeln!(r, "decay_fit = failed: {e}");
                }
            }
            let report = out.join("report.txt");
            fs::write(&report, &r)?;
            print!("{r}");
            write_manifest(&out.join("manifest.txt"), &echo, "", start.elapsed().as_secs_f64(), &[field, report])
        }
        Command::Evolve { init, t_final, dt, monitor, kernel, reference, sample_every, out } => {
            let mut mon = Monitors { charge: false, energy: false, orbit: false };
            for m in monitor.split(',').map(str::trim).filter(|m| !m.is_empty()) {
                match m {
                    "charge" => mon.charge = true,
                    "energy" => mon.energy = true,
                    "orbit" => mon.orbit = true,
                    other => return Err(Error::Config(format!("unknown monitor '{other}'"))),
                }
            }
            let (u0, ground_dir) = match init.strip_prefix("ground:") {
                Some(dir) => {
                    let FieldData::Real(r) = read_field(Path::new(dir).join("profile.chqf"))? else {
                        return Err(Error::Format("ground profile must be real".into()));
                    };
                    (r.to_complex(), Some(PathBuf::from(dir)))
                }
                None => (read_field(&init)?.into_complex(), None),
            };
            let grid = *u0.grid();
            let kern = load_kernel(&kernel, grid)?;
            let ref_dir = reference.or(ground_dir);
            let orbit_ref = match (&ref_dir, mon.orbit) {
                (Some(d), true) => {
                    let k = kern.as_ref().ok_or_else(|| Error::Config("orbit monitor needs a kernel".into()))?;
                    Some(OrbitReference::from_ground_state(&load_ground(d, k)?))
                }
                _ => None,
            };
            let samples = evolve_with(&u0, t_final, dt, kern.as_ref(), sample_every, orbit_ref.as_ref(), mon)?;
            let mut csv = String::from("t,charge_drift,energy_drift,orbit_distance,best_phase\n");
            for s in &samples {
                let (d, p) = s.orbit.map_or((String::new(), String::new()), |o| (f(o.value), f(o.best_phase)));
                let _ = writeln!(csv, "{},{},{},{},{}", f(s.t), f(s.charge_drift), f(s.energy_drift), d, p);
            }
            ensure_parent(&out)?;
            fs::write(&out, csv)?;
            write_manifest(&manifest_for(&out), &echo, "", start.elapsed().as_secs_f64(), std::slice::from_ref(&out))
        }
        Command::Stability { ground, delta, t_final, dt, trials, seed, kernel, sample_every, out } => {
            let probe = match read_field(ground.join("profile.chqf"))? {
                FieldData::Real(r) => *r.grid(),
                FieldData::Complex(c) => *c.grid(),
            };
            let kern = need_kernel(&kernel, probe)?;
            let gs = load_ground(&ground, &kern)?;
            let res = stability_experiment(&gs, delta, t_final, dt, &kern, trials, seed, sample_every, thread_count())?;
            let mut csv = String::from("trial,seed,t,orbit_distance\n");
            for (i, t) in res.trials.iter().enumerate() {
                for (time, d) in &t.series {
                    let _ = writeln!(csv, "{i},{},{},{}", t.seed, f(*time), f(*d));
                }
            }
            ensure_parent(&out)?;
            fs::write(&out, csv)?;
            println!("max orbit distance = {}", f(res.max_distance));
            write_manifest(&manifest_for(&out), &echo, "", start.elapsed().as_secs_f64(), std::slice::from_ref(&out))
        }
        Command::Multibump { config, eps, out } => {
            let text = fs::read_to_string(&config).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let cfg = load_multibump(&config)?;
            let sweep = match eps {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad ε value '{s}'"))))
                    .collect::<Result<Vec<_>>>()?,
                None => cfg.eps.clone(),
            };
            if sweep.is_empty() {
                return Err(Error::Config("no ε values given".into()));
            }
            let outputs = multibump(&cfg, &sweep, &out)?;
            write_manifest(&out.join("manifest.txt"), &echo, &text, start.elapsed().as_secs_f64(), &outputs)
        }
        Command::Ode { config, t_final, dt, out } => {
            let text = fs::read_to_string(&config).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let cfg = load_ode(&config)?;
            let s0 = cfg.initial_state()?;
            let tr = integrate(&s0, &cfg.field, t_final, dt, cfg.stride, cfg.min_distance)?;
            let k = s0.len();
            let mut csv = String::from("t");
            for j in 0..k {
                for c in ["x", "y", "z"] {
                    let _ = write!(csv, ",{c}{j}");
                }
            }
            for j in 0..k {
                for c in ["x", "y", "z"] {
                    let _ = write!(csv, ",xi_{c}{j}");
                }
            }
            csv.push_str(",H,min_pair_distance\n");
            for s in &tr.samples {
                csv.push_str(&f(s.t));
                for p in s.x.iter().chain(&s.xi) {
                    for c in p {
                        let _ = write!(csv, ",{}", f(*c));
                    }
                }
                let mp = if s.min_pair.is_finite() { f(s.min_pair) } else { String::new() };
                let _ = writeln!(csv, ",{},{}", f(s.h), mp);
            }
            ensure_parent(&out)?;
            fs::write(&out, csv)?;
            println!("H drift = {}", f(tr.h_drift));
            write_manifest(&manifest_for(&out), &echo, &text, start.elapsed().as_secs_f64(), std::slice::from_ref(&out))
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut failed = 0;
            for name in names {
                for c in run_suite(name)? {
                    println!(
                        "{:<14} {:<42} {:>12.4e} {:>12.4e}  {}",
                        name,
                        c.name,
                        c.value,
                        c.limit,
                        if c.pass { "PASS" } else { "FAIL" }
                    );
                    if !c.pass {
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                return Err(Error::Degenerate(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn multibump(cfg: &MultibumpConfig, sweep: &[f64], out: &Path) -> Result<Vec<PathBuf>> {
    let grid = make_grid(cfg.grid.n, cfg.grid.half_width)?;
    let kern = coulomb(grid)?;
    // one profile per distinct well minimum
    let mut profiles: Vec<(f64, GroundState)> = Vec::new();
    for b in &cfg.bumps {
        let w = cfg
            .potential
            .well_of(b.center)
            .ok_or_else(|| Error::Config(format!("bump centre {:?} outside every well", b.center)))?;
        let m = cfg.potential.wells[w].minimum;
        if !profiles.iter().any(|(a, _)| *a == m) {
            profiles.push((m, solve_free(m, &kern, &SolverParams::default())?));
        }
    }
    let profile_of = |c: [f64; 3]| -> GroundState {
        let m = cfg.potential.wells[cfg.potential.well_of(c).expect("checked")].minimum;
        profiles.iter().find(|(a, _)| *a == m).expect("solved").1.clone()
    };
    fs::create_dir_all(out)?;
    let mut table = String::from(
        "eps,stage,gamma_eps,f_eps,q_eps,residual,maxima,max_dist_to_minimizers,remainder,envelope_c1,envelope_c2,envelope_pass\n",
    );
    let mut maxima_csv = String::from("eps,stage,y0,y1,y2,value,well,dist_to_minimizers\n");
    for &eps in sweep {
        let pot = cfg.potential.with_eps(eps);
        pot.validate(&grid)?;
        let bumps: Vec<Bump> =
            cfg.bumps.iter().map(|b| Bump { center: b.center, profile: profile_of(b.center), phase: b.phase }).collect();
        let set = BumpSet::new(bumps, &pot)?;
        let ansatz = build_ansatz(&set, &pot, grid)?;
        let relaxed = relax(&ansatz, &pot, &kern, cfg.relax_steps)?;
        for (stage, u) in [("ansatz", &ansatz), ("relaxed", &relaxed)] {
            let g = gamma_eps(u, &pot, &kern)?;
            let res = magnetic_residual(u, &pot, &kern)?.relative;
            let maxima = local_maxima(u, &pot);
            let worst = maxima.iter().filter_map(|m| m.distance_to_minimizers).fold(0.0f64, f64::max);
            for m in &maxima {
                let _ = writeln!(
                    maxima_csv,
                    "{},{stage},{},{},{},{},{},{}",
                    f(eps),
                    f(m.point[0]),
                    f(m.point[1]),
                    f(m.point[2]),
                    f(m.value),
                    m.well.map_or(String::new(), |w| w.to_string()),
                    m.distance_to_minimizers.map_or(String::new(), f)
                );
            }
            // decompose about the observed maxima when they match the bump count
            let rem = if maxima.len() == set.len() {
                let moved: Vec<Bump> = maxima
                    .iter()
                    .map(|m| {
                        let c = [eps * m.point[0], eps * m.point[1], eps * m.point[2]];
                        Bump { center: c, profile: profile_of(c), phase: 0.0 }
                    })
                    .collect();
                match BumpSet::new(moved, &pot).and_then(|s| decomposition_remainder(u, &s, &pot)) {
                    Ok(d) => f(d.remainder),
                    Err(_) => String::new(),
                }
            } else {
                String::new()
            };
            let centres: Vec<[f64; 3]> = maxima.iter().map(|m| m.point).collect();
            let env = if centres.is_empty() { None } else { decay_envelope_check(u, &centres).ok() };
            let _ = writeln!(
                table,
                "{},{stage},{},{},{},{},{},{},{},{},{},{}",
                f(eps),
                f(g.gamma_eps),
                f(g.f_eps),
                f(g.q_eps),
                f(res),
                maxima.len(),
                f(worst),
                rem,
                env.map_or(String::new(), |e| f(e.c1)),
                env.map_or(String::new(), |e| f(e.c2)),
                env.map_or(String::new(), |e| e.pass.to_string())
            );
        }
    }
    let a = out.join("multibump.csv");
    let b = out.join("maxima.csv");
    fs::write(&a, &table)?;
    fs::write(&b, &maxima_csv)?;
    print!("{table}");
    Ok(vec![a, b])
}

/// Writes a ground-state directory from an existing profile; used by tests
/// and examples that want `ground:<dir>` inputs without a solve.
pub fn write_ground_dir(dir: &Path, profile: &RealField, a: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_real(dir.join("profile.chqf"), profile)?;
    fs::write(dir.join("report.txt"), format!("a = {}\n", f(a)))?;
    Ok(())
}
