use std::fs;
use std::path::Path;

use choquard::cli::{run, write_ground_dir};
use choquard::energy::dd;
use choquard::io::{decode_field, encode_complex, encode_real, read_field, read_kernel, write_complex, write_kernel, FieldData};
use choquard::kernel::{build_kernel, KernelSpec, TabulatedKernel};
use choquard::{coulomb, make_grid, ComplexField, RealField};
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use tempfile::tempdir;

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("choquard").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (head, rows)
}

#[test]
fn field_files_round_trip() {
    let grid = make_grid(8, 2.0).unwrap();
    let r = RealField::from_fn(grid, |x| x[0] - 2.0 * x[1] + x[2] * x[2]);
    let FieldData::Real(back) = decode_field(&encode_real(&r)).unwrap() else { panic!("expected real") };
    assert_eq!(back.values(), r.values());
    assert_eq!(back.grid(), r.grid());
    let c = ComplexField::from_fn(grid, |x| Complex64::new(x[0], -x[2]));
    let dir = tempdir().unwrap();
    let path = dir.path().join("c.chqf");
    write_complex(&path, &c).unwrap();
    let FieldData::Complex(back) = read_field(&path).unwrap() else { panic!("expected complex") };
    assert_eq!(back.values(), c.values());

    let mut bad = encode_real(&r);
    bad[0] = b'X';
    assert!(decode_field(&bad).unwrap_err().is_config());
    let mut long = encode_complex(&c);
    long.push(0);
    assert!(decode_field(&long).is_err());
    let short = &encode_real(&r)[..40];
    assert!(decode_field(short).is_err());
}

#[test]
fn kernel_cache_round_trip() {
    let grid = make_grid(16, 4.0).unwrap();
    let tab = build_kernel(&KernelSpec::Tabulated(TabulatedKernel::coulomb()), grid, 16.0).unwrap();
    let dir = tempdir().unwrap();
    let path = dir.path().join("k.chqk");
    write_kernel(&path, &tab).unwrap();
    let back = read_kernel(&path).unwrap();
    assert_eq!(back.kind(), tab.kind());
    assert_eq!(back.multiplier_full(), tab.multiplier_full());
    let u = ComplexField::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0));
    assert_eq!(dd(&u, &back).unwrap(), dd(&u, &tab).unwrap());
}

#[test]
fn parse_errors_and_help() {
    assert_eq!(cli(&["--help"]), 0);
    assert_eq!(cli(&["--version"]), 0);
    assert_eq!(cli(&[]), 2);
    assert_eq!(cli(&["ground", "--bogus"]), 2);
    assert_eq!(cli(&["ground", "--rho", "1", "--a", "1"]), 2);
    assert_eq!(cli(&["verify", "--suite", "nonsense"]), 2);
    assert_eq!(cli(&["ode", "--config", "/no/such/file.toml", "--T", "1", "--dt", "0.1"]), 2);
    assert_eq!(cli(&["ground", "--a", "1", "--n", "30"]), 2);
}

#[test]
fn ground_evolve_and_stability_pipeline() {
    let dir = tempdir().unwrap();
    let g = dir.path().join("gs");
    assert_eq!(cli(&["ground", "--a", "1", "--n", "48", "--L", "12", "--out", p(&g)]), 0);
    let report = fs::read_to_string(g.join("report.txt")).unwrap();
    let gamma: f64 = report.lines().find_map(|l| l.strip_prefix("gamma = ")).unwrap().parse().unwrap();
    assert!(gamma > 1.1 && gamma < 1.25, "{gamma}");
    let manifest = fs::read_to_string(g.join("manifest.txt")).unwrap();
    let digest = Sha256::digest(fs::read(g.join("profile.chqf")).unwrap());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    assert!(manifest.contains(&format!("sha256 profile.chqf = {hex}")));

    let out = dir.path().join("ev.csv");
    let init = format!("ground:{}", p(&g));
    assert_eq!(cli(&["evolve", "--init", &init, "--T", "0.1", "--dt", "0.01", "--sample-every", "5", "--out", p(&out)]), 0);
    let (head, rows) = csv_rows(&out);
    assert_eq!(head, ["t", "charge_drift", "energy_drift", "orbit_distance", "best_phase"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r[1] < 1e-12 && r[3] < 1e-4, "{r:?}");
    }
    // the standing wave turns at rate a = 1
    assert!((rows[2][4] - 0.1).abs() < 1e-4, "{}", rows[2][4]);
    assert!(out.with_extension("csv.manifest").exists());

    let st = dir.path().join("st.csv");
    let args = ["stability", "--ground", p(&g), "--delta", "0.01", "--T", "0.1", "--dt", "0.01", "--trials", "2", "--sample-every", "5", "--out", p(&st)];
    assert_eq!(cli(&args), 0);
    let (head, rows) = csv_rows(&st);
    assert_eq!(head, ["trial", "seed", "t", "orbit_distance"]);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[3] < 0.1));

    // a cached kernel on another grid is refused
    let k = dir.path().join("k.chqk");
    write_kernel(&k, &coulomb(make_grid(16, 4.0).unwrap()).unwrap()).unwrap();
    let spec = format!("table:{}", p(&k));
    assert_eq!(cli(&["evolve", "--init", &init, "--T", "0.1", "--dt", "0.01", "--kernel", &spec, "--out", p(&out)]), 2);
}

#[test]
fn evolve_without_kernel_from_field_file() {
    let dir = tempdir().unwrap();
    let grid = make_grid(16, 4.0).unwrap();
    let f = dir.path().join("u.chqf");
    write_complex(&f, &ComplexField::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0))).unwrap();
    let out = dir.path().join("free.csv");
    assert_eq!(cli(&["evolve", "--init", p(&f), "--T", "0.2", "--dt", "0.01", "--kernel", "none", "--monitor", "charge,energy", "--out", p(&out)]), 0);
    let (_, rows) = csv_rows(&out);
    assert!(rows.iter().all(|r| r[2] < 1e-12 && r[3].is_nan()));
    assert_eq!(cli(&["evolve", "--init", p(&f), "--T", "0.2", "--dt", "0.01", "--monitor", "speed", "--out", p(&out)]), 2);
    // a reference directory without report.txt
    let g = dir.path().join("g");
    write_ground_dir(&g, &RealField::zeros(grid), 1.0).unwrap();
    fs::remove_file(g.join("report.txt")).unwrap();
    let r = format!("{}", g.display());
    assert_eq!(cli(&["evolve", "--init", p(&f), "--T", "0.2", "--dt", "0.01", "--reference", &r, "--out", p(&out)]), 2);
}

#[test]
fn ode_and_multibump_commands() {
    let dir = tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/larmor.toml");
    let out = dir.path().join("l.csv");
    assert_eq!(cli(&["ode", "--config", cfg, "--T", "3.141592653589793", "--dt", "0.001", "--out", p(&out)]), 0);
    let (head, rows) = csv_rows(&out);
    assert_eq!(head.len(), 1 + 6 + 2);
    let last = rows.last().unwrap();
    // one full turn at |B| = 2
    assert!((last[4] - 1.0).abs() < 1e-9 && last[1].abs() < 1e-9, "{last:?}");

    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/two_wells.toml"))
        .unwrap()
        .replace("n = 64", "n = 48")
        .replace("L = 16.0", "L = 12.0")
        .replace("relax_steps = 50", "relax_steps = 3");
    let cfg = dir.path().join("tw.toml");
    fs::write(&cfg, text).unwrap();
    let mb = dir.path().join("mb");
    assert_eq!(cli(&["multibump", "--config", p(&cfg), "--eps", "0.5", "--out", p(&mb)]), 0);
    let (head, rows) = csv_rows(&mb.join("multibump.csv"));
    assert_eq!(head[0], "eps");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][4], 0.0);
    assert_eq!(rows[0][6], 2.0);
    assert!(rows[0][8] < 1e-10);
    assert!(fs::read_to_string(mb.join("manifest.txt")).unwrap().contains("[[bumps]]"));
    assert_eq!(cli(&["multibump", "--config", p(&cfg), "--eps", "0.5,x", "--out", p(&mb)]), 2);
    // ε too small for the grid: the bumps leave the box, a run failure rather than a bad config
    assert_eq!(cli(&["multibump", "--config", p(&cfg), "--eps", "0.05", "--out", p(&mb)]), 3);
}
