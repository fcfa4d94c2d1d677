//! Ground states of `-ΔU + aU = (W * U^2) U`, by projected descent on the
//! L2 sphere and by rescaling to a prescribed multiplier.

use std::path::PathBuf;

use num_complex::Complex64;

use crate::decay::{fit_exponential_tail, DecayFit};
use crate::energy::{energy_report, limiting_residual, EnergyReport};
use crate::error::{Error, Result};
use crate::fft::fft3;
use crate::grid::{norms, shift_field, ComplexField, Grid3, RealField};
use crate::io::read_field;
use crate::kernel::{free_space_convolve, Kernel};

/// Initial guess for the descent.
#[derive(Clone, Debug)]
pub enum SeedProfile {
    /// exp(-|x|^2 / (2 w^2))
    Gaussian(f64),
    /// CHQF field file on the kernel's grid.
    File(PathBuf),
    Field(ComplexField),
}

#[derive(Clone, Debug)]
pub struct SolverParams {
    /// Pseudo-time step of the preconditioned flow. The preconditioner
    /// (c - Δ)^{-1} makes this O(1) rather than O(h^2).
    pub dt: f64,
    pub max_iter: usize,
    /// Relative energy decrease accepted as stagnation.
    pub tol: f64,
    /// Relative residual ‖-ΔU + γU - (W*U^2)U‖ / ‖U‖_{H1} at which to stop.
    pub residual_tol: f64,
    pub seed: SeedProfile,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dt: 0.9,
            max_iter: 3000,
            tol: 1e-10,
            residual_tol: 1e-8,
            seed: SeedProfile::Gaussian(2.0),
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.tol > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::Param("dt, tol and residual_tol must be positive".into()));
        }
        if let SeedProfile::Gaussian(w) = self.seed {
            if !(w > 0.0) {
                return Err(Error::Param(format!("seed width {w} must be positive")));
            }
        }
        Ok(())
    }

    fn seed_field(&self, grid: Grid3) -> Result<ComplexField> {
        let u = match &self.seed {
            SeedProfile::Gaussian(w) => {
                let s = 1.0 / (2.0 * w * w);
                ComplexField::from_fn(grid, |x| {
                    Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * s).exp(), 0.0)
                })
            }
            SeedProfile::File(p) => read_field(p)?.into_complex(),
            SeedProfile::Field(f) => f.clone(),
        };
        u.grid().check_same(&grid)?;
        Ok(u)
    }
}

/// Solved profile with its energy ledger.
#[derive(Clone, Debug)]
pub struct GroundState {
    /// Non-negative, maximum at the grid origin.
    pub profile: RealField,
    /// Coefficient a in -ΔU + aU = (W*U^2)U.
    pub a: f64,
    /// ‖U‖^2
    pub rho: f64,
    /// J(U) = 𝓔(U) + a ρ / 2.
    pub gamma: f64,
    /// 𝓔(U)
    pub lambda_cap: f64,
    /// (‖∇U‖^2 + a ‖U‖^2) / 4
    pub energy_ea: f64,
    pub report: EnergyReport,
    pub decay: Option<DecayFit>,
    pub iterations: usize,
    /// Relative limiting residual at multiplier `a`.
    pub residual: f64,
    /// max |Im(e^{-iθ}u)| / max |u| of the raw complex minimizer.
    pub phase_defect: f64,
}

impl GroundState {
    /// Ledger of a given profile at multiplier `a`, without solving.
    pub fn from_profile(profile: RealField, a: f64, kern: &Kernel) -> Result<Self> {
        let u = profile.to_complex();
        let report = energy_report(&u, a, kern)?;
        let residual = limiting_residual(&u, a, kern)?.relative;
        let decay = decay_fit_profile(&profile).ok();
        Ok(GroundState {
            profile,
            a,
            rho: report.mass,
            gamma: report.j,
            lambda_cap: report.energy,
            energy_ea: 0.25 * (report.kinetic + a * report.mass),
            report,
            decay,
            iterations: 0,
            residual,
            phase_defect: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid3 {
        self.profile.grid()
    }
}

struct Eval {
    u: Vec<Complex64>,
    uhat: Vec<Complex64>,
    phi: Vec<f64>,
    kin: f64,
    dd: f64,
    energy: f64,
}

fn evaluate(grid: &Grid3, u: Vec<Complex64>, k2: &[f64], kern: &Kernel) -> Result<Eval> {
    let w = grid.cell_volume();
    let mut uhat = u.clone();
    fft3(&mut uhat, grid.n(), false);
    let kin = uhat.iter().zip(k2).map(|(v, q)| q * v.norm_sqr()).sum::<f64>() * w / grid.len() as f64;
    let dens = RealField::from_values(*grid, u.iter().map(|v| v.norm_sqr()).collect())
        .map_err(|_| Error::NonFinite("iterate".into()))?;
    let phi = free_space_convolve(&dens, kern)?.into_values();
    let dd = phi.iter().zip(dens.values()).map(|(p, d)| p * d).sum::<f64>() * w;
    if !kin.is_finite() || !dd.is_finite() {
        return Err(Error::NonFinite("energy".into()));
    }
    Ok(Eval { u, uhat, phi, kin, dd, energy: 0.5 * kin - 0.25 * dd })
}

fn normalize(u: &mut [Complex64], rho: f64, w: f64) -> Result<()> {
    let m = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * w;
    if !(m > 1e-300) {
        return Err(Error::Collapse);
    }
    let s = (rho / m).sqrt();
    for v in u.iter_mut() {
        *v *= s;
    }
    Ok(())
}

/// Minimize 𝓔 on ‖u‖^2 = rho. Each step is a (c - Δ)^{-1}-preconditioned
/// gradient step, projected onto the tangent space of the sphere in the
/// preconditioned metric, then renormalized; the step is halved until the
/// energy does not rise.
pub fn solve_constrained(rho: f64, kern: &Kernel, params: &SolverParams) -> Result<GroundState> {
    if !(rho > 0.0) {
        return Err(Error::Param(format!("mass {rho} must be positive")));
    }
    params.validate()?;
    let grid = *kern.grid();
    let n = grid.n();
    let w = grid.cell_volume();
    let nn = grid.len() as f64;
    let k2 = grid.k_squared();

    let mut u0 = params.seed_field(grid)?.into_values();
    normalize(&mut u0, rho, w)?;
    let mut cur = evaluate(&grid, u0, &k2, kern)?;
    let mut iters = 0;
    loop {
        // g = -Δu - φu
        let mut pu: Vec<Complex64> = cur.u.iter().zip(&cur.phi).map(|(v, p)| v * p).collect();
        fft3(&mut pu, n, false);
        let ghat: Vec<Complex64> =
            cur.uhat.iter().zip(&pu).zip(&k2).map(|((v, p), q)| v * q - p).collect();
        let gamma = (cur.dd - cur.kin) / rho;
        let res2 = ghat
            .iter()
            .zip(&cur.uhat)
            .map(|(g, v)| (g + gamma * v).norm_sqr())
            .sum::<f64>()
            * w
            / nn;
        let rel = (res2 / (cur.kin + rho)).sqrt();
        if rel <= params.residual_tol {
            break;
        }
        if iters >= params.max_iter {
            return Err(Error::NoConvergence { iters, residual: rel });
        }

        let c = gamma.max(0.25);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((g, v), q) in ghat.iter().zip(&cur.uhat).zip(&k2) {
            let p = 1.0 / (c + q);
            num += (v.conj() * g).re * p;
            den += v.norm_sqr() * p;
        }
        let beta = num / den;
        let mut d: Vec<Complex64> = ghat
            .iter()
            .zip(&cur.uhat)
            .zip(&k2)
            .map(|((g, v), q)| (g - beta * v) / (c + q))
            .collect();
        fft3(&mut d, n, true);

        let mut tau = params.dt;
        let mut halvings = 0;
        let next = loop {
            let mut v: Vec<Complex64> = cur.u.iter().zip(&d).map(|(a, b)| a - tau * b).collect();
            normalize(&mut v, rho, w)?;
            let e = evaluate(&grid, v, &k2, kern)?;
            if e.energy <= cur.energy + 1e-13 * cur.energy.abs() {
                break e;
            }
            halvings += 1;
            if halvings > 40 {
                return Err(Error::EnergyIncrease { iter: iters });
            }
            tau *= 0.5;
        };
        iters += 1;
        let decrease = cur.energy - next.energy;
        cur = next;
        if decrease <= params.tol * cur.energy.abs() && rel <= 100.0 * params.residual_tol {
            break;
        }
    }

    // global phase, then modulus, then centre the maximum
    let s: Complex64 = cur.u.iter().map(|v| v * v.norm()).sum();
    let rot = Complex64::from_polar(1.0, -s.arg());
    let umax = cur.u.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let phase_defect = cur.u.iter().fold(0.0f64, |m, v| m.max((rot * v).im.abs())) / umax;
    let modulus: Vec<Complex64> = cur.u.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    let mut best = 0;
    for (i, v) in modulus.iter().enumerate() {
        if v.re > modulus[best].re {
            best = i;
        }
    }
    let [bx, by, bz] = grid.unindex(best);
    let c = (n / 2) as i64;
    let centred = shift_field(
        &ComplexField::from_values(grid, modulus)?,
        [c - bx as i64, c - by as i64, c - bz as i64],
    );
    let profile = centred.real_part();
    let nr = norms(&centred);
    let ddv = crate::energy::dd(&centred, kern)?;
    let a = (ddv - nr.kinetic()) / nr.l2_sq;
    let mut gs = GroundState::from_profile(profile, a, kern)?;
    gs.iterations = iters;
    gs.phase_defect = phase_defect;
    Ok(gs)
}

/// Ground state at multiplier `a`: solve at mass 3, map with T^λ,
/// λ = sqrt(a/γ), and re-converge at the mapped mass until γ = a.
pub fn solve_free(a: f64, kern: &Kernel, params: &SolverParams) -> Result<GroundState> {
    if !(a > 0.0) {
        return Err(Error::Param(format!("multiplier a = {a} must be positive")));
    }
    let mut gs = solve_constrained(3.0, kern, params)?;
    let mut iters = gs.iterations;
    for _ in 0..10 {
        if (gs.a - a).abs() <= 1e-10 * a {
            break;
        }
        let lambda = (a / gs.a).sqrt();
        let seed = rescale_t(&gs.profile.to_complex(), lambda)?;
        let mut p = params.clone();
        p.seed = SeedProfile::Field(seed);
        let phase = gs.phase_defect;
        gs = solve_constrained(gs.rho * lambda, kern, &p)?;
        gs.phase_defect = gs.phase_defect.max(phase);
        iters += gs.iterations;
    }
    let phase = gs.phase_defect;
    let mut out = GroundState::from_profile(gs.profile, a, kern)?;
    out.iterations = iters;
    out.phase_defect = phase;
    Ok(out)
}

/// 1D trigonometric interpolation weights: row i evaluates the interpolant
/// at lambda * x_i, or is zero when that point leaves [-L, L).
fn interp_matrix(grid: &Grid3, lambda: f64) -> Vec<f64> {
    let n = grid.n();
    let l = grid.half_width();
    let half = n / 2;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        let t = lambda * grid.coord(i);
        if t < -l || t >= l {
            continue;
        }
        for p in 0..n {
            let th = std::f64::consts::PI * (t - grid.coord(p)) / l;
            let mut s = 1.0 + (half as f64 * th).cos();
            for j in 1..half {
                s += 2.0 * (j as f64 * th).cos();
            }
            m[i * n + p] = s / n as f64;
        }
    }
    m
}

/// u(λx) by spectral interpolation. Errors when λ < 1 would push more than
/// 1e-6 of the mass outside the box.
pub fn dilate(u: &ComplexField, lambda: f64) -> Result<ComplexField> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Param(format!("dilation factor {lambda} must be positive")));
    }
    let grid = *u.grid();
    if lambda == 1.0 {
        return Ok(u.clone());
    }
    let n = grid.n();
    let l = grid.half_width();
    if lambda < 1.0 {
        let lim = lambda * l;
        let mut out = 0.0;
        let mut tot = 0.0;
        for (i, v) in u.values().iter().enumerate() {
            let p = grid.point(i);
            let m = v.norm_sqr();
            tot += m;
            if p.iter().any(|c| *c < -lim || *c >= lim) {
                out += m;
            }
        }
        if out > 1e-6 * tot {
            return Err(Error::Clipped(format!(
                "dilation by {lambda} loses {:.3e} of the mass",
                out / tot
            )));
        }
    }
    let m = interp_matrix(&grid, lambda);
    let src = u.values();
    let mut a = vec![Complex64::new(0.0, 0.0); grid.len()];
    // z
    for row in 0..n * n {
        for i in 0..n {
            let w = &m[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..n {
                acc += src[row * n + p] * w[p];
            }
            a[row * n + i] = acc;
        }
    }
    // y
    let mut b = vec![Complex64::new(0.0, 0.0); grid.len()];
    for x in 0..n {
        for i in 0..n {
            let w = &m[i * n..(i + 1) * n];
            for p in 0..n {
                if w[p] == 0.0 {
                    continue;
                }
                let s = &a[(x * n + p) * n..(x * n + p + 1) * n];
                let d = &mut b[(x * n + i) * n..(x * n + i + 1) * n];
                for z in 0..n {
                    d[z] += w[p] * s[z];
                }
            }
        }
    }
    // x
    let mut c = vec![Complex64::new(0.0, 0.0); grid.len()];
    let nn = n * n;
    for i in 0..n {
        let w = &m[i * n..(i + 1) * n];
        for p in 0..n {
            if w[p] == 0.0 {
                continue;
            }
            let s = &b[p * nn..(p + 1) * nn];
            let d = &mut c[i * nn..(i + 1) * nn];
            for k in 0..nn {
                d[k] += w[p] * s[k];
            }
        }
    }
    ComplexField::from_values(grid, c)
}

/// T^λ u = λ^2 u(λx); mass scales by λ.
pub fn rescale_t(u: &ComplexField, lambda: f64) -> Result<ComplexField> {
    Ok(dilate(u, lambda)?.scaled(Complex64::new(lambda * lambda, 0.0)))
}

/// Ψ(m) = -1/2 (3/(aρ))^{-3} m^{-2}.
pub fn psi_map(m: f64, a: f64, rho: f64) -> Result<f64> {
    if !(m > 0.0) || !(a > 0.0) || !(rho > 0.0) {
        return Err(Error::Param(format!("psi_map needs m, a, rho > 0 (got {m}, {a}, {rho})")));
    }
    Ok(-0.5 * (3.0 / (a * rho)).powi(-3) / (m * m))
}

pub fn psi_inverse(c: f64, a: f64, rho: f64) -> Result<f64> {
    if !(c < 0.0) || !(a > 0.0) || !(rho > 0.0) {
        return Err(Error::Param(format!("psi_inverse needs c < 0 and a, rho > 0 (got {c}, {a}, {rho})")));
    }
    Ok((-(0.5 / c) * (3.0 / (a * rho)).powi(-3)).sqrt())
}

/// Relative deviations from the identities satisfied by a ground state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirialReport {
    /// ‖∇U‖^2 / Γ - 1
    pub kinetic: f64,
    /// a‖U‖^2 / (3Γ) - 1
    pub mass: f64,
    /// Pohozaev residual / D
    pub pohozaev: f64,
    /// D / (‖∇U‖^2 + a‖U‖^2) - 1
    pub dd_balance: f64,
    /// E_a / Γ - 1
    pub energy: f64,
    pub degenerate: bool,
}

impl VirialReport {
    pub fn max_deviation(&self) -> f64 {
        if self.degenerate {
            return f64::INFINITY;
        }
        [self.kinetic, self.mass, self.pohozaev, self.dd_balance, self.energy]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

pub fn virial_report(gs: &GroundState) -> VirialReport {
    let r = &gs.report;
    if !(gs.gamma.abs() > 0.0) || !(r.dd > 0.0) {
        return VirialReport {
            kinetic: f64::NAN,
            mass: f64::NAN,
            pohozaev: f64::NAN,
            dd_balance: f64::NAN,
            energy: f64::NAN,
            degenerate: true,
        };
    }
    VirialReport {
        kinetic: r.kinetic / gs.gamma - 1.0,
        mass: gs.a * r.mass / (3.0 * gs.gamma) - 1.0,
        pohozaev: r.pohozaev_residual / r.dd,
        dd_balance: r.dd / (r.kinetic + gs.a * r.mass) - 1.0,
        energy: gs.energy_ea / gs.gamma - 1.0,
        degenerate: false,
    }
}

/// J(U(·/t)) by quadrature and Γ(t/2 + 3t^3/2 - t^5).
pub fn scale_path_energy(gs: &GroundState, t: f64, kern: &Kernel) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::Param(format!("t = {t} must be positive")));
    }
    let u = dilate(&gs.profile.to_complex(), 1.0 / t)?;
    let measured = energy_report(&u, gs.a, kern)?.j;
    let closed = gs.gamma * (0.5 * t + 1.5 * t.powi(3) - t.powi(5));
    Ok((measured, closed))
}

/// Exponential envelope of a ground state.
pub fn decay_fit(gs: &GroundState) -> Result<DecayFit> {
    decay_fit_profile(&gs.profile)
}

/// Exponential envelope of |u| about its maximum. Samples within L/4 of
/// the box faces are left out: there the periodic images of the kinetic
/// operator lift the tail.
pub fn decay_fit_profile(u: &RealField) -> Result<DecayFit> {
    let grid = u.grid();
    let vals: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = i;
        }
    }
    let c = grid.point(best);
    let (v, d) = interior_samples(grid, &vals, |p| {
        ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
    });
    fit_exponential_tail(&vals, &v, &d)
}

/// Values and distances at nodes at least L/4 away from every face.
pub(crate) fn interior_samples(
    grid: &Grid3,
    vals: &[f64],
    dist: impl Fn([f64; 3]) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let lim = 0.75 * grid.half_width();
    let mut v = Vec::new();
    let mut d = Vec::new();
    for (i, x) in vals.iter().enumerate() {
        let p = grid.point(i);
        if p.iter().all(|c| c.abs() <= lim) {
            v.push(*x);
            d.push(dist(p));
        }
    }
    (v, d)
}
