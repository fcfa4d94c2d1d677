//! Finite-ε penalized functional of the magnetic Hartree equation in scaled
//! coordinates y = x/ε: the multi-bump ansatz, the norms and energies built
//! on it, and concentration diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decay::{log_linear_fit, shell};
use crate::energy::{hartree_potential, Residual};
use crate::error::{Error, Result};
use crate::fft::fft3;
use crate::grid::{norms, ComplexField, Grid3};
use crate::ground_state::{interior_samples, GroundState};
use crate::kernel::Kernel;
use crate::potential::{check_well, dist, ScalarPotential, VectorPotential, Well};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Potentials, wells and the small parameters of the penalized problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub v: ScalarPotential,
    #[serde(default)]
    pub a: VectorPotential,
    pub wells: Vec<Well>,
    /// Points of the zero set Z of V, if any.
    #[serde(default)]
    pub zero_set: Vec<[f64; 3]>,
    /// Floor of Ṽ_ε = max(m̃, V_ε).
    pub m_tilde: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Penalization weight outside the wells is ε^(-6/μ).
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Cutoff is 1 on |x| <= β and 0 beyond 2β.
    pub beta: f64,
    /// δ is this fraction of the separation minimum.
    #[serde(default = "default_delta_fraction")]
    pub delta_fraction: f64,
}

fn default_eps() -> f64 {
    1.0
}

fn default_mu() -> f64 {
    6.0
}

fn default_delta_fraction() -> f64 {
    0.1
}

impl PotentialSpec {
    pub fn with_eps(&self, eps: f64) -> Self {
        PotentialSpec { eps, ..self.clone() }
    }

    /// m = min_i m_i.
    pub fn min_well(&self) -> f64 {
        self.wells.iter().map(|w| w.minimum).fold(f64::INFINITY, f64::min)
    }

    /// δ = fraction · min{dist(M, ∁O), dist(O^i, O^j), dist(O, Z)}.
    pub fn delta(&self) -> f64 {
        let mut s = f64::INFINITY;
        for w in &self.wells {
            for p in &w.minimizers {
                s = s.min(w.region.depth(*p));
            }
        }
        for (i, a) in self.wells.iter().enumerate() {
            for b in &self.wells[i + 1..] {
                s = s.min(a.region.distance_between(&b.region));
            }
        }
        for z in &self.zero_set {
            for w in &self.wells {
                s = s.min(w.region.distance_to(*z));
            }
        }
        self.delta_fraction * s
    }

    /// Penalization weight ε^(-6/μ).
    pub fn chi(&self) -> f64 {
        self.eps.powf(-6.0 / self.mu)
    }

    /// Index of the well containing the physical point x.
    pub fn well_of(&self, x: [f64; 3]) -> Option<usize> {
        self.wells.iter().position(|w| w.region.contains(x))
    }

    /// Structural checks, plus V >= 0 on the grid and a positive minimum
    /// of V on the grid boundary.
    pub fn validate(&self, grid: &Grid3) -> Result<()> {
        if !(self.eps > 0.0) || !(self.mu > 0.0) {
            return Err(Error::Param(format!("need ε > 0 and μ > 0 (got {}, {})", self.eps, self.mu)));
        }
        if self.wells.is_empty() {
            return Err(Error::Param("no wells declared".into()));
        }
        for w in &self.wells {
            check_well(&self.v, w)?;
        }
        for (i, a) in self.wells.iter().enumerate() {
            for b in &self.wells[i + 1..] {
                if !(a.region.distance_between(&b.region) > 0.0) {
                    return Err(Error::Param("well regions must have positive separation".into()));
                }
            }
        }
        let delta = self.delta();
        if !(self.beta > 0.0 && self.beta < delta) {
            return Err(Error::Param(format!("need 0 < β < δ (β = {}, δ = {delta})", self.beta)));
        }
        let n = grid.n();
        let mut vmin = f64::INFINITY;
        let mut edge = f64::INFINITY;
        for i in 0..grid.len() {
            let y = grid.point(i);
            let v = self.v.value(scale(y, self.eps));
            vmin = vmin.min(v);
            let [a, b, c] = grid.unindex(i);
            if [a, b, c].iter().any(|&j| j == 0 || j == n - 1) {
                edge = edge.min(v);
            }
        }
        if vmin < 0.0 {
            return Err(Error::Param(format!("V takes the negative value {vmin} on the grid")));
        }
        if !(edge > 0.0) {
            return Err(Error::Param("V does not stay positive on the grid boundary".into()));
        }
        if !(self.m_tilde < self.min_well().min(edge)) {
            return Err(Error::Param(format!(
                "m̃ = {} must be below min(m, V at the boundary) = {}",
                self.m_tilde,
                self.min_well().min(edge)
            )));
        }
        Ok(())
    }
}

fn scale(y: [f64; 3], eps: f64) -> [f64; 3] {
    [eps * y[0], eps * y[1], eps * y[2]]
}

/// C² cutoff: 1 on [0, β], quintic smoothstep down to 0 at 2β.
pub fn cutoff(r: f64, beta: f64) -> f64 {
    if r <= beta {
        1.0
    } else if r >= 2.0 * beta {
        0.0
    } else {
        let s = (r - beta) / beta;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// One bump: physical centre x_i, profile at multiplier m_i, phase w_i.
#[derive(Clone, Debug)]
pub struct Bump {
    pub center: [f64; 3],
    pub profile: GroundState,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct BumpSet {
    bumps: Vec<Bump>,
}

impl BumpSet {
    /// Checks separation > 2δ and that each centre lies in a well within
    /// β of its minimizers.
    pub fn new(bumps: Vec<Bump>, pot: &PotentialSpec) -> Result<Self> {
        if bumps.is_empty() {
            return Err(Error::Param("empty bump set".into()));
        }
        let delta = pot.delta();
        for (i, b) in bumps.iter().enumerate() {
            let w = pot
                .well_of(b.center)
                .ok_or_else(|| Error::Param(format!("bump centre {:?} outside every well", b.center)))?;
            let d = pot.wells[w].distance_to_minimizers(b.center);
            if d > pot.beta {
                return Err(Error::Param(format!("bump centre {:?} is {d} from its minimizers (β = {})", b.center, pot.beta)));
            }
            for c in &bumps[i + 1..] {
                if !(dist(b.center, c.center) > 2.0 * delta) {
                    return Err(Error::Param(format!("bumps at {:?} and {:?} closer than 2δ", b.center, c.center)));
                }
            }
        }
        Ok(BumpSet { bumps })
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }
}

/// Grid offset of x/ε in cells; errors unless it is a node.
fn scaled_offset(x: [f64; 3], eps: f64, grid: &Grid3) -> Result<[i64; 3]> {
    let h = grid.spacing();
    let mut o = [0i64; 3];
    for a in 0..3 {
        let s = x[a] / (eps * h);
        let r = s.round();
        if (s - r).abs() > 1e-9 * s.abs().max(1.0) {
            return Err(Error::Param(format!("scaled centre {:?} is not a grid node", scale(x, 1.0 / eps))));
        }
        o[a] = r as i64;
    }
    Ok(o)
}

/// e^{iA(x_i)·z} φ(ε|z|) U_i(z), z = y - x_i/ε, with unit phase factor
/// left out.
fn bump_field(b: &Bump, pot: &PotentialSpec, grid: &Grid3) -> Result<Vec<Complex64>> {
    b.profile.grid().check_same(grid)?;
    let o = scaled_offset(b.center, pot.eps, grid)?;
    let n = grid.n() as i64;
    let h = grid.spacing();
    let l = grid.half_width();
    let prof = b.profile.profile.values();
    let c = (n / 2) as usize;
    let ax = pot.a.value(b.center);

    // mass of the truncated profile that would leave the box
    let mut lost = 0.0;
    let mut total = 0.0;
    for (i, &u) in prof.iter().enumerate() {
        let p = grid.point(i);
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let m = (cutoff(pot.eps * r, pot.beta) * u).powi(2);
        total += m;
        let shifted = [p[0] + o[0] as f64 * h, p[1] + o[1] as f64 * h, p[2] + o[2] as f64 * h];
        if shifted.iter().any(|s| *s < -l || *s >= l) {
            lost += m;
        }
    }
    if lost > 1e-6 * total {
        return Err(Error::Clipped(format!(
            "bump at {:?} loses {:.3e} of its mass to the box",
            b.center,
            lost / total
        )));
    }

    let mut out = vec![ZERO; grid.len()];
    for (i, v) in out.iter_mut().enumerate() {
        let [ix, iy, iz] = grid.unindex(i);
        let rel = [ix as i64 - n / 2 - o[0], iy as i64 - n / 2 - o[1], iz as i64 - n / 2 - o[2]];
        let z = [rel[0] as f64 * h, rel[1] as f64 * h, rel[2] as f64 * h];
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let phi = cutoff(pot.eps * r, pot.beta);
        if phi == 0.0 {
            continue;
        }
        let wrap = |d: i64| (d + c as i64).rem_euclid(n) as usize;
        let u = prof[grid.index(wrap(rel[0]), wrap(rel[1]), wrap(rel[2]))];
        let th = ax[0] * z[0] + ax[1] * z[1] + ax[2] * z[2];
        *v = Complex64::from_polar(phi * u, th);
    }
    Ok(out)
}

/// Σ_i e^{i(w_i + A(x_i)·(y - x_i/ε))} φ_ε(y - x_i/ε) U_i(y - x_i/ε).
pub fn build_ansatz(bumps: &BumpSet, pot: &PotentialSpec, grid: Grid3) -> Result<ComplexField> {
    for (i, a) in bumps.bumps.iter().enumerate() {
        for b in &bumps.bumps[i + 1..] {
            if dist(a.center, b.center) < 4.0 * pot.beta {
                return Err(Error::Param(format!(
                    "cutoff supports of the bumps at {:?} and {:?} overlap",
                    a.center, b.center
                )));
            }
        }
    }
    let mut out = vec![ZERO; grid.len()];
    for b in &bumps.bumps {
        let f = bump_field(b, pot, &grid)?;
        let w = Complex64::from_polar(1.0, b.phase);
        for (o, v) in out.iter_mut().zip(f) {
            *o += w * v;
        }
    }
    ComplexField::from_values(grid, out)
}

/// Potentials sampled on the scaled grid.
struct Sampled {
    grid: Grid3,
    a: [Vec<f64>; 3],
    v: Vec<f64>,
    v_floor: Vec<f64>,
    /// Index of the well containing εy, if any.
    well: Vec<Option<usize>>,
}

impl Sampled {
    fn new(pot: &PotentialSpec, grid: Grid3) -> Self {
        let mut a = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        let mut v = Vec::with_capacity(grid.len());
        let mut well = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = scale(grid.point(i), pot.eps);
            let ax = pot.a.value(x);
            for c in 0..3 {
                a[c].push(ax[c]);
            }
            v.push(pot.v.value(x));
            well.push(pot.well_of(x));
        }
        let v_floor = v.iter().map(|x| x.max(pot.m_tilde)).collect();
        Sampled { grid, a, v, v_floor, well }
    }

    fn partial(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.grid.n();
        let k = self.grid.wavenumbers();
        let i = Complex64::new(0.0, 1.0);
        let mut c: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let slot = match axis {
                    0 => idx / (n * n),
                    1 => (idx / n) % n,
                    _ => idx % n,
                };
                v * i * k[slot]
            })
            .collect();
        fft3(&mut c, n, true);
        c
    }

    /// D_a u = -i ∂_a u - A_a u.
    fn covariant(&self, u: &[Complex64]) -> [Vec<Complex64>; 3] {
        let mut s = u.to_vec();
        fft3(&mut s, self.grid.n(), false);
        let mi = Complex64::new(0.0, -1.0);
        let d = |axis: usize| -> Vec<Complex64> {
            self.partial(&s, axis)
                .into_iter()
                .zip(u)
                .zip(&self.a[axis])
                .map(|((g, v), a)| mi * g - a * v)
                .collect()
        };
        [d(0), d(1), d(2)]
    }

    /// Σ_a D_a D_a u; the product rule hides the div A term.
    fn magnetic_laplacian(&self, u: &[Complex64]) -> Vec<Complex64> {
        let ds = self.covariant(u);
        let mi = Complex64::new(0.0, -1.0);
        let mut out = vec![ZERO; u.len()];
        for (axis, d) in ds.iter().enumerate() {
            let mut s = d.clone();
            fft3(&mut s, self.grid.n(), false);
            let g = self.partial(&s, axis);
            for (((o, gv), dv), a) in out.iter_mut().zip(&g).zip(d).zip(&self.a[axis]) {
                *o += mi * gv - a * dv;
            }
        }
        out
    }

    /// ∫|D u|^2.
    fn magnetic_kinetic(&self, u: &[Complex64]) -> f64 {
        let ds = self.covariant(u);
        ds.iter().map(|d| d.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum::<f64>() * self.grid.cell_volume()
    }

    fn weighted_mass(&self, u: &[Complex64], w: &[f64]) -> f64 {
        u.iter().zip(w).map(|(v, p)| p * v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Mass outside the wells; with `well = Some(i)`, outside well i only.
    fn outside_mass(&self, u: &[Complex64], well: Option<usize>) -> f64 {
        let s: f64 = u
            .iter()
            .zip(&self.well)
            .filter(|(_, w)| match well {
                None => w.is_none(),
                Some(i) => **w != Some(i),
            })
            .map(|(v, _)| v.norm_sqr())
            .sum();
        s * self.grid.cell_volume()
    }
}

/// ‖u‖_ε^2 = ∫|D^ε u|^2 + Ṽ_ε|u|^2 (squared norm).
pub fn norm_eps(u: &ComplexField, pot: &PotentialSpec) -> f64 {
    let s = Sampled::new(pot, *u.grid());
    s.magnetic_kinetic(u.values()) + s.weighted_mass(u.values(), &s.v_floor)
}

/// Penalized energy and its parts.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaEps {
    pub f_eps: f64,
    pub q_eps: f64,
    /// Q with the weight vanishing on well i only.
    pub q_per_well: Vec<f64>,
    pub gamma_eps: f64,
}

fn clamp_q(chi: f64, mass_out: f64) -> f64 {
    (chi * mass_out - 1.0).max(0.0).powf(2.5)
}

/// F_ε = ½∫|D^ε u|^2 + V_ε|u|^2 - ¼D(u), Q_ε = (∫χ_ε|u|^2 - 1)_+^{5/2},
/// Γ_ε = F_ε + Q_ε.
pub fn gamma_eps(u: &ComplexField, pot: &PotentialSpec, kern: &Kernel) -> Result<GammaEps> {
    kern.grid().check_same(u.grid())?;
    let s = Sampled::new(pot, *u.grid());
    let phi = hartree_potential(u, kern)?;
    let d = s.weighted_mass(u.values(), phi.values());
    let f_eps = 0.5 * (s.magnetic_kinetic(u.values()) + s.weighted_mass(u.values(), &s.v)) - 0.25 * d;
    let chi = pot.chi();
    let q_eps = clamp_q(chi, s.outside_mass(u.values(), None));
    let q_per_well = (0..pot.wells.len()).map(|i| clamp_q(chi, s.outside_mass(u.values(), Some(i)))).collect();
    Ok(GammaEps { f_eps, q_eps, q_per_well, gamma_eps: f_eps + q_eps })
}

/// (D^ε)^2 u + V_ε u - (W * |u|^2) u, relative to ‖u‖_{H1}.
pub fn magnetic_residual(u: &ComplexField, pot: &PotentialSpec, kern: &Kernel) -> Result<Residual> {
    kern.grid().check_same(u.grid())?;
    let s = Sampled::new(pot, *u.grid());
    let phi = hartree_potential(u, kern)?;
    let mut r = s.magnetic_laplacian(u.values());
    for (((o, v), p), vv) in r.iter_mut().zip(u.values()).zip(phi.values()).zip(&s.v) {
        *o += (vv - p) * v;
    }
    let field = ComplexField::from_values(*u.grid(), r)?;
    Ok(Residual::new(field, norms(u).h1_sq))
}

/// Strict local maximum of |u| on the scaled grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMax {
    /// Scaled coordinates y.
    pub point: [f64; 3],
    pub index: usize,
    pub value: f64,
    /// Well containing εy.
    pub well: Option<usize>,
    /// dist(εy, M^i) for the owning well.
    pub distance_to_minimizers: Option<f64>,
}

/// Strict 26-neighbour maxima of |u| above 0.1 max|u|, largest first.
pub fn local_maxima(u: &ComplexField, pot: &PotentialSpec) -> Vec<LocalMax> {
    let grid = *u.grid();
    let n = grid.n();
    let m: Vec<f64> = u.values().iter().map(|v| v.norm()).collect();
    let top = m.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::new();
    if !(top > 0.0) {
        return out;
    }
    for (i, &v) in m.iter().enumerate() {
        if v <= 0.1 * top {
            continue;
        }
        let [x, y, z] = grid.unindex(i);
        let mut strict = true;
        'nb: for dx in [n - 1, 0, 1] {
            for dy in [n - 1, 0, 1] {
                for dz in [n - 1, 0, 1] {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    if m[grid.index((x + dx) % n, (y + dy) % n, (z + dz) % n)] >= v {
                        strict = false;
                        break 'nb;
                    }
                }
            }
        }
        if strict {
            let p = grid.point(i);
            let x = scale(p, pot.eps);
            let well = pot.well_of(x);
            out.push(LocalMax {
                point: p,
                index: i,
                value: v,
                well,
                distance_to_minimizers: well.map(|w| pot.wells[w].distance_to_minimizers(x)),
            });
        }
    }
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    out
}

/// Remainder of the bump decomposition with its fitted phases.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// ‖K‖_ε
    pub remainder: f64,
    pub phases: Vec<f64>,
}

/// K = u - Σ e^{i w_i} (phased, cut-off bump i). Each w_i is the argument
/// of the overlap of u with bump i over the nodes nearest to its centre.
pub fn decomposition_remainder(u: &ComplexField, bumps: &BumpSet, pot: &PotentialSpec) -> Result<Decomposition> {
    let grid = *u.grid();
    let found = local_maxima(u, pot).len();
    if found != bumps.len() {
        return Err(Error::Degenerate(format!("{} bumps but {found} local maxima", bumps.len())));
    }
    let centres: Vec<[f64; 3]> = bumps.bumps.iter().map(|b| scale(b.center, 1.0 / pot.eps)).collect();
    let owner: Vec<usize> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            (0..centres.len()).min_by(|&a, &b| dist(p, centres[a]).total_cmp(&dist(p, centres[b]))).unwrap()
        })
        .collect();
    let mut k = u.values().to_vec();
    let mut phases = Vec::with_capacity(bumps.len());
    for (j, b) in bumps.bumps.iter().enumerate() {
        let f = bump_field(b, pot, &grid)?;
        let c: Complex64 = f
            .iter()
            .zip(u.values())
            .zip(&owner)
            .filter(|(_, o)| **o == j)
            .map(|((bv, uv), _)| bv.conj() * uv)
            .sum();
        let w = c.arg();
        let rot = Complex64::from_polar(1.0, w);
        for (kv, bv) in k.iter_mut().zip(&f) {
            *kv -= rot * bv;
        }
        phases.push(w.rem_euclid(2.0 * std::f64::consts::PI));
    }
    let kf = ComplexField::from_values(grid, k)?;
    Ok(Decomposition { remainder: norm_eps(&kf, pot).sqrt(), phases })
}

/// Envelope |u(y)| <= C1 exp(-C2 min_i |y - y_i|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck {
    pub c1: f64,
    pub c2: f64,
    /// max over the shell of |u| / envelope.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// C1, C2 are fitted on the band |u| in [1e-3, 1e-2] max; the check runs
/// over the whole shell [1e-8, 1e-2] max. Nodes within L/4 of the faces
/// are skipped. Centres are scaled coordinates.
pub fn decay_envelope_check(u: &ComplexField, centers: &[[f64; 3]]) -> Result<EnvelopeCheck> {
    if centers.is_empty() {
        return Err(Error::Param("no centres".into()));
    }
    let grid = u.grid();
    let all: Vec<f64> = u.values().iter().map(|v| v.norm()).collect();
    let vmax = all.iter().cloned().fold(0.0, f64::max);
    let vmin = all.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(vmax > 0.0) || vmin > 1e-6 * vmax {
        return Err(Error::Degenerate("insufficient dynamic range for an envelope".into()));
    }
    let (vals, d) = interior_samples(grid, &all, |p| {
        centers.iter().map(|c| dist(p, *c)).fold(f64::INFINITY, f64::min)
    });
    let band = shell(&vals, &d, vmax, 1e-3, 1e-2);
    if band.len() < 10 {
        return Err(Error::Degenerate(format!("only {} samples in the fit band", band.len())));
    }
    let (b0, b1) = log_linear_fit(&band);
    let (c1, c2) = (b0.exp(), -b1);
    let worst_ratio = shell(&vals, &d, vmax, 1e-8, 1e-2)
        .iter()
        .map(|&(r, v)| v / (c1 * (-c2 * r).exp()))
        .fold(0.0, f64::max);
    Ok(EnvelopeCheck { c1, c2, worst_ratio, pass: c2 > 0.0 && worst_ratio <= 1.5 })
}

/// A fixed number of descent steps on Γ_ε, preconditioned by (c - Δ)^{-1}
/// and halving the step while Γ_ε rises. The mass in each well's cell
/// (nodes whose εy is nearest to that well's minimizers) is held fixed, so
/// bumps cannot trade mass. Stops early when no step lowers Γ_ε.
pub fn relax(u0: &ComplexField, pot: &PotentialSpec, kern: &Kernel, steps: usize) -> Result<ComplexField> {
    kern.grid().check_same(u0.grid())?;
    let grid = *u0.grid();
    let n = grid.n();
    let w = grid.cell_volume();
    let s = Sampled::new(pot, grid);
    let chi = pot.chi();
    let k2 = grid.k_squared();
    let c = pot.min_well().max(0.25);
    let cells = pot.wells.len();
    let cell: Vec<usize> = (0..grid.len())
        .map(|i| {
            let x = scale(grid.point(i), pot.eps);
            (0..cells)
                .min_by(|&a, &b| {
                    pot.wells[a].distance_to_minimizers(x).total_cmp(&pot.wells[b].distance_to_minimizers(x))
                })
                .unwrap()
        })
        .collect();
    let cell_mass = |u: &[Complex64]| -> Vec<f64> {
        let mut m = vec![0.0; cells];
        for (v, &j) in u.iter().zip(&cell) {
            m[j] += v.norm_sqr() * w;
        }
        m
    };
    let target = cell_mass(u0.values());
    if !target.iter().any(|m| *m > 0.0) {
        return Err(Error::Collapse);
    }
    let outside: Vec<f64> = s.well.iter().map(|o| if o.is_none() { chi } else { 0.0 }).collect();

    let energy = |u: &[Complex64]| -> Result<(f64, Vec<f64>)> {
        let f = ComplexField::from_values(grid, u.to_vec())?;
        let phi = hartree_potential(&f, kern)?.into_values();
        let e = 0.5 * (s.magnetic_kinetic(u) + s.weighted_mass(u, &s.v)) - 0.25 * s.weighted_mass(u, &phi)
            + clamp_q(chi, s.outside_mass(u, None));
        Ok((e, phi))
    };
    let precondition = |f: &[Complex64]| -> Vec<Complex64> {
        let mut h = f.to_vec();
        fft3(&mut h, n, false);
        for (v, k) in h.iter_mut().zip(&k2) {
            *v /= c + k;
        }
        fft3(&mut h, n, true);
        h
    };
    let mut u = u0.values().to_vec();
    let (mut e, mut phi) = energy(&u)?;
    for _ in 0..steps {
        let q = 5.0 * (chi * s.outside_mass(&u, None) - 1.0).max(0.0).powf(1.5);
        let mut g = s.magnetic_laplacian(&u);
        for ((((gv, v), p), vv), o) in g.iter_mut().zip(&u).zip(&phi).zip(&s.v).zip(&outside) {
            *gv += (vv - p + q * o) * v;
        }
        let pg = precondition(&g);
        // per-cell multipliers from the cell-restricted preconditioned
        // directions of u, approximated pointwise
        let pu = precondition(&u);
        let (mut num, mut den) = (vec![0.0; cells], vec![0.0; cells]);
        for (((a, b), v), &j) in pg.iter().zip(&pu).zip(&u).zip(&cell) {
            num[j] += (v.conj() * a).re;
            den[j] += (v.conj() * b).re;
        }
        let beta: Vec<f64> = num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect();
        let d: Vec<Complex64> = pg.iter().zip(&pu).zip(&cell).map(|((a, b), &j)| a - beta[j] * b).collect();
        let mut tau = 0.9;
        let mut accepted = None;
        for _ in 0..30 {
            let mut v: Vec<Complex64> = u.iter().zip(&d).map(|(a, b)| a - tau * b).collect();
            let m = cell_mass(&v);
            let sc: Vec<f64> = m.iter().zip(&target).map(|(a, t)| if *a > 0.0 { (t / a).sqrt() } else { 0.0 }).collect();
            for (x, &j) in v.iter_mut().zip(&cell) {
                *x *= sc[j];
            }
            let (ev, pv) = energy(&v)?;
            if ev <= e {
                accepted = Some((v, ev, pv));
                break;
            }
            tau *= 0.5;
        }
        match accepted {
            Some((v, ev, pv)) => {
                u = v;
                e = ev;
                phi = pv;
            }
            None => break,
        }
    }
    ComplexField::from_values(grid, u)
}

/// Constant shift A -> A + a0 together with u -> e^{i a0·y} u.
pub fn gauge_shift(u: &ComplexField, pot: &PotentialSpec, a0: [f64; 3]) -> Result<(ComplexField, PotentialSpec)> {
    let grid = *u.grid();
    let vals = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let y = grid.point(i);
            v * Complex64::from_polar(1.0, a0[0] * y[0] + a0[1] * y[1] + a0[2] * y[2])
        })
        .collect();
    let mut p = pot.clone();
    for c in 0..3 {
        p.a.a0[c] += a0[c];
    }
    Ok((ComplexField::from_values(grid, vals)?, p))
}
