//! Split-step propagation of `i u_t + Δu + (W * |u|^2) u = 0`, conservation
//! monitors and the orbital-stability experiment.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::energy::hartree_potential;
use crate::error::{Error, Result};
use crate::fft::{fft3, fft3_raw};
use crate::grid::{norms, shift_field, ComplexField, Grid3};
use crate::ground_state::GroundState;
use crate::kernel::Kernel;

/// Charge ‖u‖^2 and energy ½‖∇u‖^2 - ¼D(u); without a kernel the energy is
/// the free kinetic part.
pub fn charge_energy(u: &ComplexField, kern: Option<&Kernel>) -> Result<(f64, f64)> {
    let nr = norms(u);
    let d = match kern {
        Some(k) => crate::energy::dd(u, k)?,
        None => 0.0,
    };
    Ok((nr.l2_sq, 0.5 * nr.kinetic() - 0.25 * d))
}

/// Field, time and the conserved quantities recorded at t = 0.
#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub u: ComplexField,
    pub t: f64,
    charge0: f64,
    energy0: f64,
}

impl EvolutionState {
    pub fn new(u: ComplexField, kern: Option<&Kernel>) -> Result<Self> {
        let (charge0, energy0) = charge_energy(&u, kern)?;
        Ok(EvolutionState { u, t: 0.0, charge0, energy0 })
    }

    pub fn charge0(&self) -> f64 {
        self.charge0
    }

    pub fn energy0(&self) -> f64 {
        self.energy0
    }
}

/// Strang splitting with a fixed step. The potential W * |u|^2 is cached
/// between steps: the phase substeps leave |u| unchanged, so one
/// convolution per step suffices.
pub struct Propagator<'k> {
    kern: Option<&'k Kernel>,
    grid: Grid3,
    dt: f64,
    free: Vec<Complex64>,
    phi: Option<Vec<f64>>,
}

impl<'k> Propagator<'k> {
    /// Any nonzero dt; negative steps run the flow backwards.
    pub fn new(grid: Grid3, dt: f64, kern: Option<&'k Kernel>) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::Param(format!("time step {dt} must be nonzero")));
        }
        if let Some(k) = kern {
            k.grid().check_same(&grid)?;
        }
        // the inverse-transform scale rides on the phase factors
        let s = 1.0 / grid.len() as f64;
        let free = grid.k_squared().iter().map(|q| Complex64::from_polar(s, -dt * q)).collect();
        Ok(Propagator { kern, grid, dt, free, phi: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn potential(&self, u: &ComplexField) -> Result<Vec<f64>> {
        match self.kern {
            Some(k) => Ok(hartree_potential(u, k)?.into_values()),
            None => Ok(vec![0.0; self.grid.len()]),
        }
    }

    fn kick(u: &mut ComplexField, phi: &[f64], tau: f64) {
        for (v, p) in u.values_mut().iter_mut().zip(phi) {
            *v *= Complex64::from_polar(1.0, tau * p);
        }
    }

    /// Advance `u` by one step. The cache assumes `u` is only modified by
    /// this propagator between calls; call `reset` otherwise.
    pub fn step(&mut self, u: &mut ComplexField) -> Result<()> {
        u.grid().check_same(&self.grid)?;
        let half = 0.5 * self.dt;
        let phi = match self.phi.take() {
            Some(p) => p,
            None => self.potential(u)?,
        };
        Self::kick(u, &phi, half);
        let n = self.grid.n();
        let vals = u.values_mut();
        fft3_raw(vals, n, false);
        for (v, f) in vals.iter_mut().zip(&self.free) {
            *v *= f;
        }
        fft3_raw(vals, n, true);
        let phi = self.potential(u)?;
        Self::kick(u, &phi, half);
        self.phi = Some(phi);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.phi = None;
    }
}

/// One Strang step of size dt > 0.
pub fn step_strang(state: &EvolutionState, dt: f64, kern: Option<&Kernel>) -> Result<EvolutionState> {
    if !(dt > 0.0) {
        return Err(Error::Param(format!("time step {dt} must be positive")));
    }
    let mut p = Propagator::new(*state.u.grid(), dt, kern)?;
    let mut next = state.clone();
    p.step(&mut next.u)?;
    next.t += dt;
    Ok(next)
}

/// H1 distance to the orbit {e^{iθ} U(· - y)} over grid shifts y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitDistance {
    pub value: f64,
    /// Signed shift in cells, each component in [-n/2, n/2).
    pub best_shift: [i64; 3],
    /// In [0, 2π).
    pub best_phase: f64,
}

/// Precomputed reference spectrum for repeated orbit distances.
pub struct OrbitReference {
    reference: ComplexField,
    weighted: Vec<Complex64>,
}

impl OrbitReference {
    pub fn new(reference: ComplexField) -> Self {
        let k2 = reference.grid().k_squared();
        let weighted = reference.spectrum().iter().zip(&k2).map(|(v, q)| v.conj() * (1.0 + q)).collect();
        OrbitReference { reference, weighted }
    }

    pub fn from_ground_state(gs: &GroundState) -> Self {
        Self::new(gs.profile.to_complex())
    }

    /// The shift maximizes |⟨U(· - y), u⟩_{H1}|, computed for all grid
    /// shifts at once by FFT; the phase is its argument. The distance is
    /// then evaluated directly from the difference field.
    pub fn distance(&self, u: &ComplexField) -> Result<OrbitDistance> {
        let grid = *self.reference.grid();
        u.grid().check_same(&grid)?;
        let n = grid.n();
        let mut corr: Vec<Complex64> =
            u.spectrum().iter().zip(&self.weighted).map(|(a, b)| a * b).collect();
        fft3(&mut corr, n, true);
        let mut best = 0;
        for (i, c) in corr.iter().enumerate() {
            if c.norm_sqr() > corr[best].norm_sqr() {
                best = i;
            }
        }
        let ni = n as i64;
        let wrap = |s: usize| {
            let s = s as i64;
            if s >= ni / 2 {
                s - ni
            } else {
                s
            }
        };
        let [a, b, c] = grid.unindex(best);
        let shift = [wrap(a), wrap(b), wrap(c)];
        let theta = corr[best].arg().rem_euclid(2.0 * PI);
        let cand = shift_field(&self.reference, shift).scaled(Complex64::from_polar(1.0, theta));
        let diff = u.axpy(Complex64::new(-1.0, 0.0), &cand)?;
        Ok(OrbitDistance { value: norms(&diff).h1_sq.sqrt(), best_shift: shift, best_phase: theta })
    }
}

pub fn orbit_distance(u: &ComplexField, reference: &GroundState) -> Result<OrbitDistance> {
    OrbitReference::from_ground_state(reference).distance(u)
}

/// One monitor sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub charge_drift: f64,
    pub energy_drift: f64,
    pub orbit: Option<OrbitDistance>,
}

/// Which diagnostics to record at each sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Monitors {
    pub charge: bool,
    pub energy: bool,
    pub orbit: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Monitors { charge: true, energy: true, orbit: true }
    }
}

/// Evolve for time T with round(T/dt) equal steps, sampling every
/// `sample_every` steps and at the end.
pub fn evolve(
    u0: &ComplexField,
    t_final: f64,
    dt: f64,
    kern: Option<&Kernel>,
    sample_every: usize,
    reference: Option<&OrbitReference>,
) -> Result<Vec<Sample>> {
    evolve_with(u0, t_final, dt, kern, sample_every, reference, Monitors::default())
}

pub fn evolve_with(
    u0: &ComplexField,
    t_final: f64,
    dt: f64,
    kern: Option<&Kernel>,
    sample_every: usize,
    reference: Option<&OrbitReference>,
    monitors: Monitors,
) -> Result<Vec<Sample>> {
    if !(t_final >= 0.0) || !(dt > 0.0) || sample_every == 0 {
        return Err(Error::Param("need T >= 0, dt > 0 and sample_every >= 1".into()));
    }
    let steps = (t_final / dt).round() as usize;
    let h = if steps > 0 { t_final / steps as f64 } else { dt };
    let mut state = EvolutionState::new(u0.clone(), kern)?;
    let mut prop = Propagator::new(*u0.grid(), h, kern)?;
    let sample = |s: &EvolutionState| -> Result<Sample> {
        let (charge_drift, energy_drift) = if monitors.charge || monitors.energy {
            let (c, e) = charge_energy(&s.u, kern)?;
            let ed = if s.energy0 != 0.0 { (e - s.energy0).abs() / s.energy0.abs() } else { (e - s.energy0).abs() };
            ((c - s.charge0).abs() / s.charge0, ed)
        } else {
            (0.0, 0.0)
        };
        let orbit = match (monitors.orbit, reference) {
            (true, Some(r)) => Some(r.distance(&s.u)?),
            _ => None,
        };
        Ok(Sample { t: s.t, charge_drift, energy_drift, orbit })
    };
    let mut out = vec![sample(&state)?];
    for k in 1..=steps {
        prop.step(&mut state.u)?;
        state.t = k as f64 * h;
        if k % sample_every == 0 || k == steps {
            if !state.u.is_finite() {
                return Err(Error::NonFinite(format!("field at t = {}", state.t)));
            }
            out.push(sample(&state)?);
        }
    }
    Ok(out)
}

/// Random perturbation built from modes |j_a| <= n/16 with normal
/// coefficients, scaled to H1 norm delta.
pub fn band_limited_perturbation(grid: Grid3, delta: f64, seed: u64) -> Result<ComplexField> {
    let n = grid.n();
    let cut = (n / 16) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, v) in spec.iter_mut().enumerate() {
        let [a, b, c] = grid.unindex(i);
        if grid.mode(a).abs() <= cut && grid.mode(b).abs() <= cut && grid.mode(c).abs() <= cut {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = Complex64::new(re, im);
        }
    }
    let f = ComplexField::from_spectrum(grid, spec);
    let h1 = norms(&f).h1_sq.sqrt();
    if !(h1 > 0.0) {
        return Err(Error::Degenerate("empty perturbation".into()));
    }
    Ok(f.scaled(Complex64::new(delta / h1, 0.0)))
}

#[derive(Clone, Debug)]
pub struct StabilityTrial {
    pub seed: u64,
    pub max_distance: f64,
    /// (t, orbit distance)
    pub series: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct StabilityResult {
    pub max_distance: f64,
    pub trials: Vec<StabilityTrial>,
}

/// Evolve U + δ·(random H1-unit perturbation) for each trial and record
/// sup_t of the orbit distance. Trial i uses seed `seed + i`. Trials run on
/// up to `threads` workers; results do not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    gs: &GroundState,
    delta: f64,
    t_final: f64,
    dt: f64,
    kern: &Kernel,
    trials: usize,
    seed: u64,
    sample_every: usize,
    threads: usize,
) -> Result<StabilityResult> {
    if !(delta >= 0.0) || trials == 0 {
        return Err(Error::Param("need delta >= 0 and at least one trial".into()));
    }
    let reference = OrbitReference::from_ground_state(gs);
    let u0 = gs.profile.to_complex();
    let run = |i: usize| -> Result<StabilityTrial> {
        let s = seed + i as u64;
        let start = if delta > 0.0 {
            u0.axpy(Complex64::new(1.0, 0.0), &band_limited_perturbation(*u0.grid(), delta, s)?)?
        } else {
            u0.clone()
        };
        let mon = Monitors { charge: false, energy: false, orbit: true };
        let samples = evolve_with(&start, t_final, dt, Some(kern), sample_every, Some(&reference), mon)?;
        let series: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.orbit.map_or(0.0, |o| o.value))).collect();
        let max_distance = series.iter().fold(0.0f64, |m, p| m.max(p.1));
        Ok(StabilityTrial { seed: s, max_distance, series })
    };
    let threads = threads.clamp(1, trials);
    let results: Vec<Result<StabilityTrial>> = if threads == 1 {
        (0..trials).map(run).collect()
    } else {
        let mut slots: Vec<Option<Result<StabilityTrial>>> = (0..trials).map(|_| None).collect();
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let run = &run;
                    sc.spawn(move || {
                        (w..trials).step_by(threads).map(|i| (i, run(i))).collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("trial worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.unwrap()).collect()
    };
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_distance = trials.iter().fold(0.0f64, |m, t| m.max(t.max_distance));
    Ok(StabilityResult { max_distance, trials })
}
