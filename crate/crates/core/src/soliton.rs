//! Point-particle dynamics of interacting bump centres in an electric
//! potential V and a magnetic field B = ∇×A:
//!
//! ẋ_j = ξ_j,  ξ̇_j = -∇V(x_j) - ε Σ_{i≠j} m_i ∇W(x_j - x_i) - ξ_j × B(x_j).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{ScalarPotential, VectorPotential};

/// Pair interaction W.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKernel {
    None,
    /// W(x) = 1/|x|, ∇W(x) = -x/|x|^3.
    Coulomb,
}

impl PairKernel {
    fn value(&self, d: [f64; 3]) -> f64 {
        match self {
            PairKernel::None => 0.0,
            PairKernel::Coulomb => 1.0 / norm(d),
        }
    }

    fn gradient(&self, d: [f64; 3]) -> [f64; 3] {
        match self {
            PairKernel::None => [0.0; 3],
            PairKernel::Coulomb => {
                let r = norm(d);
                let s = -1.0 / (r * r * r);
                [s * d[0], s * d[1], s * d[2]]
            }
        }
    }

    fn singular(&self) -> bool {
        matches!(self, PairKernel::Coulomb)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceField {
    pub v: ScalarPotential,
    pub w: PairKernel,
    #[serde(default)]
    pub a: VectorPotential,
    /// Interaction weight; negative values make the Coulomb pair force
    /// attractive.
    pub eps: f64,
}

impl ForceField {
    /// B = ∇×A (uniform for the linear catalog).
    pub fn b(&self) -> [f64; 3] {
        self.a.curl()
    }
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonState {
    pub x: Vec<[f64; 3]>,
    pub xi: Vec<[f64; 3]>,
    pub m: Vec<f64>,
    pub t: f64,
}

impl NewtonState {
    pub fn new(x: Vec<[f64; 3]>, xi: Vec<[f64; 3]>, m: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != xi.len() || x.len() != m.len() {
            return Err(Error::Param("need k >= 1 particles with matching positions, velocities and masses".into()));
        }
        if m.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Param("masses must be positive".into()));
        }
        let finite = x.iter().chain(&xi).all(|p| p.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(Error::NonFinite("initial state".into()));
        }
        Ok(NewtonState { x, xi, m, t: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.x.len() {
            for j in i + 1..self.x.len() {
                d = d.min(norm([self.x[i][0] - self.x[j][0], self.x[i][1] - self.x[j][1], self.x[i][2] - self.x[j][2]]));
            }
        }
        d
    }
}

/// Time derivatives (ẋ_j, ξ̇_j).
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub dx: Vec<[f64; 3]>,
    pub dxi: Vec<[f64; 3]>,
}

pub fn rhs(state: &NewtonState, field: &ForceField) -> Result<Derivative> {
    let k = state.len();
    let b = field.b();
    let interact = field.eps != 0.0 && field.w != PairKernel::None;
    let mut dxi = Vec::with_capacity(k);
    for j in 0..k {
        let g = field.v.gradient(state.x[j]);
        let l = cross(state.xi[j], b);
        let mut f = [-g[0] - l[0], -g[1] - l[1], -g[2] - l[2]];
        if interact {
            for i in 0..k {
                if i == j {
                    continue;
                }
                let d = [
                    state.x[j][0] - state.x[i][0],
                    state.x[j][1] - state.x[i][1],
                    state.x[j][2] - state.x[i][2],
                ];
                if field.w.singular() && norm(d) == 0.0 {
                    return Err(Error::Singular(format!("particles {i} and {j} coincide")));
                }
                let gw = field.w.gradient(d);
                for a in 0..3 {
                    f[a] -= field.eps * state.m[i] * gw[a];
                }
            }
        }
        dxi.push(f);
    }
    Ok(Derivative { dx: state.xi.clone(), dxi })
}

/// H = Σ m|ξ|^2/2 + Σ m V(x) + (ε/2) ΣΣ_{i≠j} m_i m_j W(x_i - x_j).
pub fn hamiltonian(state: &NewtonState, field: &ForceField) -> f64 {
    let k = state.len();
    let mut h = 0.0;
    for j in 0..k {
        h += state.m[j] * (0.5 * dot(state.xi[j], state.xi[j]) + field.v.value(state.x[j]));
    }
    if field.eps != 0.0 && field.w != PairKernel::None {
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let d = [
                        state.x[i][0] - state.x[j][0],
                        state.x[i][1] - state.x[j][1],
                        state.x[i][2] - state.x[j][2],
                    ];
                    h += 0.5 * field.eps * state.m[i] * state.m[j] * field.w.value(d);
                }
            }
        }
    }
    h
}

/// Σ m_j ⟨ξ_j, ξ_j × B⟩, the power of the magnetic force.
pub fn magnetic_power(state: &NewtonState, field: &ForceField) -> f64 {
    let b = field.b();
    state.xi.iter().zip(&state.m).map(|(v, m)| m * dot(*v, cross(*v, b))).sum()
}

/// One recorded point of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<[f64; 3]>,
    pub xi: Vec<[f64; 3]>,
    pub h: f64,
    pub min_pair: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// max_t |H(t) - H(0)|
    pub h_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

fn axpy(s: &NewtonState, h: f64, d: &Derivative) -> NewtonState {
    let mv = |p: &[[f64; 3]], q: &[[f64; 3]]| -> Vec<[f64; 3]> {
        p.iter().zip(q).map(|(a, b)| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]]).collect()
    };
    NewtonState { x: mv(&s.x, &d.dx), xi: mv(&s.xi, &d.dxi), m: s.m.clone(), t: s.t + h }
}

/// One classical RK4 step.
pub fn rk4_step(s: &NewtonState, field: &ForceField, h: f64) -> Result<NewtonState> {
    let k1 = rhs(s, field)?;
    let k2 = rhs(&axpy(s, 0.5 * h, &k1), field)?;
    let k3 = rhs(&axpy(s, 0.5 * h, &k2), field)?;
    let k4 = rhs(&axpy(s, h, &k3), field)?;
    let comb = |p: &[[f64; 3]], a: &[[f64; 3]], b: &[[f64; 3]], c: &[[f64; 3]], d: &[[f64; 3]]| {
        (0..p.len())
            .map(|j| {
                let mut o = p[j];
                for q in 0..3 {
                    o[q] += h / 6.0 * (a[j][q] + 2.0 * b[j][q] + 2.0 * c[j][q] + d[j][q]);
                }
                o
            })
            .collect::<Vec<_>>()
    };
    Ok(NewtonState {
        x: comb(&s.x, &k1.dx, &k2.dx, &k3.dx, &k4.dx),
        xi: comb(&s.xi, &k1.dxi, &k2.dxi, &k3.dxi, &k4.dxi),
        m: s.m.clone(),
        t: s.t + h,
    })
}

/// RK4 with round(T/dt) equal steps, sampling every `stride` steps and at
/// the end. Aborts when two particles come closer than `min_distance`
/// under a singular pair kernel.
pub fn integrate(
    state0: &NewtonState,
    field: &ForceField,
    t_final: f64,
    dt: f64,
    stride: usize,
    min_distance: f64,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !(dt > 0.0) || stride == 0 {
        return Err(Error::Param("need T > 0, dt > 0 and stride >= 1".into()));
    }
    let steps = ((t_final / dt).round() as usize).max(1);
    let h = t_final / steps as f64;
    let h0 = hamiltonian(state0, field);
    let check = field.eps != 0.0 && field.w.singular() && state0.len() > 1;
    let record = |s: &NewtonState| TrajectorySample {
        t: s.t,
        x: s.x.clone(),
        xi: s.xi.clone(),
        h: hamiltonian(s, field),
        min_pair: s.min_pair_distance(),
    };
    let mut s = state0.clone();
    let mut samples = vec![record(&s)];
    let mut drift: f64 = 0.0;
    let t0 = s.t;
    for k in 1..=steps {
        s = rk4_step(&s, field, h)?;
        s.t = t0 + k as f64 * h;
        if check {
            let d = s.min_pair_distance();
            if d < min_distance {
                return Err(Error::Singular(format!("close approach {d:.3e} at t = {}", s.t)));
            }
        }
        if !s.x.iter().chain(&s.xi).all(|p| p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(format!("state at t = {}", s.t)));
        }
        drift = drift.max((hamiltonian(&s, field) - h0).abs());
        if k % stride == 0 || k == steps {
            samples.push(record(&s));
        }
    }
    Ok(Trajectory { samples, h_drift: drift })
}

/// Response of a critical point of V to a small kick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stability {
    Bounded { max_excursion: f64 },
    Unbounded { max_excursion: f64 },
}

impl Stability {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Stability::Bounded { .. })
    }
}

/// Checks |∇V(p)| < 1e-10, then follows a single unit-mass particle
/// displaced by `amplitude` along each axis in turn for time T. Unbounded
/// when some excursion exceeds 1e3 · amplitude.
pub fn stationary_spectrum(field: &ForceField, point: [f64; 3], amplitude: f64, t_final: f64, dt: f64) -> Result<Stability> {
    let g = norm(field.v.gradient(point));
    if !(g < 1e-10) {
        return Err(Error::Param(format!("|∇V| = {g:.3e} at {point:?}: not a critical point")));
    }
    if !(amplitude > 0.0) {
        return Err(Error::Param("perturbation amplitude must be positive".into()));
    }
    let mut worst: f64 = 0.0;
    for axis in 0..3 {
        let mut x = point;
        x[axis] += amplitude;
        let s0 = NewtonState::new(vec![x], vec![[0.0; 3]], vec![1.0])?;
        let mut s = s0;
        let steps = ((t_final / dt).round() as usize).max(1);
        let h = t_final / steps as f64;
        for _ in 0..steps {
            s = rk4_step(&s, field, h)?;
            let d = norm([s.x[0][0] - point[0], s.x[0][1] - point[1], s.x[0][2] - point[2]]);
            worst = worst.max(d);
            if !d.is_finite() || d > 1e3 * amplitude {
                return Ok(Stability::Unbounded { max_excursion: d });
            }
        }
    }
    Ok(Stability::Bounded { max_excursion: worst })
}
