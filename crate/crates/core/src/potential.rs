//! Analytic electric and magnetic potentials and well regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(sub(a, b))
}

/// Open ball or open box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Ball { center: [f64; 3], radius: f64 },
    Box { lo: [f64; 3], hi: [f64; 3] },
}

impl Region {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            Region::Ball { center, radius } => dist(p, *center) < *radius,
            Region::Box { lo, hi } => (0..3).all(|a| p[a] > lo[a] && p[a] < hi[a]),
        }
    }

    /// Distance from p to the region (0 inside).
    pub fn distance_to(&self, p: [f64; 3]) -> f64 {
        match self {
            Region::Ball { center, radius } => (dist(p, *center) - radius).max(0.0),
            Region::Box { lo, hi } => {
                let g: Vec<f64> = (0..3).map(|a| (lo[a] - p[a]).max(p[a] - hi[a]).max(0.0)).collect();
                (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
            }
        }
    }

    /// Distance from an interior point to the complement.
    pub fn depth(&self, p: [f64; 3]) -> f64 {
        match self {
            Region::Ball { center, radius } => (radius - dist(p, *center)).max(0.0),
            Region::Box { lo, hi } => {
                (0..3).map(|a| (p[a] - lo[a]).min(hi[a] - p[a])).fold(f64::INFINITY, f64::min).max(0.0)
            }
        }
    }

    pub fn distance_between(&self, other: &Region) -> f64 {
        match (self, other) {
            (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
                (dist(*c1, *c2) - r1 - r2).max(0.0)
            }
            (Region::Box { lo: l1, hi: h1 }, Region::Box { lo: l2, hi: h2 }) => {
                let g: Vec<f64> = (0..3).map(|a| (l2[a] - h1[a]).max(l1[a] - h2[a]).max(0.0)).collect();
                (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
            }
            (Region::Ball { center, radius }, b @ Region::Box { .. })
            | (b @ Region::Box { .. }, Region::Ball { center, radius }) => {
                (b.distance_to(*center) - radius).max(0.0)
            }
        }
    }

    /// Points on the boundary, for sampled checks.
    pub fn boundary_samples(&self, count: usize) -> Vec<[f64; 3]> {
        match self {
            Region::Ball { center, radius } => {
                // Fibonacci sphere
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let t = golden * i as f64;
                        [
                            center[0] + radius * r * t.cos(),
                            center[1] + radius * r * t.sin(),
                            center[2] + radius * z,
                        ]
                    })
                    .collect()
            }
            Region::Box { lo, hi } => {
                let k = ((count / 6) as f64).sqrt().ceil().max(2.0) as usize;
                let mut out = Vec::new();
                for axis in 0..3 {
                    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                    for side in [lo[axis], hi[axis]] {
                        for i in 0..k {
                            for j in 0..k {
                                let mut p = [0.0; 3];
                                p[axis] = side;
                                p[b] = lo[b] + (hi[b] - lo[b]) * i as f64 / (k - 1) as f64;
                                p[c] = lo[c] + (hi[c] - lo[c]) * j as f64 / (k - 1) as f64;
                                out.push(p);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Interior lattice points, for sampled checks.
    pub fn interior_samples(&self, per_axis: usize) -> Vec<[f64; 3]> {
        let (lo, hi) = match self {
            Region::Ball { center, radius } => (
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            ),
            Region::Box { lo, hi } => (*lo, *hi),
        };
        let mut out = Vec::new();
        let k = per_axis.max(2);
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    let f = |a: usize, t: usize| lo[a] + (hi[a] - lo[a]) * (t as f64 + 0.5) / k as f64;
                    let p = [f(0, i), f(1, j), f(2, l)];
                    if self.contains(p) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticWell {
    pub center: [f64; 3],
    /// Value at the centre.
    pub depth: f64,
    pub curvature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianWell {
    pub center: [f64; 3],
    pub depth: f64,
    pub width: f64,
}

/// Electric potential V.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarPotential {
    Constant { value: f64 },
    /// min(baseline, min_i depth_i + curvature_i |x - c_i|^2)
    QuadraticWells { baseline: f64, wells: Vec<QuadraticWell> },
    /// baseline - sum_i depth_i exp(-|x - c_i|^2 / (2 width_i^2))
    GaussianWells { baseline: f64, wells: Vec<GaussianWell> },
    /// x^T diag(k) x / 2, a single critical point at the origin
    Quadratic { stiffness: [f64; 3] },
}

impl ScalarPotential {
    pub fn value(&self, x: [f64; 3]) -> f64 {
        match self {
            ScalarPotential::Constant { value } => *value,
            ScalarPotential::QuadraticWells { baseline, wells } => wells
                .iter()
                .map(|w| w.depth + w.curvature * dist(x, w.center).powi(2))
                .fold(*baseline, f64::min),
            ScalarPotential::GaussianWells { baseline, wells } => {
                baseline
                    - wells
                        .iter()
                        .map(|w| w.depth * (-dist(x, w.center).powi(2) / (2.0 * w.width * w.width)).exp())
                        .sum::<f64>()
            }
            ScalarPotential::Quadratic { stiffness } => {
                0.5 * (0..3).map(|a| stiffness[a] * x[a] * x[a]).sum::<f64>()
            }
        }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            ScalarPotential::Constant { .. } => [0.0; 3],
            ScalarPotential::QuadraticWells { baseline, wells } => {
                let mut best = *baseline;
                let mut g = [0.0; 3];
                for w in wells {
                    let v = w.depth + w.curvature * dist(x, w.center).powi(2);
                    if v < best {
                        best = v;
                        let d = sub(x, w.center);
                        g = [2.0 * w.curvature * d[0], 2.0 * w.curvature * d[1], 2.0 * w.curvature * d[2]];
                    }
                }
                g
            }
            ScalarPotential::GaussianWells { wells, .. } => {
                let mut g = [0.0; 3];
                for w in wells {
                    let d = sub(x, w.center);
                    let s2 = w.width * w.width;
                    let e = w.depth * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * s2)).exp() / s2;
                    for a in 0..3 {
                        g[a] += e * d[a];
                    }
                }
                g
            }
            ScalarPotential::Quadratic { stiffness } => {
                [stiffness[0] * x[0], stiffness[1] * x[1], stiffness[2] * x[2]]
            }
        }
    }
}

/// Magnetic vector potential A(x) = a0 + M x.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorPotential {
    #[serde(default)]
    pub a0: [f64; 3],
    #[serde(default)]
    pub m: [[f64; 3]; 3],
}

impl Default for VectorPotential {
    fn default() -> Self {
        VectorPotential { a0: [0.0; 3], m: [[0.0; 3]; 3] }
    }
}

impl VectorPotential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(a0: [f64; 3]) -> Self {
        VectorPotential { a0, m: [[0.0; 3]; 3] }
    }

    /// Symmetric gauge A = B × x / 2 of a uniform field B.
    pub fn uniform_field(b: [f64; 3]) -> Self {
        let m = [
            [0.0, -0.5 * b[2], 0.5 * b[1]],
            [0.5 * b[2], 0.0, -0.5 * b[0]],
            [-0.5 * b[1], 0.5 * b[0], 0.0],
        ];
        VectorPotential { a0: [0.0; 3], m }
    }

    pub fn value(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = self.a0;
        for i in 0..3 {
            for j in 0..3 {
                out[i] += self.m[i][j] * x[j];
            }
        }
        out
    }

    /// B = ∇ × A, uniform for this catalog.
    pub fn curl(&self) -> [f64; 3] {
        let m = &self.m;
        [m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]]
    }

    pub fn divergence(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn is_zero(&self) -> bool {
        self.a0 == [0.0; 3] && self.m == [[0.0; 3]; 3]
    }
}

/// A potential well: region O^i, minimum m_i and minimizer points M^i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Well {
    pub region: Region,
    pub minimum: f64,
    pub minimizers: Vec<[f64; 3]>,
}

impl Well {
    pub fn distance_to_minimizers(&self, p: [f64; 3]) -> f64 {
        self.minimizers.iter().map(|m| dist(p, *m)).fold(f64::INFINITY, f64::min)
    }
}

/// Checks a well against V: V = m at the minimizers, V >= m inside and
/// V > m on the boundary (sampled).
pub fn check_well(v: &ScalarPotential, w: &Well) -> Result<()> {
    if !(w.minimum > 0.0) {
        return Err(Error::Param(format!("well minimum {} must be positive", w.minimum)));
    }
    if w.minimizers.is_empty() {
        return Err(Error::Param("well without minimizer points".into()));
    }
    for p in &w.minimizers {
        if !w.region.contains(*p) {
            return Err(Error::Param(format!("minimizer {p:?} outside its region")));
        }
        if (v.value(*p) - w.minimum).abs() > 1e-9 * w.minimum.max(1.0) {
            return Err(Error::Param(format!(
                "V({p:?}) = {} differs from the declared minimum {}",
                v.value(*p),
                w.minimum
            )));
        }
    }
    let inside = w.region.interior_samples(12).into_iter().map(|p| v.value(p)).fold(f64::INFINITY, f64::min);
    if inside < w.minimum - 1e-9 {
        return Err(Error::Param(format!("V dips to {inside} below the declared minimum {}", w.minimum)));
    }
    let edge = w.region.boundary_samples(600).into_iter().map(|p| v.value(p)).fold(f64::INFINITY, f64::min);
    if !(edge > w.minimum) {
        return Err(Error::Param(format!(
            "min of V on the boundary ({edge}) does not exceed the well minimum {}",
            w.minimum
        )));
    }
    Ok(())
}
