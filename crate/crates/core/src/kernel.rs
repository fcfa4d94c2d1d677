//! Degree -1 convolution kernels and free-space convolution by domain
//! doubling.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{convolve_padded, fft3};
use crate::grid::{Grid3, RealField};

type SampleFn = dyn Fn([f64; 3]) -> f64 + Send + Sync;

/// User-supplied kernel sampled pointwise on the doubled grid.
#[derive(Clone)]
pub struct TabulatedKernel {
    pub name: String,
    pub sample: Arc<SampleFn>,
    /// Declared constants (C1, C2) with C1/|x| <= W(x) <= C2/|x|.
    pub bracket: Option<(f64, f64)>,
}

impl TabulatedKernel {
    pub fn new(name: impl Into<String>, f: impl Fn([f64; 3]) -> f64 + Send + Sync + 'static) -> Self {
        TabulatedKernel { name: name.into(), sample: Arc::new(f), bracket: None }
    }

    pub fn with_bracket(mut self, c1: f64, c2: f64) -> Self {
        self.bracket = Some((c1, c2));
        self
    }

    /// 1/|x| through the sampled path.
    pub fn coulomb() -> Self {
        Self::new("inverse-distance", |x| 1.0 / norm3(x))
    }

    /// x_i^2 / |x|^3 for axis i.
    pub fn axial(axis: usize) -> Self {
        Self::new(format!("axial-{axis}"), move |x| {
            let r = norm3(x);
            x[axis] * x[axis] / (r * r * r)
        })
    }
}

impl fmt::Debug for TabulatedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedKernel")
            .field("name", &self.name)
            .field("bracket", &self.bracket)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum KernelSpec {
    Coulomb,
    Tabulated(TabulatedKernel),
}

/// Label of the kernel a multiplier was built from.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    Coulomb,
    Tabulated(String),
}

/// Kernel with its real multiplier on the (2n)^3 lattice, stored as the
/// half spectrum `[(kx * 2n + ky) * (n + 1) + kz]`.
#[derive(Clone, Debug)]
pub struct Kernel {
    grid: Grid3,
    kind: KernelKind,
    truncation_radius: f64,
    multiplier: Vec<f64>,
    bracket: (f64, f64),
}

pub(crate) fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Fourier symbol of 1/|x| truncated at radius R.
pub fn truncated_coulomb_symbol(k: f64, r: f64) -> f64 {
    if k == 0.0 {
        2.0 * PI * r * r
    } else {
        let s = (0.5 * r * k).sin();
        8.0 * PI * s * s / (k * k)
    }
}

/// Coulomb kernel with the default truncation radius 4L.
pub fn coulomb(grid: Grid3) -> Result<Kernel> {
    build_kernel(&KernelSpec::Coulomb, grid, 4.0 * grid.half_width())
}

pub fn build_kernel(spec: &KernelSpec, grid: Grid3, r: f64) -> Result<Kernel> {
    let l = grid.half_width();
    let diam = 2.0 * 3f64.sqrt() * l;
    if !(r >= diam * (1.0 - 1e-12)) {
        return Err(Error::Kernel(format!(
            "truncation radius {r} below domain diameter {diam}"
        )));
    }
    let (kind, real_space, bracket) = match spec {
        KernelSpec::Coulomb => {
            if r > 6.0 * l {
                return Err(Error::Kernel(format!(
                    "truncation radius {r} above 6L = {}",
                    6.0 * l
                )));
            }
            (KernelKind::Coulomb, coulomb_real_space(grid, r), (1.0, 1.0))
        }
        KernelSpec::Tabulated(t) => {
            let (vals, br) = tabulated_real_space(grid, t)?;
            (KernelKind::Tabulated(t.name.clone()), vals, br)
        }
    };
    let multiplier = half_multiplier(grid.n(), real_space)?;
    Ok(Kernel { grid, kind, truncation_radius: r, multiplier, bracket })
}

/// h^3 K(j) on the doubled lattice in wrapped layout, where K is the
/// truncated Coulomb kernel band-limited to the grid Nyquist cube. The
/// symbol is summed on a lattice of period 8L so that the truncated
/// kernel has no images inside the region that matters.
fn coulomb_real_space(grid: Grid3, r: f64) -> Vec<f64> {
    let n = grid.n();
    let l = grid.half_width();
    let h = grid.spacing();
    let period = 8.0 * l;
    let mm = 2 * n + 1;
    let jj = n + 1;
    let dk = 2.0 * PI / period;

    // c[m * jj + j] = w(m) cos(pi m j / 2n), w = 1 at m = 0, 2n and 2 between
    let mut c = vec![0.0; mm * jj];
    for m in 0..mm {
        let w = if m == 0 || m == 2 * n { 1.0 } else { 2.0 };
        for j in 0..jj {
            c[m * jj + j] = w * (PI * (m * j) as f64 / (2 * n) as f64).cos();
        }
    }
    let mut sym = vec![0.0; mm * mm * mm];
    for a in 0..mm {
        for b in 0..mm {
            for d in 0..mm {
                let k = dk * ((a * a + b * b + d * d) as f64).sqrt();
                sym[(a * mm + b) * mm + d] = truncated_coulomb_symbol(k, r);
            }
        }
    }
    // sum out mx
    let mut t1 = vec![0.0; jj * mm * mm];
    for a in 0..mm {
        let src = &sym[a * mm * mm..(a + 1) * mm * mm];
        for j in 0..jj {
            let w = c[a * jj + j];
            let dst = &mut t1[j * mm * mm..(j + 1) * mm * mm];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
    drop(sym);
    // sum out my
    let mut t2 = vec![0.0; jj * jj * mm];
    for jx in 0..jj {
        for b in 0..mm {
            let src = &t1[(jx * mm + b) * mm..(jx * mm + b + 1) * mm];
            for jy in 0..jj {
                let w = c[b * jj + jy];
                let dst = &mut t2[(jx * jj + jy) * mm..(jx * jj + jy + 1) * mm];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }
    drop(t1);
    // sum out mz
    let norm = h * h * h / (period * period * period);
    let mut keff = vec![0.0; jj * jj * jj];
    for jx in 0..jj {
        for jy in 0..jj {
            let src = &t2[(jx * jj + jy) * mm..(jx * jj + jy + 1) * mm];
            for jz in 0..jj {
                let s: f64 = (0..mm).map(|d| c[d * jj + jz] * src[d]).sum();
                keff[(jx * jj + jy) * jj + jz] = s * norm;
            }
        }
    }
    let m = 2 * n;
    let fold = |i: usize| if i <= n { i } else { m - i };
    let mut out = vec![0.0; m * m * m];
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                out[(x * m + y) * m + z] = keff[(fold(x) * jj + fold(y)) * jj + fold(z)];
            }
        }
    }
    out
}

/// h^3 W(j h) on the doubled lattice; the origin gets the cell average.
fn tabulated_real_space(grid: Grid3, t: &TabulatedKernel) -> Result<(Vec<f64>, (f64, f64))> {
    let n = grid.n();
    let m = 2 * n;
    let h = grid.spacing();
    let h3 = h * h * h;
    let wrap = |i: usize| if i < n { i as f64 } else { i as f64 - m as f64 };
    let mut out = vec![0.0; m * m * m];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                if x == 0 && y == 0 && z == 0 {
                    continue;
                }
                let p = [wrap(x) * h, wrap(y) * h, wrap(z) * h];
                let w = (t.sample)(p);
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Kernel(format!("{}: sample {w} at {p:?}", t.name)));
                }
                let q = norm3(p) * w;
                lo = lo.min(q);
                hi = hi.max(q);
                if let Some((c1, c2)) = t.bracket {
                    if q < c1 / 10.0 || q > 10.0 * c2 {
                        return Err(Error::Kernel(format!(
                            "{}: |x|W(x) = {q} at {p:?} outside 10x the bracket [{c1}, {c2}]",
                            t.name
                        )));
                    }
                }
                out[(x * m + y) * m + z] = h3 * w;
            }
        }
    }
    // 26 off-centre subcell midpoints; the centre subcell contributes 3x the
    // full-cell average by homogeneity, so avg = sum / 24.
    let mut acc = 0.0;
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                if a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let p = [a as f64 * h / 3.0, b as f64 * h / 3.0, c as f64 * h / 3.0];
                acc += (t.sample)(p);
            }
        }
    }
    let avg = acc / 24.0;
    if !avg.is_finite() {
        return Err(Error::Kernel(format!("{}: non-finite origin average", t.name)));
    }
    out[0] = h3 * avg;
    Ok((out, (lo, hi)))
}

fn half_multiplier(n: usize, real_space: Vec<f64>) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut full: Vec<Complex64> = real_space.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    fft3(&mut full, m, false);
    let scale = full.iter().fold(0.0f64, |s, v| s.max(v.re.abs()));
    let odd = full.iter().fold(0.0f64, |s, v| s.max(v.im.abs()));
    if odd > 1e-9 * scale {
        return Err(Error::Kernel(format!(
            "kernel is not even: imaginary multiplier {odd:.3e} vs {scale:.3e}"
        )));
    }
    let nz = n + 1;
    let mut half = vec![0.0; m * m * nz];
    for kx in 0..m {
        for ky in 0..m {
            for kz in 0..nz {
                half[(kx * m + ky) * nz + kz] = full[(kx * m + ky) * m + kz].re;
            }
        }
    }
    Ok(half)
}

impl Kernel {
    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Empirical (min, max) of |x| W(x) over the samples; (1, 1) for Coulomb.
    pub fn bracket(&self) -> (f64, f64) {
        self.bracket
    }

    /// Multiplier at doubled-lattice slot (kx, ky, kz), each in [0, 2n).
    pub fn multiplier_at(&self, kx: usize, ky: usize, kz: usize) -> f64 {
        let n = self.grid.n();
        let m = 2 * n;
        let nz = n + 1;
        if kz <= n {
            self.multiplier[(kx * m + ky) * nz + kz]
        } else {
            let (a, b, c) = ((m - kx) % m, (m - ky) % m, m - kz);
            self.multiplier[(a * m + b) * nz + c]
        }
    }

    /// Full (2n)^3 multiplier, z fastest.
    pub fn multiplier_full(&self) -> Vec<f64> {
        let m = 2 * self.grid.n();
        let mut out = Vec::with_capacity(m * m * m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    out.push(self.multiplier_at(a, b, c));
                }
            }
        }
        out
    }

    pub(crate) fn from_full(
        grid: Grid3,
        kind: KernelKind,
        truncation_radius: f64,
        bracket: (f64, f64),
        full: &[f64],
    ) -> Result<Self> {
        let n = grid.n();
        let m = 2 * n;
        if full.len() != m * m * m {
            return Err(Error::Format(format!("multiplier length {} for n = {n}", full.len())));
        }
        let nz = n + 1;
        let mut half = vec![0.0; m * m * nz];
        for a in 0..m {
            for b in 0..m {
                for c in 0..nz {
                    half[(a * m + b) * nz + c] = full[(a * m + b) * m + c];
                }
            }
        }
        Ok(Kernel { grid, kind, truncation_radius, multiplier: half, bracket })
    }
}

/// W * density with free-space boundary behaviour.
pub fn free_space_convolve(density: &RealField, kern: &Kernel) -> Result<RealField> {
    density.grid().check_same(&kern.grid)?;
    let n = kern.grid.n();
    let out = convolve_padded(density.values(), n, &kern.multiplier);
    RealField::from_values(kern.grid, out)
}
