//! Cubic periodic grid, sampled fields and spectral differential operators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::fft3;

/// Uniform cubic grid on [-L, L)^3 with `n` points per axis.
///
/// Flat index is `(ix * n + iy) * n + iz`, z fastest. The origin sits at
/// index `n / 2` on each axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    n: usize,
    half_width: f64,
}

/// Build a grid; `n` must be 2^k or 3 * 2^k and at least 8.
pub fn make_grid(n: usize, half_width: f64) -> Result<Grid3> {
    Grid3::new(n, half_width)
}

impl Grid3 {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        let odd = n >> n.trailing_zeros();
        if n < 8 || !(odd == 1 || odd == 3) {
            return Err(Error::Grid(format!("n = {n} must be 2^k or 3*2^k and >= 8")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid(format!("half width L = {half_width} must be positive")));
        }
        Ok(Grid3 { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight h^3.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Flat index of the grid origin.
    pub fn origin_index(&self) -> usize {
        let c = self.n / 2;
        self.index(c, c, c)
    }

    /// Signed FFT mode number of slot `j`: 0..n/2-1, then -n/2..-1.
    pub fn mode(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Wavenumber pi * mode / L of slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.mode(j) as f64 / self.half_width
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// |k|^2 for every spectral slot, in field layout.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out.push(k[a] * k[a] + k[b] * k[b] + k[c] * k[c]);
                }
            }
        }
        out
    }

    pub(crate) fn check_same(&self, other: &Grid3) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid3,
    values: Vec<Complex64>,
}

/// Real samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid3,
    values: Vec<f64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid3) -> Self {
        ComplexField { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("complex field sample".into()));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ComplexField { grid, values }
    }

    pub fn from_real(r: &RealField) -> Self {
        ComplexField {
            grid: r.grid,
            values: r.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn modulus(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.norm()).collect() }
    }

    pub fn density(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.norm_sqr()).collect() }
    }

    pub fn real_part(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|v| v.re).collect() }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        ComplexField { grid: self.grid, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// self + s * other
    pub fn axpy(&self, s: Complex64, other: &ComplexField) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(ComplexField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }

    /// Unnormalized forward DFT.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.values.clone();
        fft3(&mut s, self.grid.n, false);
        s
    }

    pub fn from_spectrum(grid: Grid3, mut s: Vec<Complex64>) -> Self {
        fft3(&mut s, grid.n, true);
        ComplexField { grid, values: s }
    }
}

impl RealField {
    pub fn zeros(grid: Grid3) -> Self {
        RealField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real field sample".into()));
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        RealField { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_real(self)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Grid integral of the samples.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Quadrature of self * other.
    pub fn dot(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }
}

/// Spectral gradient: component a is the inverse transform of i k_a u^.
pub fn gradient(u: &ComplexField) -> [ComplexField; 3] {
    let g = u.grid;
    let n = g.n;
    let k = g.wavenumbers();
    let s = u.spectrum();
    let i = Complex64::new(0.0, 1.0);
    let mut out: Vec<ComplexField> = Vec::with_capacity(3);
    for axis in 0..3 {
        let mut c = s.clone();
        for (idx, v) in c.iter_mut().enumerate() {
            let slot = match axis {
                0 => idx / (n * n),
                1 => (idx / n) % n,
                _ => idx % n,
            };
            *v *= i * k[slot];
        }
        out.push(ComplexField::from_spectrum(g, c));
    }
    let mut it = out.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Spectral Laplacian, multiplier -|k|^2.
pub fn laplacian(u: &ComplexField) -> ComplexField {
    let g = u.grid;
    let k2 = g.k_squared();
    let mut s = u.spectrum();
    for (v, q) in s.iter_mut().zip(&k2) {
        *v *= -q;
    }
    ComplexField::from_spectrum(g, s)
}

/// Squared norms of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2_sq: f64,
    pub h1_sq: f64,
}

impl Norms {
    /// ‖∇u‖^2.
    pub fn kinetic(&self) -> f64 {
        self.h1_sq - self.l2_sq
    }
}

/// L2 and H1 squared norms with weight h^3; the gradient part is taken
/// spectrally so it agrees with `gradient` to roundoff.
pub fn norms(u: &ComplexField) -> Norms {
    let g = u.grid;
    let l2_sq = u.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_volume();
    let s = u.spectrum();
    let k2 = g.k_squared();
    let kin: f64 = s.iter().zip(&k2).map(|(v, q)| q * v.norm_sqr()).sum::<f64>()
        * g.cell_volume()
        / g.len() as f64;
    Norms { l2_sq, h1_sq: l2_sq + kin }
}

/// ‖u‖_p.
pub fn lp_norm(u: &ComplexField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Param(format!("p = {p} must be >= 1")));
    }
    if p.is_infinite() {
        return Ok(u.max_modulus());
    }
    let s: f64 = u.values.iter().map(|v| v.norm().powf(p)).sum();
    Ok((s * u.grid.cell_volume()).powf(1.0 / p))
}

/// ⟨u, v⟩ = ∫ conj(u) v.
pub fn inner(u: &ComplexField, v: &ComplexField) -> Result<Complex64> {
    u.grid.check_same(&v.grid)?;
    let s: Complex64 = u.values.iter().zip(&v.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * u.grid.cell_volume())
}

/// Periodic translation by whole cells: out(x) = u(x - offset * h).
pub fn shift_field(u: &ComplexField, offset: [i64; 3]) -> ComplexField {
    let n = u.grid.n;
    let ni = n as i64;
    let o: Vec<usize> = offset.iter().map(|&d| d.rem_euclid(ni) as usize).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); u.values.len()];
    for x in 0..n {
        let sx = (x + n - o[0]) % n;
        for y in 0..n {
            let sy = (y + n - o[1]) % n;
            let dst = (x * n + y) * n;
            let src = (sx * n + sy) * n;
            for z in 0..n {
                values[dst + z] = u.values[src + (z + n - o[2]) % n];
            }
        }
    }
    ComplexField { grid: u.grid, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = make_grid(8, 2.0).unwrap();
        for idx in [0, 17, 300, 511] {
            let [a, b, c] = g.unindex(idx);
            assert_eq!(g.index(a, b, c), idx);
        }
        assert_eq!(g.point(g.origin_index()), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn nyquist_is_negative() {
        let g = make_grid(8, 4.0).unwrap();
        assert_eq!(g.mode(4), -4);
        assert_eq!(g.mode(3), 3);
    }
}
