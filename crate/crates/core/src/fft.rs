//! FFT plumbing: cached plans, cubic 3D transforms and the zero-padded
//! real convolution used by the free-space kernels.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static REAL_PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
    static R2C: RefCell<HashMap<usize, Arc<dyn RealToComplex<f64>>>> = RefCell::new(HashMap::new());
    static C2R: RefCell<HashMap<usize, Arc<dyn ComplexToReal<f64>>>> = RefCell::new(HashMap::new());
}

pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn plan_r2c(len: usize) -> Arc<dyn RealToComplex<f64>> {
    R2C.with(|c| {
        c.borrow_mut()
            .entry(len)
            .or_insert_with(|| REAL_PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len)))
            .clone()
    })
}

fn plan_c2r(len: usize) -> Arc<dyn ComplexToReal<f64>> {
    C2R.with(|c| {
        c.borrow_mut()
            .entry(len)
            .or_insert_with(|| REAL_PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len)))
            .clone()
    })
}

/// In-place 3D DFT of an n³ cube stored x-slowest, z-fastest.
/// The inverse includes the 1/n³ factor.
pub(crate) fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    fft3_raw(data, n, inverse);
    if inverse {
        let s = 1.0 / (n * n * n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Unnormalized in both directions.
pub(crate) fn fft3_raw(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n * n);
    let fft = plan(n, inverse);
    let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
    let nn = n * n;

    // z lines are contiguous
    fft.process_with_scratch(data, &mut scratch);

    let mut plane = vec![ZERO; nn];
    for x in 0..n {
        let block = &mut data[x * nn..(x + 1) * nn];
        for y in 0..n {
            for z in 0..n {
                plane[z * n + y] = block[y * n + z];
            }
        }
        fft.process_with_scratch(&mut plane, &mut scratch);
        for y in 0..n {
            for z in 0..n {
                block[y * n + z] = plane[z * n + y];
            }
        }
    }

    for y in 0..n {
        for x in 0..n {
            let row = &data[(x * n + y) * n..(x * n + y + 1) * n];
            for z in 0..n {
                plane[z * n + x] = row[z];
            }
        }
        fft.process_with_scratch(&mut plane, &mut scratch);
        for x in 0..n {
            let row = &mut data[(x * n + y) * n..(x * n + y + 1) * n];
            for z in 0..n {
                row[z] = plane[z * n + x];
            }
        }
    }
}

/// Aperiodic convolution of an n³ real array with a kernel whose DFT on the
/// (2n)³ lattice is `mult`, stored in half-spectrum layout
/// `[(kx * 2n + ky) * (n + 1) + kz]`. Only the first n samples per axis of
/// the padded product are returned.
pub(crate) fn convolve_padded(input: &[f64], n: usize, mult: &[f64]) -> Vec<f64> {
    let m = 2 * n;
    let nz = n + 1;
    debug_assert_eq!(input.len(), n * n * n);
    debug_assert_eq!(mult.len(), m * m * nz);

    let r2c = plan_r2c(m);
    let c2r = plan_c2r(m);
    let fwd = plan(m, false);
    let inv = plan(m, true);

    let mut spec = vec![ZERO; m * m * nz];
    let at = |x: usize, y: usize| (x * m + y) * nz;

    // z: real to complex on nonzero lines only
    let mut rin = vec![0.0; m];
    let mut rscr = r2c.make_scratch_vec();
    for x in 0..n {
        for y in 0..n {
            let src = &input[(x * n + y) * n..(x * n + y + 1) * n];
            rin[..n].copy_from_slice(src);
            rin[n..].fill(0.0);
            let o = at(x, y);
            r2c.process_with_scratch(&mut rin, &mut spec[o..o + nz], &mut rscr)
                .expect("r2c length");
        }
    }

    let mut lines = vec![ZERO; nz * m];
    let mut cscr = vec![
        ZERO;
        fwd.get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len())
    ];

    // y: forward for the x < n planes
    for x in 0..n {
        let o = at(x, 0);
        let plane = &mut spec[o..o + m * nz];
        for kz in 0..nz {
            let line = &mut lines[kz * m..(kz + 1) * m];
            for y in 0..n {
                line[y] = plane[y * nz + kz];
            }
            line[n..].fill(ZERO);
        }
        fwd.process_with_scratch(&mut lines, &mut cscr);
        for kz in 0..nz {
            for y in 0..m {
                plane[y * nz + kz] = lines[kz * m + y];
            }
        }
    }

    // x: forward, multiply, inverse, one ky plane at a time
    for ky in 0..m {
        for kz in 0..nz {
            let line = &mut lines[kz * m..(kz + 1) * m];
            for x in 0..n {
                line[x] = spec[at(x, ky) + kz];
            }
            line[n..].fill(ZERO);
        }
        fwd.process_with_scratch(&mut lines, &mut cscr);
        for kz in 0..nz {
            let line = &mut lines[kz * m..(kz + 1) * m];
            for (kx, v) in line.iter_mut().enumerate() {
                *v *= mult[(kx * m + ky) * nz + kz];
            }
        }
        inv.process_with_scratch(&mut lines, &mut cscr);
        for kz in 0..nz {
            for x in 0..n {
                spec[at(x, ky) + kz] = lines[kz * m + x];
            }
        }
    }

    // y: inverse, keep y < n
    for x in 0..n {
        let o = at(x, 0);
        let plane = &mut spec[o..o + m * nz];
        for kz in 0..nz {
            for ky in 0..m {
                lines[kz * m + ky] = plane[ky * nz + kz];
            }
        }
        inv.process_with_scratch(&mut lines, &mut cscr);
        for kz in 0..nz {
            for y in 0..n {
                plane[y * nz + kz] = lines[kz * m + y];
            }
        }
    }

    // z: complex to real, keep z < n
    let scale = 1.0 / (m * m * m) as f64;
    let mut out = vec![0.0; n * n * n];
    let mut rout = vec![0.0; m];
    let mut iscr = c2r.make_scratch_vec();
    for x in 0..n {
        for y in 0..n {
            let o = at(x, y);
            let line = &mut spec[o..o + nz];
            line[0].im = 0.0;
            line[n].im = 0.0;
            c2r.process_with_scratch(line, &mut rout, &mut iscr)
                .expect("c2r length");
            let dst = &mut out[(x * n + y) * n..(x * n + y + 1) * n];
            for z in 0..n {
                dst[z] = rout[z] * scale;
            }
        }
    }
    out
}
