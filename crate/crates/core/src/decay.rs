//! Exponential tail fits shared by the ground-state and multi-bump checks.

use crate::error::{Error, Result};

/// Relative change of the log-slope across the fit shell above which a
/// tail is declared non-exponential.
pub const CURVATURE_LIMIT: f64 = 0.3;

/// Fitted envelope v <= C exp(-sigma r).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub c: f64,
    pub sigma: f64,
    /// |slope(r_max) - slope(r_min)| / |mean slope| from a quadratic fit.
    pub curvature: f64,
    /// max over the shell of v / (C exp(-sigma r)).
    pub worst_ratio: f64,
    pub shell_points: usize,
}

impl DecayFit {
    pub fn envelope_ok(&self) -> bool {
        self.worst_ratio <= 1.5
    }
}

/// (r, v) pairs with v in [lo, hi] * vmax.
pub(crate) fn shell(values: &[f64], dist: &[f64], vmax: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    values
        .iter()
        .zip(dist)
        .filter(|(v, _)| **v >= lo * vmax && **v <= hi * vmax && **v > 0.0)
        .map(|(v, r)| (*r, *v))
        .collect()
}

/// Least squares log v = b0 + b1 r; returns (b0, b1).
pub(crate) fn log_linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for &(r, v) in pts {
        sxy += (r - mr) * (v.ln() - ml);
        sxx += (r - mr) * (r - mr);
    }
    let b1 = sxy / sxx;
    (ml - b1 * mr, b1)
}

/// Relative slope change of a quadratic least-squares fit of log v.
pub(crate) fn curvature_stat(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mr = pts.iter().map(|p| p.0).sum::<f64>() / n;
    // normal equations in centred r
    let mut s = [0.0; 5];
    let mut t = [0.0; 3];
    for &(r, v) in pts {
        let x = r - mr;
        let y = v.ln();
        let mut p = 1.0;
        for k in 0..5 {
            s[k] += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= x;
        }
    }
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let c = solve3(a, t);
    let (rmin, rmax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let slope = |r: f64| c[1] + 2.0 * c[2] * (r - mr);
    let mean = 0.5 * (slope(rmin) + slope(rmax));
    (slope(rmax) - slope(rmin)).abs() / mean.abs()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Fit on the shell v in [1e-8, 1e-2] * max, rejecting tails whose
/// log-slope drifts by more than `CURVATURE_LIMIT`. `all` is the whole
/// field (for the dynamic-range check), `values`/`dist` the fit candidates.
pub(crate) fn fit_exponential_tail(all: &[f64], values: &[f64], dist: &[f64]) -> Result<DecayFit> {
    let vmax = all.iter().cloned().fold(0.0, f64::max);
    let vmin = all.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(vmax > 0.0) || vmin > 1e-6 * vmax {
        return Err(Error::Degenerate(format!(
            "insufficient dynamic range: min/max = {:.3e}",
            if vmax > 0.0 { vmin / vmax } else { 1.0 }
        )));
    }
    let pts = shell(values, dist, vmax, 1e-8, 1e-2);
    if pts.len() < 10 {
        return Err(Error::Degenerate(format!("only {} samples in the fit shell", pts.len())));
    }
    let (b0, b1) = log_linear_fit(&pts);
    let sigma = -b1;
    if !(sigma > 0.0) {
        return Err(Error::Degenerate(format!("non-decaying tail, slope {b1}")));
    }
    let curvature = curvature_stat(&pts);
    if curvature > CURVATURE_LIMIT {
        return Err(Error::Degenerate(format!(
            "tail is not exponential: log-slope changes by {:.0}% across the shell",
            100.0 * curvature
        )));
    }
    let c = b0.exp();
    let worst_ratio = pts.iter().map(|&(r, v)| v / (c * (-sigma * r).exp())).fold(0.0, f64::max);
    Ok(DecayFit { c, sigma, curvature, worst_ratio, shell_points: pts.len() })
}
