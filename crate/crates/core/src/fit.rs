//! Least-squares fit of `A sech^2(beta (x - x0))` to a probability profile.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonFit {
    pub beta_fit: f64,
    pub center: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
}

const MAX_ITER: usize = 500;

fn model(q: &Vector3<f64>, x: f64) -> f64 {
    let s = 1.0 / (q[1] * (x - q[2])).cosh();
    q[0] * s * s
}

fn cost(q: &Vector3<f64>, x: &[f64], p: &[f64]) -> f64 {
    x.iter().zip(p).map(|(&x, &y)| (model(q, x) - y).powi(2)).sum()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Fits `A sech^2(beta (x - x0))` by Levenberg-Marquardt.
///
/// The profile must have a peak above ten times its median; otherwise the error is
/// [`Error::NoLocalizedStructure`].
pub fn fit_sech2(x: &[f64], p: &[f64]) -> Result<SolitonFit> {
    if x.len() != p.len() {
        return Err(Error::invalid("profile", "positions and values differ in length"));
    }
    if x.len() < 4 {
        return Err(Error::invalid("profile", "need at least four points"));
    }
    if x.iter().chain(p).any(|v| !v.is_finite()) {
        return Err(Error::invalid("profile", "values must be finite"));
    }
    let (imax, &pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if !(pmax > 0.0 && pmax > 10.0 * median(p)) {
        return Err(Error::NoLocalizedStructure);
    }

    // Half-maximum width gives the starting beta: sech^2(beta h) = 1/2 at beta h = acosh(sqrt 2).
    let half = pmax / 2.0;
    let right = (imax..p.len()).find(|&i| p[i] < half).map(|i| x[i]);
    let left = (0..=imax).rev().find(|&i| p[i] < half).map(|i| x[i]);
    let h = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => x[imax] - l,
        (None, Some(r)) => r - x[imax],
        (None, None) => 0.5 * (x[x.len() - 1] - x[0]).abs(),
    }
    .abs()
    .max(f64::MIN_POSITIVE);
    let mut q = Vector3::new(pmax, std::f64::consts::SQRT_2.acosh() / h, x[imax]);

    let mut c = cost(&q, x, p);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&xi, &yi) in x.iter().zip(p) {
            let z = q[1] * (xi - q[2]);
            let s = 1.0 / z.cosh();
            let t = z.tanh();
            let s2 = s * s;
            let g = Vector3::new(s2, -2.0 * q[0] * s2 * t * (xi - q[2]), 2.0 * q[0] * q[1] * s2 * t);
            let r = q[0] * s2 - yi;
            jtj += g * g.transpose();
            jtr += g * r;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..3 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = q + delta;
            let ct = cost(&trial, x, p);
            if ct.is_finite() && ct <= c {
                let small = delta.iter().zip(q.iter()).all(|(d, v)| d.abs() <= 1e-13 * (1.0 + v.abs()));
                q = trial;
                let flat = c - ct <= 1e-30 + 1e-15 * c;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                converged = small || flat;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step left at any damping: already at the minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !q.iter().all(|v| v.is_finite()) {
        return Err(Error::FitDiverged { iterations: MAX_ITER });
    }
    Ok(SolitonFit {
        beta_fit: q[1].abs(),
        center: q[2],
        amplitude: q[0],
        rms_residual: (c / x.len() as f64).sqrt(),
    })
}
