//! Continuum-limit closed forms and the discrete/continuum consistency residual.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rotate, WalkParams};
use crate::error::{Error, Result};
use crate::lattice::{Spinor, SpinorField1D, C64};

/// Rescaled parameters: the lattice walk uses `theta0 = epsilon * theta0_t` and
/// `alpha = epsilon * alpha_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParams {
    pub theta0_t: f64,
    pub alpha_t: f64,
    pub epsilon: f64,
}

impl ContinuumParams {
    pub fn new(theta0_t: f64, alpha_t: f64, epsilon: f64) -> Result<Self> {
        let cp = Self { theta0_t, alpha_t, epsilon };
        cp.validate()?;
        Ok(cp)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta0_t.is_finite() {
            return Err(Error::invalid("theta0_t", "must be finite"));
        }
        if !self.alpha_t.is_finite() {
            return Err(Error::invalid("alpha_t", "must be finite"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Lattice parameters for this continuum point, electric field off.
    pub fn walk_params(&self) -> WalkParams {
        WalkParams::new(self.epsilon * self.theta0_t, self.epsilon * self.alpha_t)
    }

    /// `alpha_t * theta0_t`, which sets the soliton width.
    pub fn soliton_rate(&self) -> Result<f64> {
        let r = self.alpha_t * self.theta0_t;
        if self.alpha_t > 0.0 && self.theta0_t > 0.0 {
            Ok(r)
        } else {
            Err(Error::invalid(
                "alpha_t*theta0_t",
                format!("soliton profile needs theta0_t > 0 and alpha_t > 0, got {} and {}", self.theta0_t, self.alpha_t),
            ))
        }
    }

    /// Width parameter of the matching initial sech state, `alpha_t theta0_t / 2`.
    pub fn soliton_beta(&self) -> Result<f64> {
        Ok(self.soliton_rate()? / 2.0)
    }
}

/// `m = theta0_t + alpha_t Im(u conj(d))`.
pub fn mass_term(s: &Spinor, cp: &ContinuumParams) -> f64 {
    cp.theta0_t + cp.alpha_t * s.chirality()
}

/// `(Delta(x), I(x))` of the stationary bright soliton.
pub fn stationary_profile(cp: &ContinuumParams, x: f64) -> Result<(f64, f64)> {
    let r = cp.soliton_rate()?;
    let z = r * x / 2.0;
    let sech = 1.0 / z.cosh();
    Ok((cp.alpha_t / 2.0 * z.tanh(), r / 8.0 * sech * sech))
}

/// Analytic per-site probability `P_j = 2 I(epsilon j) epsilon` on `[j_min, j_max]`.
///
/// Sums to one up to the discretization error of the continuum integral.
pub fn lattice_profile(cp: &ContinuumParams, j_min: i64, j_max: i64) -> Result<Vec<f64>> {
    (j_min..=j_max)
        .map(|j| Ok(2.0 * stationary_profile(cp, cp.epsilon * j as f64)?.1 * cp.epsilon))
        .collect()
}

/// `e^{i(sigma0 - 2 theta0 t)}`.
pub fn sigma_drift(sigma0: f64, theta0: f64, t: usize) -> C64 {
    C64::from_polar(1.0, sigma0 - 2.0 * theta0 * t as f64)
}

/// Samples a continuum spinor function at `x = epsilon j`.
pub fn sample_field(
    j_min: i64,
    j_max: i64,
    epsilon: f64,
    f: impl Fn(f64) -> Spinor,
) -> Result<SpinorField1D> {
    SpinorField1D::new(j_min, epsilon, (j_min..=j_max).map(|j| f(epsilon * j as f64)).collect())
}

/// Distance between one lattice step and its first-order continuum expansion,
/// `Psi + epsilon (-sigma_z D_x Psi - i m sigma_y Psi)`, with `D_x` the central difference.
///
/// The norm is `sqrt(epsilon sum |r_j|^2)` over interior sites, the discrete version of the
/// continuum L2 norm, so refining a fixed physical sample halves `epsilon` and quarters
/// the residual. The field's own `epsilon` must match `cp.epsilon`.
pub fn consistency_residual(field: &SpinorField1D, cp: &ContinuumParams) -> Result<f64> {
    cp.validate()?;
    if (field.epsilon() - cp.epsilon).abs() > 1e-15 * cp.epsilon {
        return Err(Error::invalid("epsilon", "field spacing differs from continuum parameters"));
    }
    let s = field.sites();
    if s.len() < 3 {
        return Err(Error::invalid("field", "need at least three sites"));
    }
    let eps = cp.epsilon;
    let p = cp.walk_params();
    let mut acc = 0.0;
    for j in 1..s.len() - 1 {
        let (left, here, right) = (&s[j - 1], &s[j], &s[j + 1]);
        // u arrives from the left neighbour, d from the right one.
        let u_step = rotate(left, p.theta0, p.alpha).u;
        let d_step = rotate(right, p.theta0, p.alpha).d;
        let m = mass_term(here, cp);
        let du = (right.u - left.u) / (2.0 * eps);
        let dd = (right.d - left.d) / (2.0 * eps);
        // -i m sigma_y (u, d) = (-m d, m u)
        let u_cont = here.u + eps * (-du - m * here.d);
        let d_cont = here.d + eps * (dd + m * here.u);
        acc += (u_step - u_cont).norm_sqr() + (d_step - d_cont).norm_sqr();
    }
    Ok((eps * acc).sqrt())
}
