//! Linear stability of the homogeneous steady states in the continuum limit.
//!
//! All quantities here are continuum (tilded) parameters. Perturbations go as
//! `e^{lambda t} e^{i k x}` on top of a state with uniform intensity `I = |u|^2 = |d|^2`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::ContinuumParams;
use crate::error::{Error, Result};
use crate::lattice::C64;

/// Homogeneous steady states of the nonlinear Dirac equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "branch")]
pub enum SteadyStateBranch {
    /// `I = 0`.
    Trivial,
    /// Vanishing mass, `sin(delta) = -theta0_t / (alpha_t I)`; the root with `cos(delta) > 0`.
    ThetaZero { intensity: f64 },
    /// `delta = +pi/2`.
    DeltaPlus { intensity: f64 },
    /// `delta = -pi/2`.
    DeltaMinus { intensity: f64 },
}

impl SteadyStateBranch {
    /// Checked constructor for the vanishing-mass branch.
    pub fn theta_zero(intensity: f64, cp: &ContinuumParams) -> Result<Self> {
        let b = SteadyStateBranch::ThetaZero { intensity };
        b.state(cp)?;
        Ok(b)
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            SteadyStateBranch::Trivial => 0.0,
            SteadyStateBranch::ThetaZero { intensity }
            | SteadyStateBranch::DeltaPlus { intensity }
            | SteadyStateBranch::DeltaMinus { intensity } => intensity,
        }
    }

    /// `(I, sin(delta), cos(delta))` of the steady state.
    fn state(&self, cp: &ContinuumParams) -> Result<(f64, f64, f64)> {
        let i = self.intensity();
        if !(i.is_finite() && i >= 0.0) {
            return Err(Error::invalid("intensity", format!("must be non-negative, got {i}")));
        }
        match *self {
            SteadyStateBranch::Trivial => Ok((0.0, 0.0, 1.0)),
            SteadyStateBranch::DeltaPlus { .. } => Ok((i, 1.0, 0.0)),
            SteadyStateBranch::DeltaMinus { .. } => Ok((i, -1.0, 0.0)),
            SteadyStateBranch::ThetaZero { .. } => {
                let threshold = (cp.theta0_t / cp.alpha_t).abs();
                if !(cp.alpha_t != 0.0 && i > threshold) {
                    return Err(Error::BranchDoesNotExist { intensity: i, threshold });
                }
                let s = -cp.theta0_t / (cp.alpha_t * i);
                Ok((i, s, (1.0 - s * s).sqrt()))
            }
        }
    }
}

/// Sign selecting `P+` (`delta = +pi/2`) or `P-` (`delta = -pi/2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyBranch {
    Plus,
    Minus,
}

impl PolyBranch {
    fn sign(self) -> f64 {
        match self {
            PolyBranch::Plus => 1.0,
            PolyBranch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub branch: SteadyStateBranch,
    pub intensity: f64,
    pub k: f64,
    pub eigenvalues: [C64; 4],
    pub max_growth: f64,
}

impl StabilityResult {
    fn new(branch: SteadyStateBranch, k: f64, eigenvalues: [C64; 4]) -> Self {
        Self {
            branch,
            intensity: branch.intensity(),
            k,
            eigenvalues,
            max_growth: max_real(&eigenvalues),
        }
    }
}

pub fn max_real(roots: &[C64]) -> f64 {
    roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Coefficients `(b, c)` of `lambda^4 + 2 b lambda^2 + c`.
fn biquadratic(branch: PolyBranch, intensity: f64, k: f64, cp: &ContinuumParams) -> (f64, f64) {
    let a = cp.alpha_t * intensity;
    let g = a + branch.sign() * cp.theta0_t;
    let k2 = k * k;
    (k2 + 2.0 * g * g, k2 * k2 + 4.0 * k2 * a * g)
}

/// Evaluates `P+-(lambda)`.
pub fn characteristic_polynomial(branch: PolyBranch, intensity: f64, k: f64, cp: &ContinuumParams, lambda: C64) -> C64 {
    let (b, c) = biquadratic(branch, intensity, k, cp);
    let l2 = lambda * lambda;
    l2 * l2 + 2.0 * b * l2 + c
}

/// Both square roots `(+sqrt(mu), -sqrt(mu))`, keeping negative reals exactly imaginary.
fn sqrt_pair(mu: C64) -> (C64, C64) {
    let r = if mu.im == 0.0 {
        if mu.re >= 0.0 {
            C64::new(mu.re.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-mu.re).sqrt())
        }
    } else {
        mu.sqrt()
    };
    (r, -r)
}

/// Roots of `P+-`, solved as a quadratic in `mu = lambda^2`: `mu = -b +- sqrt(b^2 - c)`.
pub fn characteristic_roots(branch: PolyBranch, intensity: f64, k: f64, cp: &ContinuumParams) -> Result<[C64; 4]> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::invalid("intensity", format!("must be non-negative, got {intensity}")));
    }
    let (b, c) = biquadratic(branch, intensity, k, cp);
    let disc = b * b - c;
    let (mu1, mu2) = if disc >= 0.0 {
        // b >= 0, so adding the root avoids cancellation; the partner follows from mu1 mu2 = c.
        let m1 = -(b + disc.sqrt());
        let m2 = if m1 == 0.0 { 0.0 } else { c / m1 };
        (C64::new(m1, 0.0), C64::new(m2, 0.0))
    } else {
        let w = (-disc).sqrt();
        (C64::new(-b, w), C64::new(-b, -w))
    };
    let (a, b_) = sqrt_pair(mu1);
    let (c_, d) = sqrt_pair(mu2);
    Ok([a, b_, c_, d])
}

/// `(lambda^2 + k^2)^2 = 0`: `{ik, ik, -ik, -ik}`.
pub fn trivial_branch_roots(k: f64) -> [C64; 4] {
    let ik = C64::new(0.0, k);
    [ik, ik, -ik, -ik]
}

/// Linearization matrix acting on `(d|u|, d|d|, d delta, d sigma)` with `d/dx -> ik`.
///
/// For `I = 0` the amplitude/phase variables are singular; the trivial branch returns the
/// pure transport part, whose eigenvalues are `{+-ik, +-ik}`.
pub fn linearization_matrix(branch: &SteadyStateBranch, k: f64, cp: &ContinuumParams) -> Result<Matrix4<C64>> {
    let ik = C64::new(0.0, k);
    let z = C64::new(0.0, 0.0);
    let (i, s, c) = branch.state(cp)?;
    if i == 0.0 {
        return Ok(Matrix4::new(
            -ik, z, z, z, //
            z, ik, z, z, //
            z, z, z, -ik, //
            z, z, -ik, z,
        ));
    }
    let (t0, al) = (cp.theta0_t, cp.alpha_t);
    let sq = i.sqrt();
    let tb = t0 + al * i * s;
    let r = |x: f64| C64::new(x, 0.0);
    let l11 = r((t0 - tb) * c) - ik;
    let l12 = r((t0 - 2.0 * tb) * c);
    let l13 = r(sq * (tb * s - al * i * c * c));
    let l31 = r(-2.0 * tb * s / sq);
    let l41 = r(2.0 * sq * al * s * s);
    let l43 = r(-2.0 * (t0 - 2.0 * tb) * c) - ik;
    Ok(Matrix4::new(
        l11, l12, l13, z, //
        -l12, -l11, -l13, z, //
        l31, -l31, z, -ik, //
        l41, l41, l43, z,
    ))
}

/// Eigenvalues of [`linearization_matrix`] by complex Schur decomposition.
pub fn linearization_eigenvalues(branch: &SteadyStateBranch, k: f64, cp: &ContinuumParams) -> Result<[C64; 4]> {
    let m = linearization_matrix(branch, k, cp)?;
    let ev = m
        .eigenvalues()
        .ok_or_else(|| Error::invalid("linearization", "Schur iteration did not triangularize"))?;
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Full stability record for a branch: closed form where available, else the matrix.
pub fn analyze(branch: SteadyStateBranch, k: f64, cp: &ContinuumParams) -> Result<StabilityResult> {
    let roots = match branch {
        SteadyStateBranch::Trivial => trivial_branch_roots(k),
        SteadyStateBranch::DeltaPlus { intensity } => characteristic_roots(PolyBranch::Plus, intensity, k, cp)?,
        SteadyStateBranch::DeltaMinus { intensity } => characteristic_roots(PolyBranch::Minus, intensity, k, cp)?,
        SteadyStateBranch::ThetaZero { .. } => linearization_eigenvalues(&branch, k, cp)?,
    };
    Ok(StabilityResult::new(branch, k, roots))
}

/// Growth rates on a grid of `(alpha_t I / theta0_t, k^2 / theta0_t^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub branch: PolyBranch,
    /// Row axis, `alpha_t I / theta0_t`.
    pub intensity_ratio: Vec<f64>,
    /// Column axis, `k^2 / theta0_t^2`.
    pub k2_ratio: Vec<f64>,
    /// `values[row][col] = theta0_t * max Re(lambda)`.
    pub values: Vec<Vec<f64>>,
    /// Largest `|P(lambda)|` over all returned roots.
    pub max_residual: f64,
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn stability_map(
    cp: &ContinuumParams,
    branch: PolyBranch,
    intensity_ratio: &[f64],
    k2_ratio: &[f64],
) -> Result<StabilityMap> {
    if !(cp.theta0_t > 0.0 && cp.alpha_t > 0.0) {
        return Err(Error::invalid("continuum", "stability map needs theta0_t > 0 and alpha_t > 0"));
    }
    if intensity_ratio.iter().chain(k2_ratio).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("grid", "axis values must be finite and non-negative"));
    }
    let t0 = cp.theta0_t;
    let rows: Vec<(Vec<f64>, f64)> = intensity_ratio
        .par_iter()
        .map(|&a| {
            let intensity = a * t0 / cp.alpha_t;
            let mut worst = 0.0f64;
            let row = k2_ratio
                .iter()
                .map(|&q| {
                    let k = q.sqrt() * t0;
                    let roots = characteristic_roots(branch, intensity, k, cp)?;
                    for &l in &roots {
                        worst = worst.max(characteristic_polynomial(branch, intensity, k, cp, l).norm());
                    }
                    Ok(t0 * max_real(&roots))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((row, worst))
        })
        .collect::<Result<_>>()?;
    let max_residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(StabilityMap {
        branch,
        intensity_ratio: intensity_ratio.to_vec(),
        k2_ratio: k2_ratio.to_vec(),
        values: rows.into_iter().map(|r| r.0).collect(),
        max_residual,
    })
}

/// Exact instability region of `P-` in the dimensionless plane `(a, q) =
/// (alpha_t I / theta0_t, k^2 / theta0_t^2)`: `0 < q < 4a(1-a)` for `a < 1`, `q > (a-1)^3` for `a > 1`.
pub fn minus_branch_unstable(a: f64, q: f64) -> bool {
    if a < 1.0 {
        q > 0.0 && q < 4.0 * a * (1.0 - a)
    } else if a > 1.0 {
        q > (a - 1.0).powi(3)
    } else {
        false
    }
}
