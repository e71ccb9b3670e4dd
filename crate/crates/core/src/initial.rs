//! Initial conditions: bright, moving and dark solitons, and uniform coin blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field2d::SpinorField2D;
use crate::lattice::{Spinor, SpinorField1D, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub j_min: i64,
    pub j_max: i64,
    pub epsilon: f64,
}

impl GridSpec {
    pub fn new(j_min: i64, j_max: i64, epsilon: f64) -> Result<Self> {
        let g = Self { j_min, j_max, epsilon };
        g.validate()?;
        Ok(g)
    }

    /// `[-half, half]`.
    pub fn centered(half: i64, epsilon: f64) -> Result<Self> {
        Self::new(-half, half, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_min >= self.j_max {
            return Err(Error::invalid(
                "grid",
                format!("j_min ({}) must be below j_max ({})", self.j_min, self.j_max),
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            j_min: self.j_min + by,
            j_max: self.j_max + by,
            epsilon: self.epsilon,
        }
    }

    fn build(&self, f: impl Fn(i64) -> Spinor) -> Result<SpinorField1D> {
        self.validate()?;
        SpinorField1D::new(self.j_min, self.epsilon, (self.j_min..=self.j_max).map(f).collect())
    }
}

/// Unit-norm coin state `(1, e^{-i delta}) / sqrt(2)` whose relative phase is `delta`.
pub fn coin_with_phase(delta: f64) -> Spinor {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Spinor::new(C64::new(s, 0.0), C64::from_polar(s, -delta))
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
    }
    Ok(())
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `N (sech(beta x), i e^{i nu tanh(beta x)} sech(beta x))` with `x = epsilon (j - center)`,
/// normalized so that the lattice sum of `P` is one.
pub fn moving_soliton(beta: f64, nu: f64, center: i64, grid: &GridSpec) -> Result<SpinorField1D> {
    check_beta(beta)?;
    if !nu.is_finite() {
        return Err(Error::invalid("nu", "must be finite"));
    }
    let eps = grid.epsilon;
    let raw = grid.build(|j| {
        let x = eps * (j - center) as f64;
        let a = sech(beta * x);
        let phase = C64::i() * C64::from_polar(1.0, nu * (beta * x).tanh());
        Spinor::new(C64::new(a, 0.0), phase * a)
    })?;
    raw.normalized()
}

/// Stationary bright soliton with relative phase `-pi/2` everywhere.
pub fn bright_soliton(beta: f64, center: i64, grid: &GridSpec) -> Result<SpinorField1D> {
    moving_soliton(beta, 0.0, center, grid)
}

/// `sqrt(I) tanh(beta x) (1, -i)`; not normalized, the flanks carry `P = 2 I` per site.
pub fn dark_soliton(intensity: f64, beta: f64, center: i64, grid: &GridSpec) -> Result<SpinorField1D> {
    check_beta(beta)?;
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::invalid("intensity", format!("must be positive, got {intensity}")));
    }
    let eps = grid.epsilon;
    let amp = intensity.sqrt();
    grid.build(|j| {
        let a = amp * (beta * eps * (j - center) as f64).tanh();
        Spinor::new(C64::new(a, 0.0), C64::new(0.0, -a))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockScale {
    /// Total probability one, spread evenly over the occupied sites.
    UnitNorm,
    /// Each occupied site carries `P = 2 I`, i.e. `|u|^2 = |d|^2 = I` for a balanced coin.
    Intensity(f64),
}

/// Constant coin state on `[j_lo, j_hi]`, or on its complement within the grid when `invert`.
pub fn uniform_block(
    j_lo: i64,
    j_hi: i64,
    coin: Spinor,
    grid: &GridSpec,
    invert: bool,
    scale: BlockScale,
) -> Result<SpinorField1D> {
    grid.validate()?;
    if j_lo > j_hi {
        return Err(Error::invalid("block", format!("j_lo ({j_lo}) exceeds j_hi ({j_hi})")));
    }
    if j_lo < grid.j_min || j_hi > grid.j_max {
        return Err(Error::invalid("block", "block must lie inside the grid"));
    }
    if (coin.norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("coin", format!("must be normalized, |coin|^2 = {}", coin.norm_sqr())));
    }
    let inside = |j: i64| (j_lo..=j_hi).contains(&j) != invert;
    let occupied = (grid.j_min..=grid.j_max).filter(|&j| inside(j)).count();
    if occupied == 0 {
        return Err(Error::invalid("block", "empty support"));
    }
    let amp = match scale {
        BlockScale::UnitNorm => (1.0 / occupied as f64).sqrt(),
        BlockScale::Intensity(i) if i.is_finite() && i > 0.0 => (2.0 * i).sqrt(),
        BlockScale::Intensity(i) => {
            return Err(Error::invalid("intensity", format!("must be positive, got {i}")))
        }
    };
    let s = coin.scale(C64::new(amp, 0.0));
    grid.build(|j| if inside(j) { s } else { Spinor::ZERO })
}

/// Separable 2D seed `N sech(beta x) sech(beta y) (1, i)` on `[-half, half]^2`, unit norm.
pub fn product_soliton_2d(beta: f64, half: i64, epsilon: f64) -> Result<SpinorField2D> {
    check_beta(beta)?;
    GridSpec::centered(half, epsilon)?;
    let a = |j: i64| sech(beta * epsilon * j as f64);
    SpinorField2D::from_fn((-half, half), (-half, half), epsilon, |jx, jy| {
        let v = a(jx) * a(jy);
        Spinor::new(C64::new(v, 0.0), C64::new(0.0, v))
    })?
    .normalized()
}
