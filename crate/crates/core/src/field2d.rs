//! Two-component field on a rectangular lattice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Spinor;

/// Sites are stored row by row: index `(jy - y_min) * nx + (jx - x_min)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorField2D {
    x_min: i64,
    y_min: i64,
    nx: usize,
    ny: usize,
    epsilon: f64,
    sites: Vec<Spinor>,
}

/// Position moments of a 2D probability distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments2D {
    pub norm: f64,
    pub center: (f64, f64),
    /// `var_x + var_y`.
    pub variance: f64,
    pub max_probability: f64,
}

impl SpinorField2D {
    pub fn new(x_min: i64, y_min: i64, nx: usize, ny: usize, epsilon: f64, sites: Vec<Spinor>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid", "2D lattice must be non-empty"));
        }
        if sites.len() != nx * ny {
            return Err(Error::invalid("sites", format!("expected {} sites, got {}", nx * ny, sites.len())));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !sites.iter().all(Spinor::is_finite) {
            return Err(Error::invalid("sites", "amplitudes must be finite"));
        }
        Ok(Self { x_min, y_min, nx, ny, epsilon, sites })
    }

    pub fn zeros(x_min: i64, x_max: i64, y_min: i64, y_max: i64, epsilon: f64) -> Result<Self> {
        if x_max < x_min || y_max < y_min {
            return Err(Error::invalid("grid", "empty index range"));
        }
        let (nx, ny) = ((x_max - x_min + 1) as usize, (y_max - y_min + 1) as usize);
        Self::new(x_min, y_min, nx, ny, epsilon, vec![Spinor::ZERO; nx * ny])
    }

    /// Evaluates `f(jx, jy)` on `[x_min, x_max] x [y_min, y_max]`.
    pub fn from_fn(
        (x_min, x_max): (i64, i64),
        (y_min, y_max): (i64, i64),
        epsilon: f64,
        f: impl Fn(i64, i64) -> Spinor,
    ) -> Result<Self> {
        let mut field = Self::zeros(x_min, x_max, y_min, y_max, epsilon)?;
        for jy in y_min..=y_max {
            for jx in x_min..=x_max {
                let k = field.offset(jx, jy).unwrap();
                field.sites[k] = f(jx, jy);
            }
        }
        if !field.sites.iter().all(Spinor::is_finite) {
            return Err(Error::invalid("sites", "amplitudes must be finite"));
        }
        Ok(field)
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.x_min, self.x_min + self.nx as i64 - 1)
    }

    pub fn y_range(&self) -> (i64, i64) {
        (self.y_min, self.y_min + self.ny as i64 - 1)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sites(&self) -> &[Spinor] {
        &self.sites
    }

    pub fn sites_mut(&mut self) -> &mut [Spinor] {
        &mut self.sites
    }

    fn offset(&self, jx: i64, jy: i64) -> Option<usize> {
        let ix = usize::try_from(jx - self.x_min).ok().filter(|&i| i < self.nx)?;
        let iy = usize::try_from(jy - self.y_min).ok().filter(|&i| i < self.ny)?;
        Some(iy * self.nx + ix)
    }

    pub fn get(&self, jx: i64, jy: i64) -> Option<&Spinor> {
        self.offset(jx, jy).map(|k| &self.sites[k])
    }

    pub fn set(&mut self, jx: i64, jy: i64, s: Spinor) -> Result<()> {
        let k = self
            .offset(jx, jy)
            .ok_or_else(|| Error::invalid("site", format!("({jx}, {jy}) outside the lattice")))?;
        self.sites[k] = s;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.sites.iter().all(Spinor::is_finite)
    }

    pub fn total_norm(&self) -> f64 {
        self.sites.iter().map(Spinor::norm_sqr).sum()
    }

    /// `P(jx, jy)` row by row, same layout as the sites.
    pub fn probability_density(&self) -> Vec<f64> {
        self.sites.iter().map(Spinor::norm_sqr).collect()
    }

    /// Smallest rectangle holding every nonzero amplitude.
    pub fn support(&self) -> Option<((i64, i64), (i64, i64))> {
        let mut bounds: Option<((i64, i64), (i64, i64))> = None;
        for (k, s) in self.sites.iter().enumerate() {
            if s.is_zero() {
                continue;
            }
            let jx = self.x_min + (k % self.nx) as i64;
            let jy = self.y_min + (k / self.nx) as i64;
            bounds = Some(match bounds {
                None => ((jx, jx), (jy, jy)),
                Some(((x0, x1), (y0, y1))) => ((x0.min(jx), x1.max(jx)), (y0.min(jy), y1.max(jy))),
            });
        }
        bounds
    }

    /// Zero-extends to cover `[x_lo, x_hi] x [y_lo, y_hi]`; never crops.
    pub fn padded_to(&self, (x_lo, x_hi): (i64, i64), (y_lo, y_hi): (i64, i64)) -> Self {
        let (cx, cy) = (self.x_range(), self.y_range());
        let (x0, x1) = (x_lo.min(cx.0), x_hi.max(cx.1));
        let (y0, y1) = (y_lo.min(cy.0), y_hi.max(cy.1));
        let mut out = Self::zeros(x0, x1, y0, y1, self.epsilon).expect("range is non-empty");
        for jy in cy.0..=cy.1 {
            for jx in cx.0..=cx.1 {
                let k = out.offset(jx, jy).unwrap();
                out.sites[k] = *self.get(jx, jy).unwrap();
            }
        }
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.total_norm();
        if n == 0.0 {
            return Err(Error::EmptyState);
        }
        let f = 1.0 / n.sqrt();
        let mut out = self.clone();
        for s in &mut out.sites {
            s.u *= f;
            s.d *= f;
        }
        Ok(out)
    }

    /// Moments in physical coordinates `(epsilon jx, epsilon jy)`.
    pub fn moments(&self) -> Result<Moments2D> {
        let pos = |k: usize| {
            let x = self.epsilon * (self.x_min + (k % self.nx) as i64) as f64;
            let y = self.epsilon * (self.y_min + (k / self.nx) as i64) as f64;
            (x, y)
        };
        let (mut n, mut sx, mut sy, mut pmax) = (0.0, 0.0, 0.0, 0.0f64);
        for (k, s) in self.sites.iter().enumerate() {
            let p = s.norm_sqr();
            let (x, y) = pos(k);
            n += p;
            sx += p * x;
            sy += p * y;
            pmax = pmax.max(p);
        }
        if n == 0.0 {
            return Err(Error::EmptyState);
        }
        let (cx, cy) = (sx / n, sy / n);
        let variance = self
            .sites
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let (x, y) = pos(k);
                s.norm_sqr() * ((x - cx).powi(2) + (y - cy).powi(2))
            })
            .sum::<f64>()
            / n;
        Ok(Moments2D {
            norm: n,
            center: (cx, cy),
            variance,
            max_probability: pmax / n,
        })
    }
}
