//! One-dimensional nonlinear walk: state-dependent coin, conditional shift and
//! the optional electric phase `e^{i Phi X}` applied after `S C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ObservableRecord, ObservableSeries, Spinor, SpinorField1D, C64, DEFAULT_MASK_TOL};

/// Extra zero sites added beyond the light cone when auto-padding.
pub const PAD_MARGIN: i64 = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Lattice sized to the initial support plus the light cone; touching the edge is an error.
    #[default]
    OpenAutoPad,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub theta0: f64,
    pub alpha: f64,
    /// Electric phase per site. Uses the integer site index, not `epsilon * j`.
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub electric_start: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl WalkParams {
    pub fn new(theta0: f64, alpha: f64) -> Self {
        Self {
            theta0,
            alpha,
            phi: 0.0,
            electric_start: 0,
            boundary: Boundary::OpenAutoPad,
        }
    }

    pub fn with_electric(mut self, phi: f64, start: usize) -> Self {
        self.phi = phi;
        self.electric_start = start;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta0", self.theta0), ("alpha", self.alpha), ("phi", self.phi)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }

    fn electric_active(&self, t: usize) -> bool {
        self.phi != 0.0 && t >= self.electric_start
    }
}

/// `theta = theta0 + alpha * Im(u conj(d))`, i.e. `theta0 + alpha |u||d| sin(delta)`.
#[inline]
pub fn nonlinear_angle(s: &Spinor, p: &WalkParams) -> f64 {
    p.theta0 + p.alpha * s.chirality()
}

#[inline]
pub(crate) fn rotate(s: &Spinor, theta0: f64, alpha: f64) -> Spinor {
    let theta = theta0 + alpha * s.chirality();
    let (sin, cos) = theta.sin_cos();
    Spinor::new(cos * s.u - sin * s.d, sin * s.u + cos * s.d)
}

fn coin_into(src: &[Spinor], dst: &mut [Spinor], p: &WalkParams) {
    for (o, s) in dst.iter_mut().zip(src) {
        *o = rotate(s, p.theta0, p.alpha);
    }
}

fn shift_into(src: &[Spinor], dst: &mut [Spinor], boundary: Boundary) -> Result<()> {
    let n = src.len();
    let zero = C64::new(0.0, 0.0);
    if boundary == Boundary::OpenAutoPad && (src[n - 1].u != zero || src[0].d != zero) {
        return Err(Error::BoundaryReached { step: None });
    }
    let (wrap_u, wrap_d) = match boundary {
        Boundary::Periodic => (src[n - 1].u, src[0].d),
        Boundary::OpenAutoPad => (zero, zero),
    };
    for i in 0..n {
        dst[i].u = if i == 0 { wrap_u } else { src[i - 1].u };
        dst[i].d = if i + 1 == n { wrap_d } else { src[i + 1].d };
    }
    Ok(())
}

fn electric_in_place(sites: &mut [Spinor], j_min: i64, phi: f64) {
    for (k, s) in sites.iter_mut().enumerate() {
        let phase = C64::from_polar(1.0, phi * (j_min + k as i64) as f64);
        s.u *= phase;
        s.d *= phase;
    }
}

/// Applies the nonlinear coin site by site; each angle uses that site's pre-coin value.
pub fn apply_coin(field: &SpinorField1D, p: &WalkParams) -> SpinorField1D {
    let mut out = vec![Spinor::ZERO; field.len()];
    coin_into(field.sites(), &mut out, p);
    SpinorField1D::from_parts(field.j_min(), field.epsilon(), out)
}

/// Moves `u` one site right and `d` one site left.
pub fn apply_shift(field: &SpinorField1D, boundary: Boundary) -> Result<SpinorField1D> {
    let mut out = vec![Spinor::ZERO; field.len()];
    shift_into(field.sites(), &mut out, boundary)?;
    Ok(SpinorField1D::from_parts(field.j_min(), field.epsilon(), out))
}

/// Multiplies site `j` by `e^{i phi j}`.
pub fn apply_electric_phase(field: &SpinorField1D, phi: f64) -> SpinorField1D {
    let mut sites = field.sites().to_vec();
    electric_in_place(&mut sites, field.j_min(), phi);
    SpinorField1D::from_parts(field.j_min(), field.epsilon(), sites)
}

/// One timestep `t -> t + 1`.
pub fn step(field: &SpinorField1D, p: &WalkParams, t: usize) -> Result<SpinorField1D> {
    let mut walker = Walker::new(field.clone(), *p)?;
    walker.t = t;
    walker.advance()?;
    Ok(walker.into_field())
}

/// Owns a field and a scratch buffer so repeated steps do not allocate.
#[derive(Clone, Debug)]
pub struct Walker {
    field: SpinorField1D,
    scratch: Vec<Spinor>,
    params: WalkParams,
    t: usize,
}

impl Walker {
    pub fn new(field: SpinorField1D, params: WalkParams) -> Result<Self> {
        params.validate()?;
        let scratch = vec![Spinor::ZERO; field.len()];
        Ok(Self {
            field,
            scratch,
            params,
            t: 0,
        })
    }

    pub fn field(&self) -> &SpinorField1D {
        &self.field
    }

    pub fn into_field(self) -> SpinorField1D {
        self.field
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn advance(&mut self) -> Result<()> {
        let p = self.params;
        coin_into(self.field.sites(), &mut self.scratch, &p);
        shift_into(&self.scratch, self.field.sites_mut(), p.boundary).map_err(|e| e.at_step(self.t))?;
        if p.electric_active(self.t) {
            let j_min = self.field.j_min();
            electric_in_place(self.field.sites_mut(), j_min, p.phi);
        }
        self.t += 1;
        Ok(())
    }
}

/// Grows the lattice so a wavefront moving one site per step cannot reach the
/// edge within `steps` steps. Periodic fields are returned unchanged.
pub fn prepare_lattice(field: &SpinorField1D, boundary: Boundary, steps: usize) -> Result<SpinorField1D> {
    match boundary {
        Boundary::Periodic => Ok(field.clone()),
        Boundary::OpenAutoPad => {
            let (lo, hi) = field.support().ok_or(Error::EmptyState)?;
            let pad = steps as i64 + PAD_MARGIN;
            Ok(field.padded_to(lo - pad, hi + pad))
        }
    }
}

/// Runs `steps` steps, calling `monitor(t, field)` for every `t` in `0..=steps`.
/// Returns the final field. The lattice is prepared with [`prepare_lattice`].
pub fn evolve_with<F>(field: &SpinorField1D, p: &WalkParams, steps: usize, mut monitor: F) -> Result<SpinorField1D>
where
    F: FnMut(usize, &SpinorField1D) -> Result<()>,
{
    let start = prepare_lattice(field, p.boundary, steps)?;
    let mut walker = Walker::new(start, *p)?;
    monitor(0, walker.field())?;
    for _ in 0..steps {
        walker.advance()?;
        monitor(walker.time(), walker.field())?;
    }
    Ok(walker.into_field())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub steps: usize,
    pub record_every: usize,
    /// Site at which `e^{i sigma}` is sampled.
    pub sigma_site: Option<i64>,
    /// Keep `P` and `delta` profiles in every record (needed for heatmaps).
    pub keep_profiles: bool,
    pub mask_tol: f64,
}

impl EvolveOptions {
    pub fn new(steps: usize, record_every: usize) -> Self {
        Self {
            steps,
            record_every,
            sigma_site: None,
            keep_profiles: false,
            mask_tol: DEFAULT_MASK_TOL,
        }
    }

    pub fn with_profiles(mut self) -> Self {
        self.keep_profiles = true;
        self
    }

    pub fn with_sigma_site(mut self, j: i64) -> Self {
        self.sigma_site = Some(j);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub series: ObservableSeries,
    pub field: SpinorField1D,
}

/// Evolves and records observables at `t = 0, k, 2k, ...` and at the final step.
pub fn evolve(field: &SpinorField1D, p: &WalkParams, opts: &EvolveOptions) -> Result<Evolution> {
    if opts.record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }
    let mut series = ObservableSeries::default();
    let final_field = evolve_with(field, p, opts.steps, |t, f| {
        if t == 0 {
            series.j_min = f.j_min();
            series.epsilon = f.epsilon();
        }
        if t % opts.record_every == 0 || t == opts.steps {
            series.push(ObservableRecord::capture(
                t,
                f,
                opts.sigma_site,
                opts.keep_profiles,
                opts.mask_tol,
            )?);
        }
        Ok(())
    })?;
    Ok(Evolution {
        series,
        field: final_field,
    })
}
