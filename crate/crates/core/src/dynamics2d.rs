//! Split-step two-dimensional walk `S_y C S_x C`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rotate, Boundary, WalkParams, PAD_MARGIN};
use crate::error::{Error, Result};
use crate::field2d::SpinorField2D;
use crate::lattice::{Spinor, C64};

// Below this many sites the rayon overhead outweighs the coin work.
const PAR_THRESHOLD: usize = 1 << 14;

fn coin_in_place(sites: &mut [Spinor], p: &WalkParams) {
    if sites.len() >= PAR_THRESHOLD {
        sites.par_iter_mut().for_each(|s| *s = rotate(s, p.theta0, p.alpha));
    } else {
        sites.iter_mut().for_each(|s| *s = rotate(s, p.theta0, p.alpha));
    }
}

/// Moves `u` one site towards larger `jx` and `d` towards smaller `jx`.
fn shift_x(src: &[Spinor], dst: &mut [Spinor], nx: usize, boundary: Boundary) -> Result<()> {
    let zero = C64::new(0.0, 0.0);
    if boundary == Boundary::OpenAutoPad
        && src.chunks(nx).any(|row| row[nx - 1].u != zero || row[0].d != zero)
    {
        return Err(Error::BoundaryReached { step: None });
    }
    for (row_in, row_out) in src.chunks(nx).zip(dst.chunks_mut(nx)) {
        let (wrap_u, wrap_d) = match boundary {
            Boundary::Periodic => (row_in[nx - 1].u, row_in[0].d),
            Boundary::OpenAutoPad => (zero, zero),
        };
        for i in 0..nx {
            row_out[i].u = if i == 0 { wrap_u } else { row_in[i - 1].u };
            row_out[i].d = if i + 1 == nx { wrap_d } else { row_in[i + 1].d };
        }
    }
    Ok(())
}

/// Moves `u` one row towards larger `jy` and `d` towards smaller `jy`.
fn shift_y(src: &[Spinor], dst: &mut [Spinor], nx: usize, ny: usize, boundary: Boundary) -> Result<()> {
    let zero = C64::new(0.0, 0.0);
    let row = |iy: usize| &src[iy * nx..(iy + 1) * nx];
    if boundary == Boundary::OpenAutoPad
        && (row(ny - 1).iter().any(|s| s.u != zero) || row(0).iter().any(|s| s.d != zero))
    {
        return Err(Error::BoundaryReached { step: None });
    }
    for iy in 0..ny {
        let from_below = match (iy, boundary) {
            (0, Boundary::Periodic) => Some(ny - 1),
            (0, Boundary::OpenAutoPad) => None,
            _ => Some(iy - 1),
        };
        let from_above = match (iy + 1 == ny, boundary) {
            (true, Boundary::Periodic) => Some(0),
            (true, Boundary::OpenAutoPad) => None,
            _ => Some(iy + 1),
        };
        let out = &mut dst[iy * nx..(iy + 1) * nx];
        for (ix, o) in out.iter_mut().enumerate() {
            o.u = from_below.map_or(zero, |r| src[r * nx + ix].u);
            o.d = from_above.map_or(zero, |r| src[r * nx + ix].d);
        }
    }
    Ok(())
}

fn check_params(p: &WalkParams) -> Result<()> {
    p.validate()?;
    if p.phi != 0.0 {
        return Err(Error::invalid("phi", "the 2D walk has no electric field"));
    }
    Ok(())
}

/// Stateful 2D stepper with a reusable scratch buffer.
#[derive(Clone, Debug)]
pub struct Walker2D {
    field: SpinorField2D,
    scratch: Vec<Spinor>,
    params: WalkParams,
    t: usize,
}

impl Walker2D {
    pub fn new(field: SpinorField2D, params: WalkParams) -> Result<Self> {
        check_params(&params)?;
        let scratch = vec![Spinor::ZERO; field.sites().len()];
        Ok(Self { field, scratch, params, t: 0 })
    }

    pub fn field(&self) -> &SpinorField2D {
        &self.field
    }

    pub fn into_field(self) -> SpinorField2D {
        self.field
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn advance(&mut self) -> Result<()> {
        let (nx, ny) = self.field.shape();
        let b = self.params.boundary;
        let t = self.t;
        coin_in_place(self.field.sites_mut(), &self.params);
        shift_x(self.field.sites(), &mut self.scratch, nx, b).map_err(|e| e.at_step(t))?;
        // the second coin sees the state produced by the x shift
        coin_in_place(&mut self.scratch, &self.params);
        shift_y(&self.scratch, self.field.sites_mut(), nx, ny, b).map_err(|e| e.at_step(t))?;
        self.t += 1;
        Ok(())
    }
}

/// One step `S_y C S_x C`, with the coin angle recomputed before each coin.
pub fn step2d(field: &SpinorField2D, p: &WalkParams) -> Result<SpinorField2D> {
    let mut w = Walker2D::new(field.clone(), *p)?;
    w.advance()?;
    Ok(w.into_field())
}

/// Pads open lattices by `steps + PAD_MARGIN` around the support in both directions.
pub fn prepare_lattice2d(field: &SpinorField2D, boundary: Boundary, steps: usize) -> Result<SpinorField2D> {
    match boundary {
        Boundary::Periodic => Ok(field.clone()),
        Boundary::OpenAutoPad => {
            let ((x0, x1), (y0, y1)) = field.support().ok_or(Error::EmptyState)?;
            let m = steps as i64 + PAD_MARGIN;
            Ok(field.padded_to((x0 - m, x1 + m), (y0 - m, y1 + m)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionRecord {
    pub t: usize,
    pub norm: f64,
    /// `var_x + var_y` in physical units.
    pub variance: f64,
    pub max_probability: f64,
}

impl DispersionRecord {
    pub fn capture(t: usize, field: &SpinorField2D) -> Result<Self> {
        let m = field.moments()?;
        Ok(Self {
            t,
            norm: m.norm,
            variance: m.variance,
            max_probability: m.max_probability,
        })
    }
}

/// Variance and peak probability for each `(t, field)` snapshot.
pub fn dispersion_diagnostics(snapshots: &[(usize, SpinorField2D)]) -> Result<Vec<DispersionRecord>> {
    if snapshots.len() < 2 {
        return Err(Error::invalid("snapshots", "need at least two recorded times"));
    }
    snapshots.iter().map(|(t, f)| DispersionRecord::capture(*t, f)).collect()
}

/// Least-squares slope of `ln variance` against `ln t` over records with `t` in `[t_lo, t_hi]`.
pub fn loglog_slope(records: &[DispersionRecord], t_lo: usize, t_hi: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= t_lo && r.t <= t_hi && r.t > 0 && r.variance > 0.0)
        .map(|r| ((r.t as f64).ln(), r.variance.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("records", "need two positive records in the fit window"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct Evolution2D {
    pub records: Vec<DispersionRecord>,
    /// Fields at the recorded times, when requested.
    pub snapshots: Vec<(usize, SpinorField2D)>,
    pub field: SpinorField2D,
}

/// Runs `steps` steps on a lattice prepared for the boundary policy, recording every
/// `record_every` steps and at the end.
pub fn evolve2d(
    field: &SpinorField2D,
    p: &WalkParams,
    steps: usize,
    record_every: usize,
    keep_snapshots: bool,
) -> Result<Evolution2D> {
    if record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }
    check_params(p)?;
    let mut w = Walker2D::new(prepare_lattice2d(field, p.boundary, steps)?, *p)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    loop {
        let t = w.time();
        if t % record_every == 0 || t == steps {
            records.push(DispersionRecord::capture(t, w.field())?);
            if keep_snapshots {
                snapshots.push((t, w.field().clone()));
            }
        }
        if t == steps {
            break;
        }
        w.advance()?;
    }
    Ok(Evolution2D {
        records,
        snapshots,
        field: w.into_field(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn single(s: Spinor) -> SpinorField2D {
        let mut f = SpinorField2D::zeros(-4, 4, -4, 4, 1.0).unwrap();
        f.set(0, 0, s).unwrap();
        f
    }

    #[test]
    fn hand_traced_step() {
        // C: up -> down (angle pi/2); S_x: d to jx-1; C: down -> -up; S_y: u to jy+1
        let out = step2d(&single(Spinor::up()), &WalkParams::new(FRAC_PI_2, 0.0)).unwrap();
        let occupied: Vec<usize> = (0..out.sites().len()).filter(|&k| out.sites()[k].norm_sqr() > 1e-24).collect();
        assert_eq!(occupied.len(), 1);
        let s = out.get(-1, 1).unwrap();
        assert!((s.u - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(s.d.norm() < 1e-15);
    }

    #[test]
    fn open_boundary_error_and_padding() {
        let mut f = SpinorField2D::zeros(0, 3, 0, 3, 1.0).unwrap();
        f.set(3, 1, Spinor::up()).unwrap();
        let err = step2d(&f, &WalkParams::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::BoundaryReached { step: Some(0) }));
        let ev = evolve2d(&f, &WalkParams::new(FRAC_PI_4, 1.0), 20, 5, false).unwrap();
        assert_eq!(ev.field.x_range(), (3 - 28, 3 + 28));
        assert_eq!(ev.records.iter().map(|r| r.t).collect::<Vec<_>>(), vec![0, 5, 10, 15, 20]);
    }

    #[test]
    fn periodic_wraps_both_axes() {
        let mut f = SpinorField2D::zeros(0, 3, 0, 2, 1.0).unwrap();
        f.set(3, 2, Spinor::up()).unwrap();
        let out = step2d(&f, &WalkParams::new(0.0, 0.0).with_boundary(Boundary::Periodic)).unwrap();
        assert_eq!(out.get(0, 0), Some(&Spinor::up()));
    }

    #[test]
    fn second_coin_uses_fresh_angles() {
        // A stale-angle variant reuses the first coin's angle field for the second coin.
        let f = SpinorField2D::from_fn((-3, 3), (-3, 3), 1.0, |_, _| {
            Spinor::new(
                C64::new(rng_val(), rng_val()) * 0.1,
                C64::new(rng_val(), rng_val()) * 0.1,
            )
        })
        .unwrap();
        let p = WalkParams::new(0.4, 3.0).with_boundary(Boundary::Periodic);
        let fresh = step2d(&f, &p).unwrap();

        let (nx, ny) = f.shape();
        let angles: Vec<f64> = f.sites().iter().map(|s| p.theta0 + p.alpha * s.chirality()).collect();
        let rot = |s: &Spinor, th: f64| {
            let (sn, cs) = th.sin_cos();
            Spinor::new(cs * s.u - sn * s.d, sn * s.u + cs * s.d)
        };
        let mut a: Vec<Spinor> = f.sites().iter().zip(&angles).map(|(s, &th)| rot(s, th)).collect();
        let mut b = vec![Spinor::ZERO; a.len()];
        shift_x(&a, &mut b, nx, p.boundary).unwrap();
        for (s, &th) in b.iter_mut().zip(&angles) {
            *s = rot(s, th);
        }
        shift_y(&b, &mut a, nx, ny, p.boundary).unwrap();
        let diff: f64 = a.iter().zip(fresh.sites()).map(|(x, y)| (x.u - y.u).norm() + (x.d - y.d).norm()).sum();
        assert!(diff > 1e-6, "stale and fresh angle variants agree: {diff}");
    }

    fn rng_val() -> f64 {
        use std::cell::RefCell;
        thread_local!(static R: RefCell<ChaCha8Rng> = RefCell::new(ChaCha8Rng::seed_from_u64(17)));
        R.with(|r| r.borrow_mut().gen_range(-1.0..1.0))
    }

    #[test]
    fn norm_conserved_over_300_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let p = WalkParams::new(rng.gen_range(-PI..PI), rng.gen_range(-10.0..10.0)).with_boundary(Boundary::Periodic);
            let f = SpinorField2D::from_fn((-12, 12), (-10, 10), 1.0, |_, _| {
                Spinor::new(C64::new(rng_val(), rng_val()), C64::new(rng_val(), rng_val()))
            })
            .unwrap()
            .normalized()
            .unwrap();
            let ev = evolve2d(&f, &p, 300, 100, false).unwrap();
            for r in &ev.records {
                assert!((r.norm - 1.0).abs() < 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn diagnostics_of_static_snapshots() {
        let f = single(Spinor::up());
        let recs = dispersion_diagnostics(&[(0, f.clone()), (10, f.clone()), (20, f)]).unwrap();
        assert!(recs.iter().all(|r| r.variance == 0.0 && r.max_probability == 1.0));
        assert!(dispersion_diagnostics(&[(0, single(Spinor::up()))]).is_err());
    }

    #[test]
    fn linear_walk_spreads_ballistically() {
        let s = Spinor::new(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2));
        let ev = evolve2d(&single(s), &WalkParams::new(FRAC_PI_4, 0.0), 200, 10, false).unwrap();
        let slope = loglog_slope(&ev.records, 20, 200).unwrap();
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }
}
