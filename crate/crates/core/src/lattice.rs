//! Spinor fields on integer lattices and the observables derived from them.
//!
//! Site indices are signed integers with `j = 0` at the lattice center; the
//! physical coordinate of site `j` is `x = epsilon * j`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default amplitude-product threshold below which a relative phase is undefined.
pub const DEFAULT_MASK_TOL: f64 = 1e-12;

/// Two-component walker amplitude `(u, d)` at one lattice site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    pub u: C64,
    pub d: C64,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor {
        u: C64::new(0.0, 0.0),
        d: C64::new(0.0, 0.0),
    };

    pub fn new(u: C64, d: C64) -> Self {
        Self { u, d }
    }

    pub fn up() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn down() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u.norm_sqr() + self.d.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.d.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.u == C64::new(0.0, 0.0) && self.d == C64::new(0.0, 0.0)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::new(self.u * factor, self.d * factor)
    }

    /// `Im(u * conj(d)) = |u||d| sin(delta)`.
    pub fn chirality(&self) -> f64 {
        (self.u * self.d.conj()).im
    }

    /// Relative phase `arg u - arg d` in `(-pi, pi]`, or `None` when `|u||d| < mask_tol`.
    pub fn phase_difference(&self, mask_tol: f64) -> Option<f64> {
        if self.u.norm() * self.d.norm() < mask_tol {
            return None;
        }
        Some(fold_angle(self.u.arg() - self.d.arg()))
    }

    /// Unit complex number `e^{i(arg u + arg d)}`, or `None` when `|u||d| < mask_tol`.
    pub fn phase_sum(&self, mask_tol: f64) -> Option<C64> {
        let product = self.u * self.d;
        let modulus = product.norm();
        if modulus < mask_tol {
            return None;
        }
        Some(product / modulus)
    }
}

/// Folds an angle into `(-pi, pi]`.
pub fn fold_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Angular distance between two points on the unit circle, in `[0, pi]`.
pub fn angular_distance(a: C64, b: C64) -> f64 {
    (a * b.conj()).arg().abs()
}

/// Position-space moments of a probability profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub norm: f64,
    pub center_of_mass: f64,
    pub width: f64,
    pub ipr: f64,
}

/// A spinor per site on the contiguous index range `[j_min, j_min + len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinorField1D {
    j_min: i64,
    epsilon: f64,
    sites: Vec<Spinor>,
}

impl SpinorField1D {
    pub fn new(j_min: i64, epsilon: f64, sites: Vec<Spinor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("sites", "field needs at least one site"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if let Some(k) = sites.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(
                "sites",
                format!("non-finite amplitude at j = {}", j_min + k as i64),
            ));
        }
        Ok(Self {
            j_min,
            epsilon,
            sites,
        })
    }

    pub fn zeros(j_min: i64, j_max: i64, epsilon: f64) -> Result<Self> {
        if j_max < j_min {
            return Err(Error::invalid("j_max", "must not be below j_min"));
        }
        Self::new(j_min, epsilon, vec![Spinor::ZERO; (j_max - j_min + 1) as usize])
    }

    /// Builds a field from per-site values; used internally by the kernels, which
    /// preserve finiteness.
    pub(crate) fn from_parts(j_min: i64, epsilon: f64, sites: Vec<Spinor>) -> Self {
        debug_assert!(!sites.is_empty());
        Self {
            j_min,
            epsilon,
            sites,
        }
    }

    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    pub fn j_max(&self) -> i64 {
        self.j_min + self.sites.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
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

    pub fn into_sites(self) -> Vec<Spinor> {
        self.sites
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.j_min..=self.j_max()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &Spinor)> + '_ {
        self.indices().zip(self.sites.iter())
    }

    pub fn get(&self, j: i64) -> Option<&Spinor> {
        let k = j.checked_sub(self.j_min)?;
        usize::try_from(k).ok().and_then(|k| self.sites.get(k))
    }

    pub fn x(&self, j: i64) -> f64 {
        self.epsilon * j as f64
    }

    pub fn is_finite(&self) -> bool {
        self.sites.iter().all(Spinor::is_finite)
    }

    pub fn total_norm(&self) -> f64 {
        self.sites.iter().map(Spinor::norm_sqr).sum()
    }

    /// `P_j = |u_j|^2 + |d_j|^2`.
    pub fn probability_density(&self) -> Vec<f64> {
        self.sites.iter().map(Spinor::norm_sqr).collect()
    }

    /// Relative phase per site, `None` where `|u_j||d_j| < mask_tol`.
    pub fn phase_difference(&self, mask_tol: f64) -> Vec<Option<f64>> {
        self.sites
            .iter()
            .map(|s| s.phase_difference(mask_tol))
            .collect()
    }

    pub fn moments(&self) -> Result<Moments> {
        moments_of(self, &self.probability_density())
    }

    /// Smallest index range holding every nonzero site, if any.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.sites.iter().position(|s| !s.is_zero())?;
        let last = self.sites.iter().rposition(|s| !s.is_zero())?;
        Some((self.j_min + first as i64, self.j_min + last as i64))
    }

    /// Extends the lattice with zero sites so it covers `[j_lo, j_hi]`. Never crops.
    pub fn padded_to(&self, j_lo: i64, j_hi: i64) -> Self {
        let new_min = j_lo.min(self.j_min);
        let new_max = j_hi.max(self.j_max());
        let mut sites = vec![Spinor::ZERO; (new_max - new_min + 1) as usize];
        let offset = (self.j_min - new_min) as usize;
        sites[offset..offset + self.sites.len()].copy_from_slice(&self.sites);
        Self::from_parts(new_min, self.epsilon, sites)
    }

    /// The same amplitudes relabelled so that old site `j` becomes `j + shift`.
    pub fn translated(&self, shift: i64) -> Self {
        Self::from_parts(self.j_min + shift, self.epsilon, self.sites.clone())
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        let sites = self.sites.iter().map(|s| s.scale(factor)).collect();
        Self::from_parts(self.j_min, self.epsilon, sites)
    }

    /// Rescales to unit total norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.total_norm();
        if n <= 0.0 {
            return Err(Error::EmptyState);
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Site-wise sum of fields, on the union of their index ranges.
    pub fn superpose(fields: &[SpinorField1D]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::invalid("fields", "nothing to superpose"))?;
        if fields.iter().any(|f| f.epsilon != first.epsilon) {
            return Err(Error::invalid("fields", "lattice spacings differ"));
        }
        let lo = fields.iter().map(|f| f.j_min).min().unwrap_or(first.j_min);
        let hi = fields.iter().map(|f| f.j_max()).max().unwrap_or(first.j_max());
        let mut out = vec![Spinor::ZERO; (hi - lo + 1) as usize];
        for f in fields {
            let offset = (f.j_min - lo) as usize;
            for (dst, src) in out[offset..].iter_mut().zip(&f.sites) {
                dst.u += src.u;
                dst.d += src.d;
            }
        }
        Ok(Self::from_parts(lo, first.epsilon, out))
    }
}

/// Moments of a probability profile laid out on the sites of `field`.
pub(crate) fn moments_of(field: &SpinorField1D, profile: &[f64]) -> Result<Moments> {
    let norm: f64 = profile.iter().sum();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::EmptyState);
    }
    let mut first = 0.0;
    let mut sq = 0.0;
    for (j, p) in field.indices().zip(profile) {
        first += field.x(j) * p;
        sq += p * p;
    }
    let center_of_mass = first / norm;
    // second pass about the mean; E[x^2] - E[x]^2 cancels badly far from the origin
    let variance = field
        .indices()
        .zip(profile)
        .map(|(j, p)| (field.x(j) - center_of_mass).powi(2) * p)
        .sum::<f64>()
        / norm;
    Ok(Moments {
        norm,
        center_of_mass,
        width: variance.sqrt(),
        ipr: sq / (norm * norm),
    })
}

/// Observables captured at one recorded timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: usize,
    pub total_norm: f64,
    pub center_of_mass: f64,
    pub width: f64,
    pub ipr: f64,
    /// `e^{i sigma}` at the designated sample site, if defined there.
    pub phase_sum: Option<C64>,
    pub profile: Option<Vec<f64>>,
    pub delta: Option<Vec<Option<f64>>>,
}

impl ObservableRecord {
    pub fn capture(
        t: usize,
        field: &SpinorField1D,
        sigma_site: Option<i64>,
        keep_profiles: bool,
        mask_tol: f64,
    ) -> Result<Self> {
        let profile = field.probability_density();
        let m = moments_of(field, &profile)?;
        let phase_sum = sigma_site
            .and_then(|j| field.get(j))
            .and_then(|s| s.phase_sum(mask_tol));
        Ok(Self {
            t,
            total_norm: m.norm,
            center_of_mass: m.center_of_mass,
            width: m.width,
            ipr: m.ipr,
            phase_sum,
            delta: keep_profiles.then(|| field.phase_difference(mask_tol)),
            profile: keep_profiles.then_some(profile),
        })
    }
}

/// Per-timestep observable records plus the lattice geometry they refer to.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub j_min: i64,
    pub epsilon: f64,
    pub records: Vec<ObservableRecord>,
}

impl ObservableSeries {
    pub fn push(&mut self, record: ObservableRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.t < record.t));
        self.records.push(record);
    }

    pub fn times(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn first(&self) -> Option<&ObservableRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }

    /// Largest `|norm(t) - norm(0)|` over the series.
    pub fn max_norm_drift(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        self.records
            .iter()
            .map(|r| (r.total_norm - first.total_norm).abs())
            .fold(0.0, f64::max)
    }

    /// Rows of `P_{t,j}` for every record that kept its profile.
    pub fn heatmap(&self) -> Vec<(usize, &[f64])> {
        self.records
            .iter()
            .filter_map(|r| r.profile.as_deref().map(|p| (r.t, p)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn single(j_min: i64, len: usize, at: i64, s: Spinor) -> SpinorField1D {
        let mut f = SpinorField1D::zeros(j_min, j_min + len as i64 - 1, 1.0).unwrap();
        f.sites_mut()[(at - j_min) as usize] = s;
        f
    }

    #[test]
    fn density_of_single_up_site() {
        let f = single(-3, 7, 1, Spinor::up());
        let p = f.probability_density();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn density_of_balanced_spinor_is_one() {
        let s = Spinor::new(C64::new(S, 0.0), C64::new(S, 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_difference_reference_coins() {
        let minus_i = Spinor::new(C64::new(S, 0.0), C64::new(0.0, -S));
        let plus_i = Spinor::new(C64::new(S, 0.0), C64::new(0.0, S));
        assert!((minus_i.phase_difference(DEFAULT_MASK_TOL).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((plus_i.phase_difference(DEFAULT_MASK_TOL).unwrap() + PI / 2.0).abs() < 1e-15);
        assert_eq!(Spinor::down().phase_difference(DEFAULT_MASK_TOL), None);
    }

    #[test]
    fn fold_angle_range() {
        assert_eq!(fold_angle(PI), PI);
        assert_eq!(fold_angle(-PI), PI);
        assert!((fold_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn moments_edge_cases() {
        let f = single(-5, 11, 2, Spinor::up());
        let m = f.moments().unwrap();
        assert_eq!(m.ipr, 1.0);
        assert_eq!(m.center_of_mass, 2.0);
        assert_eq!(m.width, 0.0);

        let n = 40;
        let amp = 1.0 / (n as f64).sqrt();
        let uniform = SpinorField1D::new(
            -20,
            1.0,
            vec![Spinor::new(C64::new(amp, 0.0), C64::new(0.0, 0.0)); n],
        )
        .unwrap();
        assert!((uniform.moments().unwrap().ipr - 1.0 / n as f64).abs() < 1e-15);

        let empty = SpinorField1D::zeros(-3, 3, 1.0).unwrap();
        assert!(matches!(empty.moments(), Err(Error::EmptyState)));
    }

    #[test]
    fn symmetric_profile_is_centered() {
        let sites: Vec<Spinor> = (-10..=10)
            .map(|j: i64| {
                let a = (-(j * j) as f64 / 8.0).exp();
                Spinor::new(C64::new(a, 0.0), C64::new(0.0, 0.3 * a))
            })
            .collect();
        let f = SpinorField1D::new(-10, 0.5, sites).unwrap();
        assert!(f.moments().unwrap().center_of_mass.abs() < 1e-12);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(SpinorField1D::new(0, 1.0, vec![]).is_err());
        assert!(SpinorField1D::new(0, 0.0, vec![Spinor::up()]).is_err());
        let nan = Spinor::new(C64::new(f64::NAN, 0.0), C64::new(0.0, 0.0));
        assert!(SpinorField1D::new(0, 1.0, vec![nan]).is_err());
    }

    #[test]
    fn padding_and_support() {
        let f = single(-2, 5, 1, Spinor::down());
        assert_eq!(f.support(), Some((1, 1)));
        let g = f.padded_to(-10, 4);
        assert_eq!((g.j_min(), g.j_max()), (-10, 4));
        assert_eq!(g.get(1), Some(&Spinor::down()));
        assert_eq!(g.total_norm(), 1.0);
    }

    fn arb_field() -> impl Strategy<Value = SpinorField1D> {
        (
            -20i64..20,
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..64),
        )
            .prop_map(|(j_min, v)| {
                let sites = v
                    .into_iter()
                    .map(|(a, b, c, d)| Spinor::new(C64::new(a, b), C64::new(c, d)))
                    .collect();
                SpinorField1D::new(j_min, 1.0, sites).unwrap()
            })
    }

    proptest! {
        #[test]
        fn density_sums_to_squared_two_norm(f in arb_field()) {
            let flat: f64 = f.sites().iter().flat_map(|s| [s.u, s.d]).map(|z| z.re * z.re + z.im * z.im).sum();
            let total: f64 = f.probability_density().iter().sum();
            prop_assert!((total - flat).abs() <= 1e-14 * flat.max(1.0));
        }

        #[test]
        fn phase_difference_is_gauge_invariant(f in arb_field(), chi in -10.0f64..10.0) {
            let g = f.scaled(C64::from_polar(1.0, chi));
            for (a, b) in f.phase_difference(1e-6).into_iter().zip(g.phase_difference(1e-6)) {
                match (a, b) {
                    (Some(a), Some(b)) => {
                        let gap = fold_angle(a - b).abs();
                        prop_assert!(gap < 1e-9, "{a} vs {b}");
                    }
                    (None, None) => {}
                    // the mask compares |u||d| which is gauge invariant up to rounding
                    _ => {}
                }
            }
        }

        #[test]
        fn translation_shifts_center_of_mass(f in arb_field(), shift in -30i64..30) {
            prop_assume!(f.total_norm() > 1e-6);
            let a = f.moments().unwrap();
            let b = f.translated(shift).moments().unwrap();
            prop_assert!((b.center_of_mass - a.center_of_mass - shift as f64).abs() < 1e-9);
            prop_assert!((b.width - a.width).abs() < 1e-7);
        }
    }
}
