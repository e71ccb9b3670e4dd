//! Symmetries and conservation laws of the nonlinear step, checked on random states.

use nlqw_core::continuum::ContinuumParams;
use nlqw_core::dynamics::{step, Boundary, WalkParams};
use nlqw_core::dynamics2d::step2d;
use nlqw_core::stability::{characteristic_polynomial, characteristic_roots, PolyBranch};
use nlqw_core::{Spinor, SpinorField1D, SpinorField2D, C64};
use proptest::prelude::*;

fn arb_spinor() -> impl Strategy<Value = Spinor> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(a, b, c, d)| Spinor::new(C64::new(a, b), C64::new(c, d)))
}

fn arb_ring() -> impl Strategy<Value = SpinorField1D> {
    (-20i64..20, prop::collection::vec(arb_spinor(), 3..40))
        .prop_map(|(j_min, sites)| SpinorField1D::new(j_min, 0.5, sites).unwrap())
}

fn max_gap(a: &[Spinor], b: &[Spinor]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.u - y.u).norm().max((x.d - y.d).norm()))
        .fold(0.0, f64::max)
}

fn periodic(theta0: f64, alpha: f64) -> WalkParams {
    WalkParams::new(theta0, alpha).with_boundary(Boundary::Periodic)
}

proptest! {
    #[test]
    fn step_conserves_norm(f in arb_ring(), theta0 in -3.2f64..3.2, alpha in -8.0f64..8.0, phi in -3.2f64..3.2) {
        let p = periodic(theta0, alpha).with_electric(phi, 0);
        let mut g = f.clone();
        for t in 0..5 {
            g = step(&g, &p, t).unwrap();
        }
        prop_assert!((g.total_norm() - f.total_norm()).abs() < 1e-12 * f.total_norm().max(1.0));
    }

    #[test]
    fn step_commutes_with_global_phase(f in arb_ring(), theta0 in -3.2f64..3.2, alpha in -8.0f64..8.0, chi in -3.2f64..3.2) {
        let p = periodic(theta0, alpha).with_electric(0.3, 0);
        let z = C64::from_polar(1.0, chi);
        let a = step(&f, &p, 0).unwrap().scaled(z);
        let b = step(&f.scaled(z), &p, 0).unwrap();
        prop_assert!(max_gap(a.sites(), b.sites()) < 1e-12);
    }

    #[test]
    fn step_commutes_with_translation(sites in prop::collection::vec(arb_spinor(), 1..20), shift in -15i64..15, theta0 in -3.2f64..3.2, alpha in -8.0f64..8.0) {
        let f = SpinorField1D::new(0, 1.0, sites).unwrap().padded_to(-2, 25);
        let p = WalkParams::new(theta0, alpha);
        let a = step(&f, &p, 0).unwrap().translated(shift);
        let b = step(&f.translated(shift), &p, 0).unwrap();
        prop_assert_eq!(a.j_min(), b.j_min());
        prop_assert!(max_gap(a.sites(), b.sites()) < 1e-14);
    }

    /// `(u, d)(j) -> (d, u)(-j)` maps the walk at `theta0` onto the walk at `-theta0`.
    #[test]
    fn mirror_flips_the_bare_angle(sites in prop::collection::vec(arb_spinor(), 1..20), theta0 in -3.2f64..3.2, alpha in -8.0f64..8.0) {
        let n = sites.len() as i64;
        let mirror = |f: &SpinorField1D| {
            let flipped: Vec<Spinor> = f.sites().iter().rev().map(|s| Spinor::new(s.d, s.u)).collect();
            SpinorField1D::new(-f.j_max(), f.epsilon(), flipped).unwrap()
        };
        let f = SpinorField1D::new(0, 1.0, sites).unwrap().padded_to(-2, n + 1);
        let a = mirror(&step(&f, &WalkParams::new(theta0, alpha), 0).unwrap());
        let b = step(&mirror(&f), &WalkParams::new(-theta0, alpha), 0).unwrap();
        prop_assert_eq!(a.j_min(), b.j_min());
        prop_assert!(max_gap(a.sites(), b.sites()) < 1e-14);
    }

    #[test]
    fn step2d_conserves_norm(sites in prop::collection::vec(arb_spinor(), 30), theta0 in -3.2f64..3.2, alpha in -8.0f64..8.0) {
        let f = SpinorField2D::new(-3, 2, 6, 5, 1.0, sites).unwrap();
        let p = periodic(theta0, alpha);
        let mut g = f.clone();
        for _ in 0..4 {
            g = step2d(&g, &p).unwrap();
        }
        prop_assert!((g.total_norm() - f.total_norm()).abs() < 1e-12 * f.total_norm());
    }

    #[test]
    fn characteristic_roots_solve_the_quartic(
        theta0_t in 0.05f64..3.0,
        alpha_t in -4.0f64..4.0,
        intensity in 0.0f64..3.0,
        k in -5.0f64..5.0,
        minus in any::<bool>(),
    ) {
        let cp = ContinuumParams::new(theta0_t, alpha_t, 0.1).unwrap();
        let branch = if minus { PolyBranch::Minus } else { PolyBranch::Plus };
        let roots = characteristic_roots(branch, intensity, k, &cp).unwrap();
        let scale = 1.0 + (k * k + (alpha_t * intensity).abs() + theta0_t).powi(4);
        for r in roots {
            let res = characteristic_polynomial(branch, intensity, k, &cp, r).norm();
            prop_assert!(res < 1e-10 * scale, "root {r} residual {res}");
            // the spectrum is closed under lambda -> -lambda
            prop_assert!(roots.iter().any(|s| (s + r).norm() < 1e-9 * scale.sqrt()));
        }
    }
}
