//! Linear (alpha = 0) walks checked against explicitly assembled unitaries.

use nalgebra::{DMatrix, DVector};
use nlqw_core::dynamics::{step, Boundary, WalkParams};
use nlqw_core::dynamics2d::step2d;
use nlqw_core::{Spinor, SpinorField1D, SpinorField2D, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Coin `I (x) R(theta)` on `n` sites; component `2k` is `u_k`, `2k+1` is `d_k`.
fn coin_matrix(n: usize, theta: f64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    let (s, co) = theta.sin_cos();
    for k in 0..n {
        m[(2 * k, 2 * k)] = c(co);
        m[(2 * k, 2 * k + 1)] = c(-s);
        m[(2 * k + 1, 2 * k)] = c(s);
        m[(2 * k + 1, 2 * k + 1)] = c(co);
    }
    m
}

/// `sum_x |x+1><x| (x) |up><up| + |x-1><x| (x) |down><down|` on a ring.
fn shift_matrix(n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * ((k + 1) % n), 2 * k)] = c(1.0);
        m[(2 * ((k + n - 1) % n) + 1, 2 * k + 1)] = c(1.0);
    }
    m
}

fn electric_matrix(n: usize, j_min: i64, phi: f64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let e = C64::from_polar(1.0, phi * (j_min + k as i64) as f64);
        m[(2 * k, 2 * k)] = e;
        m[(2 * k + 1, 2 * k + 1)] = e;
    }
    m
}

fn flatten(sites: &[Spinor]) -> DVector<C64> {
    DVector::from_iterator(2 * sites.len(), sites.iter().flat_map(|s| [s.u, s.d]))
}

fn random_sites(rng: &mut ChaCha8Rng, n: usize) -> Vec<Spinor> {
    let raw: Vec<Spinor> = (0..n)
        .map(|_| {
            Spinor::new(
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let norm: f64 = raw.iter().map(Spinor::norm_sqr).sum::<f64>().sqrt();
    raw.iter().map(|s| s.scale(c(1.0 / norm))).collect()
}

#[test]
fn linear_1d_matches_dense_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n = rng.gen_range(3..=32usize);
        let j_min = -(n as i64) / 2;
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let phi = if case % 2 == 0 { 0.0 } else { rng.gen_range(-3.0..3.0) };
        let p = WalkParams::new(theta, 0.0)
            .with_electric(phi, 0)
            .with_boundary(Boundary::Periodic);
        let sites = random_sites(&mut rng, n);
        let mut field = SpinorField1D::new(j_min, 1.0, sites.clone()).unwrap();

        let u = electric_matrix(n, j_min, phi) * shift_matrix(n) * coin_matrix(n, theta);
        assert!((u.adjoint() * &u - DMatrix::identity(2 * n, 2 * n)).norm() < 1e-12);
        let mut v = flatten(&sites);
        for t in 0..10 {
            field = step(&field, &p, t).unwrap();
            v = &u * v;
            let diff = (flatten(field.sites()) - &v).norm();
            assert!(diff < 1e-12, "case {case}, t {t}: {diff}");
        }
    }
}

#[test]
fn linear_1d_hadamard_from_localized_state() {
    // open lattice, large enough that the wavefront never wraps on the ring oracle
    let n = 32;
    let j_min = -16;
    let theta = std::f64::consts::FRAC_PI_4;
    let mut sites = vec![Spinor::ZERO; n];
    sites[16] = Spinor::new(c(std::f64::consts::FRAC_1_SQRT_2), C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2));
    let mut field = SpinorField1D::new(j_min, 1.0, sites.clone()).unwrap();
    let u = shift_matrix(n) * coin_matrix(n, theta);
    let mut v = flatten(&sites);
    let p = WalkParams::new(theta, 0.0);
    for t in 0..14 {
        field = step(&field, &p, t).unwrap();
        v = &u * v;
        assert!((flatten(field.sites()) - &v).norm() < 1e-12);
    }
}

#[test]
fn linear_2d_matches_dense_split_step() {
    let (nx, ny) = (8usize, 8usize);
    let idx = |ix: usize, iy: usize, comp: usize| 2 * (iy * nx + ix) + comp;
    let dim = 2 * nx * ny;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let theta = rng.gen_range(-3.0..3.0);
        let (s, co) = f64::sin_cos(theta);
        let mut coin = DMatrix::<C64>::zeros(dim, dim);
        let mut sx = DMatrix::<C64>::zeros(dim, dim);
        let mut sy = DMatrix::<C64>::zeros(dim, dim);
        for iy in 0..ny {
            for ix in 0..nx {
                coin[(idx(ix, iy, 0), idx(ix, iy, 0))] = c(co);
                coin[(idx(ix, iy, 0), idx(ix, iy, 1))] = c(-s);
                coin[(idx(ix, iy, 1), idx(ix, iy, 0))] = c(s);
                coin[(idx(ix, iy, 1), idx(ix, iy, 1))] = c(co);
                sx[(idx((ix + 1) % nx, iy, 0), idx(ix, iy, 0))] = c(1.0);
                sx[(idx((ix + nx - 1) % nx, iy, 1), idx(ix, iy, 1))] = c(1.0);
                sy[(idx(ix, (iy + 1) % ny, 0), idx(ix, iy, 0))] = c(1.0);
                sy[(idx(ix, (iy + ny - 1) % ny, 1), idx(ix, iy, 1))] = c(1.0);
            }
        }
        let u = &sy * &coin * &sx * &coin;
        let sites = random_sites(&mut rng, nx * ny);
        let mut field = SpinorField2D::new(-4, -3, nx, ny, 1.0, sites.clone()).unwrap();
        let p = WalkParams::new(theta, 0.0).with_boundary(Boundary::Periodic);
        let mut v = flatten(&sites);
        for t in 0..12 {
            field = step2d(&field, &p).unwrap();
            v = &u * v;
            let diff = (flatten(field.sites()) - &v).norm();
            assert!(diff < 1e-12, "t {t}: {diff}");
        }
    }
}
