//! Acceptance criteria A1-A12. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use nlqw::config::{resolve, ExperimentKind};
use nlqw::experiments::{run_experiment, Summary};
use nlqw_core::continuum::{consistency_residual, sample_field, ContinuumParams};
use nlqw_core::dynamics::{Boundary, Walker};
use nlqw_core::dynamics2d::step2d;
use nlqw_core::stability::{characteristic_roots, linearization_eigenvalues, PolyBranch, SteadyStateBranch};
use nlqw_core::{Spinor, SpinorField1D, SpinorField2D, WalkParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn preset(kind: ExperimentKind) -> Summary {
    let cfg = resolve(None, Some(kind), &[]).expect("preset resolves");
    run_experiment(&cfg, None).expect("preset runs")
}

/// All named checks of one run, formatted, and whether they all passed.
fn checks(summary: &Summary, label: &str, names: &[&str]) -> (bool, Vec<String>) {
    let run = summary.run(label).unwrap_or_else(|| panic!("no run `{label}`"));
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let c = run
            .checks
            .iter()
            .chain(&summary.checks)
            .find(|c| c.name == *name)
            .unwrap_or_else(|| panic!("no check `{name}` in `{label}`"));
        ok &= c.passed;
        parts.push(format!("{name}={:.4e} ({}{})", c.value, c.criterion, if c.passed { "" } else { ", failed" }));
    }
    (ok, parts)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<Spinor> {
    let mut g = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let raw: Vec<Spinor> = (0..n).map(|_| Spinor::new(g(), g())).collect();
    let norm: f64 = raw.iter().map(Spinor::norm_sqr).sum::<f64>().sqrt();
    raw.iter().map(|s| s.scale(C64::new(1.0 / norm, 0.0))).collect()
}

fn a1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = WalkParams::new(rng.gen_range(-PI..PI), rng.gen_range(-10.0..10.0))
            .with_electric(rng.gen_range(-PI..PI), 0)
            .with_boundary(Boundary::Periodic);
        let field = SpinorField1D::new(-512, 1.0, random_state(&mut rng, 1024)).unwrap();
        let mut w = Walker::new(field, p).unwrap();
        for _ in 0..2000 {
            w.advance().unwrap();
            worst = worst.max((w.field().total_norm() - 1.0).abs());
        }
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("max |norm - 1| = {worst:.3e} over 20 runs x 2000 steps on 1024 sites"),
    }
}

fn a2_a3() -> (Outcome, Outcome) {
    let s = preset(ExperimentKind::Fig2StationarySoliton);
    let label = "fig2_stationary_soliton";
    let (ok2, d2) = checks(&s, label, &["profile_linf", "profile_stationary"]);
    let (ok3, d3) = checks(&s, label, &["sigma_drift"]);
    (
        Outcome { passed: ok2, detail: d2.join(", ") },
        Outcome { passed: ok3, detail: d3.join(", ") },
    )
}

fn a4() -> Outcome {
    let s = preset(ExperimentKind::Fig3MovingSolitons);
    let (k0, d0) = checks(&s, "nu_zero", &["com_drift_sites"]);
    let (kp, dp) = checks(&s, "nu_plus", &["velocity_sign"]);
    let (km, dm) = checks(&s, "nu_minus", &["velocity_sign", "velocity_magnitude_symmetry"]);
    Outcome {
        passed: k0 && kp && km,
        detail: format!("nu=0: {}; nu=+2/3: {}; nu=-2/3: {}", d0.join(", "), dp.join(", "), dm.join(", ")),
    }
}

fn a5() -> Outcome {
    let s = preset(ExperimentKind::Fig4Collision);
    let (ok, d) = checks(&s, "fig4_collision", &["collision_fidelity_left", "collision_fidelity_right"]);
    Outcome { passed: ok, detail: d.join(", ") }
}

fn a6() -> Outcome {
    let s = preset(ExperimentKind::Fig1StabilityPanels);
    let (km, dm) = checks(&s, "delta_minus", &["localized_peak_ratio", "localized_sech2_fit"]);
    let (kp, dp) = checks(&s, "delta_plus", &["quasi_uniform_ratio"]);
    Outcome {
        passed: km && kp,
        detail: format!("delta=-pi/2: {}; delta=+pi/2: {}", dm.join(", "), dp.join(", ")),
    }
}

fn a7() -> Outcome {
    let s = preset(ExperimentKind::Fig5DarkSoliton);
    let (ok, d) = checks(&s, "fig5_dark_soliton", &["dark_center_depth", "dark_flank_intensity", "dark_flank_delta"]);
    Outcome { passed: ok, detail: d.join(", ") }
}

fn a8() -> Outcome {
    let s = preset(ExperimentKind::Fig8StabilityMap);
    let (ok, d) = checks(&s, "fig8_stability_map", &["plus_branch_stable", "minus_branch_region", "root_residual"]);
    let exact = s.runs[0].metrics["minus_exact_region_mismatches"];
    Outcome {
        passed: ok,
        detail: format!("{}; cells off the exact instability boundary curves: {exact}", d.join(", ")),
    }
}

fn same_roots(a: [C64; 4], b: [C64; 4]) -> f64 {
    let mut used = [false; 4];
    let mut worst = 0.0f64;
    for x in a {
        let (idx, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[idx] = true;
        worst = worst.max(dist);
    }
    worst
}

fn a9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for n in 0..50 {
        let cp = ContinuumParams::new(rng.gen_range(0.1..2.0), rng.gen_range(0.1..3.0), 1.0).unwrap();
        let intensity = rng.gen_range(0.0..2.0);
        let k = rng.gen_range(0.0..3.0);
        let (branch, poly) = if n % 2 == 0 {
            (SteadyStateBranch::DeltaPlus { intensity }, PolyBranch::Plus)
        } else {
            (SteadyStateBranch::DeltaMinus { intensity }, PolyBranch::Minus)
        };
        let ev = linearization_eigenvalues(&branch, k, &cp).unwrap();
        let roots = characteristic_roots(poly, intensity, k, &cp).unwrap();
        worst = worst.max(same_roots(ev, roots));
    }
    Outcome {
        passed: worst < 1e-8,
        detail: format!("max root distance {worst:.3e} over 50 samples"),
    }
}

fn a10() -> Outcome {
    let gauss = |x: f64| {
        let w = C64::from_polar((-x * x / 2.0).exp() * 0.6, 1.5 * x);
        Spinor::new(w, C64::new(0.0, 1.0) * w.conj())
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha_t in [0.0, 1.0] {
        let residual = |eps: f64| {
            let n = (10.0 / eps).round() as i64;
            let cp = ContinuumParams::new(PI / 3.0, alpha_t, eps).unwrap();
            consistency_residual(&sample_field(-n, n, eps, gauss).unwrap(), &cp).unwrap()
        };
        let ratios: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&e| residual(e) / residual(e / 2.0)).collect();
        ok &= ratios.iter().all(|r| (3.5..=4.5).contains(r));
        parts.push(format!("alpha_t={alpha_t}: ratios {ratios:.3?}"));
    }
    Outcome { passed: ok, detail: parts.join("; ") }
}

fn a11() -> Outcome {
    let s = preset(ExperimentKind::Fig7Electric);
    let (kg, dg) = checks(&s, "phi_golden", &["golden_localized"]);
    let (kf, df) = checks(&s, "phi_two_fifths", &["ballistic_escape"]);
    let (ko, d_o) = checks(&s, "phi_51_256", &["width_oscillation"]);
    Outcome {
        passed: kg && kf && ko,
        detail: format!("{}; {}; {}", dg.join(", "), df.join(", "), d_o.join(", ")),
    }
}

/// Largest deviation between `step2d` and an explicitly assembled `S_y C S_x C` at `alpha = 0`.
fn dense_2d_deviation() -> f64 {
    let (nx, ny) = (8usize, 8usize);
    let idx = |ix: usize, iy: usize, comp: usize| 2 * (iy * nx + ix) + comp;
    let dim = 2 * nx * ny;
    let one = C64::new(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for theta in [PI / 4.0, 0.3, -1.1] {
        let (s, c) = theta.sin_cos();
        let mut coin = DMatrix::<C64>::zeros(dim, dim);
        let mut sx = DMatrix::<C64>::zeros(dim, dim);
        let mut sy = DMatrix::<C64>::zeros(dim, dim);
        for iy in 0..ny {
            for ix in 0..nx {
                coin[(idx(ix, iy, 0), idx(ix, iy, 0))] = C64::new(c, 0.0);
                coin[(idx(ix, iy, 0), idx(ix, iy, 1))] = C64::new(-s, 0.0);
                coin[(idx(ix, iy, 1), idx(ix, iy, 0))] = C64::new(s, 0.0);
                coin[(idx(ix, iy, 1), idx(ix, iy, 1))] = C64::new(c, 0.0);
                sx[(idx((ix + 1) % nx, iy, 0), idx(ix, iy, 0))] = one;
                sx[(idx((ix + nx - 1) % nx, iy, 1), idx(ix, iy, 1))] = one;
                sy[(idx(ix, (iy + 1) % ny, 0), idx(ix, iy, 0))] = one;
                sy[(idx(ix, (iy + ny - 1) % ny, 1), idx(ix, iy, 1))] = one;
            }
        }
        let u = &sy * &coin * &sx * &coin;
        let sites = random_state(&mut rng, nx * ny);
        let mut v = DVector::from_iterator(dim, sites.iter().flat_map(|s| [s.u, s.d]));
        let mut field = SpinorField2D::new(0, 0, nx, ny, 1.0, sites).unwrap();
        let p = WalkParams::new(theta, 0.0).with_boundary(Boundary::Periodic);
        for _ in 0..10 {
            field = step2d(&field, &p).unwrap();
            v = &u * v;
            let got = DVector::from_iterator(dim, field.sites().iter().flat_map(|s| [s.u, s.d]));
            worst = worst.max((got - &v).norm());
        }
    }
    worst
}

fn a12() -> Outcome {
    let s = preset(ExperimentKind::Dim2Dispersion);
    let (ok, d) = checks(&s, "dim2_dispersion", &["ballistic_slope", "peak_decay_monotone"]);
    let dev = dense_2d_deviation();
    Outcome {
        passed: ok && dev < 1e-12,
        detail: format!("{}; dense 8x8 oracle deviation {dev:.3e}", d.join(", ")),
    }
}

fn timed(limit: Option<f64>, f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let start = Instant::now();
    let mut out = f();
    let secs = start.elapsed().as_secs_f64();
    if let Some(l) = limit {
        if secs >= l {
            out.passed = false;
            out.detail.push_str(&format!("; runtime {secs:.2} s exceeds {l} s"));
        }
    }
    (out, secs)
}

fn main() {
    let mut results: Vec<(&str, &str, Outcome, f64)> = Vec::new();
    let (o, t) = timed(Some(5.0), a1);
    results.push(("A1", "unitarity", o, t));
    let start = Instant::now();
    let (o2, o3) = a2_a3();
    let t = start.elapsed().as_secs_f64();
    let o2 = if t < 2.0 { o2 } else { Outcome { passed: false, detail: format!("{}; runtime {t:.2} s exceeds 2 s", o2.detail) } };
    results.push(("A2", "stationary bright soliton", o2, t));
    results.push(("A3", "phase-sum drift", o3, t));
    let (o, t) = timed(Some(3.0), a4);
    results.push(("A4", "moving solitons", o, t));
    let (o, t) = timed(Some(3.0), a5);
    results.push(("A5", "collision fidelity", o, t));
    let (o, t) = timed(Some(5.0), a6);
    results.push(("A6", "stability regimes", o, t));
    let (o, t) = timed(Some(2.0), a7);
    results.push(("A7", "dark soliton", o, t));
    let (o, t) = timed(Some(1.0), a8);
    results.push(("A8", "stability map", o, t));
    let (o, t) = timed(None, a9);
    results.push(("A9", "matrix-polynomial cross-check", o, t));
    let (o, t) = timed(None, a10);
    results.push(("A10", "continuum consistency", o, t));
    let (o, t) = timed(Some(10.0), a11);
    results.push(("A11", "electric field", o, t));
    let (o, t) = timed(Some(60.0), a12);
    results.push(("A12", "2D dispersion", o, t));

    let mut failed = 0;
    for (id, name, o, secs) in &results {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{id} {status} {name}: {} [{secs:.2} s]", o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
