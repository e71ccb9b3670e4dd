//! Default configurations for each named experiment.

use std::f64::consts::PI;

use nlqw_core::dynamics::Boundary;
use serde_json::{json, Map, Value};

use crate::config::{
    ContinuumSpec, ExperimentConfig, ExperimentKind, InitialSpec, SolitonSlot, StabilityGrid, Variant,
};

/// Golden ratio; the quasi-periodic electric field uses `phi = 2 pi / GOLDEN`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

fn variant(label: &str, set: Value) -> Variant {
    let set = match set {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    Variant {
        label: label.to_string(),
        set,
    }
}

fn base(kind: ExperimentKind, epsilon: f64, theta0: f64, alpha: f64, initial: InitialSpec) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        steps: 500,
        record_every: 2,
        output_dir: None,
        seed: 0,
        noise: 0.0,
        epsilon,
        theta0,
        alpha,
        phi: 0.0,
        electric_start: 0,
        boundary: Boundary::OpenAutoPad,
        continuum: None,
        half_width: 100,
        initial,
        variants: Vec::new(),
        stability_grid: None,
        snapshot_every: None,
    }
}

/// Soliton of the stationary-profile figure: `epsilon = 0.5`, `alpha_t = 1`,
/// `theta0_t = pi/3`, `beta = alpha_t theta0_t / 2`.
fn continuum_soliton(kind: ExperimentKind) -> ExperimentConfig {
    let (theta0_t, alpha_t, epsilon) = (PI / 3.0, 1.0, 0.5);
    let mut c = base(
        kind,
        epsilon,
        epsilon * theta0_t,
        epsilon * alpha_t,
        InitialSpec::BrightSoliton {
            beta: alpha_t * theta0_t / 2.0,
            center: 0,
        },
    );
    c.continuum = Some(ContinuumSpec { theta0_t, alpha_t });
    c.half_width = 150;
    c
}

pub fn defaults(kind: ExperimentKind) -> ExperimentConfig {
    match kind {
        ExperimentKind::Fig1StabilityPanels => {
            let mut c = base(
                kind,
                1.0,
                PI / 3.0,
                2.0 * PI,
                InitialSpec::UniformBlock {
                    j_lo: -50,
                    j_hi: 50,
                    delta: -PI / 2.0,
                    invert: false,
                    intensity: None,
                },
            );
            c.half_width = 50;
            // The panel intensities are not recoverable; the third panel uses a block
            // intensity with alpha I / theta0 = 1.5, past the threshold at 1.
            c.variants = vec![
                variant("delta_plus", json!({"initial.delta": PI / 2.0})),
                variant("delta_minus", json!({})),
                variant("delta_minus_strong", json!({"initial.intensity": 0.25})),
            ];
            c
        }
        ExperimentKind::Fig2StationarySoliton => {
            // 500 steps plus the 4 subsequent steps shown alongside
            let mut c = continuum_soliton(kind);
            c.steps = 504;
            c.record_every = 1;
            c
        }
        ExperimentKind::Fig3MovingSolitons => {
            let mut c = base(
                kind,
                1.0,
                PI / 4.0,
                PI,
                InitialSpec::SolitonTrain {
                    beta: 0.5,
                    solitons: vec![
                        SolitonSlot { center: 50, nu: 2.0 / 3.0 },
                        SolitonSlot { center: 0, nu: 0.5 },
                        SolitonSlot { center: -50, nu: 0.0 },
                    ],
                },
            );
            c.half_width = 130;
            let single = |nu: f64| json!({"initial": {"kind": "moving_soliton", "beta": 0.5, "nu": nu, "center": 0}, "half_width": 80});
            c.variants = vec![
                variant("three_solitons", json!({})),
                variant("nu_zero", single(0.0)),
                variant("nu_plus", single(2.0 / 3.0)),
                variant("nu_minus", single(-2.0 / 3.0)),
            ];
            c
        }
        ExperimentKind::Fig4Collision => {
            let mut c = base(
                kind,
                1.0,
                PI / 4.0,
                PI,
                InitialSpec::SolitonTrain {
                    beta: 0.5,
                    solitons: vec![
                        SolitonSlot { center: 50, nu: -2.0 / 3.0 },
                        SolitonSlot { center: -50, nu: 2.0 / 3.0 },
                    ],
                },
            );
            c.steps = 1000;
            c.half_width = 130;
            c
        }
        ExperimentKind::Fig5DarkSoliton => {
            let mut c = continuum_soliton(kind);
            let beta = PI / 6.0;
            c.initial = InitialSpec::DarkSoliton {
                beta,
                intensity: Some(beta),
                center: 0,
            };
            // periodic ring, wide enough that the wrap-around seam cannot reach the
            // flanks within the run
            c.boundary = Boundary::Periodic;
            c.half_width = 1200;
            c.record_every = 5;
            c
        }
        ExperimentKind::Fig6DarkFormation => {
            let mut c = base(
                kind,
                1.0,
                PI / 3.0,
                2.0 * PI,
                InitialSpec::UniformBlock {
                    j_lo: -50,
                    j_hi: 50,
                    delta: PI / 2.0,
                    invert: true,
                    intensity: None,
                },
            );
            c.boundary = Boundary::Periodic;
            c.half_width = 400;
            c
        }
        ExperimentKind::Fig7Electric => {
            let mut c = continuum_soliton(kind);
            c.steps = 1000;
            c.record_every = 5;
            c.electric_start = 100;
            c.phi = 2.0 * PI / GOLDEN;
            c.variants = vec![
                variant("phi_golden", json!({})),
                variant("phi_two_fifths", json!({"phi": 2.0 * PI / 5.0})),
                variant("phi_51_256", json!({"phi": 2.0 * PI * 51.0 / 256.0})),
            ];
            c
        }
        ExperimentKind::Fig8StabilityMap => {
            let mut c = continuum_soliton(kind);
            c.steps = 0;
            c.stability_grid = Some(StabilityGrid {
                intensity_ratio_max: 2.5,
                k2_ratio_max: 5.0,
                points: 200,
            });
            c
        }
        ExperimentKind::Dim2Dispersion => {
            let mut c = base(kind, 1.0, PI / 4.0, PI, InitialSpec::ProductSoliton2d { beta: 0.5, half: 20 });
            c.steps = 300;
            c.record_every = 10;
            c.half_width = 20;
            c.snapshot_every = Some(100);
            c
        }
        ExperimentKind::Custom => {
            let mut c = base(kind, 1.0, PI / 4.0, PI, InitialSpec::BrightSoliton { beta: 0.5, center: 0 });
            c.steps = 100;
            c.half_width = 80;
            c
        }
    }
}

/// One-line description for `list-presets`.
pub fn describe(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Fig1StabilityPanels => "uniform coin block on [-50,50] with delta = +pi/2 and -pi/2, theta0 = pi/3, alpha = 2 pi",
        ExperimentKind::Fig2StationarySoliton => "stationary bright soliton, eps = 0.5, alpha_t = 1, theta0_t = pi/3, against the analytic profile",
        ExperimentKind::Fig3MovingSolitons => "moving solitons with beta = 1/2, theta0 = pi/4, alpha = pi and nu in {0, 1/2, +-2/3}",
        ExperimentKind::Fig4Collision => "two solitons from x = +-50 with nu = -+2/3 colliding head on",
        ExperimentKind::Fig5DarkSoliton => "dark soliton sqrt(I) tanh(beta x) (1,-i) with I = beta",
        ExperimentKind::Fig6DarkFormation => "uniform background with an empty hole on [-50,50], delta = pi/2 (needs initial.intensity)",
        ExperimentKind::Fig7Electric => "stationary soliton under an electric field switched on after t = 100",
        ExperimentKind::Fig8StabilityMap => "max Re(lambda) of both steady-state branches over (alpha I/theta0, k^2/theta0^2)",
        ExperimentKind::Dim2Dispersion => "2D nonlinear walk from a product sech seed: variance scaling and peak decay",
        ExperimentKind::Custom => "free-form run; set the walk and initial state yourself",
    }
}
