//! Running a resolved configuration: evolution, diagnostics, checks and output files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nlqw_core::continuum::{lattice_profile, ContinuumParams};
use nlqw_core::dynamics::{prepare_lattice, Walker};
use nlqw_core::dynamics2d::{loglog_slope, prepare_lattice2d, DispersionRecord, Walker2D};
use nlqw_core::initial::{self, BlockScale, GridSpec};
use nlqw_core::io;
use nlqw_core::lattice::{angular_distance, ObservableRecord, DEFAULT_MASK_TOL};
use nlqw_core::stability::{linspace, minus_branch_unstable, stability_map, PolyBranch, StabilityMap};
use nlqw_core::{Spinor, SpinorField1D, SpinorField2D, WalkParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, InitialSpec};
use crate::metrics;
use crate::presets::GOLDEN;

/// A named pass/fail test on one scalar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable condition, e.g. `< 0.1`.
    pub criterion: String,
}

impl Check {
    fn new(name: &str, value: f64, criterion: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            passed: passed && !value.is_nan(),
            value,
            criterion: criterion.to_string(),
        }
    }

    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, &format!("< {}", fmt_limit(limit)), value < limit)
    }

    fn above(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, &format!("> {}", fmt_limit(limit)), value > limit)
    }
}

fn fmt_limit(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub steps: usize,
    pub final_norm: f64,
    pub max_norm_drift: f64,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub passed: bool,
    pub runs: Vec<RunSummary>,
    /// Checks that compare several runs.
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn all_checks(&self) -> impl Iterator<Item = &Check> {
        self.runs.iter().flat_map(|r| r.checks.iter()).chain(&self.checks)
    }

    pub fn run(&self, label: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.all_checks().find(|c| c.name == name)
    }
}

/// Collects output files under one directory; a sink without a directory discards.
struct Sink {
    dir: Option<PathBuf>,
    prefix: String,
    files: Vec<String>,
}

impl Sink {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> nlqw_core::Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let rel = format!("{}{}", self.prefix, name);
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.files.push(rel);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn config_error(field: &str, e: nlqw_core::Error) -> ConfigError {
    ConfigError::new(field, e.to_string())
}

pub fn walk_params(cfg: &ExperimentConfig) -> WalkParams {
    WalkParams::new(cfg.theta0, cfg.alpha)
        .with_electric(cfg.phi, cfg.electric_start)
        .with_boundary(cfg.boundary)
}

pub fn continuum_params(cfg: &ExperimentConfig) -> Option<ContinuumParams> {
    cfg.continuum.map(|c| ContinuumParams {
        theta0_t: c.theta0_t,
        alpha_t: c.alpha_t,
        epsilon: cfg.epsilon,
    })
}

/// Multiplies each occupied site by `1 + noise (a + ib)`, `a, b` uniform in `[-1, 1]`,
/// then restores the total norm.
fn perturb(sites: &mut [Spinor], noise: f64, seed: u64) {
    if noise == 0.0 {
        return;
    }
    let before: f64 = sites.iter().map(Spinor::norm_sqr).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in sites.iter_mut().filter(|s| !s.is_zero()) {
        let mut kick = || C64::new(1.0 + noise * rng.gen_range(-1.0..=1.0), noise * rng.gen_range(-1.0..=1.0));
        s.u *= kick();
        s.d *= kick();
    }
    let after: f64 = sites.iter().map(Spinor::norm_sqr).sum();
    if after > 0.0 {
        let f = (before / after).sqrt();
        for s in sites.iter_mut() {
            s.u *= f;
            s.d *= f;
        }
    }
}

fn spinor(u: [f64; 2], d: [f64; 2]) -> Spinor {
    Spinor::new(C64::new(u[0], u[1]), C64::new(d[0], d[1]))
}

/// Initial 1D field on `[-half_width, half_width]`, perturbed if `noise > 0`.
pub fn initial_field_1d(cfg: &ExperimentConfig) -> Result<SpinorField1D, ConfigError> {
    let grid = GridSpec::centered(cfg.half_width, cfg.epsilon).map_err(|e| config_error("half_width", e))?;
    let field = match &cfg.initial {
        InitialSpec::BrightSoliton { beta, center } => initial::bright_soliton(*beta, *center, &grid),
        InitialSpec::MovingSoliton { beta, nu, center } => initial::moving_soliton(*beta, *nu, *center, &grid),
        InitialSpec::SolitonTrain { beta, solitons } => solitons
            .iter()
            .map(|s| initial::moving_soliton(*beta, s.nu, s.center, &grid))
            .collect::<nlqw_core::Result<Vec<_>>>()
            .and_then(|parts| SpinorField1D::superpose(&parts))
            .and_then(|f| f.normalized()),
        InitialSpec::DarkSoliton { beta, intensity, center } => {
            initial::dark_soliton(intensity.unwrap_or(*beta), *beta, *center, &grid)
        }
        InitialSpec::UniformBlock { j_lo, j_hi, delta, invert, intensity } => {
            let scale = intensity.map_or(BlockScale::UnitNorm, BlockScale::Intensity);
            initial::uniform_block(*j_lo, *j_hi, initial::coin_with_phase(*delta), &grid, *invert, scale)
        }
        InitialSpec::Site { j, u, d } => SpinorField1D::zeros(grid.j_min, grid.j_max, grid.epsilon).map(|mut f| {
            let k = (j - grid.j_min) as usize;
            f.sites_mut()[k] = spinor(*u, *d);
            f
        }),
        InitialSpec::ProductSoliton2d { .. } => {
            return Err(ConfigError::new("initial.kind", "product_soliton2d is a 2D initial state"))
        }
    };
    let mut field = field.map_err(|e| config_error("initial", e))?;
    if field.total_norm() == 0.0 {
        return Err(ConfigError::new("initial", "initial state is identically zero"));
    }
    perturb(field.sites_mut(), cfg.noise, cfg.seed);
    Ok(field)
}

/// Initial 2D field; a `site` state is placed at `(j, 0)`.
pub fn initial_field_2d(cfg: &ExperimentConfig) -> Result<SpinorField2D, ConfigError> {
    let field = match &cfg.initial {
        InitialSpec::ProductSoliton2d { beta, half } => initial::product_soliton_2d(*beta, *half, cfg.epsilon),
        InitialSpec::Site { j, u, d } => {
            let h = cfg.half_width;
            SpinorField2D::zeros(-h, h, -h, h, cfg.epsilon).and_then(|mut f| {
                f.set(*j, 0, spinor(*u, *d))?;
                Ok(f)
            })
        }
        other => {
            return Err(ConfigError::new(
                "initial.kind",
                format!("{} is not a 2D initial state", other.kind()),
            ))
        }
    };
    let mut field = field.map_err(|e| config_error("initial", e))?;
    if field.total_norm() == 0.0 {
        return Err(ConfigError::new("initial", "initial state is identically zero"));
    }
    perturb(field.sites_mut(), cfg.noise, cfg.seed);
    Ok(field)
}

/// Per-step observables of a 1D run.
#[derive(Clone, Debug)]
pub struct StepStats {
    pub record: ObservableRecord,
    pub max_p: f64,
}

/// Everything a 1D run keeps for analysis.
#[derive(Clone, Debug)]
pub struct Trace1D {
    pub j_min: i64,
    pub epsilon: f64,
    pub stats: Vec<StepStats>,
    /// `(t, P)` rows; every step when requested, otherwise on the recording grid.
    pub rows: Vec<(usize, Vec<f64>)>,
    /// Fields at the last five steps.
    pub tail: Vec<(usize, SpinorField1D)>,
    pub initial: SpinorField1D,
    pub field: SpinorField1D,
}

impl Trace1D {
    pub fn x(&self) -> Vec<f64> {
        self.field.indices().map(|j| self.field.x(j)).collect()
    }

    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.rows.iter().find(|r| r.0 == t).map(|r| r.1.as_slice())
    }
}

fn sigma_site(initial: &InitialSpec) -> Option<i64> {
    match initial {
        InitialSpec::BrightSoliton { center, .. } | InitialSpec::MovingSoliton { center, .. } => Some(*center),
        _ => None,
    }
}

/// Evolves `field` for `cfg.steps` steps on a lattice prepared for the boundary policy.
pub fn trace_1d(cfg: &ExperimentConfig, field: &SpinorField1D, every_row: bool) -> Result<Trace1D> {
    let p = walk_params(cfg);
    let start = prepare_lattice(field, p.boundary, cfg.steps)?;
    let mut walker = Walker::new(start.clone(), p)?;
    let sigma_at = sigma_site(&cfg.initial);
    let mut stats = Vec::with_capacity(cfg.steps + 1);
    let mut rows = Vec::new();
    let mut tail = Vec::new();
    loop {
        let t = walker.time();
        let f = walker.field();
        let profile = f.probability_density();
        let record = ObservableRecord::capture(t, f, sigma_at, false, DEFAULT_MASK_TOL)?;
        let max_p = profile.iter().copied().fold(0.0, f64::max);
        stats.push(StepStats { record, max_p });
        if every_row || t % cfg.record_every == 0 || t == cfg.steps {
            rows.push((t, profile));
        }
        if t + 4 >= cfg.steps {
            tail.push((t, f.clone()));
        }
        if t == cfg.steps {
            break;
        }
        walker.advance()?;
    }
    Ok(Trace1D {
        j_min: start.j_min(),
        epsilon: start.epsilon(),
        stats,
        rows,
        tail,
        initial: start,
        field: walker.into_field(),
    })
}

fn max_norm_drift(norms: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut first = None;
    let mut last = 0.0;
    let mut drift = 0.0f64;
    for n in norms {
        let n0 = *first.get_or_insert(n);
        drift = drift.max((n - n0).abs());
        last = n;
    }
    (last, drift)
}

fn write_series(sink: &mut Sink, cfg: &ExperimentConfig, trace: &Trace1D) -> Result<()> {
    let rows: Vec<(usize, &[f64])> = trace
        .rows
        .iter()
        .filter(|r| r.0 % cfg.record_every == 0 || r.0 == cfg.steps)
        .map(|r| (r.0, r.1.as_slice()))
        .collect();
    sink.write("heatmap.csv", |w| io::write_heatmap_rows(w, trace.j_min, &rows))?;
    let j_max = trace.field.j_max();
    sink.write_json(
        "heatmap.json",
        &serde_json::json!({
            "layout": "rows are recorded times t, columns are sites j, values are P",
            "j_min": trace.j_min,
            "j_max": j_max,
            "epsilon": trace.epsilon,
            "x_phys_min": trace.epsilon * trace.j_min as f64,
            "x_phys_max": trace.epsilon * j_max as f64,
            "record_every": cfg.record_every,
            "times": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        }),
    )?;
    sink.write("observables.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "total_norm", "center_of_mass", "width", "ipr", "max_p", "re_phase_sum", "im_phase_sum"])?;
        for s in trace
            .stats
            .iter()
            .filter(|s| s.record.t % cfg.record_every == 0 || s.record.t == cfg.steps)
        {
            let r = &s.record;
            let (re, im) = r
                .phase_sum
                .map_or(("NA".to_string(), "NA".to_string()), |z| (z.re.to_string(), z.im.to_string()));
            out.write_record([
                r.t.to_string(),
                r.total_norm.to_string(),
                r.center_of_mass.to_string(),
                r.width.to_string(),
                r.ipr.to_string(),
                s.max_p.to_string(),
                re,
                im,
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    sink.write("final_profile.csv", |w| io::write_profile(w, &trace.field, DEFAULT_MASK_TOL))
}

struct Analysis {
    metrics: BTreeMap<String, f64>,
    checks: Vec<Check>,
}

impl Analysis {
    fn new() -> Self {
        Self {
            metrics: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Stationary-soliton diagnostics: analytic profile, stationarity, phase-sum drift, fit.
fn analyze_stationary(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis, sink: &mut Sink) -> Result<()> {
    let Some(cp) = continuum_params(cfg) else {
        return Ok(());
    };
    let (t_ref, reference) = trace.tail.first().map(|(t, f)| (*t, f)).context("empty trace")?;
    let p_ref = reference.probability_density();
    let analytic = lattice_profile(&cp, reference.j_min(), reference.j_max())?;
    let x = trace.x();
    sink.write("analytic_profile.csv", |w| io::write_xy(w, ["x_phys", "P"], &x, &analytic))?;
    for (t, f) in &trace.tail {
        sink.write(&format!("profile_t{t}.csv"), |w| io::write_profile(w, f, DEFAULT_MASK_TOL))?;
    }
    out.metric("reference_time", t_ref as f64);
    let linf = metrics::linf_deviation(&p_ref, &analytic, 0.05);
    out.metric("linf_deviation", linf);
    out.checks.push(Check::below("profile_linf", linf, 0.1));

    let change = trace
        .tail
        .iter()
        .skip(1)
        .map(|(_, f)| metrics::relative_change(&p_ref, &f.probability_density()))
        .fold(0.0, f64::max);
    out.metric("stationarity", change);
    out.checks.push(Check::below("profile_stationary", change, 0.02));

    if cfg.steps >= 100 && cfg.phi == 0.0 {
        let samples: Vec<(usize, Option<C64>)> =
            trace.stats.iter().map(|s| (s.record.t, s.record.phase_sum)).collect();
        let err = metrics::sigma_tracking_error(&samples, cfg.theta0, 100, 500.min(t_ref)).unwrap_or(f64::NAN);
        out.metric("sigma_drift_error", err);
        out.checks.push(Check::below("sigma_drift", err, 0.1));
    }

    let expected = cp.soliton_beta()?;
    match nlqw_core::fit_sech2(&x, &p_ref) {
        Ok(fit) => {
            out.metric("beta_fit", fit.beta_fit);
            out.metric("fit_rms_residual", fit.rms_residual);
            let rel = (fit.beta_fit / expected - 1.0).abs();
            out.checks.push(Check::below("fit_beta_relative_error", rel, 0.1));
        }
        Err(_) => out.checks.push(Check::below("fit_beta_relative_error", f64::NAN, 0.1)),
    }
    out.metric("beta_expected", expected);
    Ok(())
}

/// Velocity in sites per step from the centre of mass over `[50, T]`.
fn com_velocity(trace: &Trace1D) -> f64 {
    let (t, x): (Vec<f64>, Vec<f64>) = trace
        .stats
        .iter()
        .filter(|s| s.record.t >= 50)
        .map(|s| (s.record.t as f64, s.record.center_of_mass / trace.epsilon))
        .unzip();
    metrics::linear_slope(&t, &x)
}

fn analyze_moving(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    match &cfg.initial {
        InitialSpec::MovingSoliton { .. } | InitialSpec::BrightSoliton { .. } => {
            let nu = match cfg.initial {
                InitialSpec::MovingSoliton { nu, .. } => nu,
                _ => 0.0,
            };
            let v = com_velocity(trace);
            let first = trace.stats.first().map_or(0.0, |s| s.record.center_of_mass);
            let last = trace.stats.last().map_or(0.0, |s| s.record.center_of_mass);
            let drift = ((last - first) / trace.epsilon).abs();
            out.metric("nu", nu);
            out.metric("velocity", v);
            out.metric("com_drift_sites", drift);
            if nu == 0.0 {
                out.checks.push(Check::below("com_drift_sites", drift, 1.0));
            } else if nu > 0.0 {
                out.checks.push(Check::above("velocity_sign", v, 0.0));
            } else {
                out.checks.push(Check::new("velocity_sign", v, "< 0", v < 0.0));
            }
        }
        InitialSpec::SolitonTrain { solitons, .. } => {
            // follow each peak separately
            for (n, s) in solitons.iter().enumerate() {
                let mut c = s.center;
                let (mut ts, mut xs) = (Vec::new(), Vec::new());
                for (t, p) in &trace.rows {
                    c = metrics::track_peak(p, trace.j_min, c, 4);
                    if *t >= 50 {
                        ts.push(*t as f64);
                        xs.push(c as f64);
                    }
                }
                out.metric(&format!("soliton{n}_nu"), s.nu);
                out.metric(&format!("soliton{n}_velocity"), metrics::linear_slope(&ts, &xs));
            }
        }
        _ => {}
    }
}

/// Half-width of the windows compared before and after a collision.
pub const COLLISION_WINDOW: i64 = 8;

fn analyze_collision(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    let InitialSpec::SolitonTrain { solitons, .. } = &cfg.initial else {
        return;
    };
    if solitons.len() != 2 {
        return;
    }
    let (a, b) = (solitons[0].center.min(solitons[1].center), solitons[0].center.max(solitons[1].center));
    let profiles: Vec<Vec<f64>> = trace.rows.iter().map(|r| r.1.clone()).collect();
    match metrics::collision_fidelity(&profiles, trace.j_min, (a, b), COLLISION_WINDOW) {
        Ok(rep) => {
            out.metric("contact_time", rep.contact as f64);
            out.metric("closest_approach_time", rep.closest_approach as f64);
            out.metric("separation_time", rep.separation as f64);
            out.metric("fidelity_left", rep.fidelity[0]);
            out.metric("fidelity_right", rep.fidelity[1]);
            out.checks.push(Check::new("collision_fidelity_left", rep.fidelity[0], ">= 0.95", rep.fidelity[0] >= 0.95));
            out.checks.push(Check::new("collision_fidelity_right", rep.fidelity[1], ">= 0.95", rep.fidelity[1] >= 0.95));
        }
        Err(_) => {
            out.checks.push(Check::new("collision_fidelity_left", f64::NAN, ">= 0.95", false));
            out.checks.push(Check::new("collision_fidelity_right", f64::NAN, ">= 0.95", false));
        }
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn analyze_dark(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    let InitialSpec::DarkSoliton { center, .. } = cfg.initial else {
        return;
    };
    // flanks: L/4 <= |j - c| <= L/2 on either side
    let l = cfg.half_width;
    let on_flank = |j: i64, side: i64| {
        let r = (j - center) * side;
        4 * r >= l && 2 * r <= l
    };
    let field = &trace.field;
    let p0 = trace.initial.probability_density();
    let p1 = field.probability_density();
    let delta = field.phase_difference(DEFAULT_MASK_TOL);
    let idx = |j: i64| (j - trace.j_min) as usize;
    let mut flank_change = 0.0f64;
    let mut delta_dev = 0.0f64;
    let mut flank_final = Vec::new();
    for side in [-1, 1] {
        let sites: Vec<i64> = field.indices().filter(|&j| on_flank(j, side)).collect();
        let before = mean(sites.iter().map(|&j| p0[idx(j)]));
        let after = mean(sites.iter().map(|&j| p1[idx(j)]));
        flank_change = flank_change.max((after / before - 1.0).abs());
        flank_final.push(after);
        for &j in &sites {
            let dev = delta[idx(j)].map_or(f64::NAN, |d| {
                angular_distance(C64::from_polar(1.0, d), C64::from_polar(1.0, PI / 2.0))
            });
            delta_dev = if dev.is_nan() { f64::NAN } else { delta_dev.max(dev) };
        }
    }
    let flank = mean(flank_final.iter().copied());
    let center_ratio = field.get(center).map_or(f64::NAN, |s| s.norm_sqr()) / flank;
    out.metric("flank_intensity", flank);
    out.metric("center_over_flank", center_ratio);
    out.metric("flank_relative_change", flank_change);
    out.metric("flank_delta_deviation", delta_dev);
    out.checks.push(Check::below("dark_center_depth", center_ratio, 0.05));
    out.checks.push(Check::below("dark_flank_intensity", flank_change, 0.1));
    out.checks.push(Check::below("dark_flank_delta", delta_dev, 0.2));
}

fn analyze_dark_formation(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    let InitialSpec::UniformBlock { j_lo, j_hi, .. } = cfg.initial else {
        return;
    };
    let level = trace.stats.first().map_or(f64::NAN, |s| s.max_p);
    let p = trace.field.probability_density();
    let mid = (j_lo + j_hi) / 2;
    let core = mean((mid - 5..=mid + 5).filter_map(|j| trace.field.get(j)).map(Spinor::norm_sqr));
    out.metric("background_level", level);
    out.metric("final_max_over_background", p.iter().copied().fold(0.0, f64::max) / level);
    out.metric("final_core_over_background", core / level);
}

/// Start of the window in which a stable block must stay quasi-uniform.
pub const TRANSIENT_STEPS: usize = 100;

fn analyze_block(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    let InitialSpec::UniformBlock { delta, invert: false, .. } = cfg.initial else {
        return;
    };
    let level = trace.stats.first().map_or(f64::NAN, |s| s.max_p);
    let ratio_final = trace.stats.last().map_or(f64::NAN, |s| s.max_p) / level;
    let ratio_late = trace
        .stats
        .iter()
        .filter(|s| s.record.t >= TRANSIENT_STEPS)
        .map(|s| s.max_p)
        .fold(0.0, f64::max)
        / level;
    // P = 2 I per occupied site
    let regime = cfg.alpha * (level / 2.0) / cfg.theta0;
    out.metric("initial_level", level);
    out.metric("alpha_i_over_theta0", regime);
    out.metric("final_max_over_initial", ratio_final);
    out.metric("late_max_over_initial", ratio_late);
    let fit = metrics::fit_tallest_peak(&trace.x(), &trace.field.probability_density(), 10);
    out.metric("fit_ok", if fit.is_ok() { 1.0 } else { 0.0 });
    if let Ok(f) = &fit {
        out.metric("beta_fit", f.beta_fit);
    }
    if close(delta, -PI / 2.0) && regime < 1.0 {
        out.checks.push(Check::above("localized_peak_ratio", ratio_final, 3.0));
        out.checks.push(Check::new("localized_sech2_fit", out.metrics["fit_ok"], "== 1", fit.is_ok()));
    } else if close(delta, PI / 2.0) {
        out.checks.push(Check::below("quasi_uniform_ratio", ratio_late, 2.0));
    }
}

fn analyze_electric(cfg: &ExperimentConfig, trace: &Trace1D, out: &mut Analysis) {
    let widths: Vec<(usize, f64)> = trace.stats.iter().map(|s| (s.record.t, s.record.width)).collect();
    let Some(&(_, w0)) = widths.first() else {
        return;
    };
    let max_ratio = widths.iter().filter(|w| w.0 <= 1000).map(|w| w.1).fold(0.0, f64::max) / w0;
    let final_ratio = widths.last().map_or(f64::NAN, |w| w.1) / w0;
    let oscillates = metrics::width_oscillates(&widths, 500, 0.1);
    out.metric("initial_width", w0);
    out.metric("max_width_over_initial", max_ratio);
    out.metric("final_width_over_initial", final_ratio);
    out.metric("width_oscillates", if oscillates { 1.0 } else { 0.0 });
    let turns = cfg.phi / (2.0 * PI);
    if close(turns, 1.0 / GOLDEN) {
        out.checks.push(Check::below("golden_localized", max_ratio, 5.0));
    } else if close(turns, 0.2) {
        out.checks.push(Check::above("ballistic_escape", max_ratio, 20.0));
    } else if close(turns, 51.0 / 256.0) {
        out.checks.push(Check::new("width_oscillation", out.metrics["width_oscillates"], "== 1", oscillates));
    }
}

fn run_1d(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(Analysis, f64, f64)> {
    let field = initial_field_1d(cfg)?;
    let every_row = cfg.experiment == ExperimentKind::Fig4Collision;
    let trace = trace_1d(cfg, &field, every_row)?;
    write_series(sink, cfg, &trace)?;
    let (final_norm, drift) = max_norm_drift(trace.stats.iter().map(|s| s.record.total_norm));
    let mut a = Analysis::new();
    if let Some(last) = trace.stats.last() {
        a.metric("final_center_of_mass", last.record.center_of_mass);
        a.metric("final_width", last.record.width);
        a.metric("final_ipr", last.record.ipr);
    }
    match cfg.experiment {
        ExperimentKind::Fig1StabilityPanels => analyze_block(cfg, &trace, &mut a),
        ExperimentKind::Fig2StationarySoliton => analyze_stationary(cfg, &trace, &mut a, sink)?,
        ExperimentKind::Fig3MovingSolitons => analyze_moving(cfg, &trace, &mut a),
        ExperimentKind::Fig4Collision => analyze_collision(cfg, &trace, &mut a),
        ExperimentKind::Fig5DarkSoliton => analyze_dark(cfg, &trace, &mut a),
        ExperimentKind::Fig6DarkFormation => analyze_dark_formation(cfg, &trace, &mut a),
        ExperimentKind::Fig7Electric => analyze_electric(cfg, &trace, &mut a),
        _ => {}
    }
    Ok((a, final_norm, drift))
}

fn run_2d(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(Analysis, f64, f64)> {
    let field = initial_field_2d(cfg)?;
    let p = walk_params(cfg);
    let mut walker = Walker2D::new(prepare_lattice2d(&field, p.boundary, cfg.steps)?, p)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    loop {
        let t = walker.time();
        if t % cfg.record_every == 0 || t == cfg.steps {
            records.push(DispersionRecord::capture(t, walker.field())?);
        }
        if cfg.snapshot_every.is_some_and(|k| t % k == 0) || t == cfg.steps {
            let name = format!("snapshot_t{t}.csv");
            sink.write(&name, |w| io::write_snapshot2d(w, walker.field()))?;
            snapshots.push(serde_json::json!({"t": t, "file": format!("{}{name}", sink.prefix)}));
        }
        if t == cfg.steps {
            break;
        }
        walker.advance()?;
    }
    let f = walker.field();
    sink.write_json(
        "snapshots.json",
        &serde_json::json!({
            "layout": "rows are jy, columns are jx, values are P",
            "x_range": f.x_range(),
            "y_range": f.y_range(),
            "epsilon": f.epsilon(),
            "snapshots": snapshots,
        }),
    )?;
    sink.write("dispersion.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "norm", "variance", "max_probability"])?;
        for r in &records {
            out.write_record([r.t.to_string(), r.norm.to_string(), r.variance.to_string(), r.max_probability.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let (final_norm, drift) = max_norm_drift(records.iter().map(|r| r.norm));
    let mut a = Analysis::new();
    let t_lo = 30.min(cfg.steps);
    let slope = loglog_slope(&records, t_lo, cfg.steps).unwrap_or(f64::NAN);
    let late: Vec<&DispersionRecord> = records.iter().filter(|r| r.t >= t_lo).collect();
    let monotone = late.windows(2).all(|w| w[1].max_probability <= w[0].max_probability);
    a.metric("variance_loglog_slope", slope);
    a.metric("max_probability_monotone", if monotone { 1.0 } else { 0.0 });
    if let Some(r) = records.last() {
        a.metric("final_variance", r.variance);
        a.metric("final_max_probability", r.max_probability);
    }
    if cfg.experiment == ExperimentKind::Dim2Dispersion && cfg.steps >= 2 * t_lo.max(1) {
        a.checks.push(Check::new("ballistic_slope", slope, "in [1.7, 2.3]", (1.7..=2.3).contains(&slope)));
        a.checks.push(Check::new("peak_decay_monotone", a.metrics["max_probability_monotone"], "== 1", monotone));
    }
    Ok((a, final_norm, drift))
}

/// Dimensionless maps for both branches and their comparison with the instability regions.
fn run_stability(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<(Analysis, [StabilityMap; 2])> {
    let cp = continuum_params(cfg).context("continuum parameters are required")?;
    let grid = cfg.stability_grid.context("stability_grid is required")?;
    let a_axis = linspace(0.0, grid.intensity_ratio_max, grid.points);
    let q_axis = linspace(0.0, grid.k2_ratio_max, grid.points);
    let minus = stability_map(&cp, PolyBranch::Minus, &a_axis, &q_axis)?;
    let plus = stability_map(&cp, PolyBranch::Plus, &a_axis, &q_axis)?;
    sink.write("stability_map_minus.csv", |w| io::write_stability_map(w, &minus))?;
    sink.write("stability_map_plus.csv", |w| io::write_stability_map(w, &plus))?;

    let mut out = Analysis::new();
    let growth = |v: f64| v / cp.theta0_t;
    let plus_max = plus.values.iter().flatten().map(|&v| growth(v)).fold(f64::MIN, f64::max);
    let (mut rect_miss, mut exact_miss) = (0usize, 0usize);
    for (a, row) in minus.intensity_ratio.iter().zip(&minus.values) {
        for (q, &v) in minus.k2_ratio.iter().zip(row) {
            let g = growth(v);
            let classify = |unstable: bool| if unstable { g > 1e-6 } else { g < 1e-10 };
            let rect = (*a < 1.0 && *q < 1.0) || (*a > 1.0 && *q > 0.0);
            rect_miss += usize::from(!classify(rect));
            exact_miss += usize::from(!classify(minus_branch_unstable(*a, *q)));
        }
    }
    let residual = minus.max_residual.max(plus.max_residual);
    out.metric("plus_max_growth", plus_max);
    out.metric("minus_max_growth", minus.values.iter().flatten().map(|&v| growth(v)).fold(f64::MIN, f64::max));
    out.metric("minus_rectangle_mismatches", rect_miss as f64);
    out.metric("minus_exact_region_mismatches", exact_miss as f64);
    out.metric("max_root_residual", residual);
    out.checks.push(Check::below("plus_branch_stable", plus_max, 1e-10));
    out.checks.push(Check::new("minus_branch_region", rect_miss as f64, "== 0", rect_miss == 0));
    out.checks.push(Check::below("root_residual", residual, 1e-10));
    Ok((out, [minus, plus]))
}

fn run_one(label: &str, cfg: &ExperimentConfig, dir: Option<&Path>, prefix: String) -> Result<RunSummary> {
    let mut sink = Sink {
        dir: dir.map(Path::to_path_buf),
        prefix,
        files: Vec::new(),
    };
    let (analysis, final_norm, drift) = match cfg.experiment {
        ExperimentKind::Fig8StabilityMap => {
            let (a, _) = run_stability(cfg, &mut sink)?;
            (a, f64::NAN, f64::NAN)
        }
        ExperimentKind::Dim2Dispersion => run_2d(cfg, &mut sink)?,
        _ => run_1d(cfg, &mut sink)?,
    };
    Ok(RunSummary {
        label: label.to_string(),
        steps: cfg.steps,
        final_norm,
        max_norm_drift: drift,
        metrics: analysis.metrics,
        checks: analysis.checks,
        files: sink.files,
    })
}

/// Equal-magnitude velocity check for runs with opposite `nu`.
fn cross_checks(runs: &[(String, ExperimentConfig)], summaries: &[RunSummary]) -> Vec<Check> {
    let mut checks = Vec::new();
    let velocity = |nu_sign: f64| {
        runs.iter().zip(summaries).find_map(|((_, c), s)| match c.initial {
            InitialSpec::MovingSoliton { nu, .. } if nu * nu_sign > 0.0 => Some((nu, s.metrics.get("velocity").copied()?)),
            _ => None,
        })
    };
    if let (Some((nu_p, vp)), Some((nu_m, vm))) = (velocity(1.0), velocity(-1.0)) {
        if close(nu_p, -nu_m) {
            let mismatch = (vm.abs() - vp.abs()).abs() / vp.abs();
            checks.push(Check::below("velocity_magnitude_symmetry", mismatch, 0.1));
        }
    }
    checks
}

/// Runs every variant of `cfg`, writing outputs under `out_dir` when given.
///
/// With variants each run writes into `<out_dir>/<label>/`. The summary is also written
/// to `<out_dir>/summary.json` next to the resolved `config.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<Summary> {
    cfg.validate()?;
    let runs = cfg.variant_configs()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let nested = !cfg.variants.is_empty();
    let mut summaries = Vec::with_capacity(runs.len());
    for (label, run_cfg) in &runs {
        let prefix = if nested { format!("{label}/") } else { String::new() };
        let s = run_one(label, run_cfg, out_dir, prefix).with_context(|| format!("run `{label}`"))?;
        summaries.push(s);
    }
    let checks = if cfg.experiment == ExperimentKind::Fig3MovingSolitons {
        cross_checks(&runs, &summaries)
    } else {
        Vec::new()
    };
    let mut summary = Summary {
        experiment: cfg.experiment,
        passed: true,
        runs: summaries,
        checks,
    };
    let passed = summary.all_checks().all(|c| c.passed);
    summary.passed = passed;
    if let Some(dir) = out_dir {
        let mut sink = Sink {
            dir: Some(dir.to_path_buf()),
            prefix: String::new(),
            files: Vec::new(),
        };
        sink.write_json("config.json", cfg)?;
        sink.write_json("summary.json", &summary)?;
    }
    Ok(summary)
}

/// Stand-alone stability map for the `stability-map` subcommand.
pub fn stability_map_files(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    if cfg.continuum.is_none() || cfg.stability_grid.is_none() {
        bail!("stability map needs `continuum` and `stability_grid`");
    }
    let mut fixed = cfg.clone();
    fixed.experiment = ExperimentKind::Fig8StabilityMap;
    fixed.variants.clear();
    run_experiment(&fixed, Some(out_dir))
}
