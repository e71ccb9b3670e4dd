//! Scalar diagnostics computed from evolved profiles and time series.

use nlqw_core::fit::{fit_sech2, SolitonFit};
use nlqw_core::lattice::angular_distance;
use nlqw_core::{Result, C64};

/// Largest `|P - P_ref| / max(P_ref)` over sites where `P_ref` exceeds `frac` of its peak.
pub fn linf_deviation(p: &[f64], reference: &[f64], frac: f64) -> f64 {
    let peak = reference.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 || p.len() != reference.len() {
        return f64::NAN;
    }
    p.iter()
        .zip(reference)
        .filter(|(_, &r)| r > frac * peak)
        .map(|(a, r)| (a - r).abs() / peak)
        .fold(0.0, f64::max)
}

/// `max_j |a_j - b_j| / max_j a_j`.
pub fn relative_change(a: &[f64], b: &[f64]) -> f64 {
    let peak = a.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 || a.len() != b.len() {
        return f64::NAN;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak
}

/// Largest angle between the sampled `e^{i sigma(t)}` and `e^{i(sigma0 - 2 theta0 t)}`
/// for `t` in `[t_lo, t_hi]`. `None` if no sample falls in the window or any is undefined.
pub fn sigma_tracking_error(
    samples: &[(usize, Option<C64>)],
    theta0: f64,
    t_lo: usize,
    t_hi: usize,
) -> Option<f64> {
    let sigma0 = samples.iter().find(|s| s.0 == 0)?.1?.arg();
    let mut worst: Option<f64> = None;
    for &(t, z) in samples.iter().filter(|s| s.0 >= t_lo && s.0 <= t_hi) {
        let want = nlqw_core::continuum::sigma_drift(sigma0, theta0, t);
        let err = angular_distance(z?, want);
        worst = Some(worst.map_or(err, |w| w.max(err)));
    }
    worst
}

/// Least-squares slope of `y` against `t`.
pub fn linear_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let mt = t[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = (0..n).map(|k| (t[k] - mt) * (y[k] - my)).sum();
    let sxx: f64 = (0..n).map(|k| (t[k] - mt).powi(2)).sum();
    sxy / sxx
}

/// Cosine similarity of two non-negative profiles, maximized over cyclic shifts of `b`
/// by up to `max_shift` sites.
pub fn normalized_cross_correlation(a: &[f64], b: &[f64], max_shift: usize) -> f64 {
    let n = a.len();
    if n == 0 || b.len() != n {
        return f64::NAN;
    }
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let s = max_shift.min(n - 1) as i64;
    (-s..=s)
        .map(|shift| {
            let dot: f64 = (0..n as i64)
                .map(|k| a[k as usize] * b[(k - shift).rem_euclid(n as i64) as usize])
                .sum();
            dot / (na * nb)
        })
        .fold(f64::MIN, f64::max)
}

/// Site of the largest `P` within `radius` of `guess`.
pub fn track_peak(p: &[f64], j_min: i64, guess: i64, radius: i64) -> i64 {
    let lo = (guess - radius - j_min).max(0) as usize;
    let hi = ((guess + radius - j_min) as usize).min(p.len() - 1);
    let mut best = lo;
    for k in lo..=hi {
        if p[k] > p[best] {
            best = k;
        }
    }
    j_min + best as i64
}

/// `P` on `[c - half, c + half]`, zero outside the lattice.
pub fn window(p: &[f64], j_min: i64, c: i64, half: i64) -> Vec<f64> {
    (c - half..=c + half)
        .map(|j| usize::try_from(j - j_min).ok().and_then(|k| p.get(k)).copied().unwrap_or(0.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CollisionReport {
    pub contact: usize,
    pub closest_approach: usize,
    pub separation: usize,
    /// One value per soliton, under the pairing of pre- and post-collision peaks that
    /// maximizes the smaller fidelity.
    pub fidelity: [f64; 2],
}

/// Shape fidelity of two colliding solitons.
///
/// The peaks are followed step by step from `starts` by a local search of `±4` sites.
/// Contact is the first time their distance drops to `2 half`, separation the first
/// time after closest approach that it exceeds `2 half`. Each soliton's `P` on
/// `±half` sites around its peak 50 steps before contact is compared with the one
/// 50 steps after separation.
pub fn collision_fidelity(
    profiles: &[Vec<f64>],
    j_min: i64,
    starts: (i64, i64),
    half: i64,
) -> std::result::Result<CollisionReport, String> {
    const LEAD: usize = 50;
    if profiles.is_empty() {
        return Err("no profiles".into());
    }
    let (mut a, mut b) = starts;
    let pos: Vec<(i64, i64)> = profiles
        .iter()
        .map(|p| {
            a = track_peak(p, j_min, a, 4);
            b = track_peak(p, j_min, b, 4);
            (a, b)
        })
        .collect();
    let dist = |t: usize| (pos[t].1 - pos[t].0).abs();
    let contact = (0..pos.len())
        .find(|&t| dist(t) <= 2 * half)
        .ok_or("solitons never came into contact")?;
    let closest = (contact..pos.len()).min_by_key(|&t| (dist(t), t)).unwrap();
    let separation = (closest + 1..pos.len())
        .find(|&t| dist(t) > 2 * half)
        .ok_or("solitons did not separate")?;
    if contact < LEAD || separation + LEAD >= profiles.len() {
        return Err(format!(
            "collision at t = {contact}..{separation} leaves no {LEAD}-step margin in {} records",
            profiles.len()
        ));
    }
    let (t0, t1) = (contact - LEAD, separation + LEAD);
    let pre = [pos[t0].0, pos[t0].1].map(|c| window(&profiles[t0], j_min, c, half));
    let post = [pos[t1].0, pos[t1].1].map(|c| window(&profiles[t1], j_min, c, half));
    let f = |x: usize, y: usize| normalized_cross_correlation(&pre[x], &post[y], 3);
    let same = [f(0, 0), f(1, 1)];
    let crossed = [f(0, 1), f(1, 0)];
    let fidelity = if same[0].min(same[1]) >= crossed[0].min(crossed[1]) { same } else { crossed };
    Ok(CollisionReport {
        contact,
        closest_approach: closest,
        separation,
        fidelity,
    })
}

/// True if the width rises above its initial value and later falls at least
/// `drop` (relative) below its running maximum, all before `t_max`.
pub fn width_oscillates(widths: &[(usize, f64)], t_max: usize, drop: f64) -> bool {
    let Some(&(_, w0)) = widths.first() else {
        return false;
    };
    let mut run_max = w0;
    for &(_, w) in widths.iter().filter(|r| r.0 < t_max) {
        if run_max > w0 && w <= (1.0 - drop) * run_max {
            return true;
        }
        run_max = run_max.max(w);
    }
    false
}

/// Fits a `sech^2` to `P` on `±half` sites around the tallest site.
pub fn fit_tallest_peak(x: &[f64], p: &[f64], half: usize) -> Result<SolitonFit> {
    let imax = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(k, _)| k);
    let lo = imax.saturating_sub(half);
    let hi = (imax + half).min(p.len().saturating_sub(1));
    fit_sech2(&x[lo..=hi], &p[lo..=hi])
}
