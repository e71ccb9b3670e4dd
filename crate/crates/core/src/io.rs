//! CSV export of profiles, heatmaps, stability maps and 2D snapshots.
//!
//! Floats are written with Rust's shortest round-trip formatting, so identical data gives
//! identical bytes.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field2d::SpinorField2D;
use crate::lattice::{ObservableSeries, SpinorField1D};
use crate::stability::StabilityMap;

pub const PROFILE_HEADER: [&str; 8] = ["j", "x_phys", "P", "delta_or_NA", "re_u", "im_u", "re_d", "im_d"];

/// One row per site; masked phase differences are written as `NA`.
pub fn write_profile<W: Write>(out: W, field: &SpinorField1D, mask_tol: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER)?;
    let delta = field.phase_difference(mask_tol);
    for ((j, s), d) in field.iter().zip(delta) {
        w.write_record([
            j.to_string(),
            field.x(j).to_string(),
            s.norm_sqr().to_string(),
            d.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            s.u.re.to_string(),
            s.u.im.to_string(),
            s.d.re.to_string(),
            s.d.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column profile `x_phys,P`, e.g. an analytic reference curve.
pub fn write_xy<W: Write>(out: W, header: [&str; 2], x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid("columns", "length mismatch"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (a, b) in x.iter().zip(y) {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `(x_phys, P)` from a CSV with those two header names (other columns ignored).
pub fn read_profile<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid("profile", format!("missing column `{name}`")))
    };
    let (ix, ip) = (col("x_phys")?, col("P")?);
    let (mut xs, mut ps) = (Vec::new(), Vec::new());
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::invalid("profile", format!("row {}: bad number in column {}", n + 1, i + 1)))
        };
        xs.push(parse(ix)?);
        ps.push(parse(ip)?);
    }
    Ok((xs, ps))
}

/// Rows are recorded times, columns sites; the header lists the site indices.
pub fn write_heatmap<W: Write>(out: W, series: &ObservableSeries) -> Result<()> {
    write_heatmap_rows(out, series.j_min, &series.heatmap())
}

/// Heatmap from explicit `(t, P)` rows whose first column is site `j_min`.
pub fn write_heatmap_rows<W: Write>(out: W, j_min: i64, rows: &[(usize, &[f64])]) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.1.len());
    if rows.iter().any(|r| r.1.len() != width) {
        return Err(Error::invalid("heatmap", "rows differ in length"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..width as i64).map(|k| (j_min + k).to_string()));
    w.write_record(&header)?;
    for (t, p) in rows {
        let mut rec = vec![t.to_string()];
        rec.extend(p.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are `alpha I / theta0`, columns `k^2 / theta0^2`, values `theta0 max Re(lambda)`.
pub fn write_stability_map<W: Write>(out: W, map: &StabilityMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["alphaI_over_theta0\\k2_over_theta0sq".to_string()];
    header.extend(map.k2_ratio.iter().map(f64::to_string));
    w.write_record(&header)?;
    for (a, row) in map.intensity_ratio.iter().zip(&map.values) {
        let mut rec = vec![a.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `P(x, y)` as a matrix: one row per `jy`, one column per `jx`.
pub fn write_snapshot2d<W: Write>(out: W, field: &SpinorField2D) -> Result<()> {
    let (x0, x1) = field.x_range();
    let (y0, _) = field.y_range();
    let (nx, _) = field.shape();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["jy\\jx".to_string()];
    header.extend((x0..=x1).map(|j| j.to_string()));
    w.write_record(&header)?;
    for (iy, row) in field.probability_density().chunks(nx).enumerate() {
        let mut rec = vec![(y0 + iy as i64).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
