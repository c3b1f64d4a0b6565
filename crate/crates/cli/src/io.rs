//! Trajectory JSONL, diagnostics CSV, and SVG frames.
//!
//! Every float is written with 17 significant digits so that files round-trip bit-exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use contour_core::evolution::DIAG_MODES;
use contour_core::SimState;
use serde::Deserialize;

/// Top-level keys of one trajectory line, in output order.
pub const JSONL_KEYS: [&str; 6] = ["time", "r", "R", "h", "H", "diagnostics"];

/// Keys of the nested `diagnostics` object, in output order.
pub const DIAGNOSTIC_KEYS: [&str; 11] = [
    "annulus_area",
    "m0",
    "M0",
    "c_star",
    "c",
    "pressure_residual",
    "pressure_iterations",
    "density_residual",
    "density_sweeps",
    "modes_h",
    "modes_H",
];

pub fn csv_header() -> Vec<String> {
    let mut cols: Vec<String> = ["time", "annulus_area", "m0", "M0", "c_star", "c"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=DIAG_MODES).map(|k| format!("h_k{k}")));
    cols.extend((1..=DIAG_MODES).map(|k| format!("H_k{k}")));
    cols
}

pub const DISPERSION_HEADER: [&str; 9] =
    ["k", "re_lambda_1", "im_lambda_1", "re_lambda_2", "im_lambda_2", "inner_decoupled", "outer_decoupled", "max_re", "unstable"];

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn push_array(out: &mut String, xs: &[f64]) {
    out.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*x));
    }
    out.push(']');
}

/// One JSONL line (without trailing newline) for `state`.
pub fn state_line(state: &SimState) -> String {
    let d = &state.diagnostics;
    let mut s = String::new();
    let _ = write!(s, "{{\"time\":{},\"r\":{},\"R\":{},\"h\":", fmt_f64(state.time), fmt_f64(state.pair.r), fmt_f64(state.pair.big_r));
    push_array(&mut s, state.pair.h.samples());
    s.push_str(",\"H\":");
    push_array(&mut s, state.pair.big_h.samples());
    let _ = write!(
        s,
        ",\"diagnostics\":{{\"annulus_area\":{},\"m0\":{},\"M0\":{},\"c_star\":{},\"c\":{},\"pressure_residual\":{},\"pressure_iterations\":{},\"density_residual\":{},\"density_sweeps\":{},\"modes_h\":",
        fmt_f64(d.annulus_area),
        fmt_f64(d.m0),
        fmt_f64(d.big_m0),
        fmt_f64(d.c_star),
        fmt_f64(d.c),
        fmt_f64(d.pressure_residual),
        d.pressure_iterations,
        fmt_f64(d.density_residual),
        d.density_sweeps,
    );
    push_array(&mut s, &d.modes_h);
    s.push_str(",\"modes_H\":");
    push_array(&mut s, &d.modes_big_h);
    s.push_str("}}");
    s
}

pub fn csv_row(state: &SimState) -> Vec<String> {
    let d = &state.diagnostics;
    let mut row: Vec<String> = [state.time, d.annulus_area, d.m0, d.big_m0, d.c_star, d.c].iter().map(|x| fmt_f64(*x)).collect();
    row.extend(d.modes_h.iter().map(|x| fmt_f64(*x)));
    row.extend(d.modes_big_h.iter().map(|x| fmt_f64(*x)));
    row
}

/// Streams states to `trajectory.jsonl` and `diagnostics.csv` in `dir`.
pub struct TrajectoryWriter {
    jsonl: BufWriter<File>,
    csv: csv::Writer<File>,
}

impl TrajectoryWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let jsonl = BufWriter::new(File::create(dir.join("trajectory.jsonl")).context("creating trajectory.jsonl")?);
        let mut csv = csv::Writer::from_path(dir.join("diagnostics.csv")).context("creating diagnostics.csv")?;
        csv.write_record(csv_header())?;
        Ok(Self { jsonl, csv })
    }

    pub fn write(&mut self, state: &SimState) -> Result<()> {
        writeln!(self.jsonl, "{}", state_line(state))?;
        self.csv.write_record(csv_row(state))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.jsonl.flush()?;
        self.csv.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub h: Vec<f64>,
    #[serde(rename = "H")]
    pub big_h: Vec<f64>,
    pub diagnostics: serde_json::Value,
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        anyhow::ensure!(
            !rec.h.is_empty() && rec.h.len() == rec.big_h.len(),
            "{}:{}: h and H must be non-empty and equally sampled",
            path.display(),
            i + 1
        );
        out.push(rec);
    }
    anyhow::ensure!(!out.is_empty(), "{} holds no states", path.display());
    Ok(out)
}

fn polyline_points(radius: f64, dev: &[f64]) -> String {
    let n = dev.len();
    let mut s = String::new();
    for (j, d) in dev.iter().enumerate() {
        let t = std::f64::consts::TAU * j as f64 / n as f64;
        let rho = radius * (1.0 + d);
        if j > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.6},{:.6}", rho * t.cos(), -rho * t.sin());
    }
    s
}

/// SVG frame of one state: interfaces as closed polylines, reference circles dashed.
pub fn render_svg(rec: &TrajectoryRecord) -> String {
    let extent = 1.15 * rec.big_r * (1.0 + rec.big_h.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let stroke = extent / 300.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        -extent,
        -extent,
        2.0 * extent,
        2.0 * extent
    );
    let _ = writeln!(s, "<title>t = {}</title>", fmt_f64(rec.time));
    let _ = writeln!(s, r#"<rect x="{0:.6}" y="{0:.6}" width="{1:.6}" height="{1:.6}" fill="white"/>"#, -extent, 2.0 * extent);
    for radius in [rec.r, rec.big_r] {
        let _ = writeln!(
            s,
            r#"<circle cx="0" cy="0" r="{radius:.6}" fill="none" stroke="gray" stroke-width="{stroke:.6}" stroke-dasharray="{:.6} {:.6}"/>"#,
            4.0 * stroke,
            3.0 * stroke
        );
    }
    let _ = writeln!(
        s,
        r#"<polygon points="{}" fill="none" stroke="firebrick" stroke-width="{:.6}"/>"#,
        polyline_points(rec.big_r, &rec.big_h),
        2.0 * stroke
    );
    let _ = writeln!(
        s,
        r#"<polygon points="{}" fill="none" stroke="navy" stroke-width="{:.6}"/>"#,
        polyline_points(rec.r, &rec.h),
        2.0 * stroke
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, f64::MIN_POSITIVE] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(f64::NAN), "null");
    }

    #[test]
    fn csv_header_has_all_modes() {
        let h = csv_header();
        assert_eq!(h.len(), 6 + 2 * DIAG_MODES);
        assert_eq!(h[6], "h_k1");
        assert_eq!(h.last().unwrap(), "H_k8");
    }

    #[test]
    fn svg_contains_both_interfaces() {
        let rec =
            TrajectoryRecord { time: 0.0, r: 1.0, big_r: 1.5, h: vec![0.0; 8], big_h: vec![0.01; 8], diagnostics: serde_json::Value::Null };
        let svg = render_svg(&rec);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("1.000000,-0.000000"));
    }
}
