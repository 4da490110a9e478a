//! CSV output for sweeps and beam patterns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nfsec::pattern::BeamPattern;

use crate::config::{parse_mode, parse_scheme, SweepVar};
use crate::sweep::SweepRow;
use crate::CliError;

pub const HEADER: [&str; 11] = [
    "trial",
    "scheme",
    "mode",
    "sweep_var",
    "sweep_value",
    "min_sr_nats",
    "min_sr_bits",
    "epsilon",
    "iterations",
    "converged",
    "wall_ms",
];

fn float(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

/// Writes one line per row. Refuses to write an empty table.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Output("no results to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.scheme.to_string(),
            r.mode.to_string(),
            r.sweep_var.as_str().to_string(),
            float(r.sweep_value),
            float(r.min_sr_nats),
            float(r.min_sr_bits),
            float(r.epsilon),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.wall_ms.map(float).unwrap_or_default(),
        ])?;
    }
    write_file(path, &finish(w)?)
}

fn sweep_var(s: &str) -> Result<SweepVar, CliError> {
    match s {
        "epsilon" => Ok(SweepVar::Epsilon),
        "power_dbm" => Ok(SweepVar::PowerDbm),
        "none" => Ok(SweepVar::None),
        _ => Err(CliError::Output(format!("unknown sweep variable '{s}'"))),
    }
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, CliError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| CliError::Output(format!("column {}: cannot parse '{raw}'", HEADER[i])))
}

/// Reads a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(CliError::Output(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let wall = rec.get(10).unwrap_or("");
        rows.push(SweepRow {
            trial: field(&rec, 0)?,
            scheme: parse_scheme(&rec[1]).map_err(|e| CliError::Output(e.to_string()))?,
            mode: parse_mode(&rec[2]).map_err(|e| CliError::Output(e.to_string()))?,
            sweep_var: sweep_var(&rec[3])?,
            sweep_value: field(&rec, 4)?,
            min_sr_nats: field(&rec, 5)?,
            min_sr_bits: field(&rec, 6)?,
            epsilon: field(&rec, 7)?,
            iterations: field(&rec, 8)?,
            converged: field(&rec, 9)?,
            wall_ms: if wall.is_empty() { None } else { Some(field(&rec, 10)?) },
        });
    }
    Ok(rows)
}

/// Mean over trials of each (scheme, mode, sweep value).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub mode: String,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub trials: usize,
    pub mean_min_sr_nats: f64,
    pub mean_min_sr_bits: f64,
    pub mean_epsilon: f64,
    pub converged_fraction: f64,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, u64), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        // Order-preserving key for non-negative and negative floats alike.
        let bits = r.sweep_value.to_bits();
        let key = if r.sweep_value.is_sign_negative() { !bits } else { bits | (1 << 63) };
        groups
            .entry((r.scheme.to_string(), r.mode.to_string(), key))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((scheme, mode, _), g)| {
            let n = g.len() as f64;
            let mean = |f: fn(&SweepRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            SummaryRow {
                scheme,
                mode,
                sweep_var: g[0].sweep_var,
                sweep_value: g[0].sweep_value,
                trials: g.len(),
                mean_min_sr_nats: mean(|r| r.min_sr_nats),
                mean_min_sr_bits: mean(|r| r.min_sr_bits),
                mean_epsilon: mean(|r| r.epsilon),
                converged_fraction: mean(|r| if r.converged { 1.0 } else { 0.0 }),
            }
        })
        .collect()
}

pub fn emit_summary(rows: &[SweepRow], path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Output("no results to summarize".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scheme",
        "mode",
        "sweep_var",
        "sweep_value",
        "trials",
        "mean_min_sr_nats",
        "mean_min_sr_bits",
        "mean_epsilon",
        "converged_fraction",
    ])?;
    for s in summarize(rows) {
        w.write_record([
            s.scheme,
            s.mode,
            s.sweep_var.as_str().to_string(),
            float(s.sweep_value),
            s.trials.to_string(),
            float(s.mean_min_sr_nats),
            float(s.mean_min_sr_bits),
            float(s.mean_epsilon),
            float(s.converged_fraction),
        ])?;
    }
    write_file(path, &finish(w)?)
}

/// Power in dBm, floored so that zero power stays finite.
pub fn to_dbm(watts: f64) -> f64 {
    (10.0 * (watts * 1e3).log10()).max(-250.0)
}

/// Writes `<stem>.csv` and/or `<stem>.svg` (signal and AN heatmaps in dBm).
pub fn emit_beam_pattern(
    pattern: &BeamPattern,
    stem: &Path,
    csv: bool,
    svg: bool,
) -> Result<(), CliError> {
    if csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "y", "signal_dbm", "an_dbm"])?;
        for (iy, &y) in pattern.ys.iter().enumerate() {
            for (ix, &x) in pattern.xs.iter().enumerate() {
                let (s, a) = pattern.at(ix, iy);
                w.write_record([float(x), float(y), float(to_dbm(s)), float(to_dbm(a))])?;
            }
        }
        write_file(&stem.with_extension("csv"), &finish(w)?)?;
    }
    if svg {
        write_file(&stem.with_extension("svg"), heatmap_svg(pattern).as_bytes())?;
    }
    Ok(())
}

fn colormap(t: f64) -> (u8, u8, u8) {
    // Dark blue through cyan and yellow to red.
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [0.05, 0.03, 0.35]),
        (0.3, [0.1, 0.45, 0.85]),
        (0.55, [0.2, 0.8, 0.7]),
        (0.8, [0.95, 0.85, 0.2]),
        (1.0, [0.85, 0.1, 0.1]),
    ];
    let t = t.clamp(0.0, 1.0);
    let i = STOPS.iter().position(|s| s.0 >= t).unwrap_or(STOPS.len() - 1).max(1);
    let (t0, c0) = STOPS[i - 1];
    let (t1, c1) = STOPS[i];
    let u = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    let ch = |k: usize| ((c0[k] + u * (c1[k] - c0[k])) * 255.0).round() as u8;
    (ch(0), ch(1), ch(2))
}

/// Two side-by-side heatmaps sharing a 60 dB color range.
pub fn heatmap_svg(p: &BeamPattern) -> String {
    const PANEL: f64 = 360.0;
    const MARGIN: f64 = 50.0;
    const RANGE_DB: f64 = 60.0;
    let (nx, ny) = (p.grid.nx, p.grid.ny);
    let (cw, ch) = (PANEL / nx as f64, PANEL / ny as f64);
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (panel, title, values) in [(0, "signal power (dBm)", &p.signal), (1, "AN power (dBm)", &p.an)] {
        let x0 = MARGIN + panel as f64 * (PANEL + MARGIN);
        let y0 = MARGIN;
        let db: Vec<f64> = values.iter().map(|&w| to_dbm(w)).collect();
        let top = db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{title}, max {:.1}</text>"#,
            x0 + PANEL / 2.0,
            y0 - 10.0,
            top
        );
        let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
        for iy in 0..ny {
            for ix in 0..nx {
                let v = db[iy * nx + ix];
                let t = if top.is_finite() { 1.0 - (top - v) / RANGE_DB } else { 0.0 };
                let (r, g, b) = colormap(t);
                // Row 0 sits at small y, drawn at the bottom.
                let px = x0 + ix as f64 * cw;
                let py = y0 + (ny - 1 - iy) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{px:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                    cw + 0.05,
                    ch + 0.05
                );
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">x (m)</text>"#,
            x0 + PANEL / 2.0,
            y0 + PANEL + 30.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">y (m)</text>"#,
        MARGIN + PANEL / 2.0,
        MARGIN + PANEL / 2.0
    );
    s.push_str("</svg>\n");
    s
}
