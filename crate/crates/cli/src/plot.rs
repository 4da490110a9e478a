//! SVG line plots of mean minimum secrecy rate against the sweep variable.

use std::fmt::Write as _;
use std::path::Path;

use crate::emit::summarize;
use crate::sweep::SweepRow;
use crate::CliError;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// A curve of `(sweep value, mean min-SR in bits)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// `<scheme>-<mode>`, e.g. `proposed-s2`.
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub fn series(rows: &[SweepRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for s in summarize(rows) {
        let name = format!("{}-{}", s.scheme, s.mode);
        let p = (s.sweep_value, s.mean_min_sr_bits);
        match out.iter_mut().find(|x| x.name == name) {
            Some(x) => x.points.push(p),
            None => out.push(Series { name, points: vec![p] }),
        }
    }
    out
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(ticks: &[f64], t: f64) -> String {
    let step = if ticks.len() > 1 { ticks[1] - ticks[0] } else { 1.0 };
    let dec = (-step.log10().floor()).max(0.0) as usize;
    format!("{t:.dec$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the requested series (all of them when `only` is `None`) as SVG.
pub fn render_svg(rows: &[SweepRow], only: Option<&[String]>, x_label: &str) -> Result<String, CliError> {
    let all = series(rows);
    if all.is_empty() {
        return Err(CliError::Output("no results to plot".into()));
    }
    let chosen: Vec<&Series> = match only {
        None => all.iter().collect(),
        Some(names) => {
            let mut v = Vec::new();
            for n in names {
                match all.iter().find(|s| &s.name == n) {
                    Some(s) => v.push(s),
                    None => {
                        let avail: Vec<&str> = all.iter().map(|s| s.name.as_str()).collect();
                        return Err(CliError::Output(format!(
                            "series '{n}' not in results; available: {}",
                            avail.join(", ")
                        )));
                    }
                }
            }
            v
        }
    };

    let pts = chosen.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);

    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 70.0;
    const R: f64 = 170.0;
    const T: f64 = 20.0;
    const B: f64 = 55.0;
    let pw = W - L - R;
    let ph = H - T - B;
    let sx = |x: f64| L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| T + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let xt = nice_ticks(x0, x1, 6);
    for &t in &xt {
        let x = sx(t);
        let t = tick_label(&xt, t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{T}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, T + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, T + ph + 16.0);
    }
    let yt = nice_ticks(y0, y1, 6);
    for &t in &yt {
        let y = sy(t);
        let t = tick_label(&yt, t);
        let _ = writeln!(s, r##"<line x1="{L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, L + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, L - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        L + pw / 2.0,
        H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.2}" transform="rotate(-90 18 {0:.2})" text-anchor="middle">min secrecy rate (bit/s/Hz)</text>"#,
        T + ph / 2.0
    );

    for (i, ser) in chosen.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = T + 15.0 + 20.0 * i as f64;
        let lx = L + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 32.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(rows: &[SweepRow], only: Option<&[String]>, x_label: &str, path: &Path) -> Result<(), CliError> {
    let svg = render_svg(rows, only, x_label)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}
