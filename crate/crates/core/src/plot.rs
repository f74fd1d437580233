//! Static SVG line plots of energy and sweep CSV files. Pure rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FsiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// `energy` against `t`, logarithmic energy axis.
    Energy,
    /// `norm_estimate` against `beta`.
    Sweep,
}

impl PlotKind {
    fn columns(self) -> (&'static str, &'static str) {
        match self {
            Self::Energy => ("t", "energy"),
            Self::Sweep => ("beta", "norm_estimate"),
        }
    }

    fn log_y(self) -> bool {
        matches!(self, Self::Energy)
    }
}

impl std::str::FromStr for PlotKind {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Self::Energy),
            "sweep" => Ok(Self::Sweep),
            _ => Err(FsiError::Parameters(format!("unknown plot kind '{s}' (energy, sweep)"))),
        }
    }
}

/// Reads the two columns a plot needs.
pub fn read_series(csv_text: &str, kind: PlotKind) -> Result<Vec<(f64, f64)>> {
    let (xc, yc) = kind.columns();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().map_err(|e| FsiError::Format(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| FsiError::Format(format!("missing column '{name}'")))
    };
    let (ix, iy) = (find(xc)?, find(yc)?);
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FsiError::Format(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| FsiError::Format(format!("row {}: bad number in column {j}", i + 2)))
        };
        pts.push((num(ix)?, num(iy)?));
    }
    if pts.is_empty() {
        return Err(FsiError::Format("no data rows".into()));
    }
    if kind.log_y() && pts.iter().any(|p| !(p.1 > 0.0)) {
        return Err(FsiError::Format("energy must be positive for a log axis".into()));
    }
    Ok(pts)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

/// Renders the series as a standalone SVG document.
pub fn render_svg(pts: &[(f64, f64)], kind: PlotKind, title: &str) -> Result<String> {
    if pts.is_empty() {
        return Err(FsiError::Format("nothing to plot".into()));
    }
    let fy = |y: f64| if kind.log_y() { y.log10() } else { y };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(fy(y));
        y1 = y1.max(fy(y));
    }
    if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
        return Err(FsiError::Format("non-finite data".into()));
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    if !kind.log_y() && y0 > 0.0 {
        y0 = 0.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let (xl, yl) = kind.columns();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for t in ticks(x0, x1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(t),
            H - MARGIN + 16.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let label = if kind.log_y() { format!("1e{}", fmt_tick(t)) } else { fmt_tick(t) };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
            MARGIN - 6.0,
            sy(t) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xl}</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        if kind.log_y() { format!("{yl} (log)") } else { yl.to_string() }
    );
    let mut path = String::new();
    for &(x, y) in pts {
        let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(fy(y)));
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        path.trim_end()
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// CSV text to SVG text.
pub fn emit_plot(csv_text: &str, kind: PlotKind, title: &str) -> Result<String> {
    render_svg(&read_series(csv_text, kind)?, kind, title)
}
