//! Minimal static SVG charts: line plots with error bars and heatmaps.

use std::fmt::Write as _;

use crate::textfmt::repr_f64;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub fit: Option<Fit>,
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, extra: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12"{extra}>"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title)).unwrap();
}

struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if (hi - lo).abs() < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        Self { lo, hi, a, b }
    }

    fn at(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

pub fn line_chart(chart: &LineChart) -> String {
    let mut out = String::new();
    let extra = chart
        .fit
        .as_ref()
        .map(|f| format!(r#" data-slope="{}" data-intercept="{}""#, repr_f64(f.slope), repr_f64(f.intercept)))
        .unwrap_or_default();
    header(&mut out, &chart.title, &extra);
    let pts = || chart.series.iter().flat_map(|s| s.points.iter());
    let mut xs: Vec<f64> = pts().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (ylo, yhi) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let h = p.half_width.unwrap_or(0.0);
        (lo.min(p.y - h), hi.max(p.y + h))
    });
    if xs.is_empty() || !ylo.is_finite() {
        writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, W / 2.0, H / 2.0).unwrap();
        out.push_str("</svg>\n");
        return out;
    }
    let pad = ((yhi - ylo) * 0.08).max(1e-3);
    let sx = Scale::new(xs[0], *xs.last().unwrap(), LEFT + 20.0, W - RIGHT - 20.0);
    let sy = Scale::new(ylo - pad, yhi + pad, H - BOTTOM, TOP);
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    writeln!(out, r##"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="#333"/>"##).unwrap();
    for x in &xs {
        let px = sx.at(*x);
        writeln!(out, r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="#333"/>"##, y0 + 5.0).unwrap();
        writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{x}</text>"#, y0 + 18.0).unwrap();
    }
    for t in ticks(sy.lo, sy.hi, 5) {
        let py = sy.at(t);
        writeln!(out, r##"<line x1="{}" y1="{py:.2}" x2="{x1}" y2="{py:.2}" stroke="#eee"/>"##, x0).unwrap();
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.3}</text>"#, x0 - 6.0, py + 4.0).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(&chart.x_label)).unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(&chart.y_label)
    )
    .unwrap();
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(out, r#"<g class="series" data-label="{}">"#, escape(&s.label)).unwrap();
        let path: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", sx.at(p.x), sy.at(p.y))).collect();
        if path.len() > 1 {
            writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" ")).unwrap();
        }
        for p in &s.points {
            let (px, py) = (sx.at(p.x), sy.at(p.y));
            if let Some(h) = p.half_width {
                writeln!(
                    out,
                    r#"<line class="ci" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}" data-half-width="{}"/>"#,
                    sy.at(p.y - h),
                    sy.at(p.y + h),
                    repr_f64(h)
                )
                .unwrap();
            }
            writeln!(
                out,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}" data-x="{}" data-y="{}"/>"#,
                repr_f64(p.x),
                repr_f64(p.y)
            )
            .unwrap();
        }
        out.push_str("</g>\n");
        let ly = TOP + 10.0 + 18.0 * i as f64;
        writeln!(out, r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#, W - RIGHT + 12.0, ly - 10.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, W - RIGHT + 30.0, escape(&s.label)).unwrap();
    }
    if let Some(f) = &chart.fit {
        let (a, b) = (xs[0], *xs.last().unwrap());
        writeln!(
            out,
            r##"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="5,4"/>"##,
            sx.at(a),
            sy.at(f.intercept + f.slope * a),
            sx.at(b),
            sy.at(f.intercept + f.slope * b)
        )
        .unwrap();
        writeln!(out, r#"<text class="slope" x="{}" y="{}">{}</text>"#, x0 + 10.0, y1 + 14.0, escape(&f.text)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    /// `[row][column]`
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn heatmap(h: &Heatmap) -> String {
    let mut out = String::new();
    header(&mut out, &h.title, "");
    let vals: Vec<f64> = h.values.iter().flatten().flatten().copied().collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (nr, nc) = (h.rows.len().max(1) as f64, h.columns.len().max(1) as f64);
    let cw = (W - LEFT - RIGHT) / nc;
    let ch = (H - TOP - BOTTOM) / nr;
    for (r, row) in h.values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let (x, y) = (LEFT + cw * c as f64, TOP + ch * r as f64);
            let fill = match v {
                Some(v) => {
                    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                    let g = (235.0 - 180.0 * t).round() as u8;
                    format!("rgb(255,{g},{})", (g as f64 * 0.8) as u8)
                }
                None => "#ddd".into(),
            };
            let data = v.map(|v| format!(r#" data-value="{}""#, repr_f64(v))).unwrap_or_default();
            writeln!(
                out,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="#fff" data-row="{}" data-col="{}"{data}/>"##,
                escape(&h.rows[r]),
                escape(&h.columns[c])
            )
            .unwrap();
            let text = v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{text}</text>"#, x + cw / 2.0, y + ch / 2.0 + 4.0).unwrap();
        }
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, TOP + ch * (r as f64 + 0.5) + 4.0, escape(&h.rows[r])).unwrap();
    }
    for (c, name) in h.columns.iter().enumerate() {
        writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, LEFT + cw * (c as f64 + 0.5), H - BOTTOM + 18.0, escape(name)).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(&h.x_label)).unwrap();
    writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT + 10.0, TOP + 12.0, escape(&h.y_label)).unwrap();
    if lo.is_finite() {
        writeln!(out, r#"<text x="{}" y="{}">range {lo:.3} to {hi:.3}</text>"#, W - RIGHT + 10.0, TOP + 30.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
