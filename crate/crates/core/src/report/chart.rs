//! Standalone SVG line chart of the history and the model forecasts.

use std::fmt::Write as _;

use super::{ForecastTable, ModelKind};
use crate::ingest::EmissionSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartOptions {
    pub width: u32,
    pub height: u32,
    /// Defaults to the country name when empty.
    pub title: String,
    pub y_label: String,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 480,
            title: String::new(),
            y_label: "CO2 emissions (metric tons per capita)".into(),
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const HISTORY_COLOR: &str = "#000000";

fn model_color(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Linear => "#1f77b4",
        ModelKind::DecisionTree => "#ff7f0e",
        ModelKind::RandomForest => "#2ca02c",
        ModelKind::Svm => "#d62728",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step from {1, 2, 5} x 10^k giving about `target` intervals over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let f = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    f * mag
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }

    fn points(&self, pts: impl Iterator<Item = (f64, f64)>) -> String {
        let mut out = String::new();
        for (i, (x, y)) in pts.enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.2},{:.2}", self.px(x), self.py(y));
        }
        out
    }
}

/// Render the series and, when given, one forecast curve per table column.
///
/// The history is drawn as one polyline and each forecast column as another;
/// legend swatches are `<line>` elements so the polyline count stays equal to
/// the number of curves.
pub fn emit_chart_svg(
    series: &EmissionSeries,
    table: Option<&ForecastTable>,
    options: &ChartOptions,
) -> String {
    let w = f64::from(options.width);
    let h = f64::from(options.height);

    let mut xs: Vec<f64> = series.points.iter().map(|p| f64::from(p.0)).collect();
    let mut ys: Vec<f64> = series.points.iter().map(|p| p.1).collect();
    if let Some(t) = table {
        xs.extend(t.years.iter().map(|&y| f64::from(y)));
        for (_, col) in &t.columns {
            ys.extend(col.iter().copied().filter(|v| v.is_finite()));
        }
    }
    let fold = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    };
    let (mut x0, mut x1) = fold(&xs);
    let (ymin, ymax) = fold(&ys);
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (ymin, ymax) = if !ymin.is_finite() {
        (0.0, 1.0)
    } else if ymax <= ymin {
        (ymin - 1.0, ymax + 1.0)
    } else {
        (ymin, ymax)
    };
    let step = nice_step(ymax - ymin, 5.0);
    let y0 = (ymin / step).floor() * step;
    let y1 = (ymax / step).ceil() * step;

    let frame = Frame {
        x0,
        x1,
        y0,
        y1,
        left: MARGIN_LEFT,
        right: w - MARGIN_RIGHT,
        top: MARGIN_TOP,
        bottom: h - MARGIN_BOTTOM,
    };

    let title = if options.title.is_empty() {
        format!("{} CO2 emissions per capita", series.country_name)
    } else {
        options.title.clone()
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        options.width, options.height, options.width, options.height
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        (frame.left + frame.right) / 2.0,
        escape(&title)
    );

    // axes
    let _ = writeln!(s, r##"<g class="axes" stroke="#333333" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/>"#,
        l = frame.left,
        r = frame.right,
        b = frame.bottom
    );
    let _ = writeln!(
        s,
        r#"<line x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}"/>"#,
        l = frame.left,
        t = frame.top,
        b = frame.bottom
    );
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        r#"<g class="ticks" font-family="sans-serif" font-size="11">"#
    );
    let first_decade = (x0 / 10.0).ceil() as i64 * 10;
    let mut year = first_decade;
    while year as f64 <= x1 {
        let x = frame.px(year as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{b2:.2}" stroke="#333333"/>"##,
            b = frame.bottom,
            b2 = frame.bottom + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{year}</text>"#,
            frame.bottom + 18.0
        );
        year += 10;
    }
    let n_y = ((y1 - y0) / step).round() as i64;
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    for i in 0..=n_y {
        let v = y0 + i as f64 * step;
        let y = frame.py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{l2:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#333333"/>"##,
            l = frame.left,
            l2 = frame.left - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.decimals$}</text>"#,
            frame.left - 8.0,
            y + 4.0
        );
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">Year</text>"#,
        (frame.left + frame.right) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{cy:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {cy:.2})">{}</text>"#,
        escape(&options.y_label),
        cy = (frame.top + frame.bottom) / 2.0
    );

    let mut legend: Vec<(&str, &str)> = vec![("History", HISTORY_COLOR)];
    let _ = writeln!(
        s,
        r#"<polyline class="history" fill="none" stroke="{HISTORY_COLOR}" stroke-width="2" points="{}"/>"#,
        frame.points(series.points.iter().map(|&(y, v)| (f64::from(y), v)))
    );
    if let Some(t) = table {
        for (kind, col) in &t.columns {
            let color = model_color(*kind);
            let _ = writeln!(
                s,
                r#"<polyline class="forecast" data-model="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                kind.name(),
                frame.points(
                    t.years
                        .iter()
                        .map(|&y| f64::from(y))
                        .zip(col.iter().copied())
                )
            );
            legend.push((kind.name(), color));
        }
    }

    let lx = frame.right + 20.0;
    let _ = writeln!(
        s,
        r#"<g class="legend" font-family="sans-serif" font-size="12">"#
    );
    for (i, (label, color)) in legend.iter().enumerate() {
        let y = frame.top + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 30.0,
            y + 4.0
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
