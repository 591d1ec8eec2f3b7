use std::fmt::Write;

use chrono::NaiveDate;

use super::{EventAnnotation, ForecastPoint, OutlierKind, WeekFlag, WeeklyPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartOptions {
    pub width: f64,
    pub height: f64,
    pub title: String,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            width: 960.0,
            height: 360.0,
            title: "Weekly ethical-concern frequency".into(),
        }
    }
}

const MARGIN: f64 = 40.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line chart of observed frequency with 85%/95% bands, outlier dots sized by
/// magnitude and vertical event markers.
pub fn render_timeline_svg(
    series: &[WeeklyPoint],
    forecasts: &[ForecastPoint],
    flags: &[WeekFlag],
    events: &[EventAnnotation],
    opts: &ChartOptions,
) -> String {
    let (w, h) = (opts.width, opts.height);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        esc(&opts.title)
    );
    if series.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let first = series[0].week_start;
    let weeks = series.len().max(2) - 1;
    let vals = series
        .iter()
        .filter_map(|p| p.frequency)
        .chain(forecasts.iter().flat_map(|f| [f.lo95, f.hi95]));
    let (mut lo, mut hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let x = |d: NaiveDate| MARGIN + (d - first).num_days() as f64 / 7.0 / weeks as f64 * (w - 2.0 * MARGIN);
    let y = |v: f64| h - MARGIN - (v - lo) / (hi - lo) * (h - 2.0 * MARGIN);

    type Band = fn(&ForecastPoint) -> f64;
    let bands: [(Band, Band, &str); 2] = [(|f| f.lo95, |f| f.hi95, "#dbe7f3"), (|f| f.lo85, |f| f.hi85, "#b3cde3")];
    for (lo_f, hi_f, fill) in bands {
        if forecasts.is_empty() {
            break;
        }
        let mut pts: Vec<String> = forecasts
            .iter()
            .map(|f| format!("{:.2},{:.2}", x(f.week_start), y(hi_f(f))))
            .collect();
        pts.extend(forecasts.iter().rev().map(|f| format!("{:.2},{:.2}", x(f.week_start), y(lo_f(f)))));
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{fill}" stroke="none"/>"#, pts.join(" "));
    }
    if !forecasts.is_empty() {
        let pts: Vec<String> = forecasts
            .iter()
            .map(|f| format!("{:.2},{:.2}", x(f.week_start), y(f.yhat)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    let obs: Vec<String> = series
        .iter()
        .filter_map(|p| p.frequency.map(|v| format!("{:.2},{:.2}", x(p.week_start), y(v))))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        obs.join(" ")
    );
    let max_mag = flags.iter().map(|f| f.flag.magnitude).fold(0.0, f64::max);
    for (p, f) in series.iter().zip(flags) {
        let (Some(v), color) = (
            p.frequency,
            match f.flag.kind {
                OutlierKind::Strong => "#c0392b",
                OutlierKind::Weak => "#e67e22",
                OutlierKind::None => continue,
            },
        ) else {
            continue;
        };
        let r = 2.5 + if max_mag > 0.0 { 4.0 * f.flag.magnitude / max_mag } else { 0.0 };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="{color}"/>"#,
            x(p.week_start),
            y(v)
        );
    }
    for e in events {
        let Some(week) = e.week_start else { continue };
        let ex = x(week);
        let _ = writeln!(
            svg,
            r##"<line x1="{ex:.2}" y1="{MARGIN}" x2="{ex:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="3,3"/>"##,
            h - MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            ex + 3.0,
            h - MARGIN - 4.0,
            ex + 3.0,
            h - MARGIN - 4.0,
            esc(&e.event)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{:.2}" font-family="sans-serif" font-size="10">{}</text>"#,
        h - 10.0,
        first
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
        w - MARGIN,
        h - 10.0,
        series[series.len() - 1].week_start
    );
    svg.push_str("</svg>\n");
    svg
}
