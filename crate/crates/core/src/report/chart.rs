use std::fmt::Write;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart, one bar per `(label, value)` in the given order.
pub fn render_bar_svg(title: &str, bars: &[(String, f64)]) -> String {
    let row = 22.0;
    let label_w = 180.0;
    let bar_w = 420.0;
    let width = label_w + bar_w + 80.0;
    let height = 40.0 + row * bars.len() as f64 + 10.0;
    let max = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        esc(title)
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = 32.0 + row * i as f64;
        let len = if max > 0.0 { bar_w * v.max(0.0) / max } else { 0.0 };
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            label_w - 6.0,
            y + 13.0,
            esc(label)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{label_w}" y="{y:.1}" width="{len:.2}" height="{:.1}" fill="#4a7ab5"/>"##,
            row - 6.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="11">{v:.3}</text>"#,
            label_w + len + 4.0,
            y + 13.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
