//! Minimal SVG line plots of sweep tables. Cosmetic companions to the CSV
//! output: log10 key length against the sweep variable, one polyline per
//! scheme/mode combination.

use crate::keyrate::KeyMode;
use crate::pipeline::PointRow;
use crate::qber::Scheme;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#e8a838", "#2ca02c"];

fn series_key(scheme: Scheme, mode: KeyMode) -> String {
    format!("{} {}", scheme.label(), mode.label())
}

/// Render a sweep table as an SVG plot of log10(l_total) vs the sweep
/// variable. Rows with zero key are gaps in the polyline.
pub fn sweep_svg(rows: &[PointRow], x_label: &str) -> String {
    let xs: Vec<f64> = rows.iter().map(|r| r.variable).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    // fixed key-length decades
    let (y_min, y_max) = (0.0, 8.0);

    let to_x = |x: f64| MARGIN + (x - x_min) / x_span * (WIDTH - 2.0 * MARGIN);
    let to_y = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
"#
    );
    // axes
    svg.push_str(&format!(
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>
"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    ));
    // y ticks: one per decade
    for d in 0..=8 {
        let y = to_y(d as f64);
        svg.push_str(&format!(
            r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ccc" stroke-dasharray="3,3"/>
<text x="{xt}" y="{yt}" font-size="11" text-anchor="end">1e{d}</text>
"##,
            x0 = MARGIN,
            x1 = WIDTH - MARGIN,
            xt = MARGIN - 6.0,
            yt = y + 4.0
        ));
    }
    // x ticks at ~8 positions
    for i in 0..=8 {
        let x = x_min + x_span * i as f64 / 8.0;
        svg.push_str(&format!(
            r#"<text x="{xt}" y="{yt}" font-size="11" text-anchor="middle">{x:.1}</text>
"#,
            xt = to_x(x),
            yt = HEIGHT - MARGIN + 16.0
        ));
    }
    svg.push_str(&format!(
        r#"<text x="{xc}" y="{yb}" font-size="13" text-anchor="middle">{x_label}</text>
<text x="16" y="{yc}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {yc})">secure key length (bits)</text>
"#,
        xc = WIDTH / 2.0,
        yb = HEIGHT - 12.0,
        yc = HEIGHT / 2.0
    ));

    // group rows into series, preserving row order within each
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let key = series_key(r.scheme, r.mode);
        let entry = match series.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e,
            None => {
                series.push((key, Vec::new()));
                series.last_mut().unwrap()
            }
        };
        if r.l_total > 0.0 {
            entry.1.push((r.variable, r.l_total.log10().clamp(y_min, y_max)));
        } else {
            entry.1.push((r.variable, f64::NAN));
        }
    }

    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if label.contains("asymptotic") { r#" stroke-dasharray="6,4""# } else { "" };
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in pts {
            if y.is_nan() {
                pen_down = false;
                continue;
            }
            path.push_str(&format!(
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                to_x(x),
                to_y(y)
            ));
            pen_down = true;
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>
"#
            ));
        }
        svg.push_str(&format!(
            r#"<text x="{x}" y="{y}" font-size="12" fill="{color}">{label}</text>
"#,
            x = WIDTH - MARGIN - 140.0,
            y = MARGIN + 16.0 * (i as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
