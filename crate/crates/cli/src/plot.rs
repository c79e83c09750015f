//! Minimal static SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 6] = ["#4472c4", "#ed7d31", "#70ad47", "#7f7f7f", "#ffc000", "#5b9bd5"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>
"#,
        W / 2.0,
        escape(title),
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 10.0,
        escape(x_label),
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(y_label),
    );
    s
}

fn y_axis(s: &mut String, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let plot_h = H - TOP - BOTTOM;
    let span = if hi > lo { hi - lo } else { 1.0 };
    for i in 0..=5 {
        let v = lo + span * i as f64 / 5.0;
        let y = TOP + plot_h - plot_h * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/><line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - BOTTOM,
        H - BOTTOM,
        W - RIGHT,
        H - BOTTOM
    );
    move |v| TOP + plot_h - plot_h * (v - lo) / span
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let x = LEFT + 10.0 + 150.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            TOP - 14.0,
            COLORS[i % COLORS.len()],
            x + 14.0,
            TOP - 5.0,
            escape(name)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo.min(0.0), hi)
    } else {
        (0.0, 1.0)
    }
}

/// Grouped bars: one group per category, one bar per series. Non-finite
/// values are left blank.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let mut s = frame(title, "", y_label);
    let (lo, hi) = bounds(series.iter().flat_map(|x| x.values.iter().copied()));
    let y = y_axis(&mut s, lo, hi * 1.05);
    let group = (W - LEFT - RIGHT) / categories.len().max(1) as f64;
    let bar = group * 0.8 / series.len().max(1) as f64;
    for (g, cat) in categories.iter().enumerate() {
        let x0 = LEFT + group * g as f64 + group * 0.1;
        for (k, ser) in series.iter().enumerate() {
            let v = ser.values.get(g).copied().unwrap_or(f64::NAN);
            if v.is_finite() {
                let top = y(v.max(lo));
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                    x0 + bar * k as f64,
                    bar,
                    (y(lo) - top).max(0.0),
                    COLORS[k % COLORS.len()]
                );
            }
        }
        let cx = x0 + group * 0.4;
        let _ = writeln!(
            s,
            r#"<text transform="translate({cx:.1},{}) rotate(45)" font-size="10">{}</text>"#,
            H - BOTTOM + 12.0,
            escape(cat)
        );
    }
    legend(&mut s, &series.iter().map(|x| x.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Scatter of point sets sharing one pair of axes; `diagonal` adds y = x.
pub fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    sets: &[(&str, Vec<(f64, f64)>)],
    diagonal: bool,
    connect: bool,
) -> String {
    let mut s = frame(title, x_label, y_label);
    let pts = || sets.iter().flat_map(|(_, p)| p.iter().copied());
    let (ylo, yhi) = bounds(pts().map(|p| p.1).chain(diagonal.then_some(0.0)));
    let (xlo, xhi) = bounds(pts().map(|p| p.0));
    let (lo, hi) = if diagonal { (ylo.min(xlo), yhi.max(xhi)) } else { (ylo, yhi) };
    let y = y_axis(&mut s, lo, hi * 1.05);
    let (xlo, xhi) = if diagonal { (lo, hi * 1.05) } else { (xlo, xhi) };
    let xspan = if xhi > xlo { xhi - xlo } else { 1.0 };
    let plot_w = W - LEFT - RIGHT;
    let x = |v: f64| LEFT + plot_w * (v - xlo) / xspan;
    for i in 0..=5 {
        let v = xlo + xspan * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{v:.1}</text>"#,
            x(v),
            H - BOTTOM + 16.0
        );
    }
    if diagonal {
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4"/>"##,
            x(xlo),
            y(xlo),
            x(xhi),
            y(xhi)
        );
    }
    for (k, (_, points)) in sets.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if connect && points.len() > 1 {
            let path: Vec<String> = points.iter().map(|p| format!("{:.1},{:.1}", x(p.0), y(p.1))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}"/>"#,
                path.join(" ")
            );
        }
        for p in points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                x(p.0),
                y(p.1)
            );
        }
    }
    legend(&mut s, &sets.iter().map(|x| x.0).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let bars = bar_chart(
            "a<b",
            "%",
            &["x".into(), "y".into()],
            &[Series {
                name: "s",
                values: vec![1.0, f64::NAN],
            }],
        );
        assert!(bars.starts_with("<svg") && bars.ends_with("</svg>\n"));
        assert!(bars.contains("a&lt;b"));
        assert_eq!(bars.matches("<rect x=").count(), 2); // one bar, one legend swatch
        let sc = scatter("t", "x", "y", &[("p", vec![(1.0, 2.0), (3.0, 1.0)])], true, true);
        assert_eq!(sc.matches("<circle").count(), 2);
        assert!(sc.contains("<polyline"));
    }
}
