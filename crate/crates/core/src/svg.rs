//! Minimal deterministic SVG scatter plots.

use std::fmt::Write;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;
const RADIUS: f64 = 2.5;
/// Longest arrow as a fraction of the plot width.
const ARROW_FRACTION: f64 = 0.05;

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Scatter plot of `points` with one color each and optional arrows.
///
/// Arrows are scaled so the longest has a fixed on-screen length; the y
/// axis points up.
pub fn scatter(points: &[[f64; 2]], colors: &[[u8; 3]], arrows: Option<&[[f64; 2]]>) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0);
    let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 1.0 };
    let cx = 0.5 * (x0 + x1);
    let cy = 0.5 * (y0 + y1);
    let map = |p: [f64; 2]| {
        (
            0.5 * SIZE + (p[0] - cx) * scale,
            0.5 * SIZE - (p[1] - cy) * scale,
        )
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in points.iter().enumerate() {
        let (x, y) = map(*p);
        let c = colors.get(i).copied().unwrap_or([0, 0, 0]);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="{}"/>"#, hex(c));
    }
    if let Some(arrows) = arrows {
        let longest = arrows.iter().map(|a| a[0].hypot(a[1])).fold(0.0, f64::max);
        if longest > 0.0 {
            let k = ARROW_FRACTION * SIZE / longest;
            let _ = writeln!(s, r##"<g stroke="#333333" stroke-width="0.8">"##);
            for (p, a) in points.iter().zip(arrows) {
                let (x, y) = map(*p);
                let (ex, ey) = (x + k * a[0], y - k * a[1]);
                let _ = writeln!(s, r#"<line x1="{x:.3}" y1="{y:.3}" x2="{ex:.3}" y2="{ey:.3}"/>"#);
            }
            let _ = writeln!(s, "</g>");
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Number of point glyphs in an SVG produced by [`scatter`].
pub fn count_points(svg: &str) -> usize {
    svg.matches("<circle ").count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_counted() {
        let pts = [[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]];
        let cols = [[255, 0, 0]; 3];
        let a = scatter(&pts, &cols, Some(&[[1.0, 0.0]; 3]));
        let b = scatter(&pts, &cols, Some(&[[1.0, 0.0]; 3]));
        assert_eq!(a, b);
        assert_eq!(count_points(&a), 3);
        assert!(a.contains("#ff0000"));
        assert_eq!(a.matches("<line ").count(), 3);
    }

    #[test]
    fn single_point_is_centered() {
        let s = scatter(&[[5.0, 5.0]], &[[0, 0, 0]], None);
        assert!(s.contains(r#"cx="400.000" cy="400.000""#));
    }
}
