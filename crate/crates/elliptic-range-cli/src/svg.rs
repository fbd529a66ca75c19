//! SVG rendering of numerical-range boundaries against the ellipse.

use elliptic_range::numrange::RangeBoundary;
use num_complex::Complex64;

/// Render the boundary polyline of `W(T)` over `Gamma_delta` with foci
/// markers. The viewBox is `[-1.2(1+delta), 1.2(1+delta)]^2` with the
/// imaginary axis pointing up; `hausdorff` lands in an SVG comment as
/// machine-readable metadata.
pub fn boundary_plot(boundary: &RangeBoundary, delta: f64, hausdorff: f64) -> String {
    let a = 1.0 + delta;
    let b = 1.0 - delta;
    let focus = 2.0 * delta.sqrt();
    let half = 1.2 * a;
    let size = 2.0 * half;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"640\" height=\"640\">\n",
        -half, -half, size, size
    ));
    out.push_str(&format!(
        "<!-- elliptic-range boundary plot: delta = {delta:.12}, hausdorff_to_ellipse = {hausdorff:.6e} -->\n"
    ));
    // Flip the y axis so the imaginary direction points up.
    out.push_str("<g transform=\"scale(1,-1)\">\n");
    out.push_str(&format!(
        "  <ellipse cx=\"0\" cy=\"0\" rx=\"{a:.12}\" ry=\"{b:.12}\" \
         fill=\"none\" stroke=\"#888888\" stroke-width=\"{:.6}\"/>\n",
        0.004 * size
    ));
    for &s in &[-1.0f64, 1.0] {
        out.push_str(&format!(
            "  <circle cx=\"{:.12}\" cy=\"0\" r=\"{:.6}\" fill=\"#888888\"/>\n",
            s * focus,
            0.008 * size
        ));
    }
    out.push_str(&polyline(&boundary.points, size));
    out.push_str("</g>\n</svg>\n");
    out
}

fn polyline(points: &[Complex64], size: f64) -> String {
    if points.is_empty() {
        return String::new();
    }
    // A degenerate boundary (all points coincide, e.g. a scalar range)
    // renders as a dot.
    let first = points[0];
    let spread = points
        .iter()
        .map(|p| (p - first).norm())
        .fold(0.0f64, f64::max);
    if spread < 1e-9 {
        return format!(
            "  <circle cx=\"{:.12}\" cy=\"{:.12}\" r=\"{:.6}\" fill=\"#205080\"/>\n",
            first.re,
            first.im,
            0.01 * size
        );
    }
    let mut path = String::from("  <polyline points=\"");
    for p in points.iter().chain(points.first()) {
        path.push_str(&format!("{:.12},{:.12} ", p.re, p.im));
    }
    path.push_str(&format!(
        "\" fill=\"none\" stroke=\"#205080\" stroke-width=\"{:.6}\"/>\n",
        0.005 * size
    ));
    path
}
