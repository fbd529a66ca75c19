//! Numerical-range boundaries and inclusion in `K_delta` by two
//! independent criteria.
//!
//! The support sweep bounds `lambda_max(Re(e^{-i theta} T))` against the
//! support function of the ellipse angle by angle; it needs nothing from
//! `T`. The Herglotz test checks `Re G(z) >= 0` on the unit circle for
//! `G(z) = z f'(z) (T - f(z))^{-1}` with `f` the Zhukovskii map; it
//! requires `sigma(T)` inside `K_delta` and serves as the validating
//! cross-check. A maximum-principle argument reduces the Herglotz test
//! from the disc to the circle, so only circle grid points are evaluated.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{membership, support_function, Membership};
use crate::mats::{eigh_max, eigh_min, spectrum, CMatrix};
use crate::util::par_map_indexed;

/// Default number of support angles. Boundary error scales like
/// `O(grid^-2)` for smooth boundaries.
pub const DEFAULT_NUM_ANGLES: usize = 512;
/// Default number of unit-circle points for the Herglotz test.
pub const DEFAULT_CIRCLE_POINTS: usize = 1024;

/// Polygonal approximation of the boundary of `W(T)`.
#[derive(Debug, Clone)]
pub struct RangeBoundary {
    /// Boundary points, one per support angle.
    pub points: Vec<Complex64>,
    /// The support angles theta.
    pub angles: Vec<f64>,
    /// `lambda_max(Re(e^{-i theta} T))` at each angle.
    pub support_values: Vec<f64>,
}

/// Verdict of the support-sweep inclusion test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InclusionVerdict {
    Inside,
    Boundary,
    Outside,
}

/// Support-sweep outcome with the extremal angle as witness.
#[derive(Debug, Clone)]
pub struct SupportReport {
    pub verdict: InclusionVerdict,
    /// `min_theta (h_delta(theta) - lambda_max(Re e^{-i theta} T))`;
    /// positive inside, negative outside.
    pub margin: f64,
    /// Angle attaining the margin.
    pub witness_angle: f64,
    /// Boundary point of `W(T)` at the witness angle.
    pub witness_point: Complex64,
}

fn rotated_real_part(t: &CMatrix, theta: f64) -> CMatrix {
    let phase = Complex64::from_polar(1.0, -theta);
    let rotated = t.scale(phase);
    rotated.hermitian_part()
}

/// Boundary of `W(T)` by a support-function sweep: for each angle the top
/// eigenpair of the rotated Hermitian part gives one boundary point
/// `<T v, v>`.
pub fn range_boundary(t: &CMatrix, num_angles: usize) -> Result<RangeBoundary> {
    t.dim()?;
    t.ensure_finite()?;
    if num_angles < 8 {
        return Err(Error::Domain("need at least 8 angles".into()));
    }
    let results: Vec<Result<(f64, Complex64)>> = par_map_indexed(num_angles, |k| {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (num_angles as f64);
        let h = rotated_real_part(t, theta);
        let (lambda, v) = eigh_max(&h)?;
        Ok((lambda, t.rayleigh(&v)))
    });
    let mut points = Vec::with_capacity(num_angles);
    let mut angles = Vec::with_capacity(num_angles);
    let mut support_values = Vec::with_capacity(num_angles);
    for (k, r) in results.into_iter().enumerate() {
        let (lambda, point) = r?;
        angles.push(2.0 * std::f64::consts::PI * (k as f64) / (num_angles as f64));
        support_values.push(lambda);
        points.push(point);
    }
    Ok(RangeBoundary {
        points,
        angles,
        support_values,
    })
}

fn support_value(t: &CMatrix, theta: f64) -> Result<f64> {
    Ok(eigh_max(&rotated_real_part(t, theta))?.0)
}

/// Numerical radius via the grid sweep of
/// `g(theta) = lambda_max(Re(e^{-i theta} T))`, refined by golden-section
/// around the best grid angle.
pub fn numerical_radius(t: &CMatrix, num_angles: usize) -> Result<f64> {
    let boundary = range_boundary(t, num_angles)?;
    let mut best_k = 0;
    for (k, &s) in boundary.support_values.iter().enumerate() {
        if s > boundary.support_values[best_k] {
            best_k = k;
        }
    }
    let spacing = 2.0 * std::f64::consts::PI / (num_angles as f64);
    let center = boundary.angles[best_k];
    let (mut lo, mut hi) = (center - spacing, center + spacing);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = support_value(t, x1)?;
    let mut f2 = support_value(t, x2)?;
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = support_value(t, x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = support_value(t, x1)?;
        }
    }
    Ok(boundary.support_values[best_k].max(f1).max(f2))
}

/// Support-sweep inclusion test of `W(T)` in `K_delta`.
///
/// Inside requires `lambda_max(Re e^{-i theta} T) <= h(theta) - margin`
/// at every grid angle; a violation beyond `margin` is Outside with the
/// violating angle as witness; anything within `margin` of equality is
/// reported Boundary, never silently coerced.
pub fn contains_support(
    t: &CMatrix,
    delta: f64,
    num_angles: usize,
    margin: f64,
) -> Result<SupportReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must be in [0,1), got {delta}")));
    }
    let boundary = range_boundary(t, num_angles)?;
    let mut worst = f64::INFINITY;
    let mut witness = 0usize;
    for (k, (&theta, &s)) in boundary
        .angles
        .iter()
        .zip(boundary.support_values.iter())
        .enumerate()
    {
        let gap = support_function(theta, delta) - s;
        if gap < worst {
            worst = gap;
            witness = k;
        }
    }
    let verdict = if worst > margin {
        InclusionVerdict::Inside
    } else if worst < -margin {
        InclusionVerdict::Outside
    } else {
        InclusionVerdict::Boundary
    };
    Ok(SupportReport {
        verdict,
        margin: worst,
        witness_angle: boundary.angles[witness],
        witness_point: boundary.points[witness],
    })
}

/// Herglotz-type inclusion test: `W(T)` lies in `K_delta` iff
/// `Re G(z) >= 0` for `G(z) = z f'(z) (T - f(z))^{-1}` on the disc, which
/// the maximum principle reduces to the unit circle. `G(0) = 1` is the
/// removable-singularity value; the circle grid never samples it.
///
/// Precondition `sigma(T)` inside `K_delta` is checked and violations are
/// reported as `SpectrumOutside`.
pub fn contains_herglotz(
    t: &CMatrix,
    delta: f64,
    num_circle_points: usize,
    tol: f64,
) -> Result<bool> {
    Ok(herglotz_margin(t, delta, num_circle_points)? >= -tol)
}

/// The raw quantity behind the Herglotz test:
/// `min_z lambda_min(Re G(z))` over the circle grid. Nonnegative (within
/// tolerance) exactly when `W(T)` lies in `K_delta`.
pub fn herglotz_margin(t: &CMatrix, delta: f64, num_circle_points: usize) -> Result<f64> {
    let n = t.dim()?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must be in [0,1), got {delta}")));
    }
    for mu in spectrum(t, 1e-10)? {
        if membership(mu, delta, 1e-9)? == Membership::Exterior {
            return Err(Error::SpectrumOutside {
                eigenvalue: mu,
                delta,
            });
        }
    }
    let margins: Vec<Result<f64>> = par_map_indexed(num_circle_points, |k| {
        let z = Complex64::from_polar(
            1.0,
            2.0 * std::f64::consts::PI * (k as f64) / (num_circle_points as f64),
        );
        // z f'(z) = delta z - 1/z.
        let zfp = z * delta - 1.0 / z;
        let f = 1.0 / z + z * delta;
        let mut shifted = t.clone();
        for i in 0..n {
            shifted[(i, i)] -= f;
        }
        let lu = match shifted.lu() {
            Ok(lu) => lu,
            Err(Error::Singular { value }) => {
                return Err(Error::SingularResolvent { at: z, pivot: value })
            }
            Err(e) => return Err(e),
        };
        if lu.min_pivot < 1e-13 * t.frobenius_norm().max(1.0) {
            return Err(Error::SingularResolvent {
                at: z,
                pivot: lu.min_pivot,
            });
        }
        let resolvent = lu.solve_matrix(&CMatrix::identity(n))?;
        let g = resolvent.scale(zfp);
        eigh_min(&g.hermitian_part())
    });
    let mut worst = f64::INFINITY;
    for m in margins {
        worst = worst.min(m?);
    }
    Ok(worst)
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / denom).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Exact distance from a point to the ellipse `Gamma_delta` by Newton
/// refinement of the parametric projection.
fn distance_to_ellipse(p: Complex64, a: f64, b: f64) -> f64 {
    let mut t = (a * p.im).atan2(b * p.re);
    for _ in 0..40 {
        let (s, c) = t.sin_cos();
        // g'(t)/2 where g(t) = |p - (a cos t, b sin t)|^2.
        let d1 = (a * a - b * b) * c * s - p.re * a * s + p.im * b * c;
        let d2 = (a * a - b * b) * (c * c - s * s) - p.re * a * c - p.im * b * s;
        if d2.abs() < 1e-300 {
            break;
        }
        let step = d1 / d2;
        t -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let w = Complex64::new(a * t.cos(), b * t.sin());
    (p - w).norm()
}

/// Two-sided Hausdorff distance between a computed numerical-range
/// boundary (closed polyline, ordered by support angle) and the ellipse
/// `Gamma_delta`.
///
/// Polyline-to-ellipse uses the exact pointwise distance; the reverse
/// direction walks a dense sample of the ellipse against nearby polyline
/// segments (the curves share the support-angle parametrization, so a
/// small index window suffices).
pub fn hausdorff_to_ellipse(boundary: &RangeBoundary, delta: f64, ellipse_samples: usize) -> f64 {
    let a = 1.0 + delta;
    let b = 1.0 - delta;
    let pts = &boundary.points;
    let n = pts.len();
    let mut forward: f64 = 0.0;
    for &p in pts {
        forward = forward.max(distance_to_ellipse(p, a, b));
    }
    let mut backward: f64 = 0.0;
    let window = 8isize;
    for k in 0..ellipse_samples {
        let t = 2.0 * std::f64::consts::PI * (k as f64) / (ellipse_samples as f64);
        let w = Complex64::new(a * t.cos(), b * t.sin());
        // Support angle of the ellipse point, for indexing into the
        // support-angle-ordered polyline.
        let theta = (a * t.sin()).atan2(b * t.cos()).rem_euclid(2.0 * std::f64::consts::PI);
        let j0 = (theta / (2.0 * std::f64::consts::PI) * n as f64) as isize;
        let mut best = f64::INFINITY;
        for off in -window..=window {
            let j = (j0 + off).rem_euclid(n as isize) as usize;
            let jn = (j + 1) % n;
            best = best.min(point_segment_distance(w, pts[j], pts[jn]));
        }
        backward = backward.max(best);
    }
    forward.max(backward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::EllipseParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ellipse_extremal(delta: f64) -> CMatrix {
        let r = delta.sqrt();
        CMatrix::from_real(&[&[2.0 * r, 2.0 * (1.0 - delta)], &[0.0, -2.0 * r]]).unwrap()
    }

    #[test]
    fn boundary_of_normal_matrix_degenerates_to_segment() {
        let t = CMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let b = range_boundary(&t, 64).unwrap();
        for p in &b.points {
            assert!(p.im.abs() < 1e-12);
            assert!(p.re.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn boundary_of_extremal_matrix_is_the_ellipse() {
        let d = 0.5;
        let t = ellipse_extremal(d);
        let b = range_boundary(&t, 256).unwrap();
        let p = EllipseParams::new(d).unwrap();
        for w in &b.points {
            let q = (w.re / p.a).powi(2) + (w.im / p.b).powi(2);
            assert!((q - 1.0).abs() < 1e-8, "point {w} off the ellipse: q = {q}");
        }
    }

    #[test]
    fn boundary_of_nilpotent_matrix_is_unit_circle() {
        // W([[0,2],[0,0]]) is the closed unit disc. Oracle: Rayleigh
        // quotients of random unit vectors all lie inside; boundary points
        // have modulus 1.
        let t = CMatrix::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        let b = range_boundary(&t, 128).unwrap();
        for w in &b.points {
            assert!((w.norm() - 1.0).abs() < 1e-10);
        }
        let mut state = 11u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for _ in 0..100_000 {
            let v = [c(next(), next()), c(next(), next())];
            assert!(t.rayleigh(&v).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn numerical_radius_spot_values() {
        assert!((numerical_radius(&CMatrix::identity(2), 256).unwrap() - 1.0).abs() < 1e-10);
        let t = CMatrix::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert!((numerical_radius(&t, 256).unwrap() - 1.0).abs() < 1e-10);
        let d = CMatrix::diagonal(&[c(0.0, 3.0)]);
        assert!((numerical_radius(&d, 256).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn support_test_inside_boundary_outside() {
        let d = 0.5;
        let zero = CMatrix::zeros(2, 2);
        let r = contains_support(&zero, d, 128, 1e-8).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Inside);

        let fact = ellipse_extremal(d);
        let r = contains_support(&fact, d, 256, 1e-6).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Boundary);
        assert!(r.margin.abs() < 1e-6);

        let big = CMatrix::identity(2).scale_re(1.0 + d + 0.1);
        let r = contains_support(&big, d, 256, 1e-8).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Outside);
        // Witness angle is near 0 (or equivalently near 2 pi).
        let wa = r.witness_angle.min((2.0 * std::f64::consts::PI - r.witness_angle).abs());
        assert!(wa < 0.1, "witness angle {}", r.witness_angle);
    }

    #[test]
    fn herglotz_accepts_zero_and_boundary_case() {
        let d = 0.3;
        assert!(contains_herglotz(&CMatrix::zeros(2, 2), d, 256, 1e-10).unwrap());
        assert!(contains_herglotz(&ellipse_extremal(0.5), 0.5, 256, 1e-8).unwrap());
    }

    #[test]
    fn boundary_invariants_convexity_and_support_consistency() {
        let d = 0.4;
        let t = ellipse_extremal(d);
        let b = range_boundary(&t, 128).unwrap();
        let n = b.points.len();
        // Each point attains its support value.
        for ((&theta, &s), &w) in b.angles.iter().zip(b.support_values.iter()).zip(b.points.iter())
        {
            let attained = (Complex64::from_polar(1.0, -theta) * w).re;
            assert!((attained - s).abs() < 1e-10);
        }
        // Consecutive edge cross-products keep one sign: convexity.
        let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
        let mut signs = 0i32;
        for k in 0..n {
            let e1 = b.points[(k + 1) % n] - b.points[k];
            let e2 = b.points[(k + 2) % n] - b.points[(k + 1) % n];
            let c = cross(e1, e2);
            if c.abs() > 1e-12 {
                if signs == 0 {
                    signs = c.signum() as i32;
                } else {
                    assert_eq!(c.signum() as i32, signs, "convexity broken at {k}");
                }
            }
        }
    }

    #[test]
    fn herglotz_singular_resolvent_on_boundary_spectrum() {
        // An eigenvalue on the boundary ellipse makes T - f(z) singular
        // at the corresponding circle point.
        let d = 0.3;
        let t = CMatrix::diagonal(&[c(1.0 + d, 0.0), c(0.0, 0.0)]);
        match contains_herglotz(&t, d, 256, 1e-8) {
            Err(Error::SingularResolvent { .. }) => {}
            other => panic!("expected a singular resolvent, got {other:?}"),
        }
    }

    #[test]
    fn herglotz_rejects_exterior_spectrum() {
        let d = 0.3;
        let t = CMatrix::diagonal(&[c(1.2 * (1.0 + d), 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            contains_herglotz(&t, d, 128, 1e-8),
            Err(Error::SpectrumOutside { .. })
        ));
    }

    #[test]
    fn herglotz_false_for_interior_spectrum_but_big_range() {
        // Spectrum at the origin, numerical range well outside.
        let d = 0.2;
        let t = CMatrix::from_real(&[&[0.0, 6.0], &[0.0, 0.0]]).unwrap();
        assert!(!contains_herglotz(&t, d, 256, 1e-8).unwrap());
    }

    #[test]
    fn monotone_scaling_preserves_inside() {
        let d = 0.4;
        let t = CMatrix::from_rows(&[
            vec![c(0.2, 0.1), c(0.3, 0.0)],
            vec![c(0.0, -0.2), c(-0.1, 0.25)],
        ])
        .unwrap();
        let base = contains_support(&t, d, 128, 1e-8).unwrap();
        assert_eq!(base.verdict, InclusionVerdict::Inside);
        for &s in &[0.75, 0.5, 0.25, 0.0] {
            let r = contains_support(&t.scale_re(s), d, 128, 1e-8).unwrap();
            assert_eq!(r.verdict, InclusionVerdict::Inside);
        }
    }

    #[test]
    fn berger_reduction_at_delta_zero() {
        let t = CMatrix::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        // w(T) = 1 exactly: the sweep sees the boundary case.
        let r = contains_support(&t, 0.0, 256, 1e-6).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Boundary);
        let r = contains_support(&t.scale_re(0.9), 0.0, 256, 1e-6).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Inside);
        let r = contains_support(&t.scale_re(1.1), 0.0, 256, 1e-6).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Outside);
    }
}
