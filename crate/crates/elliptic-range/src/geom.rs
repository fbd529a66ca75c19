//! Geometry of the elliptical sets `K_delta`/`G_delta`, the annulus
//! `R_delta`, the Zhukovskii maps, support functions and maximal discs.
//!
//! `K_delta` is the closed set bounded by the ellipse with semi-axes
//! `1 + delta` (real direction) and `1 - delta` (imaginary direction);
//! its foci sit at `+-2 sqrt(delta)`. The map `pi(lambda) = lambda +
//! delta/lambda` covers `G_delta` twice from the annulus
//! `delta < |lambda| < 1`, and `f(z) = 1/z + delta z` satisfies
//! `f(z) = pi(1/z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Derived quantities of the elliptical set for a fixed `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub delta: f64,
    /// Semi-major axis, `1 + delta`.
    pub a: f64,
    /// Semi-minor axis, `1 - delta`.
    pub b: f64,
    /// Foci at `(+-focus, 0)`, `focus = 2 sqrt(delta)`.
    pub focus: f64,
    /// Inner radius of the annulus `R_delta`.
    pub annulus_inner: f64,
    /// Outer radius of the annulus `R_delta`.
    pub annulus_outer: f64,
}

impl EllipseParams {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Domain(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(EllipseParams {
            delta,
            a: 1.0 + delta,
            b: 1.0 - delta,
            focus: 2.0 * delta.sqrt(),
            annulus_inner: delta,
            annulus_outer: 1.0,
        })
    }

    /// Boundary point `(a cos t, b sin t)` of `Gamma_delta`.
    pub fn boundary_point(&self, t: f64) -> Complex64 {
        Complex64::new(self.a * t.cos(), self.b * t.sin())
    }
}

/// Position of a point relative to `K_delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

/// `pi(lambda) = lambda + delta/lambda`.
pub fn pi_map(lambda: Complex64, delta: f64) -> Result<Complex64> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("pi map undefined at lambda = 0".into()));
    }
    Ok(lambda + delta / lambda)
}

/// Zhukovskii map `f(z) = 1/z + delta z`; satisfies `f(z) = pi(1/z)`.
pub fn zhukovskii(z: Complex64, delta: f64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("Zhukovskii map undefined at z = 0".into()));
    }
    Ok(1.0 / z + z * delta)
}

/// Quadratic form `q(w) = x^2/(1+delta)^2 + y^2/(1-delta)^2` classifying
/// membership in `K_delta`. Classification tolerance applies to `q`, not to
/// Euclidean distance.
pub fn membership(w: Complex64, delta: f64, tol: f64) -> Result<Membership> {
    let p = EllipseParams::new(delta)?;
    let q = (w.re / p.a).powi(2) + (w.im / p.b).powi(2);
    Ok(if q < 1.0 - tol {
        Membership::Interior
    } else if q <= 1.0 + tol {
        Membership::Boundary
    } else {
        Membership::Exterior
    })
}

/// Support function `h(theta) = max { Re(e^{-i theta} w) : w in K_delta }`.
pub fn support_function(theta: f64, delta: f64) -> f64 {
    let a = 1.0 + delta;
    let b = 1.0 - delta;
    ((a * theta.cos()).powi(2) + (b * theta.sin()).powi(2)).sqrt()
}

/// Radius of the largest disc centered at `(t, 0)` inside `K_delta`.
///
/// Two branches with transition points `+-4 delta / (1 + delta)`: the inner
/// branch `(1-delta) sqrt(1 - t^2/(4 delta))` where the disc touches the
/// boundary twice, the outer branch `1 + delta - |t|`.
pub fn max_disc_radius(t: f64, delta: f64) -> Result<f64> {
    let p = EllipseParams::new(delta)?;
    if t.abs() > p.a {
        return Err(Error::Domain(format!(
            "|t| = {} exceeds the semi-major axis {}",
            t.abs(),
            p.a
        )));
    }
    let transition = 4.0 * delta / (1.0 + delta);
    if t.abs() <= transition {
        if t == 0.0 {
            return Ok(p.b);
        }
        Ok(p.b * (1.0 - t * t / (4.0 * delta)).max(0.0).sqrt())
    } else {
        Ok(p.a - t.abs())
    }
}

/// Focal-disc inclusion: for `|t| <= 2 sqrt(delta)`, the disc of radius
/// `(1-delta) sqrt(1 - t^2/(4 delta))` around `(t, 0)` lies in `K_delta`.
/// Returns whether `|z|` within that radius implies `t + z` is not exterior.
pub fn focal_disc_check(t: f64, z: Complex64, delta: f64, tol: f64) -> Result<bool> {
    let p = EllipseParams::new(delta)?;
    if t.abs() > p.focus {
        return Err(Error::Domain(format!(
            "|t| = {} exceeds the focal radius {}",
            t.abs(),
            p.focus
        )));
    }
    let radius = if t == 0.0 {
        p.b
    } else {
        p.b * (1.0 - t * t / (4.0 * delta)).max(0.0).sqrt()
    };
    if z.norm() > radius {
        return Ok(true);
    }
    Ok(membership(Complex64::new(t, 0.0) + z, delta, tol)? != Membership::Exterior)
}
