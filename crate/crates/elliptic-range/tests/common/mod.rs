//! Shared instance generation for the integration suites.
#![allow(dead_code)] // each suite uses its own subset of the helpers
//!
//! Instances are drawn deterministically from seeded ChaCha streams and
//! post-checked: strict support margin on the requested side and full
//! genericity, so every test exercises exactly the regime it claims.

use elliptic_range::dilation::is_generic;
use elliptic_range::geom::membership;
use elliptic_range::geom::Membership;
use elliptic_range::mats::CMatrix;
use elliptic_range::numrange::{contains_support, range_boundary};
use elliptic_range::Error;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn ginibre(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let scale = 1.0 / (2.0 * n as f64).sqrt();
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(gaussian(rng) * scale, gaussian(rng) * scale)
    })
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    elliptic_range::mats::orthonormalize_columns(&ginibre(rng, n)).unwrap()
}

/// Largest scale keeping the support sweep of `s T` inside the ellipse.
pub fn support_limit(t: &CMatrix, delta: f64) -> f64 {
    let boundary = range_boundary(t, 512).unwrap();
    let mut s = f64::INFINITY;
    for (&theta, &lam) in boundary.angles.iter().zip(boundary.support_values.iter()) {
        if lam > 1e-12 {
            s = s.min(elliptic_range::geom::support_function(theta, delta) / lam);
        }
    }
    s
}

/// Largest scale keeping the spectrum of `s T` strictly inside.
pub fn spectral_limit(t: &CMatrix, delta: f64) -> f64 {
    let spec = elliptic_range::mats::spectrum(t, 1e-10).unwrap();
    let a = 1.0 + delta;
    let b = 1.0 - delta;
    let mut s = f64::INFINITY;
    for mu in spec {
        let q = (mu.re / a).powi(2) + (mu.im / b).powi(2);
        if q > 1e-20 {
            s = s.min(1.0 / q.sqrt());
        }
    }
    s
}

/// A generic matrix whose support margin is strictly on the requested
/// side, `|margin| >= 1.2e-3`. Returns the matrix and its measured margin.
pub fn generic_with_margin(
    rng: &mut ChaCha8Rng,
    n: usize,
    delta: f64,
    inside: bool,
) -> (CMatrix, f64) {
    for _attempt in 0..400 {
        let raw = ginibre(rng, n);
        let s_support = support_limit(&raw, delta);
        if !s_support.is_finite() {
            continue;
        }
        let eta = rng.gen_range(3e-3..3e-2);
        let s = if inside {
            s_support * (1.0 - eta)
        } else {
            let s_spec = spectral_limit(&raw, delta) * 0.995;
            let candidate = s_support * (1.0 + eta);
            if candidate >= s_spec {
                continue;
            }
            candidate
        };
        let t = raw.scale_re(s);
        let report = contains_support(&t, delta, 512, 0.0).unwrap();
        if inside && report.margin < 1.2e-3 {
            continue;
        }
        if !inside && report.margin > -1.2e-3 {
            continue;
        }
        if !inside {
            // The Herglotz test needs the spectrum inside the closed set.
            let spec = elliptic_range::mats::spectrum(&t, 1e-10).unwrap();
            if spec
                .iter()
                .any(|&mu| membership(mu, delta, 1e-9).unwrap() == Membership::Exterior)
            {
                continue;
            }
        }
        match is_generic(&t, delta, 1e-8) {
            Ok(rep) if rep.generic => return (t, report.margin),
            Ok(_) => continue,
            Err(Error::Domain(_)) => panic!("delta out of range in generator"),
            Err(_) => continue,
        }
    }
    panic!("could not generate a margin-{inside} instance at n = {n}, delta = {delta}");
}

/// Random Hermitian contraction; `edge` forces an eigenvalue onto +-1.
pub fn hermitian_contraction(rng: &mut ChaCha8Rng, n: usize, edge: bool) -> CMatrix {
    let raw = ginibre(rng, n).hermitian_part();
    let norm = elliptic_range::mats::operator_norm(&raw).unwrap().max(1e-9);
    if edge {
        raw.scale_re(1.0 / norm)
    } else {
        raw.scale_re(rng.gen_range(0.1..0.95) / norm)
    }
}

/// Random (not necessarily Hermitian) contraction.
pub fn contraction(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let raw = ginibre(rng, n);
    let norm = elliptic_range::mats::operator_norm(&raw).unwrap().max(1e-9);
    raw.scale_re(rng.gen_range(0.2..1.0) / norm)
}

/// Random Douglas-Paulsen matrix via SVD synthesis.
pub fn random_dp(rng: &mut ChaCha8Rng, n: usize, delta: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let sv: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(delta..1.0), 0.0))
        .collect();
    u.matmul(&CMatrix::diagonal(&sv)).matmul(&v.adjoint())
}
