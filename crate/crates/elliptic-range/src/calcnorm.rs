//! Function representations on `G_delta` and `R_delta`, the pullback
//! under `pi`, sampled lower bounds for the bfd and dp calcular norms,
//! and the Delyon upper bound.
//!
//! The bfd family consists of operators whose numerical-range closure
//! lies in `G_delta`; the dp family of Douglas-Paulsen operators with
//! spectrum in the annulus. Suprema over either family restrict to
//! matrices, so norm "computation" here is an honest sampled lower bound
//! plus the universal upper bound `kappa(G_delta) sup |phi|`; no
//! convergence rate is claimed.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dpops::dp_extend;
use crate::error::{Error, Result};
use crate::geom::{support_function, EllipseParams};
use crate::mats::{
    apply_function, operator_norm, orthonormalize_columns, spectrum, CMatrix, DEFAULT_SEP_TOL,
};
use crate::numrange::range_boundary;

/// Domain a polynomial is meant to be evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    GDelta,
    Disc,
}

/// Polynomial with ascending complex coefficients.
#[derive(Debug, Clone)]
pub struct PolyFn {
    pub coeffs: Vec<Complex64>,
    pub domain: DomainTag,
}

impl PolyFn {
    pub fn new(coeffs: Vec<Complex64>, domain: DomainTag) -> Self {
        PolyFn { coeffs, domain }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }
}

/// Laurent polynomial with finite support, evaluable on the annulus.
#[derive(Debug, Clone)]
pub struct LaurentFn {
    pub coeffs: BTreeMap<i64, Complex64>,
    pub delta: f64,
}

impl LaurentFn {
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&k, &c) in &self.coeffs {
            acc += c * lambda.powi(k as i32);
        }
        acc
    }

    /// `psi(X)` by matrix powers; negative exponents use `X^{-1}`.
    pub fn eval_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        let n = x.dim()?;
        let mut acc = CMatrix::zeros(n, n);
        let max_pos = self.coeffs.keys().copied().max().unwrap_or(0).max(0) as usize;
        let max_neg = (-self.coeffs.keys().copied().min().unwrap_or(0)).max(0) as usize;
        let mut pow = CMatrix::identity(n);
        for k in 0..=max_pos as i64 {
            if let Some(&c) = self.coeffs.get(&k) {
                acc = acc.add(&pow.scale(c));
            }
            if k < max_pos as i64 {
                pow = pow.matmul(x);
            }
        }
        if max_neg > 0 {
            let inv = x.inverse()?;
            let mut pow = inv.clone();
            for k in 1..=max_neg as i64 {
                if let Some(&c) = self.coeffs.get(&(-k)) {
                    acc = acc.add(&pow.scale(c));
                }
                if k < max_neg as i64 {
                    pow = pow.matmul(&inv);
                }
            }
        }
        Ok(acc)
    }
}

/// Certified lower bound for a calcular norm, with the witness matrix.
#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub lower_bound: f64,
    pub witness: CMatrix,
    pub samples_used: usize,
    pub seed: u64,
}

/// Pullback `pi^sharp(phi)(lambda) = phi(lambda + delta/lambda)` expanded
/// into a Laurent polynomial: the term `a_k (lambda + delta/lambda)^k`
/// contributes `a_k C(k,j) delta^j` to the exponent `k - 2j`.
pub fn pi_sharp(phi: &PolyFn, delta: f64) -> LaurentFn {
    let mut coeffs: BTreeMap<i64, Complex64> = BTreeMap::new();
    for (k, &a) in phi.coeffs.iter().enumerate() {
        if a.norm() == 0.0 {
            continue;
        }
        let mut binom = 1.0f64;
        let mut delta_pow = 1.0f64;
        for j in 0..=k {
            let contrib = a * (binom * delta_pow);
            let exponent = k as i64 - 2 * j as i64;
            *coeffs.entry(exponent).or_insert(Complex64::new(0.0, 0.0)) += contrib;
            binom *= (k - j) as f64 / (j + 1) as f64;
            delta_pow *= delta;
        }
    }
    coeffs.retain(|_, c| c.norm() > 0.0);
    LaurentFn { coeffs, delta }
}

/// Coefficient form of the involution symmetry:
/// `coeff(-k) = delta^k coeff(k)` for every `k`.
pub fn is_symmetric(psi: &LaurentFn, delta: f64, tol: f64) -> bool {
    let scale = psi
        .coeffs
        .values()
        .map(|c| c.norm())
        .fold(1.0f64, f64::max);
    let max_k = psi
        .coeffs
        .keys()
        .map(|k| k.abs())
        .max()
        .unwrap_or(0);
    for k in 1..=max_k {
        let plus = psi
            .coeffs
            .get(&k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        let minus = psi
            .coeffs
            .get(&(-k))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0));
        if (minus - plus * delta.powi(k as i32)).norm() > tol * scale {
            return false;
        }
    }
    true
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the first uniform is kept away from zero.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn ginibre(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let scale = 1.0 / (2.0 * n as f64).sqrt();
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(gaussian(rng) * scale, gaussian(rng) * scale)
    })
}

/// Largest scaling putting `W(s T)` strictly inside `G_delta`, from the
/// support sweep; returns 0 for the zero matrix.
fn inscribe_scale(t: &CMatrix, delta: f64, num_angles: usize) -> Result<f64> {
    let boundary = range_boundary(t, num_angles)?;
    let mut s = f64::INFINITY;
    for (&theta, &lam) in boundary.angles.iter().zip(boundary.support_values.iter()) {
        if lam > 1e-14 {
            s = s.min(support_function(theta, delta) / lam);
        }
    }
    if !s.is_finite() {
        return Ok(0.0);
    }
    Ok(s * (1.0 - 1e-6))
}

/// `|phi(T)|` through the eigenvector functional calculus. A constant
/// polynomial evaluates to a scalar matrix, so its norm is exact.
pub fn bfd_norm_at(phi: &PolyFn, t: &CMatrix, sep_tol: f64) -> Result<f64> {
    if phi.coeffs.len() == 1 {
        t.dim()?;
        return Ok(phi.coeffs[0].norm());
    }
    let image = apply_function(t, |z| phi.eval(z), sep_tol)?;
    operator_norm(&image)
}

/// `|psi(X)|` by direct Laurent evaluation.
pub fn dp_norm_at(psi: &LaurentFn, x: &CMatrix) -> Result<f64> {
    operator_norm(&psi.eval_matrix(x)?)
}

fn evaluate_bfd_sample(
    phi: &PolyFn,
    t: &CMatrix,
    rng: &mut ChaCha8Rng,
) -> Option<f64> {
    let mut candidate = t.clone();
    for _attempt in 0..3 {
        match bfd_norm_at(phi, &candidate, 1e-12) {
            Ok(v) => return Some(v),
            Err(Error::EigenvalueCluster { .. }) | Err(Error::Singular { .. }) => {
                // Perturb toward a diagonalizable neighbor and retry.
                let n = candidate.nrows();
                let noise = CMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-9
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                candidate = candidate.add(&noise);
            }
            Err(_) => return None,
        }
    }
    None
}

/// Structured bfd injections: normal matrices with near-boundary spectra
/// and the scaled extremal triangular matrix whose numerical range is the
/// whole ellipse, all pulled strictly inside.
fn bfd_injections(delta: f64, n_dim: usize) -> Result<Vec<CMatrix>> {
    let params = EllipseParams::new(delta)?;
    let shrink = 1.0 - 1e-6;
    let mut pool = Vec::new();
    for rot in 0..3 {
        let diag: Vec<Complex64> = (0..n_dim)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI
                    * (j as f64 / n_dim as f64 + rot as f64 / 7.0);
                params.boundary_point(t) * shrink
            })
            .collect();
        pool.push(CMatrix::diagonal(&diag));
    }
    if n_dim >= 2 {
        let r = delta.sqrt();
        let fact =
            CMatrix::from_real(&[&[2.0 * r, 2.0 * (1.0 - delta)], &[0.0, -2.0 * r]])?;
        let embedded = if n_dim == 2 {
            fact
        } else {
            let rest: Vec<Complex64> = (0..n_dim - 2)
                .map(|j| params.boundary_point(1.0 + j as f64) * 0.5)
                .collect();
            CMatrix::direct_sum(&fact, &CMatrix::diagonal(&rest))
        };
        let s = inscribe_scale(&embedded, delta, 512)?;
        pool.push(embedded.scale_re(s));
    }
    Ok(pool)
}

/// Sampled lower bound of the bfd calcular norm
/// `sup |phi(T)|` over matrices with numerical-range closure in
/// `G_delta`. Deterministic for a fixed seed; the estimate is a running
/// maximum, so more samples with the same seed never decrease it.
pub fn sample_bfd(
    phi: &PolyFn,
    delta: f64,
    n_dim: usize,
    n_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if n_dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut witness = CMatrix::zeros(n_dim, n_dim);
    let mut used = 0usize;

    let consider = |t: CMatrix, rng: &mut ChaCha8Rng, best: &mut f64, witness: &mut CMatrix| {
        if let Some(v) = evaluate_bfd_sample(phi, &t, rng) {
            if v > *best {
                *best = v;
                *witness = t;
            }
        }
    };

    for t in bfd_injections(delta, n_dim)? {
        if used >= n_samples {
            break;
        }
        consider(t, &mut rng, &mut best, &mut witness);
        used += 1;
    }
    while used < n_samples {
        let raw = ginibre(&mut rng, n_dim);
        let s = inscribe_scale(&raw, delta, 512)?;
        consider(raw.scale_re(s), &mut rng, &mut best, &mut witness);
        used += 1;
    }
    if !best.is_finite() {
        return Err(Error::Domain(
            "no sample could be evaluated; polynomial may be degenerate".into(),
        ));
    }
    Ok(NormEstimate {
        lower_bound: best,
        witness,
        samples_used: used,
        seed,
    })
}

/// Structured dp injections: scaled unitaries and, in even dimensions,
/// the Douglas-Paulsen extension witness of a strictly-inside sample.
fn dp_injections(delta: f64, n_dim: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CMatrix>> {
    let mut pool = Vec::new();
    let radii = [1.0 - 1e-6, (1.0 + delta) / 2.0, delta + 1e-6];
    for &r in &radii {
        let u = orthonormalize_columns(&ginibre(rng, n_dim))?;
        pool.push(u.scale_re(r));
    }
    if n_dim >= 2 && n_dim.is_multiple_of(2) {
        let half = n_dim / 2;
        let raw = ginibre(rng, half);
        let s = inscribe_scale(&raw, delta, 512)?;
        if let Ok(w) = dp_extend(&raw.scale_re(0.9 * s), delta) {
            pool.push(w.x);
        }
    }
    Ok(pool)
}

/// Sampled lower bound of the dp calcular norm `sup |psi(X)|` over
/// Douglas-Paulsen matrices with spectrum in the annulus.
pub fn sample_dp(
    psi: &LaurentFn,
    delta: f64,
    n_dim: usize,
    n_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if n_dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta must be in (0,1), got {delta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut witness = CMatrix::zeros(n_dim, n_dim);
    let mut used = 0usize;

    let consider = |x: CMatrix, best: &mut f64, witness: &mut CMatrix| -> Result<()> {
        // The dp family requires the spectrum inside the open annulus.
        for lam in spectrum(&x, DEFAULT_SEP_TOL)? {
            let r = lam.norm();
            if r <= delta || r >= 1.0 {
                return Ok(());
            }
        }
        if let Ok(v) = dp_norm_at(psi, &x) {
            if v > *best {
                *best = v;
                *witness = x;
            }
        }
        Ok(())
    };

    for x in dp_injections(delta, n_dim, &mut rng)? {
        if used >= n_samples {
            break;
        }
        consider(x, &mut best, &mut witness)?;
        used += 1;
    }
    let eps = 1e-6;
    while used < n_samples {
        let u = orthonormalize_columns(&ginibre(&mut rng, n_dim))?;
        let v = orthonormalize_columns(&ginibre(&mut rng, n_dim))?;
        let sv: Vec<Complex64> = (0..n_dim)
            .map(|_| Complex64::new(rng.gen_range(delta + eps..1.0 - eps), 0.0))
            .collect();
        let x = u.matmul(&CMatrix::diagonal(&sv)).matmul(&v.adjoint());
        consider(x, &mut best, &mut witness)?;
        used += 1;
    }
    if !best.is_finite() {
        return Err(Error::Domain("no dp sample admitted".into()));
    }
    Ok(NormEstimate {
        lower_bound: best,
        witness,
        samples_used: used,
        seed,
    })
}

/// Delyon constant `kappa(G_delta) = 3 + (2 pi diam^2 / area)^3` with
/// `diam = 2(1+delta)` and `area = pi (1+delta)(1-delta)`.
pub fn delyon_bound(delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must be in [0,1), got {delta}")));
    }
    let diam = 2.0 * (1.0 + delta);
    let area = std::f64::consts::PI * (1.0 + delta) * (1.0 - delta);
    let ratio = 2.0 * std::f64::consts::PI * diam * diam / area;
    Ok(3.0 + ratio.powi(3))
}

/// `sup |phi|` over `G_delta`, taken on the boundary by the maximum
/// principle: dense parametric grid plus golden-section refinement.
pub fn sup_on_g_delta(phi: &PolyFn, delta: f64, grid: usize) -> Result<f64> {
    let params = EllipseParams::new(delta)?;
    let value = |t: f64| phi.eval(params.boundary_point(t)).norm();
    let n = grid.max(16);
    let mut best_t = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        let v = value(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let spacing = 2.0 * std::f64::consts::PI / (n as f64);
    let (mut lo, mut hi) = (best_t - spacing, best_t + spacing);
    let phi_ratio = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi_ratio * (hi - lo);
    let mut x2 = lo + phi_ratio * (hi - lo);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi_ratio * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi_ratio * (hi - lo);
            f1 = value(x1);
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Membership of `(s, p)` in the symmetrized bidisc:
/// `|s - conj(s) p| < 1 - |p|^2`. The slice `p = delta` is a copy of
/// `G_delta`.
pub fn bidisc_slice_member(s: Complex64, p: Complex64) -> bool {
    (s - s.conj() * p).norm() < 1.0 - p.norm_sqr()
}
