//! Hermitian eigensolver, positive-semidefinite square roots and the SVD.
//!
//! Cyclic complex Jacobi is used throughout: at the dimensions this crate
//! works with (a few dozen at most) it is simple, backward stable and
//! accurate to a few ulps, which the certificate tolerances rely on.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mats::cmatrix::{vec_dot, vec_norm, CMatrix};

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; `vectors` is unitary with eigenvectors as columns.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.dim()?;
    a.ensure_finite()?;
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        let off = off.sqrt();
        if off <= scale * 1e-15 * (n as f64) {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                residual: off,
            });
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= scale * 1e-18 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / b;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns rotate by R with R[p][p]=c, R[p][q]=s*phase,
                // R[q][p]=-s*conj(phase), R[q][q]=c; update M <- R^* M R.
                let s_ph = phase * s;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * s_ph.conj();
                    m[(k, q)] = mkp * s_ph + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * s_ph;
                    m[(q, k)] = mpk * s_ph.conj() + mqk * c;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * s_ph.conj();
                    v[(k, q)] = vkp * s_ph + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok((values, vectors))
}

/// Largest eigenvalue with a unit eigenvector of a Hermitian matrix.
pub fn eigh_max(a: &CMatrix) -> Result<(f64, Vec<Complex64>)> {
    let (values, vectors) = eigh(a)?;
    let n = values.len();
    Ok((values[n - 1], vectors.column(n - 1)))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn eigh_min(a: &CMatrix) -> Result<f64> {
    Ok(eigh(a)?.0[0])
}

/// PSD square root with eigenvalue clamping.
///
/// Eigenvalues in `[-clamp_tol, 0)` are treated as rounding noise and
/// clamped to zero; anything below `-clamp_tol` is an error.
pub fn sqrt_psd(a: &CMatrix, clamp_tol: f64) -> Result<CMatrix> {
    let (values, v) = eigh(a)?;
    if let Some(&worst) = values.first() {
        if worst < -clamp_tol {
            return Err(Error::NotPositive { lambda_min: worst });
        }
    }
    let roots: Vec<Complex64> = values
        .iter()
        .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0))
        .collect();
    Ok(rebuild(&v, &roots))
}

/// `A^{1/2}` and `A^{-1/2}` of a positive definite matrix in one sweep.
pub fn sqrt_and_inv_sqrt_pd(a: &CMatrix, floor: f64) -> Result<(CMatrix, CMatrix)> {
    let (values, v) = eigh(a)?;
    if values[0] <= floor {
        return Err(Error::NotPositive {
            lambda_min: values[0],
        });
    }
    let roots: Vec<Complex64> = values
        .iter()
        .map(|&l| Complex64::new(l.sqrt(), 0.0))
        .collect();
    let inv_roots: Vec<Complex64> = values
        .iter()
        .map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0))
        .collect();
    Ok((rebuild(&v, &roots), rebuild(&v, &inv_roots)))
}

fn rebuild(v: &CMatrix, diag: &[Complex64]) -> CMatrix {
    let n = v.nrows();
    let mut w = v.clone();
    for j in 0..n {
        for i in 0..n {
            w[(i, j)] *= diag[j];
        }
    }
    w.matmul(&v.adjoint())
}

/// Singular value decomposition `A = U diag(sigma) V^*`.
///
/// `sigma` descends; `u` is `m x m` unitary, `v` is `n x n` unitary.
/// Columns of `u` beyond the numerical rank come from a deterministic
/// pivoted orthonormal completion.
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    let m = a.nrows();
    let n = a.ncols();
    let gram = a.adjoint().matmul(a);
    let (mut values, vecs) = eigh(&gram)?;
    for l in values.iter_mut() {
        *l = l.max(0.0);
    }
    // eigh ascends; singular values descend.
    let order: Vec<usize> = (0..n).rev().collect();
    let sigma: Vec<f64> = order.iter().map(|&i| values[i].sqrt()).collect();
    let mut v = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        v.set_column(dst, &vecs.column(src));
    }

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = sigma_max * 1e-13 + 1e-300;
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    for (j, &s) in sigma.iter().enumerate().take(m.min(n)) {
        if s > cutoff {
            let mut col = a.matvec(&v.column(j));
            for z in col.iter_mut() {
                *z /= s;
            }
            // One reorthogonalization pass keeps U unitary to working
            // precision even for clustered singular values.
            gram_schmidt_step(&u_cols, &mut col);
            vec_normalize_checked(&mut col);
            u_cols.push(col);
        }
    }
    complete_orthonormal(&mut u_cols, m);
    let mut u = CMatrix::zeros(m, m);
    for (j, col) in u_cols.iter().enumerate() {
        u.set_column(j, col);
    }
    Ok(Svd { u, sigma, v })
}

fn gram_schmidt_step(basis: &[Vec<Complex64>], col: &mut [Complex64]) {
    for b in basis {
        let coeff = vec_dot(col, b);
        for (x, y) in col.iter_mut().zip(b.iter()) {
            *x -= coeff * y;
        }
    }
}

fn vec_normalize_checked(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 1e-300 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

/// Extend `cols` to an orthonormal basis of C^m.
///
/// Candidates are the standard basis vectors; at each step the candidate
/// with the largest residual is taken (column pivoting), which makes the
/// completion deterministic.
pub fn complete_orthonormal(cols: &mut Vec<Vec<Complex64>>, m: usize) {
    while cols.len() < m {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for k in 0..m {
            let mut cand = vec![Complex64::new(0.0, 0.0); m];
            cand[k] = Complex64::new(1.0, 0.0);
            gram_schmidt_step(cols, &mut cand);
            let r = vec_norm(&cand);
            if best.as_ref().is_none_or(|(br, _)| r > *br + 1e-15) {
                best = Some((r, cand));
            }
        }
        let (_, mut col) = best.expect("nonempty candidate set");
        gram_schmidt_step(cols, &mut col);
        vec_normalize_checked(&mut col);
        cols.push(col);
    }
}

/// Orthonormalize the columns of a full-column-rank matrix (MGS, two passes).
pub fn orthonormalize_columns(a: &CMatrix) -> Result<CMatrix> {
    let m = a.nrows();
    let k = a.ncols();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut col = a.column(j);
        gram_schmidt_step(&cols, &mut col);
        gram_schmidt_step(&cols, &mut col);
        let nrm = vec_norm(&col);
        if nrm < 1e-12 * a.frobenius_norm().max(1.0) {
            return Err(Error::Singular { value: nrm });
        }
        for z in col.iter_mut() {
            *z /= nrm;
        }
        cols.push(col);
    }
    let mut q = CMatrix::zeros(m, k);
    for (j, col) in cols.iter().enumerate() {
        q.set_column(j, col);
    }
    Ok(q)
}

/// Unitary polar factor of a square matrix via full SVD (`A = U P` with
/// `U = W Z^*`); rank-deficient directions get the pivoted completion.
pub fn unitary_polar_factor(a: &CMatrix) -> Result<CMatrix> {
    let d = svd(a)?;
    Ok(d.u.matmul(&d.v.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigh_diagonalizes_pauli_like_matrix() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let (vals, vecs) = eigh(&a).unwrap();
        let s2 = 2.0f64.sqrt();
        assert!((vals[0] + s2).abs() < 1e-14);
        assert!((vals[1] - s2).abs() < 1e-14);
        let recon = vecs
            .matmul(&CMatrix::diagonal(&[c(vals[0], 0.0), c(vals[1], 0.0)]))
            .matmul(&vecs.adjoint());
        assert!(recon.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let b = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(0.5, 0.5)],
            vec![c(0.5, -0.5), c(1.0, 0.0)],
        ])
        .unwrap();
        let r = sqrt_psd(&b, 1e-12).unwrap();
        assert!(r.matmul(&r).sub(&b).max_abs() < 1e-13);
    }

    #[test]
    fn sqrt_psd_clamps_but_rejects_genuine_negativity() {
        let nearly = CMatrix::diagonal(&[c(1.0, 0.0), c(-1e-14, 0.0)]);
        assert!(sqrt_psd(&nearly, 1e-12).is_ok());
        let negative = CMatrix::diagonal(&[c(1.0, 0.0), c(-1e-3, 0.0)]);
        assert!(matches!(
            sqrt_psd(&negative, 1e-12),
            Err(Error::NotPositive { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn eigh_reconstructs_and_orders(entries in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let a = CMatrix::from_fn(4, 4, |i, j| {
                Complex64::new(entries[i * 4 + j], entries[16 + i * 4 + j])
            })
            .hermitian_part();
            let (vals, vecs) = eigh(&a).unwrap();
            proptest::prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let recon = {
                let d = CMatrix::diagonal(
                    &vals.iter().map(|&l| c(l, 0.0)).collect::<Vec<_>>(),
                );
                vecs.matmul(&d).matmul(&vecs.adjoint())
            };
            proptest::prop_assert!(recon.sub(&a).max_abs() < 1e-13 * (1.0 + a.frobenius_norm()));
            let vv = vecs.adjoint().matmul(&vecs);
            proptest::prop_assert!(vv.sub(&CMatrix::identity(4)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn svd_of_rank_deficient_matrix_completes_u() {
        let a = CMatrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let d = svd(&a).unwrap();
        assert!((d.sigma[0] - 6.0f64.sqrt()).abs() < 1e-12);
        assert!(d.sigma[1].abs() < 1e-12);
        let utu = d.u.adjoint().matmul(&d.u);
        assert!(utu.sub(&CMatrix::identity(3)).max_abs() < 1e-12);
        let rebuilt = {
            let mut s = CMatrix::zeros(3, 2);
            for (i, &sv) in d.sigma.iter().enumerate() {
                s[(i, i)] = c(sv, 0.0);
            }
            d.u.matmul(&s).matmul(&d.v.adjoint())
        };
        assert!(rebuilt.sub(&a).max_abs() < 1e-12);
    }
}
