//! Dense complex nonsymmetric eigensolver.
//!
//! Householder reduction to upper Hessenberg form followed by implicit
//! single-shift QR with Wilkinson shifts, yielding a complex Schur form
//! `A = Q T Q^*`. Eigenvectors come from back-substitution on `T`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mats::cmatrix::{vec_norm, CMatrix};

const EPS: f64 = 2.220446049250313e-16;

/// Complex Schur decomposition `A = Q T Q^*` with `T` upper triangular.
pub struct Schur {
    pub q: CMatrix,
    pub t: CMatrix,
    pub iterations: usize,
}

pub fn schur(a: &CMatrix) -> Result<Schur> {
    let n = a.dim()?;
    a.ensure_finite()?;
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    if n > 2 {
        hessenberg(&mut h, &mut q);
    }
    let iterations = qr_iterate(&mut h, &mut q, n)?;
    // Clean the strictly lower part; it is rounding noise at this point.
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(Schur { q, t: h, iterations })
}

/// Eigenvalues and right eigenvectors, in Schur order (unsorted).
pub fn eig(a: &CMatrix) -> Result<(Vec<Complex64>, CMatrix, usize)> {
    let n = a.dim()?;
    if n == 1 {
        return Ok((vec![a[(0, 0)]], CMatrix::identity(1), 0));
    }
    let s = schur(a)?;
    let values: Vec<Complex64> = (0..n).map(|i| s.t[(i, i)]).collect();
    let x = triangular_eigenvectors(&s.t);
    let mut vectors = s.q.matmul(&x);
    for j in 0..n {
        let mut col = vectors.column(j);
        let nrm = vec_norm(&col);
        if nrm > 0.0 {
            for z in col.iter_mut() {
                *z /= nrm;
            }
        }
        vectors.set_column(j, &col);
    }
    Ok((values, vectors, s.iterations))
}

fn hessenberg(h: &mut CMatrix, q: &mut CMatrix) {
    let n = h.nrows();
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut x: Vec<Complex64> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let xnorm = vec_norm(&x);
        if xnorm <= EPS * h.frobenius_norm() {
            continue;
        }
        let alpha = if x[0].norm() > 0.0 {
            -(x[0] / x[0].norm()) * xnorm
        } else {
            Complex64::new(-xnorm, 0.0)
        };
        x[0] -= alpha;
        let vnorm2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 <= 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // Left: rows k+1.. of columns k.. ;  H <- P H
        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..m {
                dot += x[i].conj() * h[(k + 1 + i, j)];
            }
            dot *= tau;
            for i in 0..m {
                h[(k + 1 + i, j)] -= x[i] * dot;
            }
        }
        // Right: columns k+1.. of all rows;  H <- H P
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..m {
                dot += h[(i, k + 1 + j)] * x[j];
            }
            dot *= tau;
            for j in 0..m {
                h[(i, k + 1 + j)] -= dot * x[j].conj();
            }
        }
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..m {
                dot += q[(i, k + 1 + j)] * x[j];
            }
            dot *= tau;
            for j in 0..m {
                q[(i, k + 1 + j)] -= dot * x[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
        h[(k + 1, k)] = alpha;
    }
}

struct Givens {
    c: f64,
    s: Complex64,
}

fn givens(x: Complex64, y: Complex64) -> Givens {
    let xa = x.norm();
    let ya = y.norm();
    if ya == 0.0 {
        return Givens {
            c: 1.0,
            s: Complex64::new(0.0, 0.0),
        };
    }
    if xa == 0.0 {
        return Givens {
            c: 0.0,
            s: y.conj() / ya,
        };
    }
    let r = xa.hypot(ya);
    Givens {
        c: xa / r,
        s: (x / xa) * y.conj() / r,
    }
}

fn apply_left(h: &mut CMatrix, g: &Givens, k: usize, j_from: usize, j_to: usize) {
    for j in j_from..j_to {
        let a = h[(k, j)];
        let b = h[(k + 1, j)];
        h[(k, j)] = a * g.c + b * g.s;
        h[(k + 1, j)] = -a * g.s.conj() + b * g.c;
    }
}

fn apply_right(h: &mut CMatrix, g: &Givens, k: usize, i_from: usize, i_to: usize) {
    for i in i_from..i_to {
        let a = h[(i, k)];
        let b = h[(i, k + 1)];
        h[(i, k)] = a * g.c + b * g.s.conj();
        h[(i, k + 1)] = -a * g.s + b * g.c;
    }
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_iterate(h: &mut CMatrix, q: &mut CMatrix, n: usize) -> Result<usize> {
    if n < 2 {
        return Ok(0);
    }
    let norm = h.frobenius_norm().max(1e-300);
    let mut hi = n - 1;
    let mut total_iter = 0usize;
    let mut since_deflation = 0usize;
    let budget = 60 * n.max(4);
    loop {
        // Set negligible subdiagonals to zero.
        for i in 0..hi {
            let small = EPS * (h[(i, i)].norm() + h[(i + 1, i + 1)].norm()).max(EPS * norm);
            if h[(i + 1, i)].norm() <= small {
                h[(i + 1, i)] = Complex64::new(0.0, 0.0);
            }
        }
        // Deflate converged trailing eigenvalues.
        while hi > 0 && h[(hi, hi - 1)].norm() == 0.0 {
            hi -= 1;
            since_deflation = 0;
        }
        if hi == 0 {
            return Ok(total_iter);
        }
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }

        if total_iter >= budget {
            return Err(Error::NonConvergence {
                iterations: total_iter,
                residual: h[(hi, hi - 1)].norm() / norm,
            });
        }
        total_iter += 1;
        since_deflation += 1;

        let mu = if since_deflation.is_multiple_of(12) {
            // Exceptional shift to break symmetric stalls.
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h, hi)
        };

        // Implicit single-shift sweep over the active block [lo, hi].
        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let g = givens(x, y);
            let left_from = if k > lo { k - 1 } else { lo };
            apply_left(h, &g, k, left_from, n);
            apply_right(h, &g, k, 0, (k + 2 + 1).min(hi + 1));
            apply_right(q, &g, k, 0, n);
            if k + 2 <= hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
}

/// Right eigenvectors of an upper triangular matrix, one unit column per
/// diagonal entry, by back-substitution with small-denominator guards.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let norm = t.frobenius_norm().max(1.0);
    let smlnum = EPS * norm;
    let mut x = CMatrix::zeros(n, n);
    for j in 0..n {
        let lambda = t[(j, j)];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        col[j] = Complex64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                acc += t[(i, k)] * col[k];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smlnum {
                denom = if denom.norm() == 0.0 {
                    Complex64::new(smlnum, 0.0)
                } else {
                    denom * (smlnum / denom.norm())
                };
            }
            col[i] = -acc / denom;
            // Rescale on extreme growth to avoid overflow.
            let big = col[i].norm();
            if big > 1e250 {
                for z in col.iter_mut() {
                    *z /= big;
                }
            }
        }
        let nrm = vec_norm(&col);
        for z in col.iter_mut() {
            *z /= nrm;
        }
        x.set_column(j, &col);
    }
    x
}
