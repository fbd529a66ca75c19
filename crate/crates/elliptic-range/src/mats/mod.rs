//! Dense complex-matrix kernel: spectra, diagonalization, operator norm and
//! eigenvector-based functional calculus.

use num_complex::Complex64;

use crate::error::{Error, Result};

mod cmatrix;
mod hermitian;
mod schur;

pub use cmatrix::{vec_dot, vec_norm, vec_normalize, CMatrix, Lu};
pub use hermitian::{
    complete_orthonormal, eigh, eigh_max, eigh_min, orthonormalize_columns, sqrt_and_inv_sqrt_pd,
    sqrt_psd, svd, unitary_polar_factor, Svd,
};
pub use schur::{eig as schur_eig, schur};

/// Absolute-plus-relative tolerance, `atol + rtol * scale`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            atol: 1e-10,
            rtol: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn scaled(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }
}

/// Default separation tolerance for eigenvalue-gap checks.
pub const DEFAULT_SEP_TOL: f64 = 1e-8;

/// Eigendecomposition of a diagonalizable matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in canonical (Re, Im)-lexicographic order.
    pub values: Vec<Complex64>,
    /// Matching unit eigenvectors as columns.
    pub vectors: CMatrix,
    /// Largest column residual `|T v - lambda v|` over unit eigenvectors.
    pub residual: f64,
    /// Condition number of the eigenvector matrix.
    pub vector_condition: f64,
}

fn lex_le(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap()
        .then(a.im.partial_cmp(&b.im).unwrap())
}

/// Sort eigenvalues by (Re, Im); every downstream enumeration inherits this.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|&a, &b| lex_le(a, b));
}

/// Eigenvalues with multiplicity in canonical order.
pub fn spectrum(t: &CMatrix, _tol: f64) -> Result<Vec<Complex64>> {
    t.dim()?;
    t.ensure_finite()?;
    let (mut values, _, _) = schur::eig(t)?;
    sort_spectrum(&mut values);
    Ok(values)
}

/// Largest singular value.
pub fn operator_norm(t: &CMatrix) -> Result<f64> {
    t.ensure_finite()?;
    let gram = if t.nrows() >= t.ncols() {
        t.adjoint().matmul(t)
    } else {
        t.matmul(&t.adjoint())
    };
    let (values, _) = eigh(&gram)?;
    Ok(values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(t: &CMatrix) -> Result<f64> {
    t.dim()?;
    let gram = t.adjoint().matmul(t);
    let (values, _) = eigh(&gram)?;
    Ok(values.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

fn min_pairwise_gap(values: &[Complex64]) -> f64 {
    let mut min_gap = f64::INFINITY;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            min_gap = min_gap.min((a - b).norm());
        }
    }
    min_gap
}

/// Full eigendecomposition, rejecting inputs whose spectrum is clustered.
///
/// Non-generic inputs are rejected rather than regularized; perturbation is
/// an explicit caller action.
pub fn diagonalize(t: &CMatrix, sep_tol: f64) -> Result<EigenDecomposition> {
    let n = t.dim()?;
    t.ensure_finite()?;
    let (raw_values, raw_vectors, _) = schur::eig(t)?;

    let min_gap = min_pairwise_gap(&raw_values);
    if n > 1 && min_gap <= sep_tol {
        return Err(Error::EigenvalueCluster { min_gap, sep_tol });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lex_le(raw_values[i], raw_values[j]));
    let values: Vec<Complex64> = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw_vectors.column(src));
    }

    let scale = operator_norm(t)?.max(1e-300);
    let mut residual = 0.0f64;
    for (j, &lambda) in values.iter().enumerate() {
        let v = vectors.column(j);
        let tv = t.matvec(&v);
        let r: f64 = tv
            .iter()
            .zip(v.iter())
            .map(|(x, y)| (x - lambda * y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r);
    }
    let tolerance = 1e-10 * scale;
    if residual > tolerance {
        return Err(Error::EigenResidual {
            residual,
            tolerance,
        });
    }

    let sv = svd(&vectors)?;
    let smin = sv.sigma.last().copied().unwrap_or(0.0);
    let vector_condition = if smin > 0.0 {
        sv.sigma[0] / smin
    } else {
        f64::INFINITY
    };
    if !vector_condition.is_finite() {
        return Err(Error::Singular { value: smin });
    }

    Ok(EigenDecomposition {
        values,
        vectors,
        residual,
        vector_condition,
    })
}

/// Functional calculus `f(T) = V diag(f(lambda)) V^{-1}` on diagonalizable
/// matrices. Exact on diagonal inputs.
pub fn apply_function(
    t: &CMatrix,
    f: impl Fn(Complex64) -> Complex64,
    sep_tol: f64,
) -> Result<CMatrix> {
    let n = t.dim()?;
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    // Diagonal fast path keeps the "exact on diagonal matrices" contract.
    let mut is_diag = true;
    'scan: for i in 0..n {
        for j in 0..n {
            if i != j && t[(i, j)] != Complex64::new(0.0, 0.0) {
                is_diag = false;
                break 'scan;
            }
        }
    }
    if is_diag {
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            let w = f(t[(i, i)]);
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::Domain(format!(
                    "function undefined at eigenvalue {}",
                    t[(i, i)]
                )));
            }
            out[(i, i)] = w;
        }
        return Ok(out);
    }

    let decomp = diagonalize(t, sep_tol)?;
    let mut fvals = Vec::with_capacity(n);
    for &lambda in &decomp.values {
        let w = f(lambda);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::Domain(format!(
                "function undefined at eigenvalue {lambda}"
            )));
        }
        fvals.push(w);
    }
    let v = &decomp.vectors;
    let mut scaled = v.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] *= fvals[j];
        }
    }
    let vinv = v.inverse()?;
    Ok(scaled.matmul(&vinv))
}

/// Polynomial evaluation in matrix arithmetic (Horner); the independent
/// route against which the functional calculus is cross-checked.
pub fn poly_horner(t: &CMatrix, coeffs: &[Complex64]) -> CMatrix {
    let n = t.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = acc.matmul(t);
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}
