//! Germinators and the elliptical Ando parametrization.
//!
//! A `(delta, H)`-germinator is a `2n x 2n` contraction `C` with `2n`
//! distinct eigenvalues, `delta C^{-1} = J C J` for `J = diag(1, -1)`
//! blockwise, and invertible 1-2 block. Germinators encode the operators
//! with numerical range in `K_delta` through `T = (C + delta C^{-1})`
//! restricted to the first block, and factor them as
//!
//! `T = 2 sqrt(delta) A + (1 - delta) sqrt(1+A) B sqrt(1-A)`
//!
//! with `A = A^*`, `|A| <= 1`, `|B| <= 1`.

use num_complex::Complex64;

use crate::dilation::{
    find_scaling, make_prepair, z_matrix, BranchRule, DilationCertificate, Prepair, ScalingOutcome,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::mats::{
    complete_orthonormal, operator_norm, sigma_min, spectrum, sqrt_and_inv_sqrt_pd, sqrt_psd,
    unitary_polar_factor, CMatrix, DEFAULT_SEP_TOL,
};
use crate::numrange::{contains_support, InclusionVerdict, DEFAULT_NUM_ANGLES};

/// A validated `(delta, H)`-germinator with block access.
#[derive(Debug, Clone)]
pub struct Germinator {
    pub c: CMatrix,
    pub delta: f64,
}

impl Germinator {
    pub fn block_dim(&self) -> usize {
        self.c.nrows() / 2
    }

    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let n = self.block_dim();
        self.c.block(i * n, j * n, n, n)
    }

    pub fn c11(&self) -> CMatrix {
        self.block(0, 0)
    }

    pub fn c12(&self) -> CMatrix {
        self.block(0, 1)
    }

    pub fn c21(&self) -> CMatrix {
        self.block(1, 0)
    }

    pub fn c22(&self) -> CMatrix {
        self.block(1, 1)
    }
}

/// Tolerances for germinator validation.
#[derive(Debug, Clone, Copy)]
pub struct GerminatorTols {
    /// Slack on the contraction bound.
    pub norm: f64,
    /// Eigenvalue separation for the distinctness condition.
    pub sep: f64,
    /// Residual bound on `delta C^{-1} - J C J`.
    pub symmetry: f64,
    /// Lower bound on the smallest singular value of the 1-2 block.
    pub invertibility: f64,
}

impl Default for GerminatorTols {
    fn default() -> Self {
        GerminatorTols {
            norm: 1e-8,
            sep: DEFAULT_SEP_TOL,
            symmetry: 1e-8,
            invertibility: 1e-8,
        }
    }
}

/// Validation outcome; `reasons` names every failed condition.
#[derive(Debug, Clone)]
pub struct GerminatorReport {
    pub valid: bool,
    pub reasons: Vec<String>,
    pub norm: f64,
    pub min_eigen_gap: f64,
    pub symmetry_residual: f64,
    pub c12_sigma_min: f64,
}

/// Check the four germinator conditions.
pub fn validate_germinator(
    c: &CMatrix,
    delta: f64,
    tols: GerminatorTols,
) -> Result<GerminatorReport> {
    let two_n = c.dim()?;
    if !two_n.is_multiple_of(2) || two_n == 0 {
        return Err(Error::Shape("germinators act on H + H".into()));
    }
    let n = two_n / 2;
    let smin = sigma_min(c)?;
    if smin <= tols.invertibility * 1e-4 {
        return Err(Error::Singular { value: smin });
    }
    let mut reasons = Vec::new();

    let norm = operator_norm(c)?;
    if norm > 1.0 + tols.norm {
        reasons.push(format!("|C| = {norm:.12} exceeds 1"));
    }

    let values = spectrum(c, tols.sep)?;
    let mut min_gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            min_gap = min_gap.min((values[i] - values[j]).norm());
        }
    }
    if values.len() > 1 && min_gap <= tols.sep {
        reasons.push(format!(
            "eigenvalues not distinct: min gap {min_gap:.3e}"
        ));
    }

    let cinv = c.inverse()?;
    let j = CMatrix::direct_sum(&CMatrix::identity(n), &CMatrix::identity(n).scale_re(-1.0));
    let symmetry_residual = cinv
        .scale_re(delta)
        .sub(&j.matmul(c).matmul(&j))
        .max_abs();
    if symmetry_residual > tols.symmetry {
        reasons.push(format!(
            "delta C^-1 - J C J residual {symmetry_residual:.3e}"
        ));
    }

    let c12_sigma_min = sigma_min(&c.block(0, n, n, n))?;
    if c12_sigma_min <= tols.invertibility {
        reasons.push(format!(
            "1-2 block numerically singular: sigma_min {c12_sigma_min:.3e}"
        ));
    }

    Ok(GerminatorReport {
        valid: reasons.is_empty(),
        reasons,
        norm,
        min_eigen_gap: min_gap,
        symmetry_residual,
        c12_sigma_min,
    })
}

/// Build the germinator `C = diag(1, S) Z_T diag(1, S)^{-1}` with
/// `S = Gamma^{1/2}` from a feasible scaling certificate; blockwise
/// `C = [[T, Q S^{-1}], [S Q, S T S^{-1}]] / 2`.
pub fn germinator_from_certificate(
    t: &CMatrix,
    delta: f64,
    prepair: &Prepair,
    cert: &DilationCertificate,
) -> Result<Germinator> {
    let n = t.dim()?;
    let (s, s_inv) = sqrt_and_inv_sqrt_pd(&cert.gamma, 0.0)?;
    let z = z_matrix(t, &prepair.q, delta)?;
    let mut w = CMatrix::identity(2 * n);
    w.set_block(n, n, &s);
    let mut w_inv = CMatrix::identity(2 * n);
    w_inv.set_block(n, n, &s_inv);
    let c = w.matmul(&z).matmul(&w_inv);

    let report = validate_germinator(&c, delta, GerminatorTols::default())?;
    if !report.valid {
        return Err(Error::GerminatorInvalid(report.reasons.join("; ")));
    }
    // First block of C + delta C^{-1} must reproduce T (and 2 C11 = T).
    let scale = operator_norm(t)?.max(1.0);
    let c11_residual = c.block(0, 0, n, n).scale_re(2.0).sub(t).max_abs();
    if c11_residual > 1e-8 * scale {
        return Err(Error::GerminatorInvalid(format!(
            "2 C11 - T residual {c11_residual:.3e}"
        )));
    }
    let pi_c = c.add(&c.inverse()?.scale_re(delta));
    let restriction_residual = pi_c.block(0, 0, n, n).sub(t).max_abs();
    if restriction_residual > 1e-7 * scale {
        return Err(Error::GerminatorInvalid(format!(
            "restriction residual {restriction_residual:.3e}"
        )));
    }
    Ok(Germinator { c, delta })
}

/// Output of the structural split of a germinator.
#[derive(Debug, Clone)]
pub struct GerminatorSplit {
    /// Hermitian contraction `A = V1^* V1 - V2^* V2`.
    pub a: CMatrix,
    /// `F` with `|F| <= 1/sqrt(delta) - sqrt(delta)`, reconstructing
    /// `C11 = sqrt(delta) (A + sqrt(1+A) F sqrt(1-A) / 2)`.
    pub f: CMatrix,
    /// Residual of that reconstruction identity.
    pub reconstruction_residual: f64,
}

/// Split a germinator along the involution `X = C J / sqrt(delta)`.
///
/// The +1 eigenspace of `X` (computed by eigendecomposition, eigenvalues
/// rounded to the nearest of -1 and +1) and its orthogonal complement
/// carry the isometry `V = [V1; V2]`; `A = V1^* V1 - V2^* V2` and `F`
/// comes from the polar factors of `V1`, `V2`.
pub fn germinator_split(g: &Germinator) -> Result<GerminatorSplit> {
    let two_n = g.c.dim()?;
    let n = two_n / 2;
    let delta = g.delta;
    let root_delta = delta.sqrt();
    let j = CMatrix::direct_sum(&CMatrix::identity(n), &CMatrix::identity(n).scale_re(-1.0));
    let x = g.c.matmul(&j).scale_re(1.0 / root_delta);

    let involution_residual = x.matmul(&x).sub(&CMatrix::identity(two_n)).max_abs();
    let tol = 1e-7 * (1.0 + x.frobenius_norm());
    if involution_residual > tol {
        return Err(Error::Involution {
            residual: involution_residual,
            tolerance: tol,
        });
    }

    let q_plus = plus_eigenspace_basis(&x, n)?;
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|k| q_plus.column(k)).collect();
    complete_orthonormal(&mut cols, two_n);
    let mut q_perp = CMatrix::zeros(two_n, n);
    for (k, col) in cols[n..].iter().enumerate() {
        q_perp.set_column(k, col);
    }

    // Coordinates of the embedding H = H + 0 in the split basis.
    let incl = CMatrix::vstack(&CMatrix::identity(n), &CMatrix::zeros(n, n));
    let v1 = q_plus.adjoint().matmul(&incl);
    let v2 = q_perp.adjoint().matmul(&incl);
    let a = v1
        .adjoint()
        .matmul(&v1)
        .sub(&v2.adjoint().matmul(&v2))
        .hermitian_part();

    let e_block = q_plus.adjoint().matmul(&x).matmul(&q_perp);
    let e_bound = 1.0 / root_delta - root_delta;
    let e_norm = operator_norm(&e_block)?;
    if e_norm > e_bound + 1e-6 {
        return Err(Error::GerminatorInvalid(format!(
            "split block norm {e_norm:.12} exceeds 1/sqrt(delta) - sqrt(delta) = {e_bound:.12}"
        )));
    }

    let u1 = unitary_polar_factor(&v1)?;
    let u2 = unitary_polar_factor(&v2)?;
    let f = u1.adjoint().matmul(&e_block).matmul(&u2);

    let id = CMatrix::identity(n);
    let sqrt_plus = sqrt_psd(&id.add(&a), 1e-8)?;
    let sqrt_minus = sqrt_psd(&id.sub(&a), 1e-8)?;
    let rebuilt = a
        .add(&sqrt_plus.matmul(&f).matmul(&sqrt_minus).scale_re(0.5))
        .scale_re(root_delta);
    let reconstruction_residual = rebuilt.sub(&g.c11()).max_abs();

    Ok(GerminatorSplit {
        a,
        f,
        reconstruction_residual,
    })
}

/// Orthonormal basis of the +1 eigenspace of the involution `X`.
///
/// Primary route: eigendecomposition of `X` with eigenvalues rounded to
/// the nearer of -1 and +1 (threshold 1/2), followed by an SVD span
/// extraction of the +1 cluster. The +-1 eigenvalues are numerically
/// clustered, so when the eigenbasis degenerates the spectral projection
/// `(1 + X)/2` supplies the subspace directly: its left singular vectors
/// with nonvanishing singular values span `ker(1 - X)` exactly.
fn plus_eigenspace_basis(x: &CMatrix, expected_dim: usize) -> Result<CMatrix> {
    let two_n = x.nrows();
    let via_eigen = (|| -> Result<CMatrix> {
        let (values, vectors, _) = crate::mats::schur_eig(x)?;
        let mut basis = CMatrix::zeros(two_n, expected_dim);
        let mut count = 0usize;
        for (k, &lam) in values.iter().enumerate() {
            let to_plus = (lam - Complex64::new(1.0, 0.0)).norm();
            let to_minus = (lam + Complex64::new(1.0, 0.0)).norm();
            if to_plus.min(to_minus) > 0.5 {
                return Err(Error::Involution {
                    residual: to_plus.min(to_minus),
                    tolerance: 0.5,
                });
            }
            if to_plus < to_minus {
                if count == expected_dim {
                    return Err(Error::Involution {
                        residual: (count + 1) as f64,
                        tolerance: expected_dim as f64,
                    });
                }
                basis.set_column(count, &vectors.column(k));
                count += 1;
            }
        }
        if count != expected_dim {
            return Err(Error::Involution {
                residual: count as f64,
                tolerance: expected_dim as f64,
            });
        }
        let sv = crate::mats::svd(&basis)?;
        if sv.sigma[expected_dim - 1] < 1e-6 * sv.sigma[0].max(1e-300) {
            return Err(Error::Singular {
                value: sv.sigma[expected_dim - 1],
            });
        }
        Ok(sv.u.block(0, 0, two_n, expected_dim))
    })();
    if let Ok(q) = via_eigen {
        return Ok(q);
    }
    let proj = x.add(&CMatrix::identity(two_n)).scale_re(0.5);
    let sv = crate::mats::svd(&proj)?;
    let rank = sv.sigma.iter().filter(|&&s| s > 0.5).count();
    if rank != expected_dim {
        return Err(Error::Involution {
            residual: rank as f64,
            tolerance: expected_dim as f64,
        });
    }
    Ok(sv.u.block(0, 0, two_n, expected_dim))
}

/// Hermitian contraction `A` and contraction `B` composing to `T`.
#[derive(Debug, Clone)]
pub struct AndoFactors {
    pub a: CMatrix,
    pub b: CMatrix,
    pub delta: f64,
}

/// `T = 2 sqrt(delta) A + (1-delta) sqrt(1+A) B sqrt(1-A)` for a
/// self-adjoint contraction `A` and a contraction `B`.
pub fn ando_compose(a: &CMatrix, b: &CMatrix, delta: f64) -> Result<CMatrix> {
    let n = a.dim()?;
    if b.dim()? != n {
        return Err(Error::Shape("A and B must share a dimension".into()));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must be in [0,1), got {delta}")));
    }
    let defect = a.hermitian_defect();
    if defect > 1e-10 * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let norm_a = operator_norm(a)?;
    if norm_a > 1.0 + 1e-10 {
        return Err(Error::NotContraction { norm: norm_a });
    }
    let norm_b = operator_norm(b)?;
    if norm_b > 1.0 + 1e-10 {
        return Err(Error::NotContraction { norm: norm_b });
    }
    let id = CMatrix::identity(n);
    let sqrt_plus = sqrt_psd(&id.add(a), 1e-8)?;
    let sqrt_minus = sqrt_psd(&id.sub(a), 1e-8)?;
    Ok(a
        .scale_re(2.0 * delta.sqrt())
        .add(&sqrt_plus.matmul(b).matmul(&sqrt_minus).scale_re(1.0 - delta)))
}

/// Factor a generic `T` with `W(T)` in `K_delta` through the pipeline
/// scaling certificate -> germinator -> split, with
/// `B = sqrt(delta)/(1-delta) F`.
pub fn ando_factor(t: &CMatrix, delta: f64) -> Result<AndoFactors> {
    ando_factor_with(t, delta, &SolverOptions::default())
}

pub fn ando_factor_with(t: &CMatrix, delta: f64, opts: &SolverOptions) -> Result<AndoFactors> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!(
            "factorization requires delta in (0,1), got {delta}"
        )));
    }
    let support = contains_support(t, delta, DEFAULT_NUM_ANGLES, 1e-8)?;
    if support.verdict == InclusionVerdict::Outside {
        return Err(Error::Infeasible(format!(
            "support test outside at angle {:.6} with margin {:.3e}",
            support.witness_angle, support.margin
        )));
    }
    let cert = match find_scaling(t, delta, opts)? {
        ScalingOutcome::Feasible(cert) => cert,
        ScalingOutcome::Infeasible(report) => {
            return Err(Error::Infeasible(format!(
                "no scaling certificate: best residual {:.3e}, best norm {:.12}",
                report.best_residual, report.best_norm
            )))
        }
    };
    let prepair = make_prepair(t, delta, BranchRule::Canonical)?;
    let germ = germinator_from_certificate(t, delta, &prepair, &cert)?;
    let split = germinator_split(&germ)?;
    let mut b = split.f.scale_re(delta.sqrt() / (1.0 - delta));
    // Certificate noise can push |B| an epsilon past 1; pulling it back
    // onto the ball perturbs the reconstruction by the same epsilon,
    // well inside the advertised tolerance. Larger excess is a bug.
    let norm_b = operator_norm(&b)?;
    if norm_b > 1.0 {
        if norm_b > 1.0 + 1e-6 {
            return Err(Error::ContractionViolation {
                norm: norm_b,
                slack: 1e-6,
            });
        }
        b = b.scale_re(1.0 / norm_b);
    }
    Ok(AndoFactors {
        a: split.a,
        b,
        delta,
    })
}
