//! Douglas-Paulsen operators: recognition, push-forward under
//! `pi(X) = X + delta X^{-1}`, extension of an operator with numerical
//! range in `K_delta` to `pi(X)` on the doubled space, and the
//! counterexample showing `pi` is not onto.
//!
//! `X` is Douglas-Paulsen with parameter `delta` when `|X| <= 1` and
//! `|X^{-1}| <= 1/delta`, i.e. its singular values lie in `[delta, 1]`.

use num_complex::Complex64;

use crate::ando::germinator_from_certificate;
use crate::dilation::{find_scaling, make_prepair, BranchRule, ScalingOutcome, SolverOptions};
use crate::error::{Error, Result};
use crate::mats::{operator_norm, sigma_min, CMatrix};
use crate::numrange::{hausdorff_to_ellipse, range_boundary};

/// Outcome of the Douglas-Paulsen membership test with margins.
#[derive(Debug, Clone, Copy)]
pub struct DpCheck {
    pub is_dp: bool,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `1 + tol - sigma_max`; nonnegative when the norm condition holds.
    pub norm_margin: f64,
    /// `sigma_min - (delta - tol)`; nonnegative when the inverse
    /// condition holds.
    pub inverse_margin: f64,
}

/// Extension witness: `X` on `H + H` with `pi(X)` block diagonal and
/// first block `T`.
#[derive(Debug, Clone)]
pub struct DpWitness {
    pub x: CMatrix,
    pub norm_x: f64,
    pub norm_x_inv: f64,
    /// `|pi(X)|_{11} - T|`.
    pub restriction_residual: f64,
    /// Largest off-diagonal block entry of `pi(X)`; the vanishing
    /// lower-left block makes the first block invariant.
    pub off_diagonal_residual: f64,
}

/// Report of the `pi`-is-not-onto demonstration.
#[derive(Debug, Clone)]
pub struct Fact103Report {
    pub delta: f64,
    /// `T = 2 [[sqrt(delta), 1-delta], [0, -sqrt(delta)]]`, whose
    /// numerical range is exactly `K_delta`.
    pub t: CMatrix,
    /// The unique `pi`-preimage of `T`, from the eigenvector formula.
    pub x: CMatrix,
    /// Deviation of `x` from the closed form
    /// `[[sqrt(delta), 4 delta/(1-delta)], [0, -sqrt(delta)]]`.
    pub closed_form_residual: f64,
    /// `|pi(X) - T|` for the formula-derived preimage. The eigenvector
    /// formula is exact only at the parameter where the norm criterion
    /// changes sign; this residual equals
    /// `2 |1 - 6 delta + delta^2| / (1 - delta)` and is reported rather
    /// than hidden.
    pub preimage_residual: f64,
    pub norm_x: f64,
    /// `1 - 6 delta + delta^2`; `X` is Douglas-Paulsen iff nonnegative.
    pub dp_criterion: f64,
    pub is_dp: bool,
    /// Hausdorff distance between the computed boundary of `W(T)` and
    /// `Gamma_delta`.
    pub boundary_hausdorff: f64,
}

/// Singular-value test `sigma_max <= 1 + tol`, `sigma_min >= delta - tol`.
pub fn is_douglas_paulsen(x: &CMatrix, delta: f64, tol: f64) -> Result<DpCheck> {
    x.dim()?;
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!(
            "Douglas-Paulsen parameter must be in (0,1), got {delta}"
        )));
    }
    let smax = operator_norm(x)?;
    let smin = sigma_min(x)?;
    Ok(DpCheck {
        is_dp: smax <= 1.0 + tol && smin >= delta - tol,
        sigma_max: smax,
        sigma_min: smin,
        norm_margin: 1.0 + tol - smax,
        inverse_margin: smin - (delta - tol),
    })
}

/// `pi(X) = X + delta X^{-1}`; `W(pi(X))` lies in `K_delta` for every
/// Douglas-Paulsen `X`.
pub fn dp_push(x: &CMatrix, delta: f64) -> Result<CMatrix> {
    let check = is_douglas_paulsen(x, delta, 1e-8)?;
    if !check.is_dp {
        return Err(Error::Domain(format!(
            "not a Douglas-Paulsen operator: sigma_max = {:.12}, sigma_min = {:.12}",
            check.sigma_max, check.sigma_min
        )));
    }
    if check.sigma_min <= 1e-14 {
        return Err(Error::Singular {
            value: check.sigma_min,
        });
    }
    Ok(x.add(&x.inverse()?.scale_re(delta)))
}

/// Extend a strictly-interior generic `T` to `pi(X)` on `H + H`: `X` is
/// the germinator of the scaling certificate, `|X| <= 1`,
/// `|X^{-1}| <= 1/delta` (the J-symmetry gives `|delta X^{-1}| = |X|`),
/// and `pi(X) = T (+) S T S^{-1}`.
pub fn dp_extend(t: &CMatrix, delta: f64) -> Result<DpWitness> {
    dp_extend_with(t, delta, &SolverOptions::default())
}

pub fn dp_extend_with(t: &CMatrix, delta: f64, opts: &SolverOptions) -> Result<DpWitness> {
    let n = t.dim()?;
    let cert = match find_scaling(t, delta, opts)? {
        ScalingOutcome::Feasible(cert) => cert,
        ScalingOutcome::Infeasible(report) => {
            return Err(Error::Infeasible(format!(
                "numerical range not strictly inside the ellipse: best residual {:.3e}",
                report.best_residual
            )))
        }
    };
    let prepair = make_prepair(t, delta, BranchRule::Canonical)?;
    let germ = germinator_from_certificate(t, delta, &prepair, &cert)?;
    let x = germ.c;
    let norm_x = operator_norm(&x)?;
    let x_inv = x.inverse()?;
    let norm_x_inv = operator_norm(&x_inv)?;
    let pi_x = x.add(&x_inv.scale_re(delta));
    let restriction_residual = pi_x.block(0, 0, n, n).sub(t).max_abs();
    let off_diagonal_residual = pi_x
        .block(n, 0, n, n)
        .max_abs()
        .max(pi_x.block(0, n, n, n).max_abs());
    Ok(DpWitness {
        x,
        norm_x,
        norm_x_inv,
        restriction_residual,
        off_diagonal_residual,
    })
}

/// The pi-is-not-onto demonstration: `W(T) = K_delta` exactly, and the
/// matrix `X` derived from the eigenvector formula
/// `v1 = (1, 0)`, `v2 = (2, sqrt(delta) - 1/sqrt(delta))` has `|X| > 1`
/// whenever `1 - 6 delta + delta^2 < 0`.
///
/// `T` is non-generic (its eigenvalues are the focal values), so `X` is
/// computed symbolically rather than through the certificate pipeline;
/// that inapplicability is the point. The report also carries the
/// residual of the pi-relation for this `X`: the formula satisfies
/// `pi(X) = T` exactly only at `delta = 3 - 2 sqrt(2)` (the actual
/// solution of `pi(X) = T` is `T/2`, a boundary Douglas-Paulsen matrix),
/// and the residual is reported so nothing is silently asserted.
pub fn fact103_demo(delta: f64) -> Result<Fact103Report> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    let r = delta.sqrt();
    let t = CMatrix::from_real(&[&[2.0 * r, 2.0 * (1.0 - delta)], &[0.0, -2.0 * r]])?;

    // Eigenvectors of T for +-2 sqrt(delta); the preimage eigenvalues
    // +-sqrt(delta) are forced, being the unique preimages of the foci.
    let v = CMatrix::from_real(&[&[1.0, 2.0], &[0.0, r - 1.0 / r]])?;
    let x = v
        .matmul(&CMatrix::diagonal(&[
            Complex64::new(r, 0.0),
            Complex64::new(-r, 0.0),
        ]))
        .matmul(&v.inverse()?);

    let closed = CMatrix::from_real(&[&[r, 4.0 * delta / (1.0 - delta)], &[0.0, -r]])?;
    let closed_form_residual = x.sub(&closed).max_abs();
    let preimage_residual = x.add(&x.inverse()?.scale_re(delta)).sub(&t).max_abs();
    let norm_x = operator_norm(&x)?;
    let dp_criterion = 1.0 - 6.0 * delta + delta * delta;
    let check = is_douglas_paulsen(&x, delta, 1e-8)?;

    // Resolution chosen so polyline discretization stays below 1e-6.
    let boundary = range_boundary(&t, 16_384)?;
    let boundary_hausdorff = hausdorff_to_ellipse(&boundary, delta, 32_768);

    Ok(Fact103Report {
        delta,
        t,
        x,
        closed_form_residual,
        preimage_residual,
        norm_x,
        dp_criterion,
        is_dp: check.is_dp,
        boundary_hausdorff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numrange::{contains_support, InclusionVerdict};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let raw = CMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        crate::mats::orthonormalize_columns(&raw).unwrap()
    }

    fn random_dp(rng: &mut ChaCha8Rng, n: usize, delta: f64) -> CMatrix {
        let u = random_unitary(rng, n);
        let v = random_unitary(rng, n);
        let sv: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(delta + 1e-3..1.0 - 1e-3), 0.0))
            .collect();
        u.matmul(&CMatrix::diagonal(&sv)).matmul(&v.adjoint())
    }

    #[test]
    fn scaled_unitaries_are_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let delta = 0.4;
        for &r in &[delta, (delta + 1.0) / 2.0, 1.0] {
            let x = random_unitary(&mut rng, 3).scale_re(r);
            let check = is_douglas_paulsen(&x, delta, 1e-10).unwrap();
            assert!(check.is_dp, "radius {r}");
        }
        let too_small = random_unitary(&mut rng, 3).scale_re(delta / 2.0);
        assert!(!is_douglas_paulsen(&too_small, delta, 1e-10).unwrap().is_dp);
    }

    #[test]
    fn extremal_preimage_dp_only_for_small_delta() {
        // 1 - 6 delta + delta^2 changes sign at delta = 3 - 2 sqrt(2).
        let x_of = |d: f64| {
            CMatrix::from_real(&[&[d.sqrt(), 4.0 * d / (1.0 - d)], &[0.0, -d.sqrt()]]).unwrap()
        };
        assert!(!is_douglas_paulsen(&x_of(0.5), 0.5, 1e-10).unwrap().is_dp);
        assert!(is_douglas_paulsen(&x_of(0.1), 0.1, 1e-10).unwrap().is_dp);
    }

    #[test]
    fn push_of_scalar_and_unitary() {
        let delta = 0.3;
        let lam = c(0.8, 0.0);
        let x = CMatrix::identity(2).scale(lam);
        let t = dp_push(&x, delta).unwrap();
        let pi = lam + delta / lam;
        assert!(t.sub(&CMatrix::identity(2).scale(pi)).max_abs() < 1e-14);

        // X unitary: T = X + delta X^*, inclusion holds.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary(&mut rng, 3);
        let t = dp_push(&u, delta).unwrap();
        assert!(t.sub(&u.add(&u.adjoint().scale_re(delta))).max_abs() < 1e-12);
        let verdict = contains_support(&t, delta, 256, 1e-8).unwrap().verdict;
        assert!(verdict != InclusionVerdict::Outside);
    }

    #[test]
    fn push_inclusion_on_random_dp_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let delta = 0.35;
        for _ in 0..100 {
            let x = random_dp(&mut rng, 3, delta);
            let t = dp_push(&x, delta).unwrap();
            let verdict = contains_support(&t, delta, 128, 1e-8).unwrap().verdict;
            assert!(verdict != InclusionVerdict::Outside);
        }
    }

    #[test]
    fn push_rejects_non_dp_input() {
        let delta = 0.5;
        let x = CMatrix::identity(2).scale_re(1.5);
        assert!(matches!(dp_push(&x, delta), Err(Error::Domain(_))));
    }

    #[test]
    fn extend_round_trip_and_bounds() {
        let delta = 0.3;
        let t = CMatrix::from_rows(&[
            vec![c(0.25, 0.1), c(0.2, 0.0)],
            vec![c(0.0, -0.1), c(-0.3, 0.15)],
        ])
        .unwrap();
        let w = dp_extend(&t, delta).unwrap();
        assert!(w.norm_x <= 1.0 + 1e-8, "|X| = {}", w.norm_x);
        assert!(
            w.norm_x_inv <= 1.0 / delta + 1e-8,
            "|X^-1| = {}",
            w.norm_x_inv
        );
        assert!(w.restriction_residual < 1e-7);
        assert!(w.off_diagonal_residual < 1e-8);
        // delta X^{-1} is itself a contraction (J-symmetry transfer).
        let dxinv = w.x.inverse().unwrap().scale_re(delta);
        assert!(operator_norm(&dxinv).unwrap() <= 1.0 + 1e-8);
        // Push of the witness restricted to the first block reproduces T.
        let pushed = dp_push(&w.x, delta).unwrap();
        assert!(pushed.block(0, 0, 2, 2).sub(&t).max_abs() < 1e-7);
    }

    #[test]
    fn extend_rejects_outside_range() {
        let delta = 0.2;
        let t = CMatrix::diagonal(&[c(1.5, 0.0), c(0.2, 0.3)]);
        assert!(matches!(dp_extend(&t, delta), Err(Error::Infeasible(_))));
    }

    #[test]
    fn fact103_report_values() {
        // delta = 1/2: not DP, criterion -1.75.
        let rep = fact103_demo(0.5).unwrap();
        assert!(!rep.is_dp);
        assert!((rep.dp_criterion + 1.75).abs() < 1e-12);
        assert!(rep.closed_form_residual < 1e-12);
        assert!(rep.boundary_hausdorff < 1e-6);
        // The pi-relation residual of the formula-derived X equals
        // 2 |1 - 6 delta + delta^2| / (1 - delta).
        let expected = 2.0 * rep.dp_criterion.abs() / (1.0 - 0.5);
        assert!((rep.preimage_residual - expected).abs() < 1e-12);

        // delta = 3 - 2 sqrt(2): the boundary case, |X| = 1, and the
        // formula preimage is exact there.
        let d_star = 3.0 - 2.0 * 2.0f64.sqrt();
        let rep = fact103_demo(d_star).unwrap();
        assert!(rep.dp_criterion.abs() < 1e-12);
        assert!((rep.norm_x - 1.0).abs() < 1e-8);
        assert!(rep.preimage_residual < 1e-10);

        // Small delta: X is Douglas-Paulsen.
        let rep = fact103_demo(0.05).unwrap();
        assert!(rep.is_dp);
        assert!(rep.dp_criterion > 0.0);
    }
}
