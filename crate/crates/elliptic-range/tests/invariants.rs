//! Cross-module invariants that tie the independent routes together.

mod common;

use common::*;
use elliptic_range::ando::{ando_compose, germinator_from_certificate, germinator_split};
use elliptic_range::calcnorm::{pi_sharp, sample_bfd, DomainTag, PolyFn};
use elliptic_range::dilation::{
    find_scaling, make_prepair, z_matrix, BranchRule, ScalingOutcome, SolverOptions,
};
use elliptic_range::dpops::{dp_extend, dp_push};
use elliptic_range::mats::{
    operator_norm, poly_horner, sort_spectrum, spectrum, sqrt_and_inv_sqrt_pd, CMatrix,
};
use elliptic_range::numrange::range_boundary;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The boundary sweep of a normal matrix reproduces the convex hull of
/// its spectrum: support values match the spectral support function and
/// boundary points never overshoot it.
#[test]
fn normal_matrix_boundary_is_spectral_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    for _ in 0..10 {
        let n = rng.gen_range(2..=4);
        let eigs: Vec<Complex64> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = random_unitary(&mut rng, n);
        let t = u
            .matmul(&CMatrix::diagonal(&eigs))
            .matmul(&u.adjoint());
        let boundary = range_boundary(&t, 512).unwrap();
        for (&theta, (&s, point)) in boundary
            .angles
            .iter()
            .zip(boundary.support_values.iter().zip(boundary.points.iter()))
        {
            let phase = Complex64::from_polar(1.0, -theta);
            let hull_support = eigs
                .iter()
                .map(|&l| (phase * l).re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((s - hull_support).abs() < 1e-7, "support mismatch {s} vs {hull_support}");
            assert!((phase * point).re <= hull_support + 1e-7);
        }
    }
}

/// Constructed unitaries have operator norm 1 to near machine precision.
#[test]
fn unitaries_have_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    for n in [2usize, 3, 5, 8] {
        let u = random_unitary(&mut rng, n);
        assert!((operator_norm(&u).unwrap() - 1.0).abs() < 1e-10);
    }
}

/// Branch independence of the scaling condition: with `Z_B = J Z_A J`
/// and any weight `diag(1, Gamma)`, the scaled norms agree exactly, so
/// one Gamma certifies both branch choices of Q.
#[test]
fn scaled_norm_is_branch_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2003);
    let mut done = 0;
    while done < 50 {
        let n = 2 + done % 3;
        let delta = [0.2, 0.4, 0.6, 0.8][done % 4];
        let (t, _) = generic_with_margin(&mut rng, n, delta, done % 2 == 0);
        let pa = match make_prepair(&t, delta, BranchRule::Canonical) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let pb = make_prepair(&t, delta, BranchRule::Swapped).unwrap();
        let za = z_matrix(&t, &pa.q, delta).unwrap();
        let zb = z_matrix(&t, &pb.q, delta).unwrap();

        // Random Hermitian positive definite weight.
        let raw = ginibre(&mut rng, n);
        let gamma = raw
            .matmul(&raw.adjoint())
            .add(&CMatrix::identity(n).scale_re(0.3));
        let (root, inv_root) = sqrt_and_inv_sqrt_pd(&gamma, 0.0).unwrap();
        let id = CMatrix::identity(n);
        let w = CMatrix::direct_sum(&id, &root);
        let w_inv = CMatrix::direct_sum(&id, &inv_root);
        let nu_a = operator_norm(&w.matmul(&za).matmul(&w_inv)).unwrap();
        let nu_b = operator_norm(&w.matmul(&zb).matmul(&w_inv)).unwrap();
        assert!(
            (nu_a - nu_b).abs() < 1e-10 * (1.0 + nu_a),
            "branch-dependent norm: {nu_a} vs {nu_b}"
        );
        done += 1;
    }
}

/// The germinator spectrum is the prepair spectrum: the eigenvalues of
/// `C` are exactly the preimage pairs `lambda_i`, `delta/lambda_i`.
#[test]
fn germinator_spectrum_matches_prepair() {
    let mut rng = ChaCha8Rng::seed_from_u64(2004);
    let opts = SolverOptions::default();
    for &delta in &[0.25, 0.6] {
        let (t, _) = generic_with_margin(&mut rng, 2, delta, true);
        let cert = match find_scaling(&t, delta, &opts).unwrap() {
            ScalingOutcome::Feasible(cert) => cert,
            ScalingOutcome::Infeasible(_) => panic!("inside instance infeasible"),
        };
        let prepair = make_prepair(&t, delta, BranchRule::Canonical).unwrap();
        let germ = germinator_from_certificate(&t, delta, &prepair, &cert).unwrap();
        let mut expected: Vec<Complex64> = prepair
            .eigen_data
            .iter()
            .flat_map(|r| [r.lambda1, r.lambda2])
            .collect();
        sort_spectrum(&mut expected);
        let got = spectrum(&germ.c, 1e-10).unwrap();
        for (a, b) in got.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-8, "spectrum mismatch {a} vs {b}");
        }
        // Structural split keeps the advertised bounds on this instance.
        let split = germinator_split(&germ).unwrap();
        assert!(split.reconstruction_residual < 1e-8);
        let f_bound = 1.0 / delta.sqrt() - delta.sqrt();
        assert!(operator_norm(&split.f).unwrap() <= f_bound + 1e-8);
    }
}

/// Rayleigh-quotient soundness of the composition: for unit v and
/// `a = <Av, v>`, the composed operator satisfies
/// `|<Tv, v> - 2 sqrt(delta) a|^2 <= (1-delta)^2 (1 - a^2) + 1e-9`.
#[test]
fn compose_rayleigh_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2005);
    for i in 0..50 {
        let n = 2 + i % 3;
        let delta = 0.05 + 0.9 * ((i * 29 % 83) as f64 / 83.0);
        let a = hermitian_contraction(&mut rng, n, i % 6 == 0);
        let b = contraction(&mut rng, n);
        let t = ando_compose(&a, &b, delta).unwrap();
        for _ in 0..50 {
            let mut v: Vec<Complex64> = (0..n)
                .map(|_| c(gaussian(&mut rng), gaussian(&mut rng)))
                .collect();
            elliptic_range::mats::vec_normalize(&mut v);
            let tvv = t.rayleigh(&v);
            let avv = a.rayleigh(&v).re;
            let lhs = (tvv - 2.0 * delta.sqrt() * avv).norm_sqr();
            let rhs = (1.0 - delta).powi(2) * (1.0 - avv * avv);
            assert!(
                lhs <= rhs + 1e-9,
                "Rayleigh disc violated: {lhs} vs {rhs} (delta={delta})"
            );
        }
    }
}

/// Restriction to an invariant block never increases polynomial norms:
/// `|p(T)| <= |p(pi(X))| + 1e-8` for the extension witness.
#[test]
fn extension_never_shrinks_polynomial_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2006);
    let mut done = 0;
    while done < 20 {
        let delta = [0.3, 0.5, 0.7][done % 3];
        let (t, _) = generic_with_margin(&mut rng, 2, delta, true);
        let witness = dp_extend(&t, delta).unwrap();
        let pushed = dp_push(&witness.x, delta).unwrap();
        let degree = rng.gen_range(1..=6usize);
        let coeffs: Vec<Complex64> = (0..=degree)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let lhs = operator_norm(&poly_horner(&t, &coeffs)).unwrap();
        let rhs = operator_norm(&poly_horner(&pushed, &coeffs)).unwrap();
        assert!(lhs <= rhs + 1e-8, "restriction grew the norm: {lhs} vs {rhs}");
        done += 1;
    }
}

/// The dp estimate dominates the bfd estimate when the extension image
/// of the bfd witness is injected into the dp pool: the inequality
/// mechanism of the norm isometry, in sampled form.
#[test]
fn dp_pool_with_extension_witness_dominates_bfd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2007);
    let delta = 0.4;
    for _ in 0..5 {
        let degree = rng.gen_range(1..=4usize);
        let coeffs: Vec<Complex64> = (0..=degree)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let phi = PolyFn::new(coeffs.clone(), DomainTag::GDelta);
        let psi = pi_sharp(&phi, delta);

        // A strict-interior generic witness evaluated through phi.
        let (t, _) = generic_with_margin(&mut rng, 2, delta, true);
        let bfd_value = operator_norm(&poly_horner(&t, &coeffs)).unwrap();
        let witness = dp_extend(&t, delta).unwrap();
        let dp_value = operator_norm(&psi.eval_matrix(&witness.x).unwrap()).unwrap();
        assert!(
            bfd_value <= dp_value + 1e-7,
            "injected dp value {dp_value} below bfd value {bfd_value}"
        );
    }
}

/// Monotonicity of the sampled estimator under pool growth with a
/// shared seed prefix, and exact determinism of repeated runs.
#[test]
fn sampled_estimates_are_monotone_and_deterministic() {
    let phi = PolyFn::new(vec![c(0.2, 0.0), c(1.0, 0.0), c(0.0, 0.5)], DomainTag::GDelta);
    let small = sample_bfd(&phi, 0.35, 2, 30, 9001).unwrap();
    let large = sample_bfd(&phi, 0.35, 2, 90, 9001).unwrap();
    assert!(large.lower_bound >= small.lower_bound);
    let replay = sample_bfd(&phi, 0.35, 2, 90, 9001).unwrap();
    assert_eq!(large.lower_bound.to_bits(), replay.lower_bound.to_bits());
    assert_eq!(large.samples_used, replay.samples_used);
}
