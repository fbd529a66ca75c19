//! Error types shared across the crate.

use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the domain of an operation (λ = 0 for the Zhukovskii
    /// map, |t| too large for the maximal-disc radius, and so on).
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix dimensions do not match what the operation requires.
    #[error("shape error: {0}")]
    Shape(String),

    /// The eigenvalue iteration did not converge.
    #[error("eigenvalue iteration failed to converge after {iterations} iterations (off-diagonal residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Eigenvector residual exceeded the contract of `diagonalize`.
    #[error("eigendecomposition residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    EigenResidual { residual: f64, tolerance: f64 },

    /// Two eigenvalues are closer than the separation tolerance, so the
    /// input is non-generic and eigenvector-based constructions are refused.
    #[error("eigenvalue cluster: minimal gap {min_gap:.3e} <= separation tolerance {sep_tol:.3e}")]
    EigenvalueCluster { min_gap: f64, sep_tol: f64 },

    /// A matrix that must be invertible is numerically singular.
    #[error("singular matrix: smallest pivot/singular value {value:.3e}")]
    Singular { value: f64 },

    /// The genericity test failed; the reason names the failed clause.
    #[error("input is not generic: {0}")]
    NonGeneric(GenericityFailure),

    /// Some eigenvalue of the operator lies outside the elliptical set.
    #[error("spectrum outside the ellipse: eigenvalue {eigenvalue} is exterior for delta = {delta}")]
    SpectrumOutside { eigenvalue: Complex64, delta: f64 },

    /// `T - f(z)` was numerically singular at a circle grid point.
    #[error("singular resolvent at z = {at} (|pivot| = {pivot:.3e})")]
    SingularResolvent { at: Complex64, pivot: f64 },

    /// Feasibility solver ran out of its iteration budget between the
    /// feasibility and infeasibility thresholds.
    #[error("scaling solver stalled after {iterations} iterations: residual {residual:.3e} ({context})")]
    SolverStalled {
        iterations: usize,
        residual: f64,
        context: String,
    },

    /// A matrix required to be positive (semi)definite is not.
    #[error("matrix not positive definite: lambda_min = {lambda_min:.3e}")]
    NotPositive { lambda_min: f64 },

    /// A matrix required to be a contraction has norm greater than allowed.
    #[error("contraction violation: norm = {norm:.12} exceeds 1 + {slack:.3e}")]
    ContractionViolation { norm: f64, slack: f64 },

    /// `I - Y*Y` had an eigenvalue below the clamping tolerance.
    #[error("defect operator has negative eigenvalue {lambda_min:.3e} below -{tol:.3e}")]
    DefectSqrt { lambda_min: f64, tol: f64 },

    /// `Q` does not commute with `T` within tolerance.
    #[error("commutation residual {residual:.3e} exceeds {tolerance:.3e}")]
    Commutation { residual: f64, tolerance: f64 },

    /// `Q^2` is not `T^2 - 4*delta` within tolerance.
    #[error("square-root residual {residual:.3e} exceeds {tolerance:.3e}")]
    SqrtResidual { residual: f64, tolerance: f64 },

    /// A matrix fails one of the four germinator conditions.
    #[error("invalid germinator: {0}")]
    GerminatorInvalid(String),

    /// `X = C*J/sqrt(delta)` is not an involution within tolerance.
    #[error("involution residual {residual:.3e} exceeds {tolerance:.3e}")]
    Involution { residual: f64, tolerance: f64 },

    /// A matrix required to be Hermitian is not.
    #[error("matrix not Hermitian: asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    /// A matrix required to be a contraction is not (input validation).
    #[error("matrix is not a contraction: norm = {norm:.12}")]
    NotContraction { norm: f64 },

    /// Numerical-range inclusion failed where the operation requires it.
    #[error("inclusion infeasible: {0}")]
    Infeasible(String),
}

/// Which clause of the genericity definition failed.
#[derive(Debug, Clone, PartialEq)]
pub enum GenericityFailure {
    /// An eigenvalue lies strictly outside the closed elliptical set.
    SpectrumOutside { eigenvalue: Complex64 },
    /// Two eigenvalues coincide within the separation tolerance.
    RepeatedEigenvalue { min_gap: f64 },
    /// Some eigenvalue squared equals `4*delta` within the separation
    /// tolerance, so the two preimages under the covering map collide.
    FocalEigenvalue { eigenvalue: Complex64, distance: f64 },
}

impl std::fmt::Display for GenericityFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenericityFailure::SpectrumOutside { eigenvalue } => {
                write!(f, "eigenvalue {eigenvalue} lies outside the ellipse")
            }
            GenericityFailure::RepeatedEigenvalue { min_gap } => {
                write!(f, "repeated eigenvalue (minimal gap {min_gap:.3e})")
            }
            GenericityFailure::FocalEigenvalue {
                eigenvalue,
                distance,
            } => write!(
                f,
                "eigenvalue {eigenvalue} has mu^2 within {distance:.3e} of 4*delta"
            ),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
