//! Operators with numerical range in an ellipse.
//!
//! For `delta` in `[0, 1)` let `K_delta` be the closed set bounded by the
//! ellipse with semi-axes `1 + delta` and `1 - delta` and foci at
//! `+-2 sqrt(delta)`. This crate decides whether the numerical range
//! `W(T)` of a dense complex matrix lies in `K_delta`, and when it does,
//! produces and verifies the constructive certificates that characterize
//! such operators:
//!
//! * two independent inclusion tests (a support-function sweep and a
//!   Herglotz-type positivity test on the unit circle),
//! * a scaling certificate `Gamma > 0` making the block operator `Z_T`
//!   similar to a contraction, together with the finite contractive
//!   realization `(E, Y)` of the resolvent identity and a unitary power
//!   dilation of `Y`,
//! * germinators and the elliptical Ando factorization
//!   `T = 2 sqrt(delta) A + (1-delta) sqrt(1+A) B sqrt(1-A)`,
//! * Douglas-Paulsen push-forwards and extensions,
//! * sampled lower bounds for the bfd/dp calcular norms plus the Delyon
//!   upper bound.
//!
//! `delta = 0` recovers the classical numerical-radius (Berger) regime;
//! constructions that need two distinct preimages under
//! `pi(lambda) = lambda + delta/lambda` require `delta > 0` and a generic
//! operator, and reject anything else rather than regularize silently.

pub mod ando;
pub mod calcnorm;
pub mod dilation;
pub mod dpops;
pub mod error;
pub mod geom;
pub mod mats;
pub mod numrange;
mod util;

pub use error::{Error, Result};
pub use mats::CMatrix;
