//! Numerical library for elliptic special functions, higher-order elliptic
//! Selberg integrals, semiclassical biorthogonal functions, and the 2x2
//! shift (Lax) matrices they satisfy, together with verification routines
//! for the identities, determinant formulas, special values, and
//! isomonodromy transformations relating them.
//!
//! Layering, bottom up:
//! - [`kernel`]: theta, elliptic gamma (orders 2 and 3), Pochhammer products.
//! - [`bctheta`]: BC1-symmetric theta functions and bases of the degree-n space.
//! - [`quad`]: trapezoid quadrature on the unit torus, up to three dimensions.
//! - [`selberg`]: the density, the elliptic Selberg integral at t=q, the m=0
//!   closed form, the tau-function renormalization, and the order-1
//!   parameter transformation.
//! - [`biorth`]: the biorthogonal functions F_n, their Cauchy transforms
//!   F+, F-, the hatted-argument extension, and the identity checks.
//! - [`lax`]: the fundamental matrix M_n, the normalized shift matrices
//!   A~ and B~, their special values, and the isomonodromy transformations.
//! - [`report`], [`config`]: JSON report and run-configuration plumbing for
//!   the `ellax` CLI.

pub mod bctheta;
pub mod biorth;
pub mod cli;
pub mod config;
pub mod kernel;
pub mod lax;
pub(crate) mod linalg;
pub mod quad;
pub mod report;
pub mod selberg;

use num_complex::Complex64;
use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole of the elliptic gamma function at z = p^-{i} q^-{j}")]
    GammaPole { i: u32, j: u32 },
    #[error("contour violation: {0}")]
    Contour(String),
    #[error("quadrature failed to converge at N = {n_max}: last estimates {last:e}, {prev:e}")]
    Accuracy { n_max: usize, last: f64, prev: f64 },
    #[error("degenerate basis after {0} retries")]
    Degenerate(u32),
    #[error("singular context: {0}")]
    Singular(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Relative residual of an identity `sum(terms) = 0`, normalized by the
/// largest term magnitude. Returns 0 when every term is negligible.
pub fn rel_residual(terms: &[Complex64]) -> f64 {
    let scale = terms.iter().map(|t| t.norm()).fold(0.0_f64, f64::max);
    if scale < 1e-300 {
        return 0.0;
    }
    let sum: Complex64 = terms.iter().sum();
    sum.norm() / scale
}

/// Relative difference |a - b| / max(|a|, |b|), with the same zero floor.
pub fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    rel_residual(&[a, -b])
}
