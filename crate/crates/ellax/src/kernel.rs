//! Theta functions, elliptic gamma functions, and Pochhammer products.
//!
//! Everything here is a truncated infinite product. A factor indexed by
//! (i, j, k) differs from 1 by O(|p|^i |q|^j |t|^k * scale), so truncation
//! keeps a factor iff that bound is at least the policy epsilon, capped at
//! `max_terms` per exponent axis. Accumulation is plain multiplication in
//! lexicographic exponent order, which keeps results bit-reproducible.

use crate::{Error, Result};
use num_complex::Complex64;

/// A nome: a complex modulus with 0 < |value| < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome(Complex64);

impl Nome {
    pub fn new(value: Complex64) -> Result<Self> {
        let m = value.norm();
        if m <= 0.0 || m >= 1.0 {
            return Err(Error::Domain(format!(
                "nome modulus must lie in (0,1), got |{value}| = {m}"
            )));
        }
        Ok(Nome(value))
    }

    pub fn real(value: f64) -> Result<Self> {
        Self::new(Complex64::new(value, 0.0))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn modulus(self) -> f64 {
        self.0.norm()
    }
}

/// Truncation control for the infinite products.
#[derive(Debug, Clone, Copy)]
pub struct TruncationPolicy {
    /// Relative magnitude cutoff for product factors.
    pub epsilon: f64,
    /// Cap on the number of kept terms per exponent axis.
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(epsilon: f64, max_terms: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) || max_terms < 1 {
            return Err(Error::Domain(format!(
                "invalid truncation policy: epsilon={epsilon}, max_terms={max_terms}"
            )));
        }
        Ok(TruncationPolicy { epsilon, max_terms })
    }
}

impl Default for TruncationPolicy {
    // Double precision saturates near 1e-16; factors below 1e-17 cannot move
    // the product.
    fn default() -> Self {
        TruncationPolicy {
            epsilon: 1e-17,
            max_terms: 1024,
        }
    }
}

/// Tolerance used to flag an evaluation point as a pole of the gamma
/// function rather than silently returning a huge number.
pub const POLE_TOL: f64 = 1e-12;

/// theta_p(z) = prod_{i>=0} (1 - p^{i+1}/z)(1 - p^i z).
pub fn theta(p: Nome, z: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("theta: z must be nonzero".into()));
    }
    Ok(theta_raw(p.value(), z, TruncationPolicy::default()))
}

pub(crate) fn theta_raw(p: Complex64, z: Complex64, pol: TruncationPolicy) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let zinv = one / z;
    let scale = z.norm().max(zinv.norm()).max(1.0);
    let mut acc = one;
    let mut pi = one; // p^i
    for _ in 0..pol.max_terms {
        acc *= (one - pi * p * zinv) * (one - pi * z);
        pi *= p;
        if pi.norm() * scale < pol.epsilon {
            break;
        }
    }
    acc
}

/// Gamma_{p,q}(z) = prod_{i,j>=0} (1 - p^{i+1} q^{j+1}/z) / (1 - p^i q^j z).
///
/// Errors with the offending exponents when z lies within [`POLE_TOL`] of a
/// pole p^{-i} q^{-j}.
pub fn gamma(p: Nome, q: Nome, z: Complex64) -> Result<Complex64> {
    gamma_with(p.value(), q.value(), z, TruncationPolicy::default())
}

pub(crate) fn gamma_with(
    p: Complex64,
    q: Complex64,
    z: Complex64,
    pol: TruncationPolicy,
) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("gamma: z must be nonzero".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let zinv = one / z;
    let scale = z.norm().max((p * q * zinv).norm()).max(1.0);
    let mut acc = one;
    let mut pi = one;
    for i in 0..pol.max_terms {
        if pi.norm() * scale < pol.epsilon {
            break;
        }
        let mut pq = pi;
        for j in 0..pol.max_terms {
            if pq.norm() * scale < pol.epsilon {
                break;
            }
            let den = one - pq * z;
            if den.norm() < POLE_TOL * (pq * z).norm().max(1.0) {
                return Err(Error::GammaPole {
                    i: i as u32,
                    j: j as u32,
                });
            }
            acc *= (one - pq * p * q * zinv) / den;
            pq *= q;
        }
        pi *= p;
    }
    Ok(acc)
}

/// (1 - w) Gamma_{p,q}(w): the gamma function with its pole at w = 1
/// removed. Safe to evaluate on and near w = 1, where [`gamma`] reports a
/// pole; elsewhere it equals (1 - w) * gamma(w).
pub fn gamma_reg(p: Nome, q: Nome, w: Complex64) -> Result<Complex64> {
    if w == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("gamma_reg: w must be nonzero".into()));
    }
    let (p, q) = (p.value(), q.value());
    let pol = TruncationPolicy::default();
    let one = Complex64::new(1.0, 0.0);
    let winv = one / w;
    let scale = w.norm().max((p * q * winv).norm()).max(1.0);
    let mut acc = one;
    let mut pi = one;
    for i in 0..pol.max_terms {
        if pi.norm() * scale < pol.epsilon {
            break;
        }
        let mut pq = pi;
        for j in 0..pol.max_terms {
            if pq.norm() * scale < pol.epsilon {
                break;
            }
            let num = one - pq * p * q * winv;
            if i == 0 && j == 0 {
                acc *= num;
            } else {
                let den = one - pq * w;
                if den.norm() < POLE_TOL * (pq * w).norm().max(1.0) {
                    return Err(Error::GammaPole {
                        i: i as u32,
                        j: j as u32,
                    });
                }
                acc *= num / den;
            }
            pq *= q;
        }
        pi *= p;
    }
    Ok(acc)
}

/// Gamma_{p,q}(a z) Gamma_{p,q}(a / z): the two-argument product convention.
pub fn gamma_pm(p: Nome, q: Nome, a: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(gamma(p, q, a * z)? * gamma(p, q, a / z)?)
}

/// theta_p(a z) theta_p(a / z).
pub fn theta_pm(p: Nome, a: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(theta(p, a * z)? * theta(p, a / z)?)
}

/// Third-order elliptic gamma function
/// Gamma^+_{p,q,t}(x) = prod_{i,j,k>=0} (1 - p^i q^j t^k x)(1 - p^{i+1} q^{j+1} t^{k+1}/x).
pub fn gamma_plus(p: Nome, q: Nome, t: Nome, x: Complex64) -> Result<Complex64> {
    if x == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("gamma_plus: x must be nonzero".into()));
    }
    let pol = TruncationPolicy::default();
    let (p, q, t) = (p.value(), q.value(), t.value());
    let one = Complex64::new(1.0, 0.0);
    let xinv = one / x;
    let scale = x.norm().max((p * q * t * xinv).norm()).max(1.0);
    let mut acc = one;
    let mut pi = one;
    for _ in 0..pol.max_terms {
        if pi.norm() * scale < pol.epsilon {
            break;
        }
        let mut pq = pi;
        for _ in 0..pol.max_terms {
            if pq.norm() * scale < pol.epsilon {
                break;
            }
            let mut pqt = pq;
            for _ in 0..pol.max_terms {
                if pqt.norm() * scale < pol.epsilon {
                    break;
                }
                acc *= (one - pqt * x) * (one - pqt * p * q * t * xinv);
                pqt *= t;
            }
            pq *= q;
        }
        pi *= p;
    }
    Ok(acc)
}

/// Double Pochhammer (x; p, q) = prod_{i,j>=0} (1 - p^i q^j x).
pub fn pochhammer2(x: Complex64, p: Nome, q: Nome) -> Complex64 {
    let pol = TruncationPolicy::default();
    let (p, q) = (p.value(), q.value());
    let one = Complex64::new(1.0, 0.0);
    let scale = x.norm().max(1.0);
    let mut acc = one;
    let mut pi = one;
    for _ in 0..pol.max_terms {
        if pi.norm() * scale < pol.epsilon {
            break;
        }
        let mut pq = pi;
        for _ in 0..pol.max_terms {
            if pq.norm() * scale < pol.epsilon {
                break;
            }
            acc *= one - pq * x;
            pq *= q;
        }
        pi *= p;
    }
    acc
}

/// Single Pochhammer (x; p) = prod_{k>=0} (1 - x p^k).
pub fn pochhammer1(x: Complex64, p: Nome) -> Complex64 {
    let pol = TruncationPolicy::default();
    let p = p.value();
    let one = Complex64::new(1.0, 0.0);
    let scale = x.norm().max(1.0);
    let mut acc = one;
    let mut pk = one;
    for _ in 0..pol.max_terms {
        if pk.norm() * scale < pol.epsilon {
            break;
        }
        acc *= one - x * pk;
        pk *= p;
    }
    acc
}

/// psi_p(x, z) = x^{-1} theta_p(x z) theta_p(x / z).
///
/// Agrees with x^{-1} Gamma(q x z^{+-1}, pq/x z^{+-1}) wherever both are
/// defined.
pub fn psi(p: Nome, x: Complex64, z: Complex64) -> Result<Complex64> {
    if x == Complex64::new(0.0, 0.0) || z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("psi: x and z must be nonzero".into()));
    }
    Ok(theta(p, x * z)? * theta(p, x / z)? / x)
}
