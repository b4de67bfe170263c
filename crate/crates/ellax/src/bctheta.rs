//! BC1-symmetric theta functions of given degree, represented as
//! decomposable products scalar * prod_k theta_p(a_k z) theta_p(a_k / z).
//!
//! A degree-n function satisfies f(1/z) = f(z) and f(pz) = (p z^2)^{-n} f(z);
//! the space has dimension n+1, and decomposable products span it
//! generically, which is all the identity checks need.

use crate::kernel::{theta, Nome};
use crate::{linalg, Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A BC1-symmetric theta function of degree `factors.len()`.
#[derive(Debug, Clone)]
pub struct BC1Theta {
    pub p: Nome,
    pub factors: Vec<Complex64>,
    pub scalar: Complex64,
}

impl BC1Theta {
    pub fn constant(p: Nome, scalar: Complex64) -> Self {
        BC1Theta {
            p,
            factors: Vec::new(),
            scalar,
        }
    }

    pub fn product(p: Nome, factors: Vec<Complex64>, scalar: Complex64) -> Self {
        BC1Theta { p, factors, scalar }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = self.scalar;
        for &a in &self.factors {
            acc *= theta(self.p, a * z)? * theta(self.p, a / z)?;
        }
        Ok(acc)
    }
}

/// Evaluate f at z; free-function form of [`BC1Theta::eval`].
pub fn eval_bc1(f: &BC1Theta, z: Complex64) -> Result<Complex64> {
    f.eval(z)
}

fn random_factor(rng: &mut ChaCha8Rng) -> Complex64 {
    let modulus = rng.gen_range(0.3..0.9);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(modulus, phase)
}

const COND_LIMIT: f64 = 1e8;
const MAX_RETRIES: u32 = 32;

/// A basis of the (n+1)-dimensional space of degree-n functions, built from
/// random decomposable products and accepted only when the evaluation matrix
/// at n+1 generic test points is well conditioned.
pub fn basis(p: Nome, n: usize, seed: u64) -> Result<Vec<BC1Theta>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 0 {
        return Ok(vec![BC1Theta::constant(p, Complex64::new(1.0, 0.0))]);
    }
    for _ in 0..MAX_RETRIES {
        let candidates: Vec<BC1Theta> = (0..=n)
            .map(|_| {
                let factors = (0..n).map(|_| random_factor(&mut rng)).collect();
                BC1Theta::product(p, factors, Complex64::new(1.0, 0.0))
            })
            .collect();
        let nodes: Vec<Complex64> = (0..=n).map(|_| random_factor(&mut rng)).collect();
        let mut mat = Vec::with_capacity(n + 1);
        let mut ok = true;
        for &z in &nodes {
            let mut row = Vec::with_capacity(n + 1);
            for f in &candidates {
                match f.eval(z) {
                    Ok(v) => row.push(v),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
            mat.push(row);
        }
        if ok && linalg::cond_1(&mat) < COND_LIMIT {
            return Ok(candidates);
        }
    }
    Err(Error::Degenerate(MAX_RETRIES))
}

/// Coefficients expressing target values at `nodes` in the given basis.
pub fn fit(basis: &[BC1Theta], nodes: &[Complex64], values: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut mat = Vec::with_capacity(nodes.len());
    for &z in nodes {
        let mut row = Vec::with_capacity(basis.len());
        for f in basis {
            row.push(f.eval(z)?);
        }
        mat.push(row);
    }
    linalg::solve(mat, values.to_vec())
        .ok_or_else(|| Error::Singular("interpolation matrix is singular".into()))
}
