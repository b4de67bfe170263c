//! The higher-order elliptic Selberg integral at t = q.
//!
//! The integrand is a BC_n-symmetric density: per-point gamma factors
//! Gamma(u_r z_i^{+-1}) / Gamma(z_i^{+-2}) over 2m+6 parameters u_r obeying
//! the balancing condition q^{2n-2} prod_r u_r = (pq)^{m+1}, and cross
//! factors which at t = q collapse to products of four theta functions.
//! The integral is taken over the n-fold unit torus against
//! prod_i dz_i / (2 pi i z_i) with prefactor ((p;p)(q;q) Gamma(q) / 2)^n / n!.
//!
//! The engine exploits the group structure of the equispaced grid: products
//! and ratios of nodes are again nodes, so after an O(N) table build the
//! n-dimensional sum is pure lookups.

use crate::kernel::{gamma, gamma_plus, gamma_reg, pochhammer1, theta, Nome};
use crate::quad::{check_contour, sum_grid, CircleGrid, QuadOptions, QuadratureResult, MAX_DIM};
use crate::{rel_diff, Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Relative slack allowed in the balancing condition.
pub const BALANCE_TOL: f64 = 1e-10;

/// A balanced parameter set (p, q; u_0, ..., u_{2m+5}) for the order-m,
/// dimension-n integral. Construction enforces the balancing condition
/// q^{2n-2} prod_r u_r = (pq)^{m+1}; contour feasibility is checked at
/// integration time, not here, so closed forms stay usable outside the
/// convergence region.
#[derive(Debug, Clone)]
pub struct ParameterSet {
    pub p: Nome,
    pub q: Nome,
    pub m: usize,
    pub n: usize,
    u: Vec<Complex64>,
}

impl ParameterSet {
    pub fn new(p: Nome, q: Nome, m: usize, n: usize, u: Vec<Complex64>) -> Result<Self> {
        if u.len() != 2 * m + 6 {
            return Err(Error::Domain(format!(
                "order {m} needs {} parameters, got {}",
                2 * m + 6,
                u.len()
            )));
        }
        let target = (p.value() * q.value()).powi(m as i32 + 1);
        let lhs = q.value().powi(2 * n as i32 - 2) * u.iter().product::<Complex64>();
        if (lhs - target).norm() > BALANCE_TOL * target.norm() {
            return Err(Error::Domain(format!(
                "unbalanced parameters: q^(2n-2) prod u = {lhs}, want {target}"
            )));
        }
        Ok(ParameterSet { p, q, m, n, u })
    }

    /// Build a balanced set from the first 2m+5 parameters, solving the
    /// balancing condition for the last one.
    pub fn balanced(p: Nome, q: Nome, m: usize, n: usize, head: &[Complex64]) -> Result<Self> {
        if head.len() != 2 * m + 5 {
            return Err(Error::Domain(format!(
                "balanced constructor needs {} parameters, got {}",
                2 * m + 5,
                head.len()
            )));
        }
        let target = (p.value() * q.value()).powi(m as i32 + 1);
        let partial = q.value().powi(2 * n as i32 - 2) * head.iter().product::<Complex64>();
        if partial.norm() < 1e-300 {
            return Err(Error::Domain("balanced constructor: zero parameter".into()));
        }
        let mut u = head.to_vec();
        u.push(target / partial);
        Self::new(p, q, m, n, u)
    }

    pub fn u(&self) -> &[Complex64] {
        &self.u
    }

    /// Replace the parameter vector, revalidating the balancing condition.
    pub fn with_u(&self, u: Vec<Complex64>) -> Result<Self> {
        Self::new(self.p, self.q, self.m, self.n, u)
    }
}

const RANDOM_RETRIES: u32 = 64;

/// Draw a random balanced parameter set with moduli clustered around the
/// geometric mean forced by the balancing condition, retrying until the
/// contour check passes. Deterministic in the seed.
pub fn random_balanced(p: Nome, q: Nome, m: usize, n: usize, seed: u64) -> Result<ParameterSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 2 * m + 6;
    let target_mod = (p.modulus() * q.modulus()).powi(m as i32 + 1)
        * q.modulus().powi(2 - 2 * n as i32);
    let gm = target_mod.powf(1.0 / count as f64);
    for _ in 0..RANDOM_RETRIES {
        let head: Vec<Complex64> = (0..count - 1)
            .map(|_| {
                let modulus = (gm * rng.gen_range(0.85..1.15)).min(0.93);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(modulus, phase)
            })
            .collect();
        let ps = match ParameterSet::balanced(p, q, m, n, &head) {
            Ok(ps) => ps,
            Err(_) => continue,
        };
        let last = ps.u()[count - 1];
        if last.norm() >= 0.95 || last.norm() <= p.modulus() * q.modulus() {
            continue;
        }
        if check_contour(p, q, ps.u(), &[]).is_pass() {
            return Ok(ps);
        }
    }
    Err(Error::Degenerate(RANDOM_RETRIES))
}

/// Per-point weight: the gamma-pair factors over `gamma_params`, theta-pair
/// factors over `theta_pairs`, divided by Gamma(z^{+-2}). The division is
/// done through [`gamma_reg`] so z = +-1 (a double zero of the weight) is
/// evaluated exactly instead of tripping the pole guard.
pub(crate) fn point_weight(
    p: Nome,
    q: Nome,
    gamma_params: &[Complex64],
    theta_pairs: &[Complex64],
    z: Complex64,
) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let z2 = z * z;
    let mut acc = (one - z2) * (one - one / z2) / (gamma_reg(p, q, z2)? * gamma_reg(p, q, one / z2)?);
    for &a in gamma_params {
        acc *= gamma(p, q, a * z)? * gamma(p, q, a / z)?;
    }
    for &x in theta_pairs {
        acc *= theta(p, x * z)? * theta(p, x / z)?;
    }
    Ok(acc)
}

/// The symmetric density at a point z = (z_1, ..., z_n): per-point weights
/// times the t = q cross factors theta_p of z_i z_j^{+-1} and their
/// reciprocals.
pub fn density(ps: &ParameterSet, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != ps.n {
        return Err(Error::Domain(format!(
            "density expects {} coordinates, got {}",
            ps.n,
            z.len()
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut acc = one;
    for (i, &zi) in z.iter().enumerate() {
        acc *= point_weight(ps.p, ps.q, &ps.u, &[], zi)?;
        for &zj in &z[i + 1..] {
            acc *= theta(ps.p, zi * zj)?
                * theta(ps.p, zi / zj)?
                * theta(ps.p, zj / zi)?
                * theta(ps.p, one / (zi * zj))?;
        }
    }
    Ok(acc)
}

/// The per-dimension prefactor (p;p)(q;q) Gamma(q) / 2, which simplifies to
/// (p;p)^2 / 2 because Gamma(q) = (p;p)/(q;q).
pub fn prefactor_per_dim(p: Nome) -> Complex64 {
    let pp = pochhammer1(p.value(), p);
    pp * pp / 2.0
}

/// Drop parameter pairs whose product is pq: their gamma-pair factors are
/// exact reciprocals, so removing both is an identity on the weight and
/// lifts spurious contour constraints.
pub(crate) fn cancel_pq_pairs(p: Nome, q: Nome, params: &[Complex64]) -> Vec<Complex64> {
    let pq = p.value() * q.value();
    let mut keep = vec![true; params.len()];
    for r in 0..params.len() {
        if !keep[r] {
            continue;
        }
        for s in r + 1..params.len() {
            if keep[s] && rel_diff(params[r] * params[s], pq) < 1e-12 {
                keep[r] = false;
                keep[s] = false;
                break;
            }
        }
    }
    params
        .iter()
        .zip(keep)
        .filter_map(|(&v, k)| k.then_some(v))
        .collect()
}

/// The n-dimensional integral of the symmetric density built from arbitrary
/// gamma-pair parameters and theta-pair parameters, with the standard
/// prefactor. This is the workhorse behind [`selberg`] and the biorthogonal
/// function evaluations, which differ only in the parameter lists.
///
/// Refinement doubles the per-axis grid until successive estimates agree to
/// `opts.refine` relatively (or `opts.abs_floor` absolutely).
pub fn selberg_general(
    p: Nome,
    q: Nome,
    n: usize,
    gamma_params: &[Complex64],
    theta_pairs: &[Complex64],
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if n > MAX_DIM {
        return Err(Error::Domain(format!(
            "dimension {n} unsupported (max {MAX_DIM})"
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    if n == 0 {
        return Ok(QuadratureResult {
            value: one,
            est_error: 0.0,
            n_used: 0,
        });
    }
    let gp = cancel_pq_pairs(p, q, gamma_params);
    check_contour(p, q, &gp, &[]).ok()?;
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let pref = prefactor_per_dim(p).powi(n as i32) / factorial;

    let eval = |nn: usize| -> Result<Complex64> {
        let grid = CircleGrid::new(nn, 1)?;
        let nodes = grid.nodes();
        let single = nodes
            .par_iter()
            .map(|&z| point_weight(p, q, &gp, theta_pairs, z))
            .collect::<Result<Vec<_>>>()?;
        let cross = if n >= 2 {
            nodes
                .par_iter()
                .map(|&w| theta(p, w))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(sum_grid(n, nn, |idx| {
            let mut acc = one;
            for (a, &ki) in idx.iter().enumerate() {
                acc *= single[ki];
                for &kj in &idx[a + 1..] {
                    let s = (ki + kj) % nn;
                    let d = (ki + nn - kj) % nn;
                    acc *= cross[s]
                        * cross[d]
                        * cross[(nn - d) % nn]
                        * cross[(nn - s) % nn];
                }
            }
            acc
        }))
    };

    let mut nn = (opts.n_start / 2).max(16);
    let mut prev = eval(nn)?;
    loop {
        nn *= 2;
        let cur = eval(nn)?;
        let diff = (cur - prev).norm();
        if diff <= opts.refine * cur.norm() + opts.abs_floor {
            return Ok(QuadratureResult {
                value: pref * cur,
                est_error: diff * pref.norm(),
                n_used: nn,
            });
        }
        if nn >= opts.n_max {
            return Err(Error::Accuracy {
                n_max: nn,
                last: cur.norm(),
                prev: prev.norm(),
            });
        }
        prev = cur;
    }
}

/// The order-m elliptic Selberg integral at t = q for a balanced set.
pub fn selberg(ps: &ParameterSet, opts: QuadOptions) -> Result<QuadratureResult> {
    selberg_general(ps.p, ps.q, ps.n, &ps.u, &[], opts)
}

/// Closed form of the order-0 integral:
/// prod_{0<=i<n} Gamma(q^{i+1}) prod_{r<s<6} Gamma(q^i u_r u_s).
pub fn selberg_closed_form_m0(ps: &ParameterSet) -> Result<Complex64> {
    if ps.m != 0 {
        return Err(Error::Domain(format!(
            "closed form applies at order 0, got order {}",
            ps.m
        )));
    }
    let qv = ps.q.value();
    let mut acc = Complex64::new(1.0, 0.0);
    for i in 0..ps.n as i32 {
        acc *= gamma(ps.p, ps.q, qv.powi(i + 1))?;
        for r in 0..6 {
            for s in r + 1..6 {
                acc *= gamma(ps.p, ps.q, qv.powi(i) * ps.u[r] * ps.u[s])?;
            }
        }
    }
    Ok(acc)
}

/// The renormalized order-1 integral used as a tau function: the integral at
/// shifted parameters q^{1/2} u_r times the third-order gamma factors
/// prod_{r<s<8} Gamma^+(q u_r u_s). The input satisfies the shifted
/// balancing condition q^{2n+2} prod_r u_r = (pq)^2.
pub fn tau_renormalized(
    p: Nome,
    q: Nome,
    n: usize,
    u: &[Complex64],
    opts: QuadOptions,
) -> Result<QuadratureResult> {
    if u.len() != 8 {
        return Err(Error::Domain(format!(
            "tau needs 8 parameters, got {}",
            u.len()
        )));
    }
    let target = (p.value() * q.value()).powi(2);
    let lhs = q.value().powi(2 * n as i32 + 2) * u.iter().product::<Complex64>();
    if (lhs - target).norm() > BALANCE_TOL * target.norm() {
        return Err(Error::Domain(format!(
            "unbalanced tau parameters: q^(2n+2) prod u = {lhs}, want {target}"
        )));
    }
    let rq = q.value().sqrt();
    let shifted: Vec<Complex64> = u.iter().map(|&x| rq * x).collect();
    let ps = ParameterSet::new(p, q, 1, n, shifted)?;
    let ii = selberg(&ps, opts)?;
    let mut fac = Complex64::new(1.0, 0.0);
    for r in 0..8 {
        for s in r + 1..8 {
            fac *= gamma_plus(p, q, q, q.value() * u[r] * u[s])?;
        }
    }
    Ok(QuadratureResult {
        value: ii.value * fac,
        est_error: ii.est_error * fac.norm(),
        n_used: ii.n_used,
    })
}

/// Both sides of the order-1 parameter reflection: the integral at u equals
/// gamma prefactors times the integral at the reflected parameters
/// u'_r = u_r / x (r < 4), u_r x (r >= 4), where
/// x = (u_0 u_1 u_2 u_3 / u_4 u_5 u_6 u_7)^{1/4}; the balancing condition
/// makes x^2 = u_0 u_1 u_2 u_3 / (p q^{2-n}) on the principal branch.
/// Returns (lhs, rhs) so the caller can inspect the residual.
pub fn reflection_transform(
    ps: &ParameterSet,
    opts: QuadOptions,
) -> Result<(Complex64, Complex64)> {
    if ps.m != 1 {
        return Err(Error::Domain(format!(
            "the reflection applies at order 1, got order {}",
            ps.m
        )));
    }
    let u = &ps.u;
    let front: Complex64 = u[..4].iter().product();
    let back: Complex64 = u[4..].iter().product();
    let x = (front / back).powf(0.25);
    let up: Vec<Complex64> = (0..8)
        .map(|r| if r < 4 { u[r] / x } else { u[r] * x })
        .collect();
    let reflected = ParameterSet::new(ps.p, ps.q, 1, ps.n, up)?;
    let lhs = selberg(ps, opts)?.value;
    let mut fac = Complex64::new(1.0, 0.0);
    for j in 1..=ps.n as i32 {
        let qp = ps.q.value().powi(ps.n as i32 - j);
        for (lo, hi) in [(0usize, 4usize), (4, 8)] {
            for r in lo..hi {
                for s in r + 1..hi {
                    fac *= gamma(ps.p, ps.q, qp * u[r] * u[s])?;
                }
            }
        }
    }
    let rhs = fac * selberg(&reflected, opts)?.value;
    Ok((lhs, rhs))
}
