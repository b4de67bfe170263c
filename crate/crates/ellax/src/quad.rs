//! Trapezoid quadrature over the unit circle and its tensor powers.
//!
//! For f analytic in an annulus around |z| = 1, the N-point trapezoid rule
//! for the measure dz / (2 pi i z) converges geometrically in N, so the
//! engine doubles N until two successive estimates agree to the requested
//! relative tolerance. Summation is a deterministic blocked reduction:
//! results are bit-identical for a fixed N regardless of thread count.

use crate::kernel::Nome;
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Maximum tensor dimension (128^3 is about 2M nodes; desk scale).
pub const MAX_DIM: usize = 3;

const BLOCK: usize = 8192;

/// Equispaced nodes z_k = exp(2 pi i k / N) on the unit circle, reused for
/// every axis of a d-dimensional grid.
#[derive(Debug, Clone)]
pub struct CircleGrid {
    n: usize,
    d: usize,
    nodes: Vec<Complex64>,
}

impl CircleGrid {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "grid size must be a power of two >= 16, got {n}"
            )));
        }
        if d > MAX_DIM {
            return Err(Error::Domain(format!(
                "dimension {d} unsupported (max {MAX_DIM})"
            )));
        }
        let nodes = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(CircleGrid { n, d, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }
}

/// Result of a quadrature with its half-resolution error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub est_error: f64,
    pub n_used: usize,
}

/// Refinement controls for [`integrate_circle`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// First full-resolution grid size per axis.
    pub n_start: usize,
    /// Relative agreement required between successive resolutions.
    pub refine: f64,
    /// Absolute agreement floor, so integrals that vanish can converge.
    pub abs_floor: f64,
    /// Cap on the per-axis grid size.
    pub n_max: usize,
}

impl QuadOptions {
    /// Defaults per dimension: 512 (d<=1), 256 (d=2), 128 (d=3). The d=2
    /// cap allows 2048: argument reductions can land a gamma pair (x, p/x)
    /// with |p/x| near the contour, where convergence, while still
    /// geometric, needs the extra doubling.
    pub fn for_dim(d: usize) -> Self {
        let (n_start, n_max) = match d {
            0 | 1 => (512, 4096),
            2 => (256, 2048),
            _ => (128, 256),
        };
        QuadOptions {
            n_start,
            refine: 1e-10,
            abs_floor: 1e-13,
            n_max,
        }
    }

    pub fn with_refine(mut self, refine: f64) -> Self {
        self.refine = refine;
        self
    }
}

/// Normalized grid sum N^{-d} sum_k f(index) over the full d-fold grid,
/// with the integrand given the multi-index into a shared node table.
/// Deterministic blocked reduction; blocks may be evaluated in parallel.
pub fn sum_grid<F>(d: usize, n: usize, f: F) -> Complex64
where
    F: Fn(&[usize]) -> Complex64 + Sync,
{
    if d == 0 {
        return f(&[]);
    }
    let total: usize = n.pow(d as u32);
    let nblocks = total.div_ceil(BLOCK);
    let block_sums: Vec<Complex64> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(total);
            let mut idx = [0usize; MAX_DIM];
            let mut acc = Complex64::new(0.0, 0.0);
            for flat in lo..hi {
                let mut rem = flat;
                for slot in idx[..d].iter_mut() {
                    *slot = rem % n;
                    rem /= n;
                }
                acc += f(&idx[..d]);
            }
            acc
        })
        .collect();
    let sum: Complex64 = block_sums.iter().sum();
    sum / (n as f64).powi(d as i32)
}

/// Trapezoid rule for the contour integral of f over the d-fold unit torus
/// against prod_i dz_i / (2 pi i z_i), doubling N until convergence.
pub fn integrate_circle<F>(f: F, d: usize, opts: QuadOptions) -> Result<QuadratureResult>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    if d > MAX_DIM {
        return Err(Error::Domain(format!(
            "dimension {d} unsupported (max {MAX_DIM})"
        )));
    }
    if d == 0 {
        return Ok(QuadratureResult {
            value: f(&[]),
            est_error: 0.0,
            n_used: 0,
        });
    }
    let eval_at = |n: usize| -> Complex64 {
        let grid = CircleGrid::new(n, d).expect("validated sizes");
        let nodes = grid.nodes();
        sum_grid(d, n, |idx| {
            let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
            for (slot, &k) in z[..d].iter_mut().zip(idx) {
                *slot = nodes[k];
            }
            f(&z[..d])
        })
    };
    let mut n = (opts.n_start / 2).max(16);
    let mut prev = eval_at(n);
    loop {
        n *= 2;
        let cur = eval_at(n);
        let diff = (cur - prev).norm();
        if diff <= opts.refine * cur.norm() + opts.abs_floor {
            return Ok(QuadratureResult {
                value: cur,
                est_error: diff,
                n_used: n,
            });
        }
        if n >= opts.n_max {
            return Err(Error::Accuracy {
                n_max: n,
                last: cur.norm(),
                prev: prev.norm(),
            });
        }
        prev = cur;
    }
}

/// Outcome of the contour validity check.
#[derive(Debug, Clone, PartialEq)]
pub enum ContourVerdict {
    Pass,
    /// Density parameter u_r with |u_r| >= 1.
    BadModulus { index: usize, modulus: f64 },
    /// Extra parameter x violating |p| < |x| < 1.
    OutsideAnnulus { index: usize, modulus: f64 },
    /// p^i q^{j+k} u_r u_s too close to 1 (no separating contour).
    NearCollision { r: usize, s: usize, dist: f64 },
}

impl ContourVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, ContourVerdict::Pass)
    }

    pub fn ok(self) -> Result<()> {
        match self {
            ContourVerdict::Pass => Ok(()),
            ContourVerdict::BadModulus { index, modulus } => Err(Error::Contour(format!(
                "density parameter u_{index} has modulus {modulus} >= 1"
            ))),
            ContourVerdict::OutsideAnnulus { index, modulus } => Err(Error::Contour(format!(
                "extra parameter {index} has modulus {modulus} outside (|p|, 1)"
            ))),
            ContourVerdict::NearCollision { r, s, dist } => Err(Error::Contour(format!(
                "p^i q^j q^k u_{r} u_{s} within {dist:e} of 1"
            ))),
        }
    }
}

/// Check that the unit circle is a valid contour: density parameters inside
/// the unit disc, extra parameters x (each standing for the pair (x, p/x))
/// inside the annulus |p| < |x| < 1, and no p^i q^{j+k} u_r u_s pinching 1.
pub fn check_contour(p: Nome, q: Nome, u: &[Complex64], extra: &[Complex64]) -> ContourVerdict {
    // t = q throughout, so the t-exponent folds into the q-exponent. The
    // collision scan runs first so that an exact u_r u_s = 1 is reported as
    // the pair rather than as a stray modulus.
    let pv = p.value();
    let qv = q.value();
    let all: Vec<Complex64> = u
        .iter()
        .copied()
        .chain(extra.iter().flat_map(|&x| [x, pv / x]))
        .collect();
    for (r, &ur) in all.iter().enumerate() {
        for (s, &us) in all.iter().enumerate().skip(r) {
            let base = ur * us;
            let mut pi = Complex64::new(1.0, 0.0);
            for _ in 0..64 {
                let mut pq = pi;
                for _ in 0..128 {
                    let w = pq * base;
                    if w.norm() < 0.5 {
                        break;
                    }
                    let dist = (w - 1.0).norm();
                    if dist <= 1e-8 {
                        return ContourVerdict::NearCollision { r, s, dist };
                    }
                    pq *= qv;
                }
                pi *= pv;
                if (pi * base).norm() < 0.5 {
                    break;
                }
            }
        }
    }
    for (r, ur) in u.iter().enumerate() {
        let m = ur.norm();
        if m >= 1.0 || m == 0.0 {
            return ContourVerdict::BadModulus { index: r, modulus: m };
        }
    }
    let ap = p.modulus();
    for (idx, x) in extra.iter().enumerate() {
        let m = x.norm();
        if m <= ap || m >= 1.0 {
            return ContourVerdict::OutsideAnnulus {
                index: idx,
                modulus: m,
            };
        }
    }
    ContourVerdict::Pass
}
