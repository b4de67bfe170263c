//! Semiclassical biorthogonal functions attached to the elliptic Selberg
//! density, and their Cauchy-transform partners.
//!
//! For a balanced parameter set the function F_n(x;v) is a BC1-symmetric
//! theta function of degree n in x, biorthogonal to lower-degree theta
//! functions against the density weighted by 1/psi_p(v,z). Its Cauchy
//! transform F+_n(x,v) and the lowering partner F-_n(x,v) are realized as
//! neighboring instances of the same integral family. Hatted arguments
//! select the (F-, -F) basis column instead of (F, F+); with that
//! convention every bilinear identity in the family collapses to a single
//! Pluecker relation.
//!
//! F+ on plain arguments is only directly integrable for arguments in the
//! annulus |p| < |x| < 1; the evaluator extends it to arbitrary nonzero
//! arguments through the reflection jump F+(1/x,v) - F+(x,v) =
//! x^{-1} theta_q(x^2) F(x;v) prod_r Gamma(u_r x^{+-1}) and the shift law
//! F+(p/x,v) = (p/x^2)^n F+(x,v).

use crate::bctheta::BC1Theta;
use crate::kernel::{gamma_pm, psi, theta};
use crate::quad::{check_contour, sum_grid, CircleGrid, QuadOptions, QuadratureResult};
use crate::selberg::{
    cancel_pq_pairs, point_weight, prefactor_per_dim, selberg, selberg_general, ParameterSet,
};
use crate::{rel_diff, rel_residual, Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// An argument of the biorthogonal family: a plain point selects the
/// (F, F+) basis column, a hatted point the (F-, -F) column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arg {
    Plain(Complex64),
    Hatted(Complex64),
}

impl Arg {
    pub fn value(self) -> Complex64 {
        match self {
            Arg::Plain(v) | Arg::Hatted(v) => v,
        }
    }

    pub fn is_hatted(self) -> bool {
        matches!(self, Arg::Hatted(_))
    }
}

const MAX_REDUCE_DEPTH: u32 = 64;

/// Evaluation context: a balanced parameter set with valid unit-circle
/// contour, plus quadrature controls shared by every evaluation.
#[derive(Debug, Clone)]
pub struct BiorthContext {
    ps: ParameterSet,
}

impl BiorthContext {
    pub fn new(ps: ParameterSet) -> Result<Self> {
        check_contour(ps.p, ps.q, ps.u(), &[]).ok()?;
        Ok(BiorthContext { ps })
    }

    pub fn params(&self) -> &ParameterSet {
        &self.ps
    }

    fn opts(&self, d: usize) -> QuadOptions {
        QuadOptions::for_dim(d)
    }

    /// The plain order-m integral over the context parameters.
    pub fn selberg_value(&self) -> Result<Complex64> {
        Ok(selberg(&self.ps, self.opts(self.ps.n))?.value)
    }

    /// The one-point density Delta(z; u) of the context parameters.
    pub fn weight(&self, z: Complex64) -> Result<Complex64> {
        point_weight(self.ps.p, self.ps.q, self.ps.u(), &[], z)
    }

    /// F_n(x;v): entire of degree n in x; for plain v the gamma pair
    /// (v, p/v) must admit the unit circle (up to pq-cancellation against
    /// the context parameters); a hatted v selects F-_n(x, v).
    pub fn f(&self, x: Complex64, v: Arg) -> Result<Complex64> {
        match v {
            Arg::Hatted(vv) => self.f_minus(x, vv),
            Arg::Plain(vv) => {
                let n = self.ps.n as i32;
                let mut gp = self.ps.u().to_vec();
                gp.push(vv);
                gp.push(self.ps.p.value() / vv);
                let ii =
                    selberg_general(self.ps.p, self.ps.q, self.ps.n, &gp, &[x], self.opts(self.ps.n))?;
                Ok(x.powi(-n) * vv.powi(n) * ii.value)
            }
        }
    }

    /// F-_n(x,v): the lowering partner, an (n-1)-dimensional integral with
    /// both arguments entering through theta pairs (no contour constraint).
    /// Zero at n = 0 by convention. The prefactor is psi_p(x,v): that sign
    /// is pinned by the lowering relation
    /// F-(x,v) F+(x,w) + F(v;x) F(x;w) = II_n F(v;w)
    /// and independently by the lowering-kernel integral.
    pub fn f_minus(&self, x: Complex64, v: Complex64) -> Result<Complex64> {
        let n = self.ps.n;
        if n == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let ii = selberg_general(self.ps.p, self.ps.q, n - 1, self.ps.u(), &[x, v], self.opts(n - 1))?;
        Ok(psi(self.ps.p, x, v)?
            * x.powi(1 - n as i32)
            * v.powi(1 - n as i32)
            * ii.value)
    }

    /// F+_n(x,v) on arbitrary arguments (plain or hatted, any nonzero
    /// value); antisymmetric.
    pub fn f_plus(&self, x: Arg, v: Arg) -> Result<Complex64> {
        match (x, v) {
            (Arg::Hatted(a), Arg::Hatted(b)) => self.f_minus(a, b),
            (Arg::Hatted(a), _) => Ok(-self.f_plus_ext(v.value(), Arg::Hatted(a), 0)?),
            (Arg::Plain(a), _) => self.f_plus_ext(a, v, 0),
        }
    }

    /// Extends F+ in its first (plain) slot beyond the annulus: reflection
    /// across the unit circle adds the contour jump, the p-shift multiplies
    /// by the quasi-periodicity factor. Both laws hold for either kind of
    /// second argument.
    fn f_plus_ext(&self, x: Complex64, v: Arg, depth: u32) -> Result<Complex64> {
        if depth > MAX_REDUCE_DEPTH {
            return Err(Error::Domain(
                "argument reduction did not terminate".into(),
            ));
        }
        let p = self.ps.p.value();
        let ap = self.ps.p.modulus();
        let n = self.ps.n as i32;
        let ax = x.norm();
        if (ax - 1.0).abs() < 1e-13 {
            return Err(Error::Contour(format!(
                "argument {x} pinches the unit-circle contour"
            )));
        }
        if ax > 1.0 {
            let y = 1.0 / x;
            return Ok(self.f_plus_ext(y, v, depth + 1)? + self.jump(y, v)?);
        }
        if ax <= ap {
            let y = p / x;
            return Ok((p / (y * y)).powi(n) * self.f_plus_ext(y, v, depth + 1)?);
        }
        let vv = match v {
            Arg::Hatted(b) => return Ok(-self.f(b, Arg::Plain(x))?),
            Arg::Plain(b) => b,
        };
        let av = vv.norm();
        if !(av > ap && av < 1.0) {
            return Ok(-self.f_plus_ext(vv, Arg::Plain(x), depth + 1)?);
        }
        let mut gp = self.ps.u().to_vec();
        gp.extend([x, p / x, vv, p / vv]);
        let ii = selberg_general(
            self.ps.p,
            self.ps.q,
            self.ps.n + 1,
            &gp,
            &[],
            self.opts(self.ps.n + 1),
        )?;
        Ok(vv.powi(n + 1) * x.powi(n + 1) * psi(self.ps.p, vv, x)? * ii.value)
    }

    /// The contour-reflection jump
    /// x^{-1} theta_q(x^2) F_n(x;v) prod_r Gamma(u_r x^{+-1}),
    /// equal to F+_n(1/x,v) - F+_n(x,v) for any v.
    pub fn jump(&self, x: Complex64, v: Arg) -> Result<Complex64> {
        let mut g = Complex64::new(1.0, 0.0);
        for &ur in self.ps.u() {
            g *= gamma_pm(self.ps.p, self.ps.q, ur, x)?;
        }
        Ok(theta(self.ps.q, x * x)? / x * self.f(x, v)? * g)
    }

    /// Deterministic one-dimensional torus quadrature of a fallible
    /// integrand, doubling until convergence.
    fn integrate_1d<F>(&self, f: F, opts: QuadOptions) -> Result<QuadratureResult>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync,
    {
        let eval = |nn: usize| -> Result<Complex64> {
            let grid = CircleGrid::new(nn, 1)?;
            let vals = grid
                .nodes()
                .par_iter()
                .map(|&z| f(z))
                .collect::<Result<Vec<_>>>()?;
            Ok(vals.iter().sum::<Complex64>() / nn as f64)
        };
        let mut nn = (opts.n_start / 2).max(16);
        let mut prev = eval(nn)?;
        loop {
            nn *= 2;
            let cur = eval(nn)?;
            let diff = (cur - prev).norm();
            if diff <= opts.refine * cur.norm() + opts.abs_floor {
                return Ok(QuadratureResult {
                    value: cur,
                    est_error: diff,
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

    /// Residual of the linear relation
    /// F(x;v) F+(x,w) - F(x;w) F+(x,v) = II_n F+(v,w).
    /// With one hatted argument this is the lowering relation
    /// F-(x,v) F+(x,w) + F(v;x) F(x;w) = II_n F(v;w).
    pub fn check_linear_relation(&self, x: Complex64, v: Arg, w: Arg) -> Result<f64> {
        let t1 = self.f(x, v)? * self.f_plus(Arg::Plain(x), w)?;
        let t2 = self.f(x, w)? * self.f_plus(Arg::Plain(x), v)?;
        let t3 = self.selberg_value()? * self.f_plus(v, w)?;
        Ok(rel_residual(&[t1, -t2, -t3]))
    }

    /// Residual of the Pluecker relation
    /// F+(w,x)F+(y,z) - F+(w,y)F+(x,z) + F+(w,z)F+(x,y) = 0
    /// for any mixture of plain and hatted arguments.
    pub fn check_pluecker(&self, args: [Arg; 4]) -> Result<f64> {
        let [w, x, y, z] = args;
        let t1 = self.f_plus(w, x)? * self.f_plus(y, z)?;
        let t2 = self.f_plus(w, y)? * self.f_plus(x, z)?;
        let t3 = self.f_plus(w, z)? * self.f_plus(x, y)?;
        Ok(rel_residual(&[t1, -t2, t3]))
    }

    /// Normalized residual of the biorthogonality
    /// int F_n(z;v) H(z) / psi_p(v,z) Delta(z;u) dz/(2 pi i z) = 0
    /// for H of degree exactly n-1 (the quasi-periodicity multiplier is
    /// degree-specific, so lower degrees are not in the annihilated
    /// space). The residual is |integral| divided by the integral of
    /// |integrand|, so a failure of biorthogonality (e.g. H of degree n)
    /// shows up at order one.
    /// The inner integral of F and the outer pairing are fused over one
    /// shared node grid: since every theta-pair argument z w^{+-1} is again
    /// a grid node, F_n at all outer nodes costs one pass over the
    /// (n+1)-fold grid with table lookups, instead of an adaptive
    /// n-dimensional quadrature per outer node.
    pub fn check_biorthogonality(&self, v: Complex64, h: &BC1Theta) -> Result<f64> {
        let n = self.ps.n;
        let (p, q) = (self.ps.p, self.ps.q);
        let mut gp = self.ps.u().to_vec();
        gp.push(v);
        gp.push(p.value() / v);
        let gp = cancel_pq_pairs(p, q, &gp);
        check_contour(p, q, &gp, &[]).ok()?;
        let nn = if n <= 1 { 1024 } else { 512 };
        let grid = CircleGrid::new(nn, 1)?;
        let nodes = grid.nodes().to_vec();
        let th = nodes
            .iter()
            .map(|&w| theta(p, w))
            .collect::<Result<Vec<Complex64>>>()?;
        let pw_in = nodes
            .par_iter()
            .map(|&w| point_weight(p, q, &gp, &[], w))
            .collect::<Result<Vec<Complex64>>>()?;
        let outer = nodes
            .par_iter()
            .map(|&z| {
                Ok(self.weight(z)? * h.eval(z)? / psi(p, v, z)?
                    * z.powi(-(n as i32))
                    * v.powi(n as i32))
            })
            .collect::<Result<Vec<Complex64>>>()?;
        // F_n(z;v) at grid node k0, up to a constant prefactor that cancels
        // in the normalized residual.
        let inner: Vec<Complex64> = (0..nn)
            .into_par_iter()
            .map(|k0| {
                sum_grid(n, nn, |idx| {
                    let mut acc = Complex64::new(1.0, 0.0);
                    for (a, &ki) in idx.iter().enumerate() {
                        acc *= pw_in[ki]
                            * th[(k0 + ki) % nn]
                            * th[(k0 + nn - ki) % nn];
                        for &kj in &idx[a + 1..] {
                            let s = (ki + kj) % nn;
                            let d = (ki + nn - kj) % nn;
                            acc *= th[s] * th[d] * th[(nn - s) % nn] * th[(nn - d) % nn];
                        }
                    }
                    acc
                })
            })
            .collect();
        let sum: Complex64 = outer.iter().zip(&inner).map(|(o, i)| o * i).sum();
        let scale: f64 = outer
            .iter()
            .zip(&inner)
            .map(|(o, i)| (o * i).norm())
            .sum();
        if scale < 1e-300 {
            return Ok(0.0);
        }
        Ok(sum.norm() / scale)
    }

    /// Residual of the Cauchy-transform identity
    /// (p;p)^2/2 int F_n(z;v) G(z) / (psi_p(x,z) psi_p(v,z)) Delta dz/(2 pi i z)
    ///   = G(x) F+_n(x,v) / psi_p(v,x),
    /// for G of degree n and x, v in the annulus.
    pub fn check_cauchy(&self, x: Complex64, v: Complex64, g: &BC1Theta) -> Result<f64> {
        let lhs = prefactor_per_dim(self.ps.p)
            * self
                .integrate_1d(
                    |z| {
                        Ok(self.f(z, Arg::Plain(v))? * g.eval(z)?
                            / (psi(self.ps.p, x, z)? * psi(self.ps.p, v, z)?)
                            * self.weight(z)?)
                    },
                    self.opts(1),
                )?
                .value;
        let rhs = g.eval(x)? * self.f_plus(Arg::Plain(x), Arg::Plain(v))?
            / psi(self.ps.p, v, x)?;
        Ok(rel_diff(lhs, rhs))
    }

    /// Residual of the lowering-kernel integral
    /// (p;p)^2/2 int F-(z,v) G(z) psi_p(x,y) / (psi_p(x,z) psi_p(y,z)) Delta dz
    ///   = G(x) F(v;x) - G(y) F(v;y).
    pub fn check_lowering_integral(
        &self,
        v: Complex64,
        x: Complex64,
        y: Complex64,
        g: &BC1Theta,
    ) -> Result<f64> {
        let pxy = psi(self.ps.p, x, y)?;
        let lhs = prefactor_per_dim(self.ps.p)
            * self
                .integrate_1d(
                    |z| {
                        Ok(self.f_minus(z, v)? * g.eval(z)? * pxy
                            / (psi(self.ps.p, x, z)? * psi(self.ps.p, y, z)?)
                            * self.weight(z)?)
                    },
                    self.opts(1),
                )?
                .value;
        let tx = g.eval(x)? * self.f(v, Arg::Plain(x))?;
        let ty = g.eval(y)? * self.f(v, Arg::Plain(y))?;
        Ok(rel_residual(&[lhs, -tx, ty]))
    }

    /// Worst residual of the reflection and p-shift action on the row
    /// [F(x;v), F+(x,v)]: reflection multiplies by a unipotent matrix with
    /// the jump in the corner, the p-shift by the quasi-periodicity
    /// multipliers.
    pub fn check_monodromy(&self, x: Complex64, v: Arg) -> Result<f64> {
        let p = self.ps.p.value();
        let n = self.ps.n as i32;
        let f_x = self.f(x, v)?;
        let fp_x = self.f_plus(Arg::Plain(x), v)?;
        let j = self.jump(x, v)?;
        let f_inv = self.f(1.0 / x, v)?;
        let fp_inv = self.f_plus(Arg::Plain(1.0 / x), v)?;
        let f_shift = self.f(p * x, v)?;
        let fp_shift = self.f_plus(Arg::Plain(p * x), v)?;
        let mult = (p * x * x).powi(n);
        let r = [
            rel_residual(&[f_inv, -f_x]),
            rel_residual(&[fp_inv, -j, -fp_x]),
            rel_residual(&[f_shift, -f_x / mult]),
            rel_residual(&[fp_shift, -mult * j, -fp_x * mult]),
        ];
        Ok(r.into_iter().fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Nome;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn beta_ctx() -> BiorthContext {
        let p = Nome::real(0.05).unwrap();
        let q = Nome::real(0.08).unwrap();
        let head = [c(0.30, 0.0), c(0.35, 0.0), c(0.40, 0.0), c(0.45, 0.0), c(0.50, 0.0)];
        BiorthContext::new(ParameterSet::balanced(p, q, 0, 1, &head).unwrap()).unwrap()
    }

    fn n0_ctx() -> BiorthContext {
        let p = Nome::real(0.05).unwrap();
        let q = Nome::real(0.08).unwrap();
        let head = [c(0.15, 0.0), c(0.16, 0.0), c(0.17, 0.0), c(0.18, 0.0), c(0.19, 0.0)];
        BiorthContext::new(ParameterSet::balanced(p, q, 0, 0, &head).unwrap()).unwrap()
    }

    #[test]
    fn hatted_values_at_degree_one_are_psi() {
        // At n = 1 the lowering partner is a bare zero-dimensional
        // integral: F-(x,v) = psi_p(v,x).
        let ctx = beta_ctx();
        let x = c(0.7, 0.2);
        let v = c(0.44, -0.1);
        let want = psi(ctx.params().p, x, v).unwrap();
        assert!(rel_diff(ctx.f_minus(x, v).unwrap(), want) < 1e-12);
        assert!(rel_diff(ctx.f(x, Arg::Hatted(v)).unwrap(), want) < 1e-12);
        assert!(
            rel_diff(ctx.f_plus(Arg::Hatted(x), Arg::Hatted(v)).unwrap(), want) < 1e-12
        );
    }

    #[test]
    fn f_is_reciprocal_and_quasi_periodic() {
        let ctx = beta_ctx();
        let p = ctx.params().p.value();
        let v = Arg::Plain(c(0.42, 0.05));
        for x in [c(0.7, 0.3), c(1.4, -0.5)] {
            let fx = ctx.f(x, v).unwrap();
            assert!(rel_diff(ctx.f(1.0 / x, v).unwrap(), fx) < 1e-10);
            let law = (p * x * x).powi(-1) * fx;
            assert!(rel_diff(ctx.f(p * x, v).unwrap(), law) < 1e-10);
        }
    }

    #[test]
    fn f_plus_is_antisymmetric() {
        let ctx = beta_ctx();
        let a = Arg::Plain(c(0.6, 0.1));
        let b = Arg::Plain(c(0.4, -0.3));
        let ab = ctx.f_plus(a, b).unwrap();
        let ba = ctx.f_plus(b, a).unwrap();
        assert!(rel_diff(ab, -ba) < 1e-10);
        assert_eq!(ctx.f_plus(a, a).unwrap(), c(0.0, 0.0));
        // Mixed kinds: F+(a, b^) = -F+(b^, a).
        let bh = Arg::Hatted(c(0.5, 0.2));
        let m1 = ctx.f_plus(a, bh).unwrap();
        let m2 = ctx.f_plus(bh, a).unwrap();
        assert!(rel_diff(m1, -m2) < 1e-12);
    }

    #[test]
    fn linear_relations_hold() {
        let ctx = beta_ctx();
        let x = c(0.55, 0.15);
        let v = c(0.47, -0.08);
        let w = c(0.38, 0.21);
        // Raising relation (all plain).
        let r = ctx
            .check_linear_relation(x, Arg::Plain(v), Arg::Plain(w))
            .unwrap();
        assert!(r < 1e-9, "raising residual {r:e}");
        // Lowering relation (first argument hatted).
        let r = ctx
            .check_linear_relation(x, Arg::Hatted(v), Arg::Plain(w))
            .unwrap();
        assert!(r < 1e-9, "lowering residual {r:e}");
    }

    #[test]
    fn pluecker_relation_mixed_kinds() {
        let ctx = beta_ctx();
        let combos: [[Arg; 4]; 3] = [
            [
                Arg::Plain(c(0.6, 0.1)),
                Arg::Plain(c(0.45, -0.2)),
                Arg::Hatted(c(0.5, 0.0)),
                Arg::Plain(c(0.35, 0.25)),
            ],
            [
                Arg::Hatted(c(0.7, 0.1)),
                Arg::Plain(c(0.5, 0.12)),
                Arg::Hatted(c(0.4, -0.1)),
                Arg::Plain(c(0.62, 0.0)),
            ],
            // An argument outside the annulus exercises the extension.
            [
                Arg::Plain(c(1.3, 0.2)),
                Arg::Plain(c(0.5, 0.0)),
                Arg::Hatted(c(0.45, 0.0)),
                Arg::Plain(c(0.58, -0.14)),
            ],
        ];
        for (i, combo) in combos.iter().enumerate() {
            let r = ctx.check_pluecker(*combo).unwrap();
            assert!(r < 1e-8, "combo {i}: residual {r:e}");
        }
    }

    #[test]
    fn biorthogonality_and_negative_control() {
        let ctx = beta_ctx();
        let p = ctx.params().p;
        let v = c(0.45, 0.1);
        // Degree 0 against degree-1 functions: orthogonal.
        let h = BC1Theta::constant(p, c(1.0, 0.0));
        let r = ctx.check_biorthogonality(v, &h).unwrap();
        assert!(r < 1e-10, "residual {r:e}");
        // Degree 1 is not orthogonal: the residual is order one.
        let h1 = BC1Theta::product(p, vec![c(0.5, 0.2)], c(1.0, 0.0));
        let r1 = ctx.check_biorthogonality(v, &h1).unwrap();
        assert!(r1 > 1e-3, "negative control residual {r1:e}");
    }

    #[test]
    fn cauchy_transform_identity() {
        let ctx = beta_ctx();
        let g = BC1Theta::product(ctx.params().p, vec![c(0.55, -0.1)], c(1.0, 0.0));
        let r = ctx.check_cauchy(c(0.6, 0.2), c(0.43, -0.05), &g).unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn lowering_kernel_integral() {
        let ctx = beta_ctx();
        let g = BC1Theta::product(ctx.params().p, vec![c(0.48, 0.12)], c(1.0, 0.0));
        let r = ctx
            .check_lowering_integral(c(0.5, 0.0), c(0.61, 0.1), c(0.36, -0.2), &g)
            .unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn monodromy_action_is_consistent() {
        let ctx = beta_ctx();
        let r = ctx
            .check_monodromy(c(0.72, 0.18), Arg::Plain(c(0.46, 0.0)))
            .unwrap();
        assert!(r < 1e-9, "residual {r:e}");
        let r = ctx
            .check_monodromy(c(0.66, -0.2), Arg::Hatted(c(0.52, 0.1)))
            .unwrap();
        assert!(r < 1e-9, "hatted residual {r:e}");
    }

    #[test]
    fn jump_matches_contour_deformation_at_degree_zero() {
        // Independent grounding for the reflection jump: at n = 0 the
        // Cauchy transform is a single contour integral, and F+(1/x, v) can
        // be computed directly by deforming the contour across the poles at
        // z = x^{+-1}: unit circle plus twice the small circle around 1/x.
        let ctx = n0_ctx();
        let ps = ctx.params();
        let (p, q) = (ps.p, ps.q);
        let x = c(0.8, 0.1);
        let v = c(0.3, 0.0);
        let xi = 1.0 / x;

        let mut gp = ps.u().to_vec();
        gp.extend([xi, p.value() * x, v, p.value() / v]);
        let integrand = |z: Complex64| point_weight(p, q, &gp, &[], z).unwrap();

        let circle = |nn: usize| {
            let grid = CircleGrid::new(nn, 1).unwrap();
            let nodes = grid.nodes().to_vec();
            sum_grid(1, nn, |idx| integrand(nodes[idx[0]]))
        };
        let unit = circle(2048);
        assert!((unit - circle(1024)).norm() < 1e-10 * unit.norm());

        // Small positively oriented circle around 1/x, radius well inside
        // the gap to both the unit circle and the next pole ring.
        let eps = 0.1;
        let small = |k: usize| {
            let mut acc = c(0.0, 0.0);
            for j in 0..k {
                let z = xi + Complex64::from_polar(eps, TAU * j as f64 / k as f64);
                acc += integrand(z) * (z - xi) / z;
            }
            acc / k as f64
        };
        let residue = small(256);
        assert!((residue - small(128)).norm() < 1e-10 * residue.norm().max(1e-12));

        let oracle = v * xi * psi(p, v, xi).unwrap()
            * prefactor_per_dim(p)
            * (unit + 2.0 * residue);
        let extended = ctx.f_plus(Arg::Plain(xi), Arg::Plain(v)).unwrap();
        assert!(
            rel_diff(oracle, extended) < 1e-9,
            "oracle {oracle} extended {extended}"
        );
        // And the jump itself: F+(1/x,v) - F+(x,v) with F_0 = II_0 = 1.
        let direct = ctx.f_plus(Arg::Plain(x), Arg::Plain(v)).unwrap();
        let jump = ctx.jump(x, Arg::Plain(v)).unwrap();
        assert!(rel_residual(&[oracle, -direct, -jump]) < 1e-9);
    }

    #[test]
    fn pq_cancellation_admits_shifted_parameter_slots() {
        // v = u_r / q makes p/v = pq/u_r cancel against u_r. With
        // u_0 < pq the factor p/v alone has modulus > 1, so only the
        // cancellation makes the unit circle a valid contour.
        let p = Nome::real(0.05).unwrap();
        let q = Nome::real(0.08).unwrap();
        let head = [
            c(0.002, 0.0),
            c(0.45, 0.0),
            c(0.48, 0.0),
            c(0.50, 0.0),
            c(0.52, 0.0),
            c(0.55, 0.0),
            c(0.58, 0.0),
        ];
        let ps = ParameterSet::balanced(p, q, 1, 1, &head).unwrap();
        let ctx = BiorthContext::new(ps).unwrap();
        let u0 = ctx.params().u()[0];
        let v = u0 / q.value();
        assert!(v.norm() < 1.0 && (p.value() / v).norm() > 1.0);
        let val = ctx.f(c(0.7, 0.1), Arg::Plain(v)).unwrap();
        assert!(val.is_finite() && val.norm() > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4))]

        #[test]
        fn pluecker_random_plain_arguments(
            ph in prop::array::uniform4(0.0..TAU),
            ms in prop::array::uniform4(0.35f64..0.75)
        ) {
            let ctx = beta_ctx();
            let args = [
                Arg::Plain(Complex64::from_polar(ms[0], ph[0])),
                Arg::Plain(Complex64::from_polar(ms[1], ph[1])),
                Arg::Plain(Complex64::from_polar(ms[2], ph[2])),
                Arg::Plain(Complex64::from_polar(ms[3], ph[3])),
            ];
            let r = ctx.check_pluecker(args).unwrap();
            prop_assert!(r < 1e-8, "residual {r:e}");
        }
    }
}
