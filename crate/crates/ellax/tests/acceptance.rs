//! End-to-end acceptance checks for the library: kernel functional
//! equations, quadrature against closed forms, biorthogonality, Pluecker
//! relations, the Lax matrices with their special values, isomonodromy of
//! the parameter shifts, and the order-1 reflection transformation.
//!
//! Each test prints a single PASS/FAIL line with its worst residual, then
//! asserts. Tolerances are pinned; runtime budgets are asserted where the
//! computation is expensive.

use ellax::bctheta::BC1Theta;
use ellax::biorth::{Arg, BiorthContext};
use ellax::kernel::{gamma, gamma_plus, theta, Nome};
use ellax::lax::{check_isomono_integer, IntegerShift, LaxContext};
use ellax::quad::{check_contour, QuadOptions};
use ellax::selberg::{
    random_balanced, reflection_transform, selberg, selberg_closed_form_m0, ParameterSet,
};
use ellax::{rel_diff, rel_residual};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn nome(x: f64) -> Nome {
    Nome::real(x).unwrap()
}

const HEAD_N1: [f64; 7] = [0.24, 0.245, 0.25, 0.252, 0.255, 0.26, 0.262];
const HEAD_N0: [f64; 7] = [0.11, 0.12, 0.13, 0.135, 0.14, 0.145, 0.15];

fn ctx_m1(p: Nome, q: Nome, n: usize) -> LaxContext {
    let head: Vec<Complex64> = if n == 1 { &HEAD_N1[..] } else { &HEAD_N0[..] }
        .iter()
        .map(|&r| c(r, 0.0))
        .collect();
    let ps = ParameterSet::balanced(p, q, 1, n, &head).unwrap();
    let bio = BiorthContext::new(ps).unwrap();
    LaxContext::new(bio, Arg::Plain(c(0.62, 0.13)), Arg::Plain(c(0.41, -0.22))).unwrap()
}

/// Seeded sample points in the annulus, skipping the radius band where an
/// argument reduction lands a quadrature parameter near the contour.
fn samples(count: usize, seed: u64, p: Nome, q: Nome) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = 0.33 + 0.6 * rng.gen::<f64>();
        let phi = TAU * rng.gen::<f64>();
        let ratio = q.modulus() * r / p.modulus();
        if ratio > 0.85 && ratio < 1.18 {
            continue;
        }
        out.push(Complex64::from_polar(r, phi));
    }
    out
}

fn verdict(name: &str, pass: bool, detail: String) {
    println!("{} {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

#[test]
fn kernel_functional_equations() {
    let t0 = Instant::now();
    let (p, q) = (nome(0.05), nome(0.08));
    let (pv, qv) = (p.value(), q.value());
    let one = c(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<Complex64> = (0..1000)
        .map(|_| Complex64::from_polar(0.3 + 0.65 * rng.gen::<f64>(), TAU * rng.gen::<f64>()))
        .collect();
    let mut worst = 0.0_f64;
    for &z in &pts {
        let g = |w| gamma(p, q, w).unwrap();
        let th = |w| theta(p, w).unwrap();
        let gp = |x| gamma_plus(p, q, q, x).unwrap();
        worst = worst.max(rel_residual(&[g(qv * z), -(th(z) * g(z))]));
        worst = worst.max(rel_residual(&[g(pv * z), -(theta(q, z).unwrap() * g(z))]));
        worst = worst.max(rel_diff(g(pv * qv / z) * g(z), one));
        worst = worst.max(rel_diff(
            g(z) * g(1.0 / z) * th(pv * z) * theta(q, z).unwrap(),
            one,
        ));
        worst = worst.max(rel_residual(&[th(1.0 / z), th(z) / z]));
        worst = worst.max(rel_residual(&[th(pv * z), th(z) / z]));
        worst = worst.max(rel_residual(&[gp(qv * z), -(g(z) * gp(z))]));
        worst = worst.max(rel_diff(gp(pv * qv * qv / z), gp(z)));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        "kernel functional equations",
        worst <= 1e-12 && secs < 10.0,
        format!("1000 points, worst {worst:.2e}, {secs:.2}s"),
    );
}

#[test]
fn beta_integral_matches_closed_form() {
    let t0 = Instant::now();
    let (p, q) = (nome(0.05), nome(0.08));
    let opts = QuadOptions {
        n_start: 512,
        refine: 1e-10,
        abs_floor: 1e-13,
        n_max: 2048,
    };
    let mut worst = 0.0_f64;
    let mut n_max_used = 0usize;
    for i in 0..20u64 {
        let ps = random_balanced(p, q, 0, 1, 1 + i).unwrap();
        let engine = selberg(&ps, opts).unwrap();
        let closed = selberg_closed_form_m0(&ps).unwrap();
        worst = worst.max(rel_diff(engine.value, closed));
        n_max_used = n_max_used.max(engine.n_used);
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        "beta integral vs closed form",
        worst <= 1e-10 && n_max_used <= 2048 && secs < 30.0,
        format!("20 sets, worst {worst:.2e}, N<={n_max_used}, {secs:.2}s"),
    );
}

#[test]
fn two_axis_integral_matches_closed_form() {
    let t0 = Instant::now();
    let (p, q) = (nome(0.03), nome(0.15));
    let opts = QuadOptions {
        n_start: 256,
        refine: 1.0,
        abs_floor: 1e-13,
        n_max: 256,
    };
    let mut worst = 0.0_f64;
    let mut n_max_used = 0usize;
    for i in 0..5u64 {
        let ps = random_balanced(p, q, 0, 2, 100 + i).unwrap();
        let engine = selberg(&ps, opts).unwrap();
        let closed = selberg_closed_form_m0(&ps).unwrap();
        worst = worst.max(rel_diff(engine.value, closed));
        n_max_used = n_max_used.max(engine.n_used);
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        "two-axis integral vs closed form",
        worst <= 1e-8 && n_max_used <= 256 && secs < 120.0,
        format!("5 sets, worst {worst:.2e}, N<={n_max_used} per axis, {secs:.2}s"),
    );
}

#[test]
fn biorthogonality_with_negative_controls() {
    // The annihilated test space at degree n is the BC1 theta functions of
    // degree exactly n - 1: the quasi-periodicity multiplier is
    // degree-specific, so lower degrees do not qualify. The degree-n
    // negative control must stay at order one. The n = 2 regime uses a
    // small p/q ratio so the weight stays away from its poles and the
    // normalization is not dominated by near-pole cancellation.
    let head_m0_n1 = [0.30, 0.35, 0.40, 0.45, 0.50];
    let head_m0_n2 = [0.55, 0.56, 0.57, 0.58, 0.60];
    let cases: [(f64, f64, usize, usize, &[f64], Complex64); 3] = [
        (0.05, 0.08, 0, 1, &head_m0_n1, c(0.45, 0.1)),
        (0.05, 0.08, 1, 1, &HEAD_N1, c(0.62, 0.13)),
        (0.01, 0.30, 0, 2, &head_m0_n2, c(0.45, 0.1)),
    ];
    let factor = |j: usize| Complex64::from_polar(0.5, 1.0 + 0.7 * j as f64);
    let mut worst = 0.0_f64;
    let mut control_min = f64::INFINITY;
    for (p, q, m, n, head, v) in cases {
        let (p, q) = (nome(p), nome(q));
        let head: Vec<Complex64> = head.iter().map(|&r| c(r, 0.0)).collect();
        let ps = ParameterSet::balanced(p, q, m, n, &head).unwrap();
        let bio = BiorthContext::new(ps).unwrap();
        for start in [0usize, 1] {
            let h = BC1Theta::product(
                p,
                (start..start + n - 1).map(factor).collect(),
                c(1.0, 0.0),
            );
            worst = worst.max(bio.check_biorthogonality(v, &h).unwrap());
        }
        let h = BC1Theta::product(p, (0..n).map(factor).collect(), c(1.0, 0.0));
        control_min = control_min.min(bio.check_biorthogonality(v, &h).unwrap());
    }
    verdict(
        "biorthogonality with negative controls",
        worst <= 1e-8 && control_min >= 1e-3,
        format!("worst vanishing {worst:.2e}, smallest control {control_min:.2e}"),
    );
}

#[test]
fn pluecker_relations_cover_all_hat_mixtures() {
    let (p, q) = (nome(0.05), nome(0.08));
    let pool = samples(80, 5, p, q);
    let bios: Vec<BiorthContext> = [1usize, 0]
        .iter()
        .map(|&n| {
            let head: Vec<Complex64> = if n == 1 { &HEAD_N1[..] } else { &HEAD_N0[..] }
                .iter()
                .map(|&r| c(r, 0.0))
                .collect();
            BiorthContext::new(ParameterSet::balanced(p, q, 1, n, &head).unwrap()).unwrap()
        })
        .collect();
    let mut worst = 0.0_f64;
    for i in 0..20usize {
        let mask = i % 16;
        let bio = if i < 16 { &bios[0] } else { &bios[1] };
        let mut args = [Arg::Plain(c(0.0, 0.0)); 4];
        for (j, slot) in args.iter_mut().enumerate() {
            let z = pool[4 * i + j];
            *slot = if (mask >> j) & 1 == 1 {
                Arg::Hatted(z)
            } else {
                Arg::Plain(z)
            };
        }
        worst = worst.max(bio.check_pluecker(args).unwrap());
    }
    verdict(
        "pluecker relations over all hat mixtures",
        worst <= 1e-8,
        format!("20 quadruples, worst {worst:.2e}"),
    );
}

#[test]
fn m_matrix_determinant_and_p_shift() {
    let (p, q) = (nome(0.05), nome(0.08));
    let mut worst = 0.0_f64;
    for n in [0usize, 1] {
        let ctx = ctx_m1(p, q, n);
        for &z in &samples(8, 6 + n as u64, p, q) {
            worst = worst.max(ctx.check_m_det(z).unwrap());
            worst = worst.max(ctx.check_p_shift_of_m(z).unwrap());
        }
    }
    verdict(
        "fundamental matrix determinant and p-shift",
        worst <= 1e-8,
        format!("8 points per degree, worst {worst:.2e}"),
    );
}

#[test]
fn a_matrix_laws_and_special_values() {
    let t0 = Instant::now();
    let (p, q) = (nome(0.05), nome(0.08));
    let mut worst_law = 0.0_f64;
    let mut worst_special = 0.0_f64;
    let mut counts = Vec::new();
    for n in [0usize, 1] {
        let ctx = ctx_m1(p, q, n);
        for &z in &samples(3, 7 + n as u64, p, q) {
            worst_law = worst_law.max(ctx.check_atilde_det(z).unwrap());
            worst_law = worst_law.max(ctx.check_atilde_p_law(z).unwrap());
            worst_law = worst_law.max(ctx.check_atilde_symmetry(z).unwrap());
        }
        let svs = ctx.special_values_a().unwrap();
        counts.push(svs.len());
        for sv in &svs {
            worst_special = worst_special.max(sv.residual);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        "shift matrix A laws and special values",
        worst_law <= 1e-8 && worst_special <= 1e-7 && counts == [20, 20] && secs < 300.0,
        format!(
            "laws {worst_law:.2e}, {} special values each degree, worst {worst_special:.2e}, {secs:.1}s",
            counts[0]
        ),
    );
}

#[test]
fn isomonodromy_of_parameter_shifts() {
    let (p, q) = (nome(0.05), nome(0.08));
    let zs = samples(2, 8, p, q);
    let ctx = ctx_m1(p, q, 1);
    let mut worst = 0.0_f64;
    worst = worst.max(
        ctx.check_isomono_vw(Arg::Plain(c(0.6, -0.1)), Arg::Plain(c(0.48, 0.22)), &zs)
            .unwrap(),
    );
    worst = worst.max(
        ctx.check_isomono_vw(Arg::Hatted(c(0.58, -0.15)), Arg::Hatted(c(0.52, 0.2)), &zs)
            .unwrap(),
    );
    // Integer shifts need |u_1| < |q| so the down-shifted parameter stays
    // inside the annulus.
    for (n, head) in [
        (0usize, [0.13, 0.06, 0.14, 0.15, 0.16, 0.17, 0.18]),
        (1, [0.35, 0.06, 0.36, 0.37, 0.38, 0.39, 0.40]),
    ] {
        let head: Vec<Complex64> = head.iter().map(|&r| c(r, 0.0)).collect();
        let ps = ParameterSet::balanced(p, q, 1, n, &head).unwrap();
        let bio = BiorthContext::new(ps).unwrap();
        worst = worst.max(check_isomono_integer(&bio, IntegerShift::UpDown, &zs).unwrap());
        if n >= 1 {
            worst = worst.max(check_isomono_integer(&bio, IntegerShift::UpUp, &zs).unwrap());
        }
    }
    worst = worst.max(ctx.check_a_prime_elliptic(c(0.7, 0.05), zs[0]).unwrap());
    verdict(
        "isomonodromy of parameter shifts",
        worst <= 1e-7,
        format!("worst {worst:.2e}"),
    );
}

#[test]
fn b_matrix_laws_and_special_values() {
    let (p, q) = (nome(0.05), nome(0.08));
    let zs = samples(2, 9, p, q);
    let mut worst = 0.0_f64;
    let mut counts = Vec::new();
    for n in [0usize, 1] {
        let ctx = ctx_m1(p, q, n);
        let hs = ctx
            .half_shift(Arg::Plain(c(0.6, -0.1)), Arg::Plain(c(0.48, 0.22)))
            .unwrap();
        for &z in &zs {
            worst = worst.max(ctx.check_btilde_det(&hs, z).unwrap());
            worst = worst.max(ctx.check_btilde_p_law(&hs, z).unwrap());
            worst = worst.max(ctx.check_b_shift_equation(&hs, z).unwrap());
        }
        let svs = ctx.special_values_b(&hs).unwrap();
        counts.push(svs.len());
        for sv in &svs {
            worst = worst.max(sv.residual);
        }
    }
    verdict(
        "half-shift matrix B laws and special values",
        worst <= 1e-7 && counts == [8, 8],
        format!(
            "{} special values each degree, worst {worst:.2e}",
            counts[0]
        ),
    );
}

#[test]
fn reflection_transformation_of_parameters() {
    let (p, q) = (nome(0.05), nome(0.08));
    let target = (p.modulus() * q.modulus()).powi(2);
    let gm = target.powf(1.0 / 8.0);
    let mut worst = 0.0_f64;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        // Real positive parameters keep every fractional power on the
        // principal branch.
        let ps = loop {
            let head: Vec<Complex64> = (0..7)
                .map(|_| c(gm * (0.9 + 0.2 * rng.gen::<f64>()), 0.0))
                .collect();
            if let Ok(ps) = ParameterSet::balanced(p, q, 1, 1, &head) {
                let last = ps.u()[7];
                if last.re > p.modulus() * q.modulus()
                    && last.re < 0.9
                    && check_contour(p, q, ps.u(), &[]).is_pass()
                {
                    break ps;
                }
            }
        };
        let (lhs, rhs) = reflection_transform(&ps, QuadOptions::for_dim(1)).unwrap();
        worst = worst.max(rel_diff(lhs, rhs));
    }
    verdict(
        "reflection transformation of parameters",
        worst <= 1e-6,
        format!("3 real-positive sets, worst {worst:.2e}"),
    );
}
