//! Closed-form and quadrature oracles, computed here independently of the
//! library's own formulas.

#![allow(clippy::excessive_precision, clippy::too_many_arguments)]

use std::f64::consts::PI;

use magnetworks::diffusion::heat_kernel;
use magnetworks::fields::{gradient, GridSpec, ScalarField};
use magnetworks::pipeline1d::{
    example2_density, example2_flow, example2_node_count, highway_density_spec, simpson,
};
use magnetworks::poisson::solve_neumann;
use magnetworks::scenario::{
    balance_report, erfc, normalization_constant, sample_density, VelocitySpec,
};
use magnetworks::transport::{cfl_dt, characteristics_density};

// Values pinned with 30-digit arithmetic (mpmath quad/erfc).
const ERFC_MINUS_3: f64 = 1.999_977_909_503_001_41;
const K1: f64 = 0.564_195_815_230_737_771;
const K2: f64 = 0.564_189_583_547_756_287;
const T_STAR_6_0: f64 = 0.999_988_946_920_872_895;
const N_STAR: [f64; 3] = [6.202_106_626_611_827_07, 16.859_073_741_284_358_2, 45.827_713_795_584_321_8];

/// Adaptive Simpson, the reference integrator for this file.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 24)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn erfc_matches_direct_quadrature() {
    for &x in &[-3.0, -1.0, -0.2, 0.0, 0.4, 1.5, 2.9, 3.1, 4.5, 6.0] {
        let tail = adaptive(&|s: f64| (-s * s).exp(), x, 12.0, 1e-15);
        let want = 2.0 / PI.sqrt() * tail;
        let err = (erfc(x) - want).abs();
        assert!(err <= 2e-15, "x = {x}: {err}");
    }
    // Deep tail, where only a relative comparison means anything.
    for &(x, want) in &[
        (3.1, 1.164_865_736_719_958_93e-5),
        (4.5, 1.966_160_441_542_887_48e-10),
        (6.0, 2.151_973_671_249_891_31e-17),
        (10.0, 2.088_487_583_762_544_76e-45),
    ] {
        assert!(rel(erfc(x), want) < 1e-13, "x = {x}");
    }
    assert!((erfc(-3.0) - ERFC_MINUS_3).abs() < 1e-15);
}

#[test]
fn normalization_gives_unit_mass_on_half_line() {
    for &(c, pinned) in &[(3.0, K1), (10.0, K2)] {
        let k = normalization_constant(c);
        assert!(rel(k, pinned) < 1e-14, "c = {c}");
        let mass = adaptive(&|x: f64| k * (-(x - c).powi(2)).exp(), 0.0, c + 12.0, 1e-15);
        assert!((mass - 1.0).abs() < 1e-12, "c = {c}: {mass}");
    }
}

#[test]
fn characteristics_density_at_the_advected_peak() {
    let spec = highway_density_spec();
    let e = std::f64::consts::E;
    let plus = characteristics_density(&spec, &VelocitySpec::LinearRadial, 0.0, 1.0, 3.0 * e).unwrap();
    let minus = K2 * (-(3.0f64 - 10.0).powi(2) - 1.0).exp();
    assert!(rel(plus + minus, K1 / e) < 1e-13);
}

#[test]
fn characteristics_density_solves_the_continuity_equation() {
    let spec = highway_density_spec();
    let rho = |t: f64, x: f64| characteristics_density(&spec, &VelocitySpec::LinearRadial, 0.0, t, x).unwrap();
    let h = 1e-5;
    for &t in &[0.3, 1.0, 1.7] {
        for &x in &[1.0, 4.0, 8.5, 15.0, 27.0] {
            let dt = (rho(t + h, x) - rho(t - h, x)) / (2.0 * h);
            let dx = ((x + h) * rho(t, x + h) - (x - h) * rho(t, x - h)) / (2.0 * h);
            assert!((dt + dx).abs() < 1e-7, "t = {t}, x = {x}: {}", dt + dx);
        }
    }
}

#[test]
fn characteristics_density_keeps_unit_mass() {
    let spec = highway_density_spec();
    for &t in &[0.0f64, 0.5, 1.0, 2.0] {
        let plus = |x: f64| K1 * (-(x * (-t).exp() - 3.0).powi(2) - t).exp();
        let total = adaptive(&plus, 0.0, 16.0 * t.exp(), 1e-14);
        assert!((total - 1.0).abs() < 1e-11, "t = {t}");
        let x = 2.5 * t.exp();
        let lib = characteristics_density(&spec, &VelocitySpec::LinearRadial, 0.0, t, x).unwrap();
        assert!(rel(lib, example2_density(t, x)) < 1e-14);
    }
}

#[test]
fn example2_flow_matches_quadrature_of_the_density() {
    let integrand = |s: f64| K1 * (-(s - 3.0).powi(2)).exp() - K2 * (-(s - 10.0).powi(2)).exp();
    let t6 = adaptive(&integrand, 0.0, 6.0, 1e-15);
    assert!((t6 - T_STAR_6_0).abs() < 1e-13);
    assert!((example2_flow(0.0, 6.0) - T_STAR_6_0).abs() < 1e-14);

    for &t in &[0.0, 1.0, 2.0] {
        assert_eq!(example2_flow(t, 0.0), 0.0);
        assert!(example2_flow(t, 40.0 * t.exp()).abs() < 1e-14);
        for &x in &[2.0, 9.0, 20.0] {
            let direct = adaptive(&|s| example2_density(t, s), 0.0, x, 1e-15);
            assert!((example2_flow(t, x) - direct).abs() < 1e-12, "t = {t}, x = {x}");
        }
    }
}

#[test]
fn example2_node_count_matches_pinned_values() {
    for (k, &want) in N_STAR.iter().enumerate() {
        let t = k as f64;
        assert!(rel(example2_node_count(t), want) < 1e-10, "t = {t}");
        let reference = adaptive(&|x| example2_flow(t, x).powi(2), 0.0, 16.0 * t.exp(), 1e-13);
        assert!(rel(reference, want) < 1e-11, "t = {t}");
    }
}

#[test]
fn example2_node_count_grows_like_e_to_the_t() {
    // Substituting u = x e^{-t} turns N*(t) into e^t N*(0).
    for &t in &[0.25, 1.0, 1.5, 2.0] {
        assert!(rel(example2_node_count(t), t.exp() * N_STAR[0]) < 1e-10, "t = {t}");
    }
}

#[test]
fn example2_flow_is_nonnegative_and_follows_the_density_sign() {
    // Sampled on a 400 x 9 lattice of [0, 20] x [0, 2].
    for it in 0..=8 {
        let t = 0.25 * it as f64;
        let mut prev = 0.0;
        for ix in 1..=400 {
            let x = 0.05 * ix as f64;
            let v = example2_flow(t, x);
            assert!(v >= -1e-15, "t = {t}, x = {x}: {v}");
            let rho = example2_density(t, 0.5 * (x + x - 0.05));
            if rho > 1e-12 {
                assert!(v >= prev - 1e-15);
            } else if rho < -1e-12 {
                assert!(v <= prev + 1e-15);
            }
            prev = v;
        }
    }
}

#[test]
fn simpson_is_exact_on_cubics() {
    let s = simpson(|x| 4.0 * x * x * x - x + 2.0, -1.0, 3.0, 6);
    assert!((s - 84.0).abs() < 1e-12);
}

#[test]
fn cfl_dt_for_the_highway_velocity() {
    let g = GridSpec::<f64>::interval(2000, 0.0, 20.0).unwrap();
    let dt = cfl_dt(&VelocitySpec::LinearRadial, &g, 0.9, 2.0).unwrap();
    assert!(rel(dt, 4.5e-4) < 1e-12);
    let g = GridSpec::<f64>::interval(50, 0.0, 5.0).unwrap();
    let dt = cfl_dt(&VelocitySpec::Constant { vx: 2.0, vy: 0.0 }, &g, 0.9, 2.0).unwrap();
    assert!(rel(dt, 0.045) < 1e-12);
    assert_eq!(cfl_dt(&VelocitySpec::Zero, &g, 0.9, 2.0).unwrap(), 2.0);
}

#[test]
fn highway_density_is_nearly_balanced_on_the_short_domain() {
    let g = GridSpec::<f64>::interval(2000, 0.0, 20.0).unwrap();
    let rho = sample_density(&highway_density_spec(), &g);
    let report = balance_report(&rho, 1e-9).unwrap();
    assert!((report.sink_scale - 1.0).abs() < 1e-4, "{}", report.sink_scale);
}

#[test]
fn heat_kernel_has_unit_mass_and_solves_the_heat_equation() {
    let sigma: f64 = 0.8;
    for &t in &[0.1f64, 1.0, 3.0] {
        let width = (sigma * t).sqrt();
        let mass = adaptive(&|x| heat_kernel(x, t, sigma).unwrap(), -14.0 * width, 14.0 * width, 1e-15);
        assert!((mass - 1.0).abs() < 1e-12, "t = {t}");
        let var = adaptive(&|x| x * x * heat_kernel(x, t, sigma).unwrap(), -14.0 * width, 14.0 * width, 1e-15);
        assert!(rel(var, sigma * t) < 1e-10);
        let h = 1e-4;
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            let k = |x: f64, t: f64| heat_kernel(x, t, sigma).unwrap();
            let dt = (k(x, t + h) - k(x, t - h)) / (2.0 * h);
            let dxx = (k(x + h, t) - 2.0 * k(x, t) + k(x - h, t)) / (h * h);
            assert!((dt - 0.5 * sigma * dxx).abs() < 1e-5, "t = {t}, x = {x}");
        }
    }
}

#[test]
fn poisson_solution_is_gauge_invariant_and_scales_linearly() {
    let g = GridSpec::<f64>::rectangle(24, 16, 0.0, 0.0, 1.5, 1.0).unwrap();
    let rho = ScalarField::from_fn(g, |x, y| (PI * x / 1.5).cos() * (2.0 * PI * y).cos() + (PI * y).cos()).unwrap();
    let a = solve_neumann(&rho, 1e-12, 10_000).unwrap();
    let b = solve_neumann(&rho.scale(3.0), 1e-12, 10_000).unwrap();
    assert!(a.converged && b.converged);
    let diff = b.phi.axpby(1.0, &a.phi, -3.0).unwrap().max_abs();
    assert!(diff < 1e-9 * a.phi.max_abs());

    // Adding a constant to phi leaves the flow untouched.
    let shifted = a.phi.map(|v| v + 17.25);
    let t1 = gradient(&a.phi);
    let t2 = gradient(&shifted);
    let d = t1.axpby(1.0, &t2, -1.0).unwrap().max_abs();
    assert!(d <= 1e-12 * t1.max_abs());
}
