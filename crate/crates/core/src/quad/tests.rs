use super::*;
use crate::domain::Polydisc;
use std::f64::consts::PI;

fn origin(n: usize) -> Vec<Vec<Complex64>> {
    vec![vec![Complex64::new(0.0, 0.0); n]]
}

#[test]
fn unit_disc_area() {
    let est = integrate(|_| 1.0, &Polydisc::unit_disc(), &QuadConfig::with_tol(1e-9));
    assert!(est.is_converged());
    assert!((est.value - PI).abs() < 1e-9, "area = {}", est.value);
}

#[test]
fn integrable_pole_one_over_abs() {
    // ∫_{|z|<1} |z|^{-1} = 2π ∫_0^1 dr = 2π
    let cfg = QuadConfig::with_tol(1e-8).with_singular_points(origin(1));
    let est = integrate(|z| 1.0 / z[0].norm(), &Polydisc::unit_disc(), &cfg);
    assert!(est.is_converged());
    assert!(
        (est.value - 2.0 * PI).abs() < 1e-7,
        "got {}, want 2π",
        est.value
    );
}

#[test]
fn log_divergence_detected() {
    let cfg = QuadConfig::with_tol(1e-8).with_singular_points(origin(1));
    let est = integrate(|z| 1.0 / z[0].norm_sqr(), &Polydisc::unit_disc(), &cfg);
    assert_eq!(est.status, QuadStatus::DivergenceSuspected);
}

#[test]
fn polynomial_moment() {
    // ∫_{|z|<1} |z|² = 2π/4 = π/2
    let est = integrate(
        |z| z[0].norm_sqr(),
        &Polydisc::unit_disc(),
        &QuadConfig::with_tol(1e-9),
    );
    assert!((est.value - PI / 2.0).abs() < 1e-8);
}

#[test]
fn two_dims_volume() {
    let region = Polydisc::new(vec![Complex64::new(0.0, 0.0); 2], vec![1.0, 0.5]);
    let est = integrate(|_| 1.0, &region, &QuadConfig::with_tol(1e-7));
    let want = PI * PI * 0.25;
    assert!((est.value - want).abs() < 1e-6, "got {}", est.value);
}

#[test]
fn sublevel_full_region_matches_plain() {
    // t chosen so that {φ < -t} ⊇ region
    let cfg = QuadConfig::with_tol(1e-8);
    let region = Polydisc::unit_disc();
    let f = |z: &[Complex64]| 1.0 + z[0].norm_sqr();
    let plain = integrate(f, &region, &cfg);
    let sub = integrate_sublevel(f, |_| -100.0, 3.0, &region, &cfg);
    assert!((plain.value - sub.value).abs() < 2e-8);
}

#[test]
fn sublevel_radial_disc() {
    // φ = log|z|, t = 1: {φ < -1} = {|z| < e^{-1}}, area π e^{-2}
    let cfg = QuadConfig::with_tol(1e-8);
    let est = integrate_sublevel(
        |_| 1.0,
        |z: &[Complex64]| z[0].norm().ln(),
        1.0,
        &Polydisc::unit_disc(),
        &cfg,
    );
    let want = PI * (-2.0f64).exp();
    assert!(est.is_converged());
    assert!(
        (est.value - want).abs() < 1e-7,
        "got {}, want {}",
        est.value,
        want
    );
}

#[test]
fn sublevel_empties_as_t_grows() {
    let cfg = QuadConfig::with_tol(1e-8);
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let mut prev = f64::INFINITY;
    for t in [0.5, 1.0, 2.0, 4.0, 12.0] {
        let est = integrate_sublevel(|_| 1.0, phi, t, &Polydisc::unit_disc(), &cfg);
        assert!(est.value <= prev + 1e-9);
        prev = est.value;
    }
    assert!(prev < 1e-8, "sublevel mass should vanish, got {prev}");
}

#[test]
fn integrability_thresholds_match_analytic() {
    // |z|^{-c} near 0 in ℂⁿ is integrable iff c < 2n
    let cases_n1: &[(f64, Integrability)] = &[
        (0.5, Integrability::Converges),
        (1.0, Integrability::Converges),
        (1.5, Integrability::Converges),
        (1.9, Integrability::Converges),
        (2.1, Integrability::Diverges),
        (3.0, Integrability::Diverges),
    ];
    for &(c, want) in cases_n1 {
        let v = integrability_at(
            |z| z[0].norm().powf(-c),
            &[Complex64::new(0.0, 0.0)],
            0.5,
            12,
            1e-3,
        );
        assert_eq!(v.verdict, want, "n=1 c={c} slope={}", v.decay_slope);
    }
    let cases_n2: &[(f64, Integrability)] = &[
        (3.0, Integrability::Converges),
        (3.9, Integrability::Converges),
        (4.1, Integrability::Diverges),
    ];
    for &(c, want) in cases_n2 {
        let v = integrability_at(
            |z| (z[0].norm_sqr() + z[1].norm_sqr()).sqrt().powf(-c),
            &[Complex64::new(0.0, 0.0); 2],
            0.5,
            10,
            1e-2,
        );
        assert_eq!(v.verdict, want, "n=2 c={c} slope={}", v.decay_slope);
    }
}

#[test]
fn integrability_borderline_is_indeterminate() {
    // exact threshold c = 2: annuli are level-independent, slope ≈ 0
    let v = integrability_at(
        |z| 1.0 / z[0].norm_sqr(),
        &[Complex64::new(0.0, 0.0)],
        0.5,
        12,
        1e-3,
    );
    assert_eq!(v.verdict, Integrability::Indeterminate);
    assert!(v.decay_slope.abs() < 0.02);
    assert!(!v.is_integrable(), "borderline treated as non-integrable");
}

#[test]
fn annulus_slope_value() {
    // I_j ∝ 2^{-0.5 j} for |z|^{-1.5}
    let v = integrability_at(
        |z| z[0].norm().powf(-1.5),
        &[Complex64::new(0.0, 0.0)],
        0.5,
        12,
        1e-4,
    );
    assert!(
        (v.decay_slope + 0.5).abs() < 0.01,
        "slope {}",
        v.decay_slope
    );
}

#[test]
fn annulus_sums_match_ball_integral() {
    // Σ_j I_j + outer complement = ∫ over the disc, for an integrable pole
    let f = |z: &[Complex64]| z[0].norm().powf(-1.5);
    let v = integrability_at(f, &[Complex64::new(0.0, 0.0)], 0.5, 16, 1e-5);
    let shell_sum: f64 = v.annulus_integrals.iter().map(|(_, i)| i).sum();
    // remaining inner ball below the deepest annulus: 2π ∫_0^{r_min} r^{-0.5} dr
    let r_min = 0.5 * 0.5f64.powi(16);
    let inner = 2.0 * PI * r_min.sqrt() * 2.0;
    let tol = 1e-4;
    let cfg = QuadConfig::with_tol(tol).with_singular_points(origin(1));
    let ball = integrate(f, &Polydisc::disc(0.5), &cfg);
    assert!(
        (shell_sum + inner - ball.value).abs() < 2.0 * tol + 1e-6,
        "shells {} + inner {} vs ball {}",
        shell_sum,
        inner,
        ball.value
    );
}

#[test]
fn determinism_bitwise() {
    let cfg = QuadConfig::with_tol(1e-7).with_singular_points(origin(1));
    let f = |z: &[Complex64]| (1.0 + z[0].re).abs().powf(0.5) / z[0].norm().sqrt();
    let a = integrate(f, &Polydisc::unit_disc(), &cfg);
    let b = integrate(f, &Polydisc::unit_disc(), &cfg);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.abs_error.to_bits(), b.abs_error.to_bits());
    assert_eq!(a.cells_used, b.cells_used);
}

#[test]
fn determinism_across_thread_counts() {
    let cfg = QuadConfig::with_tol(1e-7).with_singular_points(origin(1));
    let f = |z: &[Complex64]| 1.0 / z[0].norm();
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let a = pool1.install(|| integrate(f, &Polydisc::unit_disc(), &cfg));
    let b = pool8.install(|| integrate(f, &Polydisc::unit_disc(), &cfg));
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.cells_used, b.cells_used);
}

#[test]
fn tolerance_monotonicity() {
    let f = |z: &[Complex64]| (z[0].re * 3.0).sin().abs() + z[0].norm_sqr();
    let coarse = integrate(f, &Polydisc::unit_disc(), &QuadConfig::with_tol(1e-4));
    let fine = integrate(f, &Polydisc::unit_disc(), &QuadConfig::with_tol(5e-5));
    assert!(fine.abs_error <= coarse.abs_error);
}

#[test]
fn positivity() {
    let cfg = QuadConfig::with_tol(1e-7).with_singular_points(origin(1));
    let est = integrate(|z| z[0].norm().powf(-0.7), &Polydisc::unit_disc(), &cfg);
    assert!(est.value >= 0.0);
}

#[test]
fn fubini_constant_weight() {
    // φ ≡ -c: identity reduces to ∫ f e^c = ∫ f (1 + (e^c - 1))
    let cfg = QuadConfig::with_tol(1e-6);
    let r = fubini_tail_residual(
        |z| 1.0 + z[0].re * z[0].re,
        |_| -0.8,
        &Polydisc::unit_disc(),
        &cfg,
    )
    .unwrap();
    assert!(r < 5e-6, "residual {r}");
}

#[test]
fn fubini_radial_model() {
    // f = 1, φ = log|z|: LHS = ∫|z|^{-1} = 2π; RHS = π + ∫_0^∞ πe^{-2t}e^t dt = 2π
    let cfg = QuadConfig::with_tol(1e-5).with_singular_points(origin(1));
    let r = fubini_tail_residual(
        |_| 1.0,
        |z: &[Complex64]| z[0].norm().ln(),
        &Polydisc::unit_disc(),
        &cfg,
    )
    .unwrap();
    assert!(r < 5e-5, "residual {r}");
}

#[test]
fn fubini_zero_integrand() {
    let cfg = QuadConfig::with_tol(1e-7);
    let r = fubini_tail_residual(|_| 0.0, |_| -1.0, &Polydisc::unit_disc(), &cfg).unwrap();
    assert!(r == 0.0);
}

#[test]
fn fubini_divergent_side_errors() {
    let cfg = QuadConfig::with_tol(1e-6).with_singular_points(origin(1));
    // f e^{-φ} = |z|^{-2.5} diverges
    let out = fubini_tail_residual(
        |z: &[Complex64]| z[0].norm().powf(-0.5),
        |z: &[Complex64]| 2.0 * z[0].norm().ln(),
        &Polydisc::unit_disc(),
        &cfg,
    );
    assert!(out.is_err());
}

#[test]
fn simpson_exact_on_cubics() {
    let v = adaptive_simpson_1d(&|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 10);
    assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-12);
}
