use super::*;
use crate::expr::parse_expr;
use crate::metric::{from_family, Polynomial, Section};
use approx::assert_relative_eq;
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn origin1() -> Vec<Complex64> {
    vec![c(0.0, 0.0)]
}

#[test]
fn lelong_of_log_poles() {
    // φ = c·log|z| has Lelong number c at 0 (circle max is exactly c·log r)
    for coeff in [0.5, 1.5, 3.0, 4.0] {
        let phi = parse_expr(&format!("{} * log(abs2(z1)^0.5)", coeff)).unwrap();
        let est = lelong_number(&phi, &origin1(), 0.01, 0.2).unwrap();
        assert!(
            (est.value - coeff).abs() < 0.01 * coeff.max(1.0),
            "coeff {coeff}: got {}",
            est.value
        );
        assert_eq!(est.confidence, Confidence::High);
    }
}

#[test]
fn lelong_of_smooth_function_is_zero() {
    let phi = parse_expr("abs2(z1)").unwrap();
    let est = lelong_number(&phi, &origin1(), 0.01, 0.1).unwrap();
    assert!(est.value.abs() < 0.01, "smooth slope {}", est.value);
}

#[test]
fn lelong_positive_homogeneity() {
    let phi1 = parse_expr("log(abs2(z1)^0.5)").unwrap();
    let phi3 = parse_expr("3 * log(abs2(z1)^0.5)").unwrap();
    let e1 = lelong_number(&phi1, &origin1(), 0.02, 0.3).unwrap();
    let e3 = lelong_number(&phi3, &origin1(), 0.02, 0.3).unwrap();
    assert_relative_eq!(e3.value, 3.0 * e1.value, max_relative = 1e-9);
}

#[test]
fn lelong_rejects_degenerate_input() {
    // φ ≡ -∞ on every circle
    let phi = parse_expr("log(0)").unwrap();
    assert!(matches!(
        lelong_number(&phi, &origin1(), 0.01, 0.1),
        Err(PshError::DegenerateCircle(_))
    ));
}

#[test]
fn skoda_guarantee_thresholds() {
    for (coeff, want) in [
        (0.5, SkodaVerdict::Guaranteed),
        (1.5, SkodaVerdict::Guaranteed),
        (1.99, SkodaVerdict::Guaranteed),
        (2.0, SkodaVerdict::NotGuaranteed),
        (3.0, SkodaVerdict::NotGuaranteed),
    ] {
        let phi = parse_expr(&format!("{} * log(abs2(z1)^0.5)", coeff)).unwrap();
        let est = lelong_number(&phi, &origin1(), 0.01, 0.2).unwrap();
        assert_eq!(skoda_guarantee(&est).unwrap(), want, "coeff {coeff}");
    }
}

#[test]
fn skoda_is_one_sided_in_higher_dimension() {
    // φ = 3 log|z| on ℂ²: e^{-φ} = |z|^{-3} is integrable there, but the
    // guarantee still declines because the Lelong number is ≥ 2
    let phi = parse_expr("1.5 * log(abs2(z1) + abs2(z2))").unwrap();
    let est = lelong_number(&phi, &[c(0.0, 0.0), c(0.0, 0.0)], 0.01, 0.2).unwrap();
    assert!((est.value - 3.0).abs() < 0.05, "lelong {}", est.value);
    assert_eq!(
        skoda_guarantee(&est).unwrap(),
        SkodaVerdict::NotGuaranteed
    );
}

#[test]
fn skoda_refuses_low_confidence() {
    let est = LelongEstimate {
        value: 1.0,
        radii_used: vec![],
        fit_residual: 0.2,
        confidence: Confidence::Low,
    };
    assert!(matches!(
        skoda_guarantee(&est),
        Err(PshError::LowConfidence(_))
    ));
}

#[test]
fn cutoff_b_examples() {
    let p = CutoffParams::new(1.0, 1.0);
    assert_eq!(cutoff_b(-1.0, p), 1.0);
    assert_eq!(cutoff_b(-1.5, p), 0.5);
    assert_eq!(cutoff_b(-3.0, p), 0.0);
}

#[test]
fn cutoff_b_range_monotone_and_slope() {
    let p = CutoffParams::new(0.7, 0.4);
    let mut prev = -1.0;
    for k in 0..=400 {
        let t = -3.0 + 4.0 * k as f64 / 400.0;
        let v = cutoff_b(t, p);
        assert!((0.0..=1.0).contains(&v));
        assert!(v >= prev - 1e-12);
        prev = v;
    }
    // derivative 1/B inside the window by finite differences
    let h = 1e-6;
    let t = -(p.t0 + 0.5 * p.b);
    let d = (cutoff_b(t + h, p) - cutoff_b(t - h, p)) / (2.0 * h);
    assert_relative_eq!(d, 1.0 / p.b, max_relative = 1e-6);
}

#[test]
fn cutoff_chi_examples() {
    let p = CutoffParams::new(1.0, 1.0);
    assert_eq!(cutoff_chi(0.0, p), 0.0);
    let v = cutoff_chi(-10.0, p);
    assert!((-1.0..=-0.5).contains(&v), "χ(-10) = {v}");
    // closed form at t = -1: b ≡ 1 on (-1, 0), χ = -1/2
    assert_relative_eq!(cutoff_chi(-1.0, p), -0.5, epsilon = 1e-12);
}

#[test]
fn cutoff_chi_sandwich_random_triples() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let t0 = 0.05 + 3.0 * rng.random::<f64>();
        let b = 0.05 + 0.95 * rng.random::<f64>();
        let t = -6.0 * rng.random::<f64>();
        let p = CutoffParams::new(t0, b);
        let chi = cutoff_chi(t, p);
        let c_sum = t0 + b;
        let lower = t.max(-t0 - b) / c_sum;
        let upper = t.max(-t0) / c_sum;
        assert!(chi >= -1.0 - 1e-12);
        assert!(
            lower - 1e-12 <= chi && chi <= upper + 1e-12 && upper <= 1e-12,
            "sandwich failed at t={t}, t0={t0}, B={b}: {lower} ≤ {chi} ≤ {upper}"
        );
    }
}

#[test]
fn cutoff_chi_convex_increasing() {
    let p = CutoffParams::new(0.9, 0.6);
    let mut prev = f64::NEG_INFINITY;
    let mut prev_slope = f64::NEG_INFINITY;
    let h = 0.01;
    for k in 0..=600 {
        let t = -4.0 + 5.0 * k as f64 / 600.0;
        let v = cutoff_chi(t, p);
        assert!(v >= prev - 1e-12, "increasing");
        let slope = (cutoff_chi(t + h, p) - v) / h;
        assert!(slope >= prev_slope - 1e-9, "convex");
        prev = v;
        prev_slope = slope;
    }
}

#[test]
fn mollify_constant_is_exact() {
    let phi = parse_expr("2.5").unwrap();
    let region = Polydisc::unit_disc();
    let v = mollify(&phi, 0.2, &EvalPoint::new(vec![c(0.1, 0.0)]), &region).unwrap();
    assert_relative_eq!(v, 2.5, epsilon = 1e-8);
}

#[test]
fn mollify_log_pole_decreases_to_value() {
    // φ = 2 log|z| at p = 0.5: mollified values decrease toward 2 log 0.5
    let phi = parse_expr("log(abs2(z1))").unwrap();
    let region = Polydisc::unit_disc();
    let p = EvalPoint::new(vec![c(0.5, 0.0)]);
    let target = 2.0 * 0.5f64.ln();
    let mut prev = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05] {
        let v = mollify(&phi, eps, &p, &region).unwrap();
        assert!(v <= prev + 1e-9, "eps {eps}");
        assert!(v >= target - 1e-9, "mollified psh sits above the value");
        prev = v;
    }
    assert!((prev - target).abs() < 2e-3, "ε = 0.05 close to the value");
}

#[test]
fn mollify_monotone_in_eps_at_random_points() {
    use rand::Rng;
    use rand::SeedableRng;
    let phi = parse_expr("log(abs2(z1))").unwrap();
    let region = Polydisc::unit_disc();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
    let mut checked = 0;
    while checked < 20 {
        let z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if z.norm() < 0.15 || z.norm() > 0.7 {
            continue;
        }
        let p = EvalPoint::new(vec![z]);
        let a = mollify(&phi, 0.1, &p, &region).unwrap();
        let b = mollify(&phi, 0.05, &p, &region).unwrap();
        assert!(b <= a + 1e-6, "at {z}: {b} > {a}");
        checked += 1;
    }
}

#[test]
fn mollify_boundary_error() {
    let phi = parse_expr("abs2(z1)").unwrap();
    let region = Polydisc::unit_disc();
    assert!(matches!(
        mollify(&phi, 0.2, &EvalPoint::new(vec![c(0.95, 0.0)]), &region),
        Err(PshError::BoundaryProximity { .. })
    ));
}

#[test]
fn bergman_level_one_closed_form() {
    // a = 1/2, m = 1: Σ = |z|²/(π(1-|z|²)²), φ_1(0.5) ≈ -0.97783
    let z = c(0.5, 0.0);
    let v = bergman_log(0.5, 1, 400, z).unwrap();
    let x = z.norm_sqr();
    let want = 0.5 * (x / (PI * (1.0 - x) * (1.0 - x))).ln();
    assert_relative_eq!(v, want, epsilon = 1e-12);
    assert_relative_eq!(v, -0.977830051033, epsilon = 1e-9);
}

#[test]
fn bergman_sandwich_with_fitted_constant() {
    // one C1 works for every m ∈ {1, 2, 4, 8} on a 20-point grid
    let a = 0.5;
    let ms = [1u32, 2, 4, 8];
    let grid: Vec<f64> = (0..20).map(|k| 0.05 + 0.85 * k as f64 / 19.0).collect();
    let phi = |r: f64| 2.0 * a * r.ln();
    let mut c1: f64 = 0.0;
    for &m in &ms {
        for &r in &grid {
            let pm = bergman_log(a, m, 600, c(r, 0.0)).unwrap();
            c1 = c1.max(m as f64 * (phi(r) - pm));
        }
    }
    assert!(c1 < 1.0, "fitted C1 = {c1} stays bounded");
    // re-verify on a denser grid with the fitted constant
    for &m in &ms {
        for k in 0..60 {
            let r = 0.05 + 0.85 * k as f64 / 59.0;
            let pm = bergman_log(a, m, 600, c(r, 0.0)).unwrap();
            assert!(
                pm >= phi(r) - c1 / m as f64 - 1e-9,
                "sandwich fails at m={m}, r={r}"
            );
        }
    }
}

#[test]
fn bergman_pointwise_convergence() {
    let a = 0.5;
    let z = c(0.5, 0.0);
    let phi = 2.0 * a * 0.5f64.ln();
    let mut prev = f64::INFINITY;
    for m in [1u32, 2, 4, 8] {
        let gap = (bergman_log(a, m, 600, z).unwrap() - phi).abs();
        assert!(gap < prev, "m={m}: {gap} ≥ {prev}");
        prev = gap;
    }
}

#[test]
fn bergman_truncation_stable() {
    for r in [0.3, 0.6, 0.9] {
        let z = c(r, 0.0);
        let v1 = bergman_log(0.5, 2, 300, z).unwrap();
        let v2 = bergman_log(0.5, 2, 600, z).unwrap();
        assert!((v1 - v2).abs() < 1e-10, "r={r}: {v1} vs {v2}");
        assert!(bergman_tail_bound(0.5, 2, 300, z) < 1e-12);
    }
}

#[test]
fn bergman_rejects_outside_disc() {
    assert!(bergman_log(0.5, 1, 100, c(1.0, 0.0)).is_err());
}

#[test]
fn submean_subharmonic_passes() {
    let g = |z: &[Complex64]| z[0].norm_sqr();
    let report = submean_check(&g, &Polydisc::unit_disc(), 500, 42);
    assert!(report.passed(), "violations: {:?}", report.violations.len());
}

#[test]
fn submean_superharmonic_fails() {
    let g = |z: &[Complex64]| -z[0].norm_sqr();
    let report = submean_check(&g, &Polydisc::unit_disc(), 200, 42);
    assert!(!report.passed());
}

#[test]
fn submean_family_norm_is_psh() {
    // |F|² under the normalized Gram metric is plurisubharmonic
    let fam = vec![
        Section::new(vec![
            Polynomial::constant(c(1.0, 0.0)),
            Polynomial::monomial(vec![1], c(1.0, 0.0)),
        ]),
        Section::new(vec![
            Polynomial::zero(),
            Polynomial::monomial(vec![2], c(1.0, 0.0)),
        ]),
    ];
    let fm = from_family(&fam, 1, Polydisc::unit_disc(), vec![vec![c(0.0, 0.0)]]).unwrap();
    let f = Section::new(vec![
        Polynomial::constant(c(0.7, 0.1)),
        Polynomial::monomial(vec![1], c(0.0, 1.0)),
    ]);
    let g = move |z: &[Complex64]| {
        fm.normalized
            .section_norm2(&f, &EvalPoint::new(z.to_vec()))
            .to_f64()
    };
    let report = submean_check(&g, &Polydisc::unit_disc(), 500, 7);
    assert!(report.passed(), "{} violations", report.violations.len());
}

#[test]
fn submean_accepts_mollified_psh() {
    // smoothing preserves plurisubharmonicity
    let phi = parse_expr("log(abs2(z1))").unwrap();
    let g = move |z: &[Complex64]| {
        mollify_fn(
            &|w: &[Complex64]| {
                ExtReal::from(crate::expr::eval_expr(&phi, &EvalPoint::new(w.to_vec()))).to_f64()
            },
            0.1,
            z,
            16,
        )
        .unwrap_or(f64::NAN)
    };
    let region = Polydisc::disc(0.8);
    let report = submean_check(&g, &region, 60, 21);
    assert!(report.passed(), "{} violations", report.violations.len());
}

#[test]
fn measure_identical_weights() {
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let (m, _) = convergence_in_measure(&phi, &phi, &Polydisc::unit_disc(), 0.1, 5000, 9);
    assert_eq!(m, 0.0);
}

#[test]
fn measure_scaled_log_family() {
    // φ = log|z|, φ_j = (1+1/j)φ: {|φ_j - φ| > δ} = {|z| < e^{-jδ}}, j = 5
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let phi_j = |z: &[Complex64]| 1.2 * z[0].norm().ln();
    let (m, se) =
        convergence_in_measure(&phi_j, &phi, &Polydisc::unit_disc(), 0.1, 40_000, 1234);
    let want = PI * (-1.0f64).exp();
    assert!(
        (m - want).abs() <= 3.0 * se + 1e-9,
        "measure {m} vs {want} (se {se})"
    );
}

#[test]
fn measure_decays_in_j() {
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let mut prev = f64::INFINITY;
    for j in [2u32, 4, 8, 16] {
        let phi_j = move |z: &[Complex64]| (1.0 + 1.0 / j as f64) * z[0].norm().ln();
        let (m, _) =
            convergence_in_measure(&phi_j, &phi, &Polydisc::unit_disc(), 0.1, 40_000, 77);
        assert!(m <= prev + 1e-9, "j={j}");
        prev = m;
    }
}

#[test]
fn exp_gap_identical_weights_is_zero() {
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let est = exp_gap_lp(
        &phi,
        &phi,
        0.5,
        &Polydisc::unit_disc(),
        &QuadConfig::with_tol(1e-7),
        5,
    )
    .unwrap();
    assert!(est.value.abs() < 1e-9);
}

#[test]
fn exp_gap_scale_family_decreases() {
    // frozen radial closed forms: 2π ∫_0^1 r (r^{-1/j} - 1)^{1/2} dr
    let oracle = [
        (1u32, 2.4674),
        (2, 1.54213),
        (4, 1.03371),
        (8, 0.712903),
    ];
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let mut prev = f64::INFINITY;
    for (j, want) in oracle {
        let phi_j = move |z: &[Complex64]| (1.0 + 1.0 / j as f64) * z[0].norm().ln();
        let cfg = QuadConfig::with_tol(1e-5)
            .with_singular_points(vec![vec![c(0.0, 0.0)]]);
        let est = exp_gap_lp(&phi, &phi_j, 0.5, &Polydisc::unit_disc(), &cfg, 5).unwrap();
        assert!(
            (est.value - want).abs() < 2e-3,
            "j={j}: {} vs {want}",
            est.value
        );
        assert!(est.value < prev);
        prev = est.value;
    }
}

#[test]
fn exp_gap_offset_family_closed_form() {
    // φ_j = φ - 1/j: gap = |e^{1/j} - 1|^p · area
    let phi = |z: &[Complex64]| z[0].norm().ln() - 1.0;
    let p = 2.0;
    for j in [1u32, 4, 16] {
        let phi_j = move |z: &[Complex64]| z[0].norm().ln() - 1.0 - 1.0 / j as f64;
        let cfg = QuadConfig::with_tol(1e-8);
        let est = exp_gap_lp(&phi, &phi_j, p, &Polydisc::unit_disc(), &cfg, 5).unwrap();
        let want = ((1.0f64 / j as f64).exp() - 1.0).powf(p) * PI;
        assert_relative_eq!(est.value, want, max_relative = 1e-5);
    }
}

#[test]
fn exp_gap_rejects_wrong_order() {
    let phi = |z: &[Complex64]| z[0].norm().ln();
    let phi_j = |z: &[Complex64]| 0.5 * z[0].norm().ln(); // φ_j ≥ φ: violates
    let out = exp_gap_lp(
        &phi,
        &phi_j,
        0.5,
        &Polydisc::unit_disc(),
        &QuadConfig::with_tol(1e-6),
        5,
    );
    assert!(matches!(out, Err(PshError::HypothesisViolation { .. })));
}
