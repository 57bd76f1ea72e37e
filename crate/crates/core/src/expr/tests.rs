use super::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn pt1(z: Complex64) -> EvalPoint {
    EvalPoint::new(vec![z])
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn parse_coordinate_leaf() {
    assert_eq!(parse_expr("z1").unwrap(), Expr::Coord(0));
    assert_eq!(parse_expr("z2").unwrap(), Expr::Coord(1));
}

#[test]
fn parse_power_with_negative_exponent() {
    let e = parse_expr("abs2(z1)^-0.5").unwrap();
    assert_eq!(e, Expr::pow(Expr::abs2(Expr::Coord(0)), -0.5));
    let e2 = parse_expr("abs2(z1)^(-0.5)").unwrap();
    assert_eq!(e, e2);
}

#[test]
fn parse_examples_from_grammar() {
    parse_expr("z1^3 * conj(z2)").unwrap();
    parse_expr("log(abs2(z1)+abs2(z2))").unwrap();
    parse_expr("min(0, re(z1))").unwrap();
    parse_expr("exp(-beta * log(abs2(z1)))").unwrap();
}

#[test]
fn log_abs2_at_e_is_two() {
    let e = parse_expr("log(abs2(z1))").unwrap();
    let v = eval_expr(&e, &pt1(c(std::f64::consts::E, 0.0)));
    let x = v.as_real().unwrap();
    assert!((x - 2.0).abs() < 1e-14, "log|e|^2 = 2, got {x}");
}

#[test]
fn parse_errors_have_positions() {
    let err = parse_expr("abs2(z1").unwrap_err();
    assert!(err.pos > 0);
    let err = parse_expr("z1 ^ z2").unwrap_err();
    assert!(err.message.contains("exponent"));
    assert!(parse_expr("z0").is_err());
    assert!(parse_expr("1..2").is_err());
}

#[test]
fn eval_modulus_squared() {
    let e = parse_expr("z1*conj(z1)").unwrap();
    let v = eval_expr(&e, &pt1(c(3.0, 4.0)));
    assert_eq!(v.as_real_lenient(), Some(25.0));
}

#[test]
fn eval_log_zero_is_neg_inf() {
    let e = parse_expr("log(abs2(z1))").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(0.0, 0.0))), Value::NegInf);
}

#[test]
fn eval_min_with_re() {
    let e = parse_expr("min(0, re(z1))").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(-2.0, 0.0))).as_real(), Some(-2.0));
    assert_eq!(eval_expr(&e, &pt1(c(2.0, 0.0))).as_real(), Some(0.0));
}

#[test]
fn unbound_parameter_is_flagged() {
    let e = parse_expr("a * z1").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(1.0, 0.0))), Value::Indeterminate);
    let p = pt1(c(2.0, 0.0)).with_param("a", 3.0);
    assert_eq!(eval_expr(&e, &p).as_real(), Some(6.0));
}

#[test]
fn singular_pole_evaluates_to_pos_inf() {
    let e = parse_expr("abs2(z1)^-1").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(0.0, 0.0))), Value::PosInf);
    assert_eq!(eval_expr(&e, &pt1(c(0.5, 0.0))).as_real(), Some(4.0));
}

#[test]
fn zero_times_inf_is_indeterminate() {
    let e = parse_expr("abs2(z1) * abs2(z1)^-1").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(0.0, 0.0))), Value::Indeterminate);
}

#[test]
fn exp_of_neg_inf_is_zero() {
    let e = parse_expr("exp(log(abs2(z1)))").unwrap();
    assert_eq!(eval_expr(&e, &pt1(c(0.0, 0.0))).as_real(), Some(0.0));
}

#[test]
fn complex_literal_folding() {
    let e = parse_expr("3 + 4i").unwrap();
    assert_eq!(e, Expr::Const(c(3.0, 4.0)));
    let e = parse_expr("3 - 4i").unwrap();
    assert_eq!(e, Expr::Const(c(3.0, -4.0)));
    // parenthesized operands stay a structural sum
    let e = parse_expr("(3) + (4i)").unwrap();
    assert!(matches!(e, Expr::Add(_, _)));
}

// --- property tests ---------------------------------------------------

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..2).prop_map(Expr::Coord),
        (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(re, im)| Expr::Const(c(re, im))),
        Just(Expr::Param("a".to_string())),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), -3.0..3.0f64).prop_map(|(a, e)| Expr::pow(a, e)),
            inner.clone().prop_map(Expr::log),
            inner.clone().prop_map(Expr::exp),
            inner.clone().prop_map(Expr::abs2),
            inner.clone().prop_map(Expr::conj),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::Re(std::sync::Arc::new(a))),
            inner.clone().prop_map(|a| Expr::Im(std::sync::Arc::new(a))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Min(std::sync::Arc::new(a), std::sync::Arc::new(b))),
            (inner.clone(), inner)
                .prop_map(|(a, b)| Expr::Max(std::sync::Arc::new(a), std::sync::Arc::new(b))),
        ]
    })
}

proptest! {
    /// Printing and re-parsing gives back a structurally equal tree.
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        let reparsed = parse_expr(&printed).unwrap();
        prop_assert_eq!(&reparsed, &e, "printed form: {}", printed);
    }

    /// Repeated evaluation is bitwise deterministic.
    #[test]
    fn eval_deterministic(e in arb_expr(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let p = pt1(c(re, im)).with_param("a", 0.75);
        let v1 = eval_expr(&e, &p);
        let v2 = eval_expr(&e, &p);
        prop_assert_eq!(v1, v2);
    }

    /// eval(conj(e)) is the conjugate of eval(e) at finite points.
    #[test]
    fn conjugation_symmetry(e in arb_expr(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let p = pt1(c(re, im)).with_param("a", 0.75);
        let v = eval_expr(&e, &p);
        let vc = eval_expr(&Expr::conj(e), &p);
        if let (Some(a), Some(b)) = (v.as_complex(), vc.as_complex()) {
            prop_assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    /// abs2 of anything finite is nonnegative.
    #[test]
    fn abs2_nonnegative(e in arb_expr(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let p = pt1(c(re, im)).with_param("a", 0.75);
        if let Some(x) = eval_expr(&Expr::abs2(e), &p).as_real() {
            prop_assert!(x >= 0.0);
        }
    }
}
