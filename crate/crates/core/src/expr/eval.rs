//! Evaluation over the extended complex/real value domain.

use super::Expr;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Point of ℂⁿ together with real parameter bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub coords: Vec<Complex64>,
    pub params: BTreeMap<String, f64>,
}

impl EvalPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        EvalPoint {
            coords,
            params: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

/// Evaluation result. Infinities are first-class tagged values living on the
/// real axis, so weights like φ = log|z|² evaluate to `NegInf` at their poles
/// instead of crashing. Domain errors (0·∞, log of a negative number,
/// unbound parameters, fractional powers of non-positive bases) surface as
/// `Indeterminate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(Complex64),
    PosInf,
    NegInf,
    Indeterminate,
}

impl Value {
    pub fn real(v: f64) -> Self {
        Value::Num(Complex64::new(v, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Value::Num(_))
    }

    /// Finite complex payload, if any.
    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            Value::Num(c) => Some(*c),
            _ => None,
        }
    }

    /// Finite real payload; requires an exactly-real value.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Num(c) if c.im == 0.0 => Some(c.re),
            _ => None,
        }
    }

    /// Real payload up to roundoff in the imaginary part.
    pub fn as_real_lenient(&self) -> Option<f64> {
        match self {
            Value::Num(c) if c.im.abs() <= 1e-12 * (1.0 + c.re.abs()) => Some(c.re),
            _ => None,
        }
    }

    /// Maps to f64 for quadrature: ±∞ become IEEE infinities and
    /// `Indeterminate` becomes NaN.
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Num(c) => {
                if c.im == 0.0 {
                    c.re
                } else {
                    f64::NAN
                }
            }
            Value::PosInf => f64::INFINITY,
            Value::NegInf => f64::NEG_INFINITY,
            Value::Indeterminate => f64::NAN,
        }
    }

    fn from_complex(c: Complex64) -> Self {
        if c.re.is_finite() && c.im.is_finite() {
            Value::Num(c)
        } else if c.im == 0.0 && c.re == f64::INFINITY {
            Value::PosInf
        } else if c.im == 0.0 && c.re == f64::NEG_INFINITY {
            Value::NegInf
        } else {
            Value::Indeterminate
        }
    }

    fn from_real(v: f64) -> Self {
        if v.is_finite() {
            Value::real(v)
        } else if v == f64::INFINITY {
            Value::PosInf
        } else if v == f64::NEG_INFINITY {
            Value::NegInf
        } else {
            Value::Indeterminate
        }
    }
}

/// Real part of a complex value whose imaginary part is roundoff noise.
/// Hermitian-matrix determinants and similar conjugate-paired products are
/// real in exact arithmetic but carry ~1e-16 stray imaginary parts.
fn near_real(c: Complex64) -> Option<f64> {
    if c.im.abs() <= 1e-12 * (1.0 + c.re.abs()) {
        Some(c.re)
    } else {
        None
    }
}

fn add(a: Value, b: Value) -> Value {
    use Value::*;
    match (a, b) {
        (Num(x), Num(y)) => Value::from_complex(x + y),
        (PosInf, NegInf) | (NegInf, PosInf) => Indeterminate,
        (PosInf, Num(c)) | (Num(c), PosInf) if c.im == 0.0 => PosInf,
        (NegInf, Num(c)) | (Num(c), NegInf) if c.im == 0.0 => NegInf,
        (PosInf, PosInf) => PosInf,
        (NegInf, NegInf) => NegInf,
        _ => Indeterminate,
    }
}

fn neg(a: Value) -> Value {
    use Value::*;
    match a {
        Num(c) => Num(-c),
        PosInf => NegInf,
        NegInf => PosInf,
        Indeterminate => Indeterminate,
    }
}

fn mul(a: Value, b: Value) -> Value {
    use Value::*;
    match (a, b) {
        (Num(x), Num(y)) => Value::from_complex(x * y),
        (inf @ (PosInf | NegInf), Num(c)) | (Num(c), inf @ (PosInf | NegInf)) => {
            if c.im != 0.0 || c.re == 0.0 {
                Indeterminate
            } else if (c.re > 0.0) == matches!(inf, PosInf) {
                PosInf
            } else {
                NegInf
            }
        }
        (PosInf, PosInf) | (NegInf, NegInf) => PosInf,
        (PosInf, NegInf) | (NegInf, PosInf) => NegInf,
        _ => Indeterminate,
    }
}

fn div(a: Value, b: Value) -> Value {
    use Value::*;
    match (a, b) {
        (Num(x), Num(y)) => {
            if y == Complex64::new(0.0, 0.0) {
                if x.im == 0.0 && x.re != 0.0 {
                    // real / +0: signed infinity
                    if x.re > 0.0 {
                        PosInf
                    } else {
                        NegInf
                    }
                } else {
                    Indeterminate
                }
            } else {
                Value::from_complex(x / y)
            }
        }
        (Num(_), PosInf | NegInf) => Num(Complex64::new(0.0, 0.0)),
        (inf @ (PosInf | NegInf), Num(c)) => {
            if c.im != 0.0 || c.re == 0.0 {
                Indeterminate
            } else if (c.re > 0.0) == matches!(inf, PosInf) {
                PosInf
            } else {
                NegInf
            }
        }
        _ => Indeterminate,
    }
}

fn powv(base: Value, e: f64) -> Value {
    use Value::*;
    match base {
        Num(c) => {
            let int_e = e.round();
            if (e - int_e).abs() < 1e-12 && int_e.abs() <= 1024.0 {
                // integer powers keep complex bases single-valued
                if c == Complex64::new(0.0, 0.0) {
                    return if e > 0.0 {
                        Value::real(0.0)
                    } else if e == 0.0 {
                        Value::real(1.0)
                    } else {
                        PosInf
                    };
                }
                return Value::from_complex(c.powi(int_e as i32));
            }
            match near_real(c) {
                Some(x) if x > 0.0 => Value::from_real(x.powf(e)),
                Some(x) if x == 0.0 => {
                    if e > 0.0 {
                        Value::real(0.0)
                    } else if e == 0.0 {
                        Value::real(1.0)
                    } else {
                        PosInf
                    }
                }
                _ => Indeterminate,
            }
        }
        PosInf => {
            if e > 0.0 {
                PosInf
            } else if e == 0.0 {
                Value::real(1.0)
            } else {
                Value::real(0.0)
            }
        }
        NegInf => {
            let int_e = e.round();
            if (e - int_e).abs() < 1e-12 {
                let odd = (int_e as i64) % 2 != 0;
                if e > 0.0 {
                    if odd {
                        NegInf
                    } else {
                        PosInf
                    }
                } else if e == 0.0 {
                    Value::real(1.0)
                } else {
                    Value::real(0.0)
                }
            } else {
                Indeterminate
            }
        }
        Indeterminate => Indeterminate,
    }
}

fn minmax(a: Value, b: Value, want_min: bool) -> Value {
    use Value::*;
    let key = |v: &Value| -> Option<f64> {
        match v {
            Num(c) => near_real(*c),
            PosInf => Some(f64::INFINITY),
            NegInf => Some(f64::NEG_INFINITY),
            _ => None,
        }
    };
    match (key(&a), key(&b)) {
        (Some(x), Some(y)) => {
            let pick_a = if want_min { x <= y } else { x >= y };
            if pick_a {
                a
            } else {
                b
            }
        }
        _ => Indeterminate,
    }
}

/// Evaluate `e` at `p`. Pure: identical inputs give bit-identical outputs.
pub fn eval_expr(e: &Expr, p: &EvalPoint) -> Value {
    use Value::*;
    match e {
        Expr::Coord(k) => match p.coords.get(*k) {
            Some(c) => Num(*c),
            None => Indeterminate,
        },
        Expr::Const(c) => Num(*c),
        Expr::Param(name) => match p.params.get(name) {
            Some(v) => Value::real(*v),
            None => Indeterminate,
        },
        Expr::Neg(a) => neg(eval_expr(a, p)),
        Expr::Add(a, b) => add(eval_expr(a, p), eval_expr(b, p)),
        Expr::Sub(a, b) => add(eval_expr(a, p), neg(eval_expr(b, p))),
        Expr::Mul(a, b) => mul(eval_expr(a, p), eval_expr(b, p)),
        Expr::Div(a, b) => div(eval_expr(a, p), eval_expr(b, p)),
        Expr::Pow(a, e) => powv(eval_expr(a, p), *e),
        Expr::Log(a) => match eval_expr(a, p) {
            Num(c) => match near_real(c) {
                Some(x) if x > 0.0 => Value::from_real(x.ln()),
                Some(x) if x == 0.0 => NegInf,
                _ => Indeterminate,
            },
            PosInf => PosInf,
            _ => Indeterminate,
        },
        Expr::Exp(a) => match eval_expr(a, p) {
            Num(c) => {
                if c.im == 0.0 {
                    Value::from_real(c.re.exp())
                } else {
                    Value::from_complex(c.exp())
                }
            }
            PosInf => PosInf,
            NegInf => Value::real(0.0),
            Indeterminate => Indeterminate,
        },
        Expr::Min(a, b) => minmax(eval_expr(a, p), eval_expr(b, p), true),
        Expr::Max(a, b) => minmax(eval_expr(a, p), eval_expr(b, p), false),
        Expr::Abs2(a) => match eval_expr(a, p) {
            Num(c) => Value::from_real(c.norm_sqr()),
            PosInf | NegInf => PosInf,
            Indeterminate => Indeterminate,
        },
        Expr::Conj(a) => match eval_expr(a, p) {
            Num(c) => Num(c.conj()),
            v => v,
        },
        Expr::Re(a) => match eval_expr(a, p) {
            Num(c) => Value::real(c.re),
            v => v,
        },
        Expr::Im(a) => match eval_expr(a, p) {
            Num(c) => Value::real(c.im),
            PosInf | NegInf => Value::real(0.0),
            Indeterminate => Indeterminate,
        },
    }
}
