//! Polydisc domains and extended-real scalars shared across the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Product of discs in ℂⁿ: {z : |z_i - center_i| < radii_i}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polydisc {
    pub center: Vec<Complex64>,
    pub radii: Vec<f64>,
}

impl Polydisc {
    pub fn new(center: Vec<Complex64>, radii: Vec<f64>) -> Self {
        assert_eq!(center.len(), radii.len(), "center/radii dimension mismatch");
        assert!(radii.iter().all(|r| *r > 0.0), "polydisc radii must be > 0");
        Polydisc { center, radii }
    }

    /// Unit disc in ℂ¹ centered at the origin.
    pub fn unit_disc() -> Self {
        Polydisc::new(vec![Complex64::new(0.0, 0.0)], vec![1.0])
    }

    /// Disc of radius `r` in ℂ¹ centered at the origin.
    pub fn disc(r: f64) -> Self {
        Polydisc::new(vec![Complex64::new(0.0, 0.0)], vec![r])
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        z.len() == self.dim()
            && z.iter()
                .zip(&self.center)
                .zip(&self.radii)
                .all(|((zi, ci), ri)| (zi - ci).norm() < *ri)
    }

    /// Distance from `z` to the boundary (minimum over the factors);
    /// negative when outside.
    pub fn boundary_distance(&self, z: &[Complex64]) -> f64 {
        z.iter()
            .zip(&self.center)
            .zip(&self.radii)
            .map(|((zi, ci), ri)| ri - (zi - ci).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Lebesgue volume Π π r_i².
    pub fn volume(&self) -> f64 {
        self.radii
            .iter()
            .map(|r| std::f64::consts::PI * r * r)
            .product()
    }
}

/// Extended real line with a tagged indeterminate value. `NegInf` represents
/// weights at their poles (φ = -∞); `Indeterminate` tags 0·∞-type clashes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
    Indeterminate,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// IEEE image used at the quadrature boundary (Indeterminate ↦ NaN).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Indeterminate => f64::NAN,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_nan() {
            ExtReal::Indeterminate
        } else if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl From<crate::expr::Value> for ExtReal {
    fn from(v: crate::expr::Value) -> Self {
        match v {
            crate::expr::Value::Num(c) => {
                if c.im.abs() <= 1e-12 * (1.0 + c.re.abs()) {
                    ExtReal::Finite(c.re)
                } else {
                    ExtReal::Indeterminate
                }
            }
            crate::expr::Value::PosInf => ExtReal::PosInf,
            crate::expr::Value::NegInf => ExtReal::NegInf,
            crate::expr::Value::Indeterminate => ExtReal::Indeterminate,
        }
    }
}
