//! Plurisubharmonic-function diagnostics: Lelong numbers, the e^{-φ}
//! integrability guarantee, cut-off functions, mollification, the
//! closed-form log-weight approximants on the disc, submean-value checks
//! and convergence-in-measure estimates.

use crate::domain::{ExtReal, Polydisc};
use crate::expr::{eval_expr, EvalPoint, Expr};
use crate::metric::gauss_legendre;
use crate::quad::{integrate, IntegralEstimate, QuadConfig};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PshError {
    #[error("φ ≡ -∞ on the sampling circle at radius {0}")]
    DegenerateCircle(f64),
    #[error("invalid radius ladder: need 0 < r_min < r_max, got [{0}, {1}]")]
    BadRadii(f64, f64),
    #[error("low-confidence estimate refused (fit residual {0})")]
    LowConfidence(f64),
    #[error("point too close to the boundary (distance {dist}, need > {need})")]
    BoundaryProximity { dist: f64, need: f64 },
    #[error("hypothesis violated at witness z = {witness:?}: {message}")]
    HypothesisViolation {
        witness: Vec<Complex64>,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    High,
    Low,
}

/// Slope of circle maxima of φ against log r: the coefficient of the
/// logarithmic pole at the center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LelongEstimate {
    pub value: f64,
    pub radii_used: Vec<f64>,
    pub fit_residual: f64,
    pub confidence: Confidence,
}

/// Fit-residual threshold separating log poles from smooth oscillation.
pub const LELONG_RESIDUAL_THRESHOLD: f64 = 0.05;

/// Lelong number of φ at `center` from a geometric radius ladder in
/// [r_min, r_max]: least-squares slope of max_{|z−x|=r} φ against ln r.
pub fn lelong_number(
    phi: &Expr,
    center: &[Complex64],
    r_min: f64,
    r_max: f64,
) -> Result<LelongEstimate, PshError> {
    if !(0.0 < r_min && r_min < r_max) {
        return Err(PshError::BadRadii(r_min, r_max));
    }
    let n_radii = 12;
    let n_dirs = 256;
    let dims = center.len();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n_radii);
    let mut radii = Vec::with_capacity(n_radii);
    // deterministic direction set on the unit sphere of ℂⁿ
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e10);
    let dirs: Vec<Vec<Complex64>> = (0..n_dirs)
        .map(|k| {
            if dims == 1 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_dirs as f64;
                vec![Complex64::from_polar(1.0, th)]
            } else {
                let mut v: Vec<Complex64> = (0..dims)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect();
                let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                v.iter_mut().for_each(|c| *c /= norm);
                v
            }
        })
        .collect();
    for k in 0..n_radii {
        let t = k as f64 / (n_radii - 1) as f64;
        let r = r_min * (r_max / r_min).powf(t);
        radii.push(r);
        let mut maxv = f64::NEG_INFINITY;
        let mut any_finite = false;
        for dir in &dirs {
            let z: Vec<Complex64> = center
                .iter()
                .zip(dir)
                .map(|(c, d)| c + d * r)
                .collect();
            let v = ExtReal::from(eval_expr(phi, &EvalPoint::new(z)));
            match v {
                ExtReal::Finite(x) => {
                    any_finite = true;
                    maxv = maxv.max(x);
                }
                ExtReal::PosInf => {
                    any_finite = true;
                    maxv = f64::INFINITY;
                }
                _ => {}
            }
        }
        if !any_finite {
            return Err(PshError::DegenerateCircle(r));
        }
        pts.push((r.ln(), maxv));
    }
    let (slope, residual) = linear_fit(&pts);
    let confidence = if residual > LELONG_RESIDUAL_THRESHOLD {
        Confidence::Low
    } else {
        Confidence::High
    };
    Ok(LelongEstimate {
        value: slope.max(0.0),
        radii_used: radii,
        fit_residual: residual,
        confidence,
    })
}

/// least-squares slope and RMS residual of y against x
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = pts
        .iter()
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    (slope, (ss / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkodaVerdict {
    Guaranteed,
    NotGuaranteed,
}

/// One-sided e^{-φ} local-integrability guarantee: fires when the Lelong
/// number is safely below 2. A `NotGuaranteed` answer asserts nothing.
pub fn skoda_guarantee(est: &LelongEstimate) -> Result<SkodaVerdict, PshError> {
    if est.confidence == Confidence::Low {
        return Err(PshError::LowConfidence(est.fit_residual));
    }
    if est.value + 3.0 * est.fit_residual < 2.0 {
        Ok(SkodaVerdict::Guaranteed)
    } else {
        Ok(SkodaVerdict::NotGuaranteed)
    }
}

/// Cut-off parameters t_0 > 0, B ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub t0: f64,
    pub b: f64,
}

impl CutoffParams {
    pub fn new(t0: f64, b: f64) -> Self {
        assert!(t0 > 0.0, "t0 must be > 0");
        assert!(b > 0.0 && b <= 1.0, "B must lie in (0, 1]");
        CutoffParams { t0, b }
    }
}

/// b(t) = ∫_{-∞}^t (1/B)·1_{(-t0-B, -t0)}(s) ds: a piecewise-linear ramp
/// from 0 to 1 across the window.
pub fn cutoff_b(t: f64, p: CutoffParams) -> f64 {
    if t <= -p.t0 - p.b {
        0.0
    } else if t >= -p.t0 {
        1.0
    } else {
        (t + p.t0 + p.b) / p.b
    }
}

/// χ(t) = (1/(t0+B)) ∫_0^t b(s) ds: convex, increasing, χ(0) = 0, and for
/// t ≤ 0 sandwiched between max{t, -t0-B}/(t0+B) and max{t, -t0}/(t0+B).
pub fn cutoff_chi(t: f64, p: CutoffParams) -> f64 {
    let c = p.t0 + p.b;
    let integral = if t >= -p.t0 {
        // b ≡ 1 on (-t0, ∞)
        t
    } else if t >= -p.t0 - p.b {
        let ramp = {
            let u = t + p.t0 + p.b;
            (u * u - p.b * p.b) / (2.0 * p.b)
        };
        -p.t0 + ramp
    } else {
        -p.t0 - p.b / 2.0
    };
    integral / c
}

/// (φ ∗ ρ_ε)(p) with the fixed radial bump ρ(u) ∝ (1-|u|²)³ on the unit
/// ball of ℝ^{2n}, by masked tensor Gauss quadrature with discrete
/// normalization (so constants mollify exactly).
pub fn mollify(phi: &Expr, eps: f64, p: &EvalPoint, region: &Polydisc) -> Result<f64, PshError> {
    let dist = region.boundary_distance(&p.coords);
    if dist <= eps {
        return Err(PshError::BoundaryProximity { dist, need: eps });
    }
    mollify_fn(
        &|z: &[Complex64]| ExtReal::from(eval_expr(phi, &EvalPoint::new(z.to_vec()))).to_f64(),
        eps,
        &p.coords,
        32,
    )
    .ok_or_else(|| PshError::Invalid("mollification hit non-finite values".into()))
}

/// Mollify an arbitrary pointwise function; `grid` Gauss points per axis.
pub fn mollify_fn(
    f: &dyn Fn(&[Complex64]) -> f64,
    eps: f64,
    center: &[Complex64],
    grid: usize,
) -> Option<f64> {
    let dim = center.len();
    let d = 2 * dim;
    let (nodes, weights) = gauss_legendre(grid);
    let mut acc = 0.0f64;
    let mut wsum = 0.0f64;
    let mut idx = vec![0usize; d];
    loop {
        let mut w = 1.0f64;
        let mut norm2 = 0.0f64;
        for i in 0..d {
            w *= weights[idx[i]];
            norm2 += nodes[idx[i]] * nodes[idx[i]];
        }
        if norm2 < 1.0 {
            let bump = (1.0 - norm2).powi(3);
            let z: Vec<Complex64> = (0..dim)
                .map(|i| {
                    center[i] - eps * Complex64::new(nodes[idx[2 * i]], nodes[idx[2 * i + 1]])
                })
                .collect();
            let v = f(&z);
            if !v.is_finite() {
                // measure-zero pole under the bump: skip the node
                if v.is_nan() {
                    return None;
                }
            } else {
                acc += w * bump * v;
            }
            wsum += w * bump;
        }
        let mut i = 0;
        loop {
            if i == d {
                return Some(acc / wsum);
            }
            idx[i] += 1;
            if idx[i] < nodes.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Closed-form approximant weight on the unit disc: for φ = 2a·log|z| the
/// level-m Hilbert space of the radial weight |z|^{-4am} has orthonormal
/// monomials σ_l = z^l √((2l+2-4am)/2π) for l > 2am-1, and
/// φ_m = (1/2m) log Σ_l |σ_l|².
pub fn bergman_log(a: f64, m: u32, trunc: u32, z: Complex64) -> Result<f64, PshError> {
    if a <= 0.0 {
        return Err(PshError::Invalid("weight exponent a must be > 0".into()));
    }
    if m == 0 {
        return Err(PshError::Invalid("level m must be ≥ 1".into()));
    }
    let x = z.norm_sqr();
    if x >= 1.0 {
        return Err(PshError::Invalid(format!(
            "|z| = {} must be < 1",
            z.norm()
        )));
    }
    let am2 = 2.0 * a * m as f64;
    // smallest l with l > 2am - 1
    let l_min = if (am2 - 1.0) < 0.0 {
        0u32
    } else {
        (am2 - 1.0).floor() as u32 + 1
    };
    let mut sum = 0.0f64;
    for l in l_min..=trunc {
        let coeff = (2.0 * l as f64 + 2.0 - 2.0 * am2) / (2.0 * std::f64::consts::PI);
        sum += coeff * x.powi(l as i32);
    }
    if sum <= 0.0 {
        return Err(PshError::Invalid(
            "truncated series vanished; increase the truncation".into(),
        ));
    }
    Ok(sum.ln() / (2.0 * m as f64))
}

/// Conservative bound on the dropped tail of the `bergman_log` series.
pub fn bergman_tail_bound(a: f64, m: u32, trunc: u32, z: Complex64) -> f64 {
    let x = z.norm_sqr();
    let am2 = 2.0 * a * m as f64;
    let l1 = trunc as f64 + 1.0;
    // Σ_{l>L} (2l+2-4am) x^l / 2π ≤ x^{L+1} [(2L+4-4am)/(1-x) + 2x/(1-x)²] / 2π
    (x.powf(l1) / (2.0 * std::f64::consts::PI))
        * ((2.0 * l1 + 2.0 - 2.0 * am2).max(0.0) / (1.0 - x) + 2.0 * x / ((1.0 - x) * (1.0 - x)))
}

/// One observed failure of the submean-value inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub center: Vec<Complex64>,
    pub radius: f64,
    pub direction: Vec<Complex64>,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub trials: usize,
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Monte-Carlo submean-value check on complex lines: compares g(center)
/// against 32-point trapezoid circle means. Evidence, not proof.
pub fn submean_check(
    g: &dyn Fn(&[Complex64]) -> f64,
    region: &Polydisc,
    trials: usize,
    seed: u64,
) -> ViolationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ViolationReport {
        trials,
        skipped: 0,
        violations: Vec::new(),
    };
    let dims = region.dim();
    let k_circle = 32;
    for _ in 0..trials {
        // random interior center, radius within the boundary gap
        let center: Vec<Complex64> = (0..dims)
            .map(|i| {
                let rho = region.radii[i] * 0.8 * rng.random::<f64>().sqrt();
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                region.center[i] + Complex64::from_polar(rho, th)
            })
            .collect();
        let gap = region.boundary_distance(&center);
        if gap <= 1e-6 {
            report.skipped += 1;
            continue;
        }
        let radius = gap * (0.1 + 0.8 * rng.random::<f64>());
        let mut dir: Vec<Complex64> = (0..dims)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm: f64 = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            report.skipped += 1;
            continue;
        }
        dir.iter_mut().for_each(|c| *c /= norm);
        let gc = g(&center);
        if !gc.is_finite() {
            report.skipped += 1;
            continue;
        }
        let mut mean = 0.0f64;
        let mut bad = false;
        for k in 0..k_circle {
            let th = 2.0 * std::f64::consts::PI * k as f64 / k_circle as f64;
            let rot = Complex64::from_polar(radius, th);
            let z: Vec<Complex64> = center.iter().zip(&dir).map(|(c, d)| c + d * rot).collect();
            let v = g(&z);
            if !v.is_finite() {
                bad = true;
                break;
            }
            mean += v;
        }
        if bad {
            report.skipped += 1;
            continue;
        }
        mean /= k_circle as f64;
        // trapezoid error allowance plus the fixed tolerance
        let tol = 1e-6 + 1e-9 * gc.abs().max(mean.abs());
        if gc > mean + tol {
            report.violations.push(Violation {
                center,
                radius,
                direction: dir,
                excess: gc - mean,
            });
        }
    }
    report
}

/// Monte-Carlo measure of {|φ_j − φ| > δ} ∩ region, with standard error.
pub fn convergence_in_measure(
    phi_j: &dyn Fn(&[Complex64]) -> f64,
    phi: &dyn Fn(&[Complex64]) -> f64,
    region: &Polydisc,
    delta: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = region.dim();
    let mut hits = 0usize;
    for _ in 0..samples {
        let z: Vec<Complex64> = (0..dims)
            .map(|i| {
                let rho = region.radii[i] * rng.random::<f64>().sqrt();
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                region.center[i] + Complex64::from_polar(rho, th)
            })
            .collect();
        let a = phi_j(&z);
        let b = phi(&z);
        let diff = if a.is_finite() && b.is_finite() {
            (a - b).abs()
        } else if a == b {
            // both the same infinity: deviation 0
            0.0
        } else {
            f64::INFINITY
        };
        if diff > delta {
            hits += 1;
        }
    }
    let vol = region.volume();
    let p = hits as f64 / samples as f64;
    let measure = vol * p;
    let se = vol * (p * (1.0 - p) / samples as f64).sqrt();
    (measure, se)
}

/// ∫_region |e^{φ−φ_j} − 1|^p after verifying φ_j ≤ φ on a sample grid.
pub fn exp_gap_lp(
    phi: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    phi_j: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    p: f64,
    region: &Polydisc,
    cfg: &QuadConfig,
    seed: u64,
) -> Result<IntegralEstimate, PshError> {
    assert!(p > 0.0, "exponent p must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = region.dim();
    for _ in 0..500 {
        let z: Vec<Complex64> = (0..dims)
            .map(|i| {
                let rho = region.radii[i] * rng.random::<f64>().sqrt();
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                region.center[i] + Complex64::from_polar(rho, th)
            })
            .collect();
        let a = phi_j(&z);
        let b = phi(&z);
        if a.is_finite() && b.is_finite() && a > b + 1e-12 * (1.0 + b.abs()) {
            return Err(PshError::HypothesisViolation {
                witness: z,
                message: format!("φ_j = {a} > φ = {b}"),
            });
        }
    }
    let integrand = move |z: &[Complex64]| -> f64 {
        let a = phi_j(z);
        let b = phi(z);
        if !a.is_finite() || !b.is_finite() {
            // common pole (both -∞): zero gap by convention, measure zero
            return if a == b { 0.0 } else { f64::NAN };
        }
        ((b - a).exp() - 1.0).abs().powf(p)
    };
    Ok(integrate(integrand, region, cfg))
}

#[cfg(test)]
mod tests;
