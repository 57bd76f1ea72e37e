//! Weighted-integrability invariants of a singular metric/section pair:
//! the singularity exponent, minimal-norm capacities, sublevel tail curves
//! with their lower bound, and the effectiveness threshold θ.

use crate::domain::Polydisc;
use crate::expr::EvalPoint;
use crate::metric::{Section, SingularMetric};
use crate::quad::{
    adaptive_simpson_1d, integrability_at, integrate_sublevel, Integrability, IntegralEstimate,
    QuadConfig, QuadStatus,
};
use crate::special::{exp_integral_e1, exp_integral_e1_scaled};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpennessError {
    #[error("g is defined for t > 0 only (g(0⁺) = +∞); got t = {0}")]
    NonPositiveT(f64),
    #[error("θ is finite for β > 0 only (θ(0⁺) = +∞); got β = {0}")]
    NonPositiveBeta(f64),
    #[error("section is identically zero")]
    ZeroSection,
    #[error("section not locally square-integrable against the metric at the base point")]
    NotMember,
    #[error("energy ∫|F|²_h is infinite on the region")]
    InfiniteEnergy,
    #[error("curve has {0} samples, need ≥ {1}")]
    TooFewSamples(usize, usize),
    #[error("comparison level G = {0} must exceed every curve sample (max {1})")]
    LevelTooLow(f64, f64),
    #[error("{0}")]
    Invalid(String),
}

/// g(β, t) = ∫_t^∞ ds/(s·e^{1+(1+β)s}) = e^{-1}·E1((1+β)t).
pub fn g_beta(beta: f64, t: f64) -> Result<f64, OpennessError> {
    if t <= 0.0 {
        return Err(OpennessError::NonPositiveT(t));
    }
    if beta < 0.0 {
        return Err(OpennessError::Invalid("β must be ≥ 0".into()));
    }
    let x = (1.0 + beta) * t;
    if x > 700.0 {
        // E1 underflows; the scaled form still carries the magnitude
        return Ok((-1.0f64).exp() * exp_integral_e1_scaled(x) * (-x).exp());
    }
    Ok((-1.0f64).exp() * exp_integral_e1(x))
}

/// Upper bound g(β, t) ≤ e^{-1-(1+β)t} / ((1+β)t).
pub fn g_beta_upper_bound(beta: f64, t: f64) -> f64 {
    let x = (1.0 + beta) * t;
    (-1.0 - x).exp() / x
}

/// θ(β) with its quadrature error bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaValue {
    pub beta: f64,
    pub value: f64,
    pub quad_error: f64,
}

/// Integrand (1 - e^{-g_β(t)})·e^t, evaluated without overflow: for large
/// arguments it switches to e^{-1}·E1e((1+β)t)·e^{-βt}, and the removable
/// limit at t = 0 is 1.
fn theta_integrand(beta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let x = (1.0 + beta) * t;
    if x <= 30.0 {
        let g = (-1.0f64).exp() * exp_integral_e1(x);
        return -(-g).exp_m1() * t.exp();
    }
    // here g ≤ e^{-31}/30: 1-e^{-g} = g(1 - g/2 + ...) to full precision
    let e1e = exp_integral_e1_scaled(x);
    let g = if x < 700.0 {
        (-1.0f64).exp() * e1e * (-x).exp()
    } else {
        0.0
    };
    (-1.0f64).exp() * e1e * (-beta * t).exp() * (1.0 - 0.5 * g)
}

/// θ(β) = 1 + ∫_0^∞ (1 - e^{-g_β(t)}) e^t dt by panel-wise adaptive
/// quadrature; the tail is cut where its analytic bound drops below the
/// tolerance budget.
pub fn theta(beta: f64, tol: f64) -> Result<ThetaValue, OpennessError> {
    if beta <= 0.0 {
        return Err(OpennessError::NonPositiveBeta(beta));
    }
    let value = 1.0 + theta_tail_integral(tol, |t| theta_integrand(beta, t), |t| {
        tail_bound_from(beta, t)
    });
    Ok(ThetaValue {
        beta,
        value,
        quad_error: tol,
    })
}

/// Remaining mass bound: integrating g_β·e^t by parts gives
/// ∫_T^∞ (1-e^{-g_β})e^t dt ≤ e^{-1}·E1(βT).
fn tail_bound_from(beta: f64, t: f64) -> f64 {
    let x = beta * t;
    let e1 = if x > 700.0 {
        exp_integral_e1_scaled(x) * (-x).exp()
    } else {
        exp_integral_e1(x)
    };
    (-1.0f64).exp() * e1
}

fn theta_tail_integral(
    tol: f64,
    integrand: impl Fn(f64) -> f64,
    tail_bound: impl Fn(f64) -> f64,
) -> f64 {
    // find the cut point
    let mut t_end = 1.0f64;
    while tail_bound(t_end) > 0.1 * tol && t_end < 1e9 {
        t_end *= 2.0;
    }
    // geometric panels [0, 1], [1, 2], ..., each integrated adaptively with
    // a per-panel share of the budget
    let mut edges = vec![0.0f64, 1.0f64.min(t_end)];
    while *edges.last().unwrap() < t_end {
        let next = (edges.last().unwrap() * 2.0).min(t_end);
        edges.push(next);
    }
    let n_panels = edges.len() - 1;
    let panel_tol = 0.8 * tol / n_panels as f64;
    let mut total = 0.0f64;
    for w in edges.windows(2) {
        total += adaptive_simpson_1d(&|t| integrand(t), w[0], w[1], panel_tol / 15.0, 40);
    }
    total
}

/// |θ(β) − alternate substitution form| at tolerance `tol` each; the two
/// must agree because the change of variables is exact.
pub fn theta_identity_residual(beta: f64, tol: f64) -> Result<f64, OpennessError> {
    if beta <= 0.0 {
        return Err(OpennessError::NonPositiveBeta(beta));
    }
    let direct = theta(beta, tol)?.value;
    // 1 + (1/(1+β)) ∫_0^∞ (1-e^{-g_0(t)}) e^{t/(1+β)} dt
    let s = 1.0 + beta;
    let integrand = move |t: f64| -> f64 {
        if t <= 0.0 {
            return 1.0 / s;
        }
        if t <= 30.0 {
            let g = (-1.0f64).exp() * exp_integral_e1(t);
            return -(-g).exp_m1() * (t / s).exp() / s;
        }
        let e1e = exp_integral_e1_scaled(t);
        let g = if t < 700.0 {
            (-1.0f64).exp() * e1e * (-t).exp()
        } else {
            0.0
        };
        (-1.0f64).exp() / s * e1e * (-beta * t / s).exp() * (1.0 - 0.5 * g)
    };
    let tail = move |t: f64| -> f64 {
        // same integration by parts after substitution: ≤ e^{-1}·E1(βT/s)
        let x = beta * t / s;
        let e1 = if x > 700.0 {
            exp_integral_e1_scaled(x) * (-x).exp()
        } else {
            exp_integral_e1(x)
        };
        (-1.0f64).exp() * e1
    };
    let substituted = 1.0 + theta_tail_integral(tol, integrand, tail);
    Ok((direct - substituted).abs())
}

// ---------------------------------------------------------------------
// monomial model class
// ---------------------------------------------------------------------

/// Diagonal metric with radial monomial entries on a polydisc centered at
/// the origin: h_jj = Π_i |z_i|^{-2·a[j][i]}. This is the class where the
/// twisted-membership thresholds, minimal-norm projections and sublevel
/// capacities all have closed forms (monomials are orthogonal under every
/// radial weight).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialModel {
    /// a[component][coordinate] ≥ 0
    pub exponents: Vec<Vec<f64>>,
    pub domain: Polydisc,
}

impl MonomialModel {
    pub fn new(exponents: Vec<Vec<f64>>, domain: Polydisc) -> Result<Self, OpennessError> {
        if exponents.is_empty() {
            return Err(OpennessError::Invalid("rank must be ≥ 1".into()));
        }
        let dim = domain.dim();
        if exponents.iter().any(|row| row.len() != dim) {
            return Err(OpennessError::Invalid(
                "exponent rows must match the domain dimension".into(),
            ));
        }
        if exponents.iter().flatten().any(|a| *a < 0.0) {
            return Err(OpennessError::Invalid("exponents must be ≥ 0".into()));
        }
        if domain.center.iter().any(|c| c.norm() != 0.0) {
            return Err(OpennessError::Invalid(
                "monomial models live on polydiscs centered at the origin".into(),
            ));
        }
        Ok(MonomialModel { exponents, domain })
    }

    /// Rank-1 model h = |z|^{-2a} on a disc.
    pub fn radial_rank1(a: f64, radius: f64) -> Self {
        MonomialModel::new(vec![vec![a]], Polydisc::disc(radius)).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.exponents.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Column sums A_i = Σ_j a[j][i]; the weight φ = -log det h equals
    /// Σ_i 2·A_i·log|z_i|.
    pub fn col_sums(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| self.exponents.iter().map(|row| row[i]).sum())
            .collect()
    }

    pub fn is_singular(&self) -> bool {
        self.exponents.iter().flatten().any(|a| *a > 0.0)
    }

    /// Expression-backed metric with the origin declared singular.
    pub fn to_metric(&self) -> SingularMetric {
        use crate::expr::Expr;
        let diag: Vec<Expr> = self
            .exponents
            .iter()
            .map(|row| {
                let mut acc: Option<Expr> = None;
                for (i, a) in row.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    let f = Expr::pow(Expr::abs2(Expr::Coord(i)), -*a);
                    acc = Some(match acc {
                        None => f,
                        Some(e) => Expr::mul(e, f),
                    });
                }
                acc.unwrap_or_else(|| Expr::constant(1.0))
            })
            .collect();
        let singular = if self.is_singular() {
            vec![vec![Complex64::new(0.0, 0.0); self.dim()]]
        } else {
            vec![]
        };
        SingularMetric::diagonal(diag, self.domain.clone(), singular).unwrap()
    }

    /// Membership of the monomial z^α e_j in the β-twisted local module at
    /// the origin: per coordinate, α_i > a_{ji} + β·A_i − 1 strictly.
    pub fn monomial_member(&self, j: usize, alpha: &[u32], beta: f64) -> bool {
        let sums = self.col_sums();
        (0..self.dim()).all(|i| {
            (alpha.get(i).copied().unwrap_or(0) as f64)
                > self.exponents[j][i] + beta * sums[i] - 1.0
        })
    }

    /// Membership threshold of z^α e_j: the β where twisted local
    /// integrability is lost, min_i (α_i + 1 - a_{ji})/A_i over coordinates
    /// with A_i > 0 (infinite when the model is smooth). Membership holds
    /// strictly below the threshold and fails at and above it.
    pub fn monomial_threshold(&self, j: usize, alpha: &[u32]) -> f64 {
        let sums = self.col_sums();
        let mut c = f64::INFINITY;
        for i in 0..self.dim() {
            if sums[i] > 0.0 {
                let ci = (alpha.get(i).copied().unwrap_or(0) as f64 + 1.0
                    - self.exponents[j][i])
                    / sums[i];
                c = c.min(ci);
            }
        }
        c
    }

    /// Singularity exponent of a section from the closed-form thresholds:
    /// the smallest member threshold over the support. Negative values mean
    /// the section is not even in the untwisted module.
    pub fn section_threshold(&self, f: &Section) -> f64 {
        let mut c = f64::INFINITY;
        for (j, comp) in f.components.iter().enumerate() {
            for alpha in comp.terms.keys() {
                c = c.min(self.monomial_threshold(j, alpha));
            }
        }
        c
    }

    /// ‖z^α e_j‖² under h/det h over the polydisc of the given radii:
    /// Π_i π r_i^{2m_i+2}/(m_i+1) with m_i = α_i + A_i − a_{ji}.
    pub fn weighted_monomial_norm2(&self, j: usize, alpha: &[u32], radii: &[f64]) -> f64 {
        let sums = self.col_sums();
        let mut acc = 1.0f64;
        for i in 0..self.dim() {
            let m = alpha.get(i).copied().unwrap_or(0) as f64 + sums[i] - self.exponents[j][i];
            acc *= std::f64::consts::PI * radii[i].powf(2.0 * m + 2.0) / (m + 1.0);
        }
        acc
    }

    /// ‖z^α e_j‖² under h itself (the energy weight): finite iff
    /// α_i − a_{ji} > −1 for every coordinate.
    pub fn energy_monomial_norm2(&self, j: usize, alpha: &[u32], radii: &[f64]) -> Option<f64> {
        let mut acc = 1.0f64;
        for i in 0..self.dim() {
            let m = alpha.get(i).copied().unwrap_or(0) as f64 - self.exponents[j][i];
            if m <= -1.0 {
                return None;
            }
            acc *= std::f64::consts::PI * radii[i].powf(2.0 * m + 2.0) / (m + 1.0);
        }
        Some(acc)
    }

    /// ∫ |F|²_h over the polydisc of the given radii (None = divergent).
    pub fn energy(&self, f: &Section, radii: &[f64]) -> Option<f64> {
        let mut acc = 0.0f64;
        for (j, comp) in f.components.iter().enumerate() {
            for (alpha, c) in &comp.terms {
                acc += c.norm_sqr() * self.energy_monomial_norm2(j, alpha, radii)?;
            }
        }
        Some(acc)
    }

    /// ∫ |F|²_{h/det h} over the polydisc of the given radii.
    pub fn weighted_norm2(&self, f: &Section, radii: &[f64]) -> f64 {
        let mut acc = 0.0f64;
        for (j, comp) in f.components.iter().enumerate() {
            for (alpha, c) in &comp.terms {
                acc += c.norm_sqr() * self.weighted_monomial_norm2(j, alpha, radii);
            }
        }
        acc
    }

    /// The minimal-norm representative F̃₀ of F + (β-twisted module):
    /// coefficients on member monomials are removable and zeroed, the rest
    /// stay. Orthogonality of monomials under radial weights makes this the
    /// exact projection.
    pub fn minimal_representative(&self, f: &Section, beta: f64) -> Section {
        let comps = f
            .components
            .iter()
            .enumerate()
            .map(|(j, comp)| {
                let mut out = crate::metric::Polynomial::zero();
                for (alpha, c) in &comp.terms {
                    if !self.monomial_member(j, alpha, beta) {
                        out.terms.insert(alpha.clone(), *c);
                    }
                }
                out
            })
            .collect();
        Section::new(comps)
    }

    /// Weight φ = -log det h = Σ_i 2 A_i log|z_i| as a pointwise function.
    pub fn phi(&self, z: &[Complex64]) -> f64 {
        let sums = self.col_sums();
        let mut acc = 0.0f64;
        for i in 0..self.dim() {
            let r = z[i].norm();
            if r == 0.0 && sums[i] > 0.0 {
                return f64::NEG_INFINITY;
            }
            if sums[i] > 0.0 {
                acc += 2.0 * sums[i] * r.ln();
            }
        }
        acc
    }
}

/// Truncation bound for the projection basis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProjectionOracleConfig {
    pub max_degree: u32,
}

impl Default for ProjectionOracleConfig {
    fn default() -> Self {
        ProjectionOracleConfig { max_degree: 64 }
    }
}

/// Minimal weighted mass of F over holomorphic corrections whose difference
/// lies in the β-twisted module at the origin, on the monomial model class.
/// Exact: the removable coefficients vanish in the orthogonal projection.
pub fn capacity(
    model: &MonomialModel,
    f: &Section,
    beta: f64,
    region: &Polydisc,
    oracle: ProjectionOracleConfig,
) -> Result<IntegralEstimate, OpennessError> {
    if f.rank() != model.rank() {
        return Err(OpennessError::Invalid(
            "section rank does not match the model".into(),
        ));
    }
    if f.components.iter().any(|c| c.degree() > oracle.max_degree) {
        return Err(OpennessError::Invalid(format!(
            "section degree exceeds the projection basis bound {}",
            oracle.max_degree
        )));
    }
    if region.center.iter().any(|c| c.norm() != 0.0) {
        return Err(OpennessError::Invalid(
            "capacity regions must be centered at the origin".into(),
        ));
    }
    let f0 = model.minimal_representative(f, beta);
    let value = model.weighted_norm2(&f0, &region.radii);
    Ok(IntegralEstimate {
        value,
        abs_error: 0.0,
        cells_used: 0,
        status: QuadStatus::Converged,
    })
}

/// Quadrature cross-check of `capacity`: integrates |F̃₀|²_{h/det h} over
/// the region with the adaptive engine.
pub fn capacity_quadrature(
    model: &MonomialModel,
    f: &Section,
    beta: f64,
    region: &Polydisc,
    tol: f64,
) -> IntegralEstimate {
    let f0 = model.minimal_representative(f, beta);
    let weight_exps: Vec<Vec<f64>> = {
        let sums = model.col_sums();
        (0..model.rank())
            .map(|j| {
                (0..model.dim())
                    .map(|i| sums[i] - model.exponents[j][i])
                    .collect()
            })
            .collect()
    };
    let integrand = move |z: &[Complex64]| -> f64 {
        let vals = f0.eval(z);
        let mut acc = 0.0f64;
        for (j, v) in vals.iter().enumerate() {
            let mut w = 1.0f64;
            for i in 0..z.len() {
                let e = weight_exps[j][i];
                if e != 0.0 {
                    w *= z[i].norm_sqr().powf(e);
                }
            }
            acc += v.norm_sqr() * w;
        }
        acc
    };
    let cfg = QuadConfig {
        tol,
        singular_points: vec![vec![Complex64::new(0.0, 0.0); model.dim()]],
        ..Default::default()
    };
    crate::quad::integrate(integrand, region, &cfg)
}

// ---------------------------------------------------------------------
// singularity exponent by bisection on annulus verdicts
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BracketKind {
    /// the exponent lies inside [lo, hi]
    Interior,
    /// membership already fails at β = 0
    NotMember,
    /// membership persisted to the configured β ceiling
    Unbounded,
}

/// Bisection bracket for the singularity exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentBracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: u32,
    pub indeterminate_hits: u32,
    pub kind: BracketKind,
}

#[derive(Debug, Clone)]
pub struct ExponentConfig {
    pub resolution: f64,
    pub beta_max: f64,
    pub levels: u32,
    pub rho0: f64,
    pub tol_rel: f64,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            resolution: 0.02,
            beta_max: 64.0,
            levels: 12,
            rho0: 0.25,
            tol_rel: 1e-3,
        }
    }
}

/// Largest β (up to `resolution`) with |F|²_{h(det h)^β} locally integrable
/// at `o`, by bisection on dyadic-annulus integrability verdicts.
pub fn singularity_exponent(
    h: &SingularMetric,
    f: &Section,
    o: &[Complex64],
    cfg: &ExponentConfig,
) -> Result<ExponentBracket, OpennessError> {
    if f.is_zero() {
        return Err(OpennessError::ZeroSection);
    }
    let mut iterations = 0u32;
    let mut indeterminate_hits = 0u32;
    let mut member = |beta: f64| -> Result<bool, OpennessError> {
        iterations += 1;
        let twisted = h
            .twist(beta, None)
            .map_err(|e| OpennessError::Invalid(e.to_string()))?;
        let integrand = move |z: &[Complex64]| -> f64 {
            twisted
                .section_norm2(f, &EvalPoint::new(z.to_vec()))
                .to_f64()
        };
        let v = integrability_at(integrand, o, cfg.rho0, cfg.levels, cfg.tol_rel);
        if v.verdict == Integrability::Indeterminate {
            indeterminate_hits += 1;
        }
        Ok(v.is_integrable())
    };

    if !member(0.0)? {
        return Ok(ExponentBracket {
            lo: 0.0,
            hi: 0.0,
            iterations,
            indeterminate_hits,
            kind: BracketKind::NotMember,
        });
    }
    // grow an upper end by doubling
    let mut lo = 0.0f64;
    let mut hi = 1.0f64.min(cfg.beta_max);
    loop {
        if member(hi)? {
            lo = hi;
            if hi >= cfg.beta_max {
                return Ok(ExponentBracket {
                    lo: cfg.beta_max,
                    hi: cfg.beta_max,
                    iterations,
                    indeterminate_hits,
                    kind: BracketKind::Unbounded,
                });
            }
            hi = (hi * 2.0).min(cfg.beta_max);
        } else {
            break;
        }
    }
    while hi - lo > cfg.resolution {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ExponentBracket {
        lo,
        hi,
        iterations,
        indeterminate_hits,
        kind: BracketKind::Interior,
    })
}

// ---------------------------------------------------------------------
// tail curves
// ---------------------------------------------------------------------

/// Sampled tail curve t ↦ C_{F,β}({φ < -t}).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GCurve {
    pub beta: f64,
    /// (t, G value, error bound), t strictly increasing
    pub samples: Vec<(f64, f64, f64)>,
    pub region: Polydisc,
}

/// Capacity of the model over {φ < -t} ∩ region. For n = 1 the sublevel
/// set is the disc |z| < e^{-t/(2A)} and everything is closed-form; for
/// n ≥ 2 the per-monomial norms fall back to sublevel quadrature.
pub fn g_curve(
    model: &MonomialModel,
    f: &Section,
    beta: f64,
    region: &Polydisc,
    t_grid: &[f64],
    oracle: ProjectionOracleConfig,
) -> Result<GCurve, OpennessError> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OpennessError::Invalid("t grid must be increasing".into()));
    }
    if t_grid.first().copied().unwrap_or(-1.0) < 0.0 {
        return Err(OpennessError::Invalid("t grid must start at t ≥ 0".into()));
    }
    let f0 = {
        // validate via the capacity entry point
        capacity(model, f, beta, region, oracle)?;
        model.minimal_representative(f, beta)
    };
    let sums = model.col_sums();
    let mut samples = Vec::with_capacity(t_grid.len());
    if model.dim() == 1 {
        let a2 = 2.0 * sums[0];
        for &t in t_grid {
            // {φ < -t} = {|z| < e^{-t/(2A)}}; empty when the model is smooth
            let radius = if a2 > 0.0 {
                region.radii[0].min((-t / a2).exp())
            } else {
                0.0
            };
            let g = if radius > 0.0 {
                model.weighted_norm2(&f0, &[radius])
            } else {
                0.0
            };
            samples.push((t, g, 0.0));
        }
    } else {
        let tol = 1e-7;
        for &t in t_grid {
            let weight_model = model.clone();
            let f0c = f0.clone();
            let integrand = move |z: &[Complex64]| -> f64 {
                let vals = f0c.eval(z);
                let s = weight_model.col_sums();
                let mut acc = 0.0f64;
                for (j, v) in vals.iter().enumerate() {
                    let mut w = 1.0f64;
                    for i in 0..z.len() {
                        let e = s[i] - weight_model.exponents[j][i];
                        if e != 0.0 {
                            w *= z[i].norm_sqr().powf(e);
                        }
                    }
                    acc += v.norm_sqr() * w;
                }
                acc
            };
            let m = model.clone();
            let phi = move |z: &[Complex64]| m.phi(z);
            let cfg = QuadConfig {
                tol,
                singular_points: vec![vec![Complex64::new(0.0, 0.0); model.dim()]],
                ..Default::default()
            };
            let est = integrate_sublevel(integrand, phi, t, region, &cfg);
            samples.push((t, est.value, est.abs_error));
        }
    }
    Ok(GCurve {
        beta,
        samples,
        region: region.clone(),
    })
}

/// Per-sample slack of the tail lower bound G(t) ≥ G(0)·(1 − e^{-g_β(t)}).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlackReport {
    /// (t, slack, allowance)
    pub slacks: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

pub fn lower_bound_check(curve: &GCurve) -> Result<SlackReport, OpennessError> {
    if curve.samples.len() < 10 {
        return Err(OpennessError::TooFewSamples(curve.samples.len(), 10));
    }
    let (t0, g0, g0_err) = curve.samples[0];
    if t0 != 0.0 {
        return Err(OpennessError::Invalid(
            "curve must start at t = 0 to anchor G(0)".into(),
        ));
    }
    let mut slacks = Vec::new();
    let mut pass = true;
    for &(t, g, err) in curve.samples.iter().skip(1) {
        let gb = g_beta(curve.beta, t)?;
        // 1 - e^{-g} via expm1 keeps tiny slacks meaningful
        let bound = g0 * (-(-gb).exp_m1());
        let slack = g - bound;
        let allowance = err + g0_err + 1e-12 * (1.0 + g0);
        if slack < -allowance {
            pass = false;
        }
        slacks.push((t, slack, allowance));
    }
    Ok(SlackReport { slacks, pass })
}

/// Residual of the decay inequality
/// ∫_t (−ΔG/Δs)/(G − G(s)) ds ≤ log(G/(G − G(t))), by forward differences
/// and the trapezoid rule, truncated at the last grid point. Returns the
/// worst max(0, LHS − RHS) over all curve start points.
pub fn differential_inequality_check(curve: &GCurve, g_level: f64) -> Result<f64, OpennessError> {
    let n = curve.samples.len();
    if n < 3 {
        return Err(OpennessError::TooFewSamples(n, 3));
    }
    let max_g = curve
        .samples
        .iter()
        .map(|&(_, g, _)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    if g_level <= max_g {
        return Err(OpennessError::LevelTooLow(g_level, max_g));
    }
    // integrand at nodes 0..n-2 from forward differences
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let (t, g, _) = curve.samples[i];
        let (t1, g1, _) = curve.samples[i + 1];
        let dq = -(g1 - g) / (t1 - t);
        nodes.push((t, dq / (g_level - g)));
    }
    let mut worst = 0.0f64;
    // suffix trapezoid sums give the truncated LHS from each start point
    let mut suffix = vec![0.0f64; nodes.len()];
    for k in (0..nodes.len() - 1).rev() {
        let (ta, fa) = nodes[k];
        let (tb, fb) = nodes[k + 1];
        suffix[k] = suffix[k + 1] + 0.5 * (fa + fb) * (tb - ta);
    }
    for k in 0..nodes.len() {
        let gk = curve.samples[k].1;
        let rhs = (g_level / (g_level - gk)).ln();
        worst = worst.max(suffix[k] - rhs);
    }
    Ok(worst.max(0.0))
}

// ---------------------------------------------------------------------
// effectiveness
// ---------------------------------------------------------------------

/// Membership prediction from the θ threshold against the energy/capacity
/// ratio, with the observed annulus verdict alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectivenessReport {
    pub beta: f64,
    pub theta_beta: f64,
    pub energy: f64,
    pub capacity_plus: f64,
    pub ratio: f64,
    pub exponent: ExponentBracket,
    pub predicted_member: bool,
    pub observed_member: bool,
}

/// Evaluates the effectiveness criterion on a monomial model: if
/// θ(β) > ∫_D |F|²_h / C_{F,c⁺}(D) then F must lie in the β-twisted module
/// at the origin. `resolution` controls both the exponent bracket and the
/// c⁺ offset.
pub fn effectiveness_verdict(
    model: &MonomialModel,
    f: &Section,
    region: &Polydisc,
    beta: f64,
    resolution: f64,
    theta_tol: f64,
) -> Result<EffectivenessReport, OpennessError> {
    if f.is_zero() {
        return Err(OpennessError::ZeroSection);
    }
    if region.radii.iter().any(|r| *r > 1.0) {
        return Err(OpennessError::Invalid(
            "effectiveness needs φ < 0, i.e. a region inside the unit polydisc".into(),
        ));
    }
    let energy = model
        .energy(f, &region.radii)
        .ok_or(OpennessError::InfiniteEnergy)?;
    let metric = model.to_metric();
    let exp_cfg = ExponentConfig {
        resolution: resolution.min(0.02),
        ..Default::default()
    };
    let origin = vec![Complex64::new(0.0, 0.0); model.dim()];
    let bracket = singularity_exponent(&metric, f, &origin, &exp_cfg)?;
    if bracket.kind == BracketKind::NotMember {
        return Err(OpennessError::NotMember);
    }
    let c_plus = bracket.hi + resolution;
    let capacity_plus = capacity(model, f, c_plus, region, ProjectionOracleConfig::default())?
        .value;
    if capacity_plus <= 0.0 {
        return Err(OpennessError::Invalid(
            "capacity at c⁺ vanished; exponent bracket inconsistent".into(),
        ));
    }
    let ratio = energy / capacity_plus;
    let theta_beta = if beta > 0.0 {
        theta(beta, theta_tol)?.value
    } else {
        f64::INFINITY
    };
    let predicted_member = theta_beta > ratio;
    // observed membership by the annulus test on the β-twisted norm
    let twisted = metric
        .twist(beta, None)
        .map_err(|e| OpennessError::Invalid(e.to_string()))?;
    let integrand = move |z: &[Complex64]| -> f64 {
        twisted
            .section_norm2(f, &EvalPoint::new(z.to_vec()))
            .to_f64()
    };
    let verdict = integrability_at(integrand, &origin, exp_cfg.rho0, exp_cfg.levels, exp_cfg.tol_rel);
    Ok(EffectivenessReport {
        beta,
        theta_beta,
        energy,
        capacity_plus,
        ratio,
        exponent: bracket,
        predicted_member,
        observed_member: verdict.is_integrable(),
    })
}

/// Scans β_grid in ascending order and returns the first level whose
/// twisted membership verdict is integrable. The openness statement
/// guarantees some level works, so `None` on a grid reaching c/2 is a test
/// failure upstream.
pub fn strong_openness_search(
    h: &SingularMetric,
    f: &Section,
    o: &[Complex64],
    beta_grid: &[f64],
    cfg: &ExponentConfig,
) -> Result<Option<f64>, OpennessError> {
    if f.is_zero() {
        return Err(OpennessError::ZeroSection);
    }
    let check = |beta: f64| -> Result<bool, OpennessError> {
        let twisted = h
            .twist(beta, None)
            .map_err(|e| OpennessError::Invalid(e.to_string()))?;
        let integrand = move |z: &[Complex64]| -> f64 {
            twisted
                .section_norm2(f, &EvalPoint::new(z.to_vec()))
                .to_f64()
        };
        Ok(integrability_at(integrand, o, cfg.rho0, cfg.levels, cfg.tol_rel).is_integrable())
    };
    if !check(0.0)? {
        return Err(OpennessError::NotMember);
    }
    for &b in beta_grid {
        if b <= 0.0 {
            continue;
        }
        if check(b)? {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests;
