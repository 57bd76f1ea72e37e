//! Singular hermitian metrics on trivial bundles over polydiscs.
//!
//! A metric is an r×r hermitian matrix of expressions; only the upper
//! triangle is stored, the lower triangle is derived by conjugation, so
//! hermiticity is structural. Entries may blow up or vanish on declared
//! singular loci; pointwise evaluation propagates tagged infinities instead
//! of crashing.

use crate::domain::{ExtReal, Polydisc};
use crate::expr::{eval_expr, EvalPoint, Expr, Value};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("evaluation produced a non-positive determinant at a finite point: det = {0}")]
    NotPositive(f64),
    #[error("matrix is singular or non-finite at the requested point")]
    Singular,
    #[error("point too close to the domain boundary (distance {dist}, need > {need})")]
    BoundaryProximity { dist: f64, need: f64 },
    #[error("normalization exponent s = {s} violates s ≥ min(n, r) = {min_nr}")]
    BadExponent { s: u32, min_nr: u32 },
    #[error("empty family")]
    EmptyFamily,
    #[error("{0}")]
    Invalid(String),
}

/// Holomorphic section of the trivial rank-r bundle: r sparse polynomials
/// in z_1..z_n, each a map exponent-tuple → complex coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub components: Vec<Polynomial>,
}

/// Sparse polynomial Σ c_α z^α.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(vec![0], c);
        }
        Polynomial { terms }
    }

    /// Monomial c·z^α.
    pub fn monomial(exps: Vec<u32>, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(exps, c);
        }
        Polynomial { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (exps, c) in &self.terms {
            let mut m = *c;
            for (k, e) in exps.iter().enumerate() {
                if *e > 0 {
                    let zk = z.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0));
                    m *= zk.powi(*e as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Expression tree Σ c_α z^α (used when sections enter metric entries).
    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (exps, c) in &self.terms {
            let mut term = Expr::Const(*c);
            for (k, e) in exps.iter().enumerate() {
                if *e > 0 {
                    term = Expr::mul(term, Expr::pow(Expr::Coord(k), *e as f64));
                }
            }
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::add(a, term),
            });
        }
        acc.unwrap_or_else(|| Expr::constant(0.0))
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

impl Section {
    pub fn new(components: Vec<Polynomial>) -> Self {
        Section { components }
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|p| p.is_zero())
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.components.iter().map(|p| p.eval(z)).collect()
    }

    /// Scalar section (rank 1) from a single polynomial.
    pub fn scalar(p: Polynomial) -> Self {
        Section {
            components: vec![p],
        }
    }
}

/// r×r hermitian matrix of expressions over a polydisc; upper triangle only.
#[derive(Debug, Clone)]
pub struct SingularMetric {
    rank: usize,
    dim: usize,
    /// row-major upper triangle: (i, j) with i ≤ j at index i*rank - i(i-1)/2 + (j-i)
    upper: Vec<Arc<Expr>>,
    pub domain: Polydisc,
    pub singular_points: Vec<Vec<Complex64>>,
}

fn tri_index(rank: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < rank);
    i * (2 * rank - i + 1) / 2 + (j - i)
}

/// Evaluated metric at a point: hermitian value matrix, determinant and
/// eigenvalues (ascending), all as extended reals where degenerate.
#[derive(Debug, Clone)]
pub struct PointMetric {
    pub values: Vec<Vec<Value>>,
    pub det: ExtReal,
    pub eigenvalues: Vec<ExtReal>,
}

impl PointMetric {
    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|row| row.iter().all(|v| v.is_finite()))
    }

    /// Finite complex matrix, if every entry is finite.
    pub fn to_matrix(&self) -> Option<DMatrix<Complex<f64>>> {
        let r = self.values.len();
        let mut m = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                m[(i, j)] = self.values[i][j].as_complex()?;
            }
        }
        Some(m)
    }
}

impl SingularMetric {
    /// Builds a metric from the full entry matrix; entries strictly below
    /// the diagonal are discarded and re-derived by conjugation.
    pub fn from_entries(
        entries: Vec<Vec<Expr>>,
        domain: Polydisc,
        singular_points: Vec<Vec<Complex64>>,
    ) -> Result<Self, MetricError> {
        let rank = entries.len();
        if rank == 0 {
            return Err(MetricError::Invalid("rank must be ≥ 1".into()));
        }
        if entries.iter().any(|row| row.len() != rank) {
            return Err(MetricError::Invalid("entry matrix must be square".into()));
        }
        let dim = domain.dim();
        let mut upper = Vec::with_capacity(rank * (rank + 1) / 2);
        for i in 0..rank {
            for j in i..rank {
                let e = entries[i][j].clone();
                if e.arity() > dim {
                    return Err(MetricError::Invalid(format!(
                        "entry ({i},{j}) uses coordinate z{} beyond dim {dim}",
                        e.arity()
                    )));
                }
                upper.push(Arc::new(e));
            }
        }
        Ok(SingularMetric {
            rank,
            dim,
            upper,
            domain,
            singular_points,
        })
    }

    /// Diagonal metric from the given diagonal entry expressions.
    pub fn diagonal(
        diag: Vec<Expr>,
        domain: Polydisc,
        singular_points: Vec<Vec<Complex64>>,
    ) -> Result<Self, MetricError> {
        let rank = diag.len();
        let mut entries = vec![vec![Expr::constant(0.0); rank]; rank];
        for (i, e) in diag.into_iter().enumerate() {
            entries[i][i] = e;
        }
        Self::from_entries(entries, domain, singular_points)
    }

    pub fn identity(rank: usize, domain: Polydisc) -> Self {
        let diag = vec![Expr::constant(1.0); rank];
        Self::diagonal(diag, domain, vec![]).unwrap()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry (i, j); below the diagonal this is conj of the stored entry.
    pub fn entry(&self, i: usize, j: usize) -> Expr {
        if i <= j {
            (*self.upper[tri_index(self.rank, i, j)]).clone()
        } else {
            Expr::Conj(self.upper[tri_index(self.rank, j, i)].clone())
        }
    }

    fn entry_value(&self, i: usize, j: usize, p: &EvalPoint) -> Value {
        if i <= j {
            eval_expr(&self.upper[tri_index(self.rank, i, j)], p)
        } else {
            match eval_expr(&self.upper[tri_index(self.rank, j, i)], p) {
                Value::Num(c) => Value::Num(c.conj()),
                v => v,
            }
        }
    }

    /// Symbolic determinant by Laplace expansion (fine for small ranks).
    pub fn det_expr(&self) -> Expr {
        let entries: Vec<Vec<Expr>> = (0..self.rank)
            .map(|i| (0..self.rank).map(|j| self.entry(i, j)).collect())
            .collect();
        det_expand(&entries)
    }

    /// Evaluate at p: hermitian value matrix, determinant, eigenvalues.
    pub fn metric_at(&self, p: &EvalPoint) -> PointMetric {
        let r = self.rank;
        let mut values = vec![vec![Value::Indeterminate; r]; r];
        for i in 0..r {
            for j in 0..r {
                values[i][j] = self.entry_value(i, j, p);
            }
        }
        point_metric_from_values(values)
    }

    /// φ(p) = -log det h(p); -∞ where det h = +∞, error flag where the
    /// evaluated determinant is ≤ 0 at a finite point.
    pub fn log_det_weight(&self, p: &EvalPoint) -> Result<ExtReal, MetricError> {
        let pm = self.metric_at(p);
        match pm.det {
            ExtReal::Finite(d) => {
                if d > 0.0 {
                    Ok(ExtReal::Finite(-d.ln()))
                } else {
                    Err(MetricError::NotPositive(d))
                }
            }
            ExtReal::PosInf => Ok(ExtReal::NegInf),
            ExtReal::NegInf => Err(MetricError::NotPositive(f64::NEG_INFINITY)),
            ExtReal::Indeterminate => Ok(ExtReal::Indeterminate),
        }
    }

    /// Dual metric value at p: inverse-transpose of the evaluated matrix.
    pub fn dual_at(&self, p: &EvalPoint) -> Result<PointMetric, MetricError> {
        let pm = self.metric_at(p);
        dual_of_point(&pm)
    }

    /// h / det h as a new metric (entrywise expression division).
    pub fn normalize(&self) -> SingularMetric {
        let det = self.det_expr();
        let mut upper = Vec::with_capacity(self.upper.len());
        for e in &self.upper {
            upper.push(Arc::new(Expr::Div(e.clone(), Arc::new(det.clone()))));
        }
        SingularMetric {
            rank: self.rank,
            dim: self.dim,
            upper,
            domain: self.domain.clone(),
            singular_points: self.singular_points.clone(),
        }
    }

    /// h (det h)^β e^{-ψ}.
    pub fn twist(&self, beta: f64, psi: Option<&Expr>) -> Result<SingularMetric, MetricError> {
        if beta < 0.0 {
            return Err(MetricError::Invalid("twist exponent β must be ≥ 0".into()));
        }
        let mut factor: Option<Expr> = None;
        if beta != 0.0 {
            factor = Some(Expr::pow(self.det_expr(), beta));
        }
        if let Some(psi) = psi {
            let e = Expr::exp(Expr::neg(psi.clone()));
            factor = Some(match factor {
                None => e,
                Some(f) => Expr::mul(f, e),
            });
        }
        let upper = match factor {
            None => self.upper.clone(),
            Some(f) => {
                let f = Arc::new(f);
                self.upper
                    .iter()
                    .map(|e| Arc::new(Expr::Mul(e.clone(), f.clone())))
                    .collect()
            }
        };
        Ok(SingularMetric {
            rank: self.rank,
            dim: self.dim,
            upper,
            domain: self.domain.clone(),
            singular_points: self.singular_points.clone(),
        })
    }

    /// |F|²_h(p) = Σ_{ij} h_{ij}(p) F_i(p) conj(F_j(p)).
    ///
    /// 0·∞ policy: the zero section gives 0 outright; otherwise any +∞
    /// entry forces +∞ unless the evaluated section vanishes at p, which is
    /// a genuine indeterminate and is tagged as such.
    pub fn section_norm2(&self, sec: &Section, p: &EvalPoint) -> ExtReal {
        if sec.is_zero() {
            return ExtReal::Finite(0.0);
        }
        let fvals = sec.eval(&p.coords);
        let zero_poly: Vec<bool> = sec.components.iter().map(|c| c.is_zero()).collect();
        let mut acc = 0.0f64;
        let mut saw_inf = false;
        for i in 0..self.rank {
            for j in 0..self.rank {
                let fij = fvals[i] * fvals[j].conj();
                match self.entry_value(i, j, p) {
                    Value::Num(h) => {
                        acc += (h * fij).re;
                    }
                    Value::PosInf | Value::NegInf => {
                        if fij == Complex64::new(0.0, 0.0) {
                            // 0·∞: fine when the vanishing factor is the
                            // zero polynomial, indeterminate when the
                            // section merely evaluates to zero here
                            let structural = (fvals[i] != Complex64::new(0.0, 0.0)
                                || zero_poly[i])
                                && (fvals[j] != Complex64::new(0.0, 0.0) || zero_poly[j]);
                            if structural {
                                continue;
                            }
                            return ExtReal::Indeterminate;
                        }
                        saw_inf = true;
                    }
                    Value::Indeterminate => return ExtReal::Indeterminate,
                }
            }
        }
        if saw_inf {
            ExtReal::PosInf
        } else if acc.is_finite() {
            ExtReal::Finite(acc.max(0.0))
        } else {
            ExtReal::PosInf
        }
    }
}

fn point_metric_from_values(values: Vec<Vec<Value>>) -> PointMetric {
    let r = values.len();
    let all_finite = values.iter().all(|row| row.iter().all(|v| v.is_finite()));
    if all_finite {
        let mut m = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                m[(i, j)] = values[i][j].as_complex().unwrap();
            }
        }
        // enforce exact hermiticity before the eigensolver
        let herm = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
        let eig = herm.clone().symmetric_eigenvalues();
        let mut evs: Vec<f64> = eig.iter().copied().collect();
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let det = evs.iter().product::<f64>();
        PointMetric {
            values,
            det: ExtReal::from_f64(det),
            eigenvalues: evs.into_iter().map(ExtReal::Finite).collect(),
        }
    } else {
        // degenerate point. With finite off-diagonal entries the diverging
        // diagonal dominates, so the diagonal doubles as the eigenvalue
        // list (exact for the diagonal model metrics); anything stranger is
        // tagged indeterminate.
        let offdiag_finite =
            (0..r).all(|i| (0..r).all(|j| i == j || values[i][j].is_finite()));
        if !offdiag_finite {
            return PointMetric {
                values,
                det: ExtReal::Indeterminate,
                eigenvalues: vec![ExtReal::Indeterminate; r],
            };
        }
        let mut evs: Vec<ExtReal> = (0..r)
            .map(|i| match values[i][i] {
                Value::Num(c) => ExtReal::Finite(c.re),
                Value::PosInf => ExtReal::PosInf,
                Value::NegInf => ExtReal::NegInf,
                Value::Indeterminate => ExtReal::Indeterminate,
            })
            .collect();
        evs.sort_by(|a, b| {
            a.to_f64()
                .partial_cmp(&b.to_f64())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let any_ind = evs.iter().any(|e| matches!(e, ExtReal::Indeterminate));
        let any_zero = evs.iter().any(|e| e.finite() == Some(0.0));
        let any_neg_inf = evs.iter().any(|e| matches!(e, ExtReal::NegInf));
        let det = if any_ind || any_neg_inf || any_zero {
            ExtReal::Indeterminate
        } else {
            ExtReal::PosInf
        };
        PointMetric {
            values,
            det,
            eigenvalues: evs,
        }
    }
}

/// Inverse-transpose of a finite positive definite point metric.
pub fn dual_of_point(pm: &PointMetric) -> Result<PointMetric, MetricError> {
    let m = pm.to_matrix().ok_or(MetricError::Singular)?;
    let inv = m.clone().try_inverse().ok_or(MetricError::Singular)?;
    let it = inv.transpose();
    let r = it.nrows();
    let mut values = vec![vec![Value::Indeterminate; r]; r];
    for i in 0..r {
        for j in 0..r {
            values[i][j] = Value::Num(it[(i, j)]);
        }
    }
    Ok(point_metric_from_values(values))
}

fn det_expand(entries: &[Vec<Expr>]) -> Expr {
    let n = entries.len();
    if n == 1 {
        return entries[0][0].clone();
    }
    let mut acc: Option<Expr> = None;
    for j in 0..n {
        let minor: Vec<Vec<Expr>> = (1..n)
            .map(|i| {
                (0..n)
                    .filter(|&jj| jj != j)
                    .map(|jj| entries[i][jj].clone())
                    .collect()
            })
            .collect();
        let term = Expr::mul(entries[0][j].clone(), det_expand(&minor));
        acc = Some(match acc {
            None => term,
            Some(a) => {
                if j % 2 == 0 {
                    Expr::add(a, term)
                } else {
                    Expr::sub(a, term)
                }
            }
        });
    }
    acc.unwrap()
}

/// Result bundle of the Gram-family construction: the raw Gram matrix H and
/// the normalized metric H/(det H)^s.
#[derive(Debug, Clone)]
pub struct FamilyMetric {
    pub raw: SingularMetric,
    pub normalized: SingularMetric,
    pub s: u32,
}

/// Builds H_{ij} = Σ_α F_{α,i} conj(F_{α,j}) from a finite family of
/// ℂʳ-valued holomorphic maps, plus the normalization H/(det H)^s. The raw
/// Gram matrix is positive semidefinite by construction; the normalized
/// metric is the one with a semipositivity guarantee, which needs
/// s ≥ min(n, r).
pub fn from_family(
    family: &[Section],
    s: u32,
    domain: Polydisc,
    singular_points: Vec<Vec<Complex64>>,
) -> Result<FamilyMetric, MetricError> {
    if family.is_empty() {
        return Err(MetricError::EmptyFamily);
    }
    let rank = family[0].rank();
    if family.iter().any(|f| f.rank() != rank) {
        return Err(MetricError::Invalid(
            "family members must share one rank".into(),
        ));
    }
    let n = domain.dim() as u32;
    let min_nr = n.min(rank as u32);
    if s < min_nr {
        return Err(MetricError::BadExponent { s, min_nr });
    }
    let mut entries = vec![vec![Expr::constant(0.0); rank]; rank];
    for i in 0..rank {
        for j in 0..rank {
            let mut acc: Option<Expr> = None;
            for f in family {
                let term = Expr::mul(
                    f.components[i].to_expr(),
                    Expr::conj(f.components[j].to_expr()),
                );
                acc = Some(match acc {
                    None => term,
                    Some(a) => Expr::add(a, term),
                });
            }
            entries[i][j] = acc.unwrap();
        }
    }
    let raw = SingularMetric::from_entries(entries, domain.clone(), singular_points.clone())?;
    let det = raw.det_expr();
    let denom = Arc::new(Expr::pow(det, s as f64));
    let upper: Vec<Arc<Expr>> = raw
        .upper
        .iter()
        .map(|e| Arc::new(Expr::Div(e.clone(), denom.clone())))
        .collect();
    let normalized = SingularMetric {
        rank,
        dim: raw.dim,
        upper,
        domain,
        singular_points,
    };
    Ok(FamilyMetric { raw, normalized, s })
}

/// Per-sample order check between two metrics: is A ⪰ B, and does the
/// pointwise normalized reversal det(A)·B − det(B)·A ⪰ 0 hold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    pub samples_checked: usize,
    pub samples_skipped: usize,
    pub a_ge_b_all: bool,
    pub reversal_all: bool,
    pub failures: Vec<usize>,
}

/// PSD test tolerance on the eigenvalue floor.
pub const PSD_TOL: f64 = 1e-10;

pub fn check_order(
    ha: &SingularMetric,
    hb: &SingularMetric,
    samples: &[EvalPoint],
) -> OrderReport {
    let mut report = OrderReport {
        samples_checked: 0,
        samples_skipped: 0,
        a_ge_b_all: true,
        reversal_all: true,
        failures: Vec::new(),
    };
    for (k, p) in samples.iter().enumerate() {
        let pa = ha.metric_at(p);
        let pb = hb.metric_at(p);
        let (Some(ma), Some(mb)) = (pa.to_matrix(), pb.to_matrix()) else {
            report.samples_skipped += 1;
            continue;
        };
        let (Some(da), Some(db)) = (pa.det.finite(), pb.det.finite()) else {
            report.samples_skipped += 1;
            continue;
        };
        if da <= 0.0 || db <= 0.0 {
            report.samples_skipped += 1;
            continue;
        }
        report.samples_checked += 1;
        let diff = &ma - &mb;
        let ge = min_eig_hermitian(&diff) >= -PSD_TOL;
        let rev = {
            let m = &mb * Complex::new(da, 0.0) - &ma * Complex::new(db, 0.0);
            min_eig_hermitian(&m) >= -PSD_TOL * (1.0 + da.abs() + db.abs())
        };
        if !(ge && rev) {
            report.failures.push(k);
        }
        report.a_ge_b_all &= ge;
        report.reversal_all &= rev;
    }
    report
}

pub fn min_eig_hermitian(m: &DMatrix<Complex<f64>>) -> f64 {
    let herm = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smooth approximation of a Griffiths semi-positive metric at one point:
/// mollify the dual entries over an ε-ball, add ε·Id, invert back, scale by
/// e^{-ε|z|²}.
pub fn regularize(
    h: &SingularMetric,
    eps: f64,
    p: &EvalPoint,
    grid: usize,
) -> Result<PointMetric, MetricError> {
    let dist = h.domain.boundary_distance(&p.coords);
    if dist <= eps {
        return Err(MetricError::BoundaryProximity {
            dist,
            need: eps,
        });
    }
    let r = h.rank();
    let dim = h.dim();
    // tensor Gauss grid over the ball |u| ≤ 1 in ℝ^{2n}, bump ρ(u) = c(1-|u|²)³
    // normalized discretely so constants mollify exactly
    let (nodes, weights) = gauss_legendre(grid);
    let d = 2 * dim;
    let mut acc = DMatrix::<Complex<f64>>::zeros(r, r);
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
            let mut q = p.clone();
            for i in 0..dim {
                q.coords[i] -= eps * Complex64::new(nodes[idx[2 * i]], nodes[idx[2 * i + 1]]);
            }
            let dual = h.dual_at(&q)?;
            let m = dual.to_matrix().ok_or(MetricError::Singular)?;
            acc += m * Complex::new(w * bump, 0.0);
            wsum += w * bump;
        }
        let mut i = 0;
        loop {
            if i == d {
                if wsum <= 0.0 {
                    return Err(MetricError::Invalid("empty mollifier support".into()));
                }
                let mut dual_eps = acc * Complex::new(1.0 / wsum, 0.0);
                for k in 0..r {
                    dual_eps[(k, k)] += Complex::new(eps, 0.0);
                }
                // back to the primal metric: (h*_ε + ε Id)^{-T} e^{-ε|z|²}
                let inv = dual_eps.try_inverse().ok_or(MetricError::Singular)?;
                let primal = inv.transpose();
                let z2: f64 = p.coords.iter().map(|c| c.norm_sqr()).sum();
                let scaled = primal * Complex::new((-eps * z2).exp(), 0.0);
                let rr = scaled.nrows();
                let mut values = vec![vec![Value::Indeterminate; rr]; rr];
                for a in 0..rr {
                    for b in 0..rr {
                        values[a][b] = Value::Num(scaled[(a, b)]);
                    }
                }
                return Ok(point_metric_from_values(values));
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

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on Legendre
/// polynomials.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Smallest eigenvalue of the curvature bilinear form on ℂⁿ⊗ℂʳ at p, with
/// Θ_{jk̄} = -∂_{k̄}(H^{-1}∂_j H) computed by central finite differences of
/// width `step`. Requires the metric to be smooth on a 2·step ball.
pub fn nakano_min_eigenvalue(
    h: &SingularMetric,
    p: &EvalPoint,
    step: f64,
) -> Result<f64, MetricError> {
    let n = h.dim();
    let r = h.rank();
    // connection/curvature formulas act on the column-convention Gram
    // matrix, the transpose of the stored ⟨e_i, e_j⟩ table; with the
    // stored orientation a Gram family would show spurious curvature
    let value_at = |shift: &[Complex64]| -> Result<DMatrix<Complex<f64>>, MetricError> {
        let mut q = p.clone();
        for i in 0..n {
            q.coords[i] += shift[i];
        }
        let pm = h.metric_at(&q);
        Ok(pm.to_matrix().ok_or(MetricError::Singular)?.transpose())
    };
    // M_j(z) = H^{-1} ∂_j H with ∂_j = (∂_x - i∂_y)/2, central differences
    let m_at = |shift: &[Complex64], j: usize| -> Result<DMatrix<Complex<f64>>, MetricError> {
        let mut sx = shift.to_vec();
        sx[j] += Complex64::new(step, 0.0);
        let hpx = value_at(&sx)?;
        sx[j] -= Complex64::new(2.0 * step, 0.0);
        let hmx = value_at(&sx)?;
        let mut sy = shift.to_vec();
        sy[j] += Complex64::new(0.0, step);
        let hpy = value_at(&sy)?;
        sy[j] -= Complex64::new(0.0, 2.0 * step);
        let hmy = value_at(&sy)?;
        let dx = (hpx - hmx) / Complex::new(2.0 * step, 0.0);
        let dy = (hpy - hmy) / Complex::new(2.0 * step, 0.0);
        let dj = (dx - dy * Complex::new(0.0, 1.0)) * Complex::new(0.5, 0.0);
        let h0 = value_at(shift)?;
        let hinv = h0.try_inverse().ok_or(MetricError::Singular)?;
        Ok(hinv * dj)
    };
    // Θ_{jk̄} = -∂_{k̄} M_j with ∂_{k̄} = (∂_x + i∂_y)/2
    let mut theta = vec![vec![DMatrix::<Complex<f64>>::zeros(r, r); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut s = vec![Complex64::new(0.0, 0.0); n];
            s[k] = Complex64::new(step, 0.0);
            let mpx = m_at(&s, j)?;
            s[k] = Complex64::new(-step, 0.0);
            let mmx = m_at(&s, j)?;
            s[k] = Complex64::new(0.0, step);
            let mpy = m_at(&s, j)?;
            s[k] = Complex64::new(0.0, -step);
            let mmy = m_at(&s, j)?;
            let dx = (mpx - mmx) / Complex::new(2.0 * step, 0.0);
            let dy = (mpy - mmy) / Complex::new(2.0 * step, 0.0);
            theta[j][k] = (dx + dy * Complex::new(0.0, 1.0)) * Complex::new(-0.5, 0.0);
        }
    }
    // Nakano quadratic form on ℂⁿ⊗ℂʳ, lowered with the metric:
    // Q(u) = Σ_{jk} u_k† H Θ_{jk̄} u_j, normalized against the h-induced
    // inner product so a flat Gaussian weight scores exactly 1.
    let h0 = value_at(&vec![Complex64::new(0.0, 0.0); n])?;
    let nn = n * r;
    let mut amat = DMatrix::<Complex<f64>>::zeros(nn, nn);
    let mut bmat = DMatrix::<Complex<f64>>::zeros(nn, nn);
    for j in 0..n {
        for k in 0..n {
            let block = &h0 * &theta[j][k];
            for mu in 0..r {
                for lam in 0..r {
                    amat[(k * r + mu, j * r + lam)] = block[(mu, lam)];
                }
            }
        }
        for mu in 0..r {
            for lam in 0..r {
                bmat[(j * r + mu, j * r + lam)] = h0[(mu, lam)];
            }
        }
    }
    let a_herm = (&amat + amat.adjoint()) * Complex::new(0.5, 0.0);
    let b_herm = (&bmat + bmat.adjoint()) * Complex::new(0.5, 0.0);
    let chol = nalgebra::Cholesky::new(b_herm).ok_or(MetricError::Singular)?;
    let l = chol.l();
    let x = l
        .clone()
        .solve_lower_triangular(&a_herm)
        .ok_or(MetricError::Singular)?;
    let y = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or(MetricError::Singular)?;
    let m = y.adjoint();
    Ok(min_eig_hermitian(&m))
}
