//! Adaptive quadrature over polydiscs with singular integrands.
//!
//! Each complex factor of the polydisc is integrated in polar coordinates
//! (ρ_i, θ_i), so the domain is an axis-aligned box and a declared singular
//! point at the polydisc center sits on the ρ = 0 face, where the initial
//! mesh is refined dyadically. Cells are scored with a tensor Gauss-Legendre
//! 5/3 pair and split along their widest scaled axis until the error budget
//! or the cell budget is exhausted.
//!
//! Determinism: cells carry creation-order ids, each refinement wave is
//! selected by comparisons on already-computed numbers with id tie-breaks,
//! and the final reduction is a Kahan sum in id order. Worker count changes
//! how fast the result arrives, never its bits.

use crate::domain::Polydisc;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const GL5_X: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_W: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];
const GL3_X: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
const GL3_W: [f64; 3] = [0.5555555555555556, 0.8888888888888888, 0.5555555555555556];

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadStatus {
    Converged,
    MaxCellsReached,
    DivergenceSuspected,
}

/// Quadrature value with an error bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub cells_used: usize,
    pub status: QuadStatus,
}

impl IntegralEstimate {
    pub fn is_converged(&self) -> bool {
        self.status == QuadStatus::Converged
    }
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integral diverges or failed to converge: {0}")]
    Diverges(String),
    #[error("sampled precondition violation at z = {witness:?}: {message}")]
    Precondition {
        witness: Vec<Complex64>,
        message: String,
    },
}

/// Engine configuration. `singular_points` are caller-declared poles of the
/// integrand; the engine never tries to detect poles on its own.
#[derive(Debug, Clone)]
pub struct QuadConfig {
    pub tol: f64,
    pub max_cells: usize,
    pub singular_points: Vec<Vec<Complex64>>,
    /// Initial dyadic refinement depth toward a singular center.
    pub dyadic_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: 1e-6,
            max_cells: 2_000_000,
            singular_points: Vec::new(),
            dyadic_depth: 48,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadConfig {
            tol,
            ..Default::default()
        }
    }

    pub fn with_singular_points(mut self, pts: Vec<Vec<Complex64>>) -> Self {
        self.singular_points = pts;
        self
    }
}

/// One box in (ρ, θ) coordinates, axes ordered [ρ1, θ1, ρ2, θ2, ...].
#[derive(Debug, Clone)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    err: f64,
    straddle: bool,
    /// axes along which the level indicator flips inside the cell
    sep_mask: u16,
    id: u64,
}

struct RuleOut {
    integral: f64,
    abs_integral: f64,
    inside: bool,
    outside: bool,
    nonfinite: usize,
    sep_mask: u16,
}

struct Mesh<'a> {
    region: &'a Polydisc,
    f: &'a (dyn Fn(&[Complex64]) -> f64 + Sync),
    level: Option<(&'a (dyn Fn(&[Complex64]) -> f64 + Sync), f64)>,
    min_widths: Vec<f64>,
}

impl<'a> Mesh<'a> {
    fn new(
        region: &'a Polydisc,
        f: &'a (dyn Fn(&[Complex64]) -> f64 + Sync),
        level: Option<(&'a (dyn Fn(&[Complex64]) -> f64 + Sync), f64)>,
    ) -> Self {
        let min_widths = (0..2 * region.dim())
            .map(|i| {
                let total = if i % 2 == 0 {
                    region.radii[i / 2]
                } else {
                    TWO_PI
                };
                total * 2.0f64.powi(-60)
            })
            .collect();
        Mesh {
            region,
            f,
            level,
            min_widths,
        }
    }

    /// Tensor Gauss-Legendre rule over the cell, order 5 or 3.
    fn rule(&self, lo: &[f64], hi: &[f64], five: bool) -> RuleOut {
        let d = lo.len();
        let (xs, ws): (&[f64], &[f64]) = if five {
            (&GL5_X, &GL5_W)
        } else {
            (&GL3_X, &GL3_W)
        };
        let k = xs.len();
        let mut idx = vec![0usize; d];
        let mut out = RuleOut {
            integral: 0.0,
            abs_integral: 0.0,
            inside: false,
            outside: false,
            nonfinite: 0,
            sep_mask: 0,
        };
        // node indicators, linear index in base k, for the separation mask
        let track_sep = self.level.is_some();
        let mut inds: Vec<u8> = if track_sep {
            vec![0; k.pow(d as u32)]
        } else {
            Vec::new()
        };
        let mut coords = vec![0.0f64; d];
        let mut z = Vec::with_capacity(self.region.dim());
        let half: Vec<f64> = (0..d).map(|i| 0.5 * (hi[i] - lo[i])).collect();
        let mid: Vec<f64> = (0..d).map(|i| 0.5 * (hi[i] + lo[i])).collect();
        let scale: f64 = half.iter().product();
        let mut lin = 0usize;
        loop {
            let mut w = 1.0;
            for i in 0..d {
                coords[i] = mid[i] + half[i] * xs[idx[i]];
                w *= ws[idx[i]];
            }
            z.clear();
            let mut jac = 1.0;
            for i in 0..self.region.dim() {
                let rho = coords[2 * i];
                jac *= rho;
                z.push(self.region.center[i] + Complex64::from_polar(rho, coords[2 * i + 1]));
            }
            let ind = match self.level {
                None => {
                    out.inside = true;
                    true
                }
                Some((phi, t)) => {
                    // φ = -∞ lies inside every sublevel set
                    if phi(&z) < -t {
                        out.inside = true;
                        true
                    } else {
                        out.outside = true;
                        false
                    }
                }
            };
            if track_sep {
                inds[lin] = ind as u8;
            }
            if ind {
                let fv = (self.f)(&z) * jac;
                if fv.is_finite() {
                    out.integral += w * fv;
                    out.abs_integral += w * fv.abs();
                } else {
                    out.nonfinite += 1;
                }
            }
            // odometer over the tensor grid
            let mut i = 0;
            loop {
                if i == d {
                    out.integral *= scale;
                    out.abs_integral *= scale;
                    if track_sep && out.inside && out.outside {
                        // which axes separate inside from outside?
                        let mut stride = 1usize;
                        for axis in 0..d {
                            'scan: for lin in 0..inds.len() {
                                let digit = (lin / stride) % k;
                                if digit + 1 < k && inds[lin] != inds[lin + stride] {
                                    out.sep_mask |= 1 << axis;
                                    break 'scan;
                                }
                            }
                            stride *= k;
                        }
                    }
                    return out;
                }
                idx[i] += 1;
                if idx[i] < k {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            lin += 1;
        }
    }

    fn eval_cell(&self, lo: Vec<f64>, hi: Vec<f64>, id: u64) -> Cell {
        let r5 = self.rule(&lo, &hi, true);
        let r3 = self.rule(&lo, &hi, false);
        let straddle = (r5.inside && r5.outside) || (r3.inside && r3.outside);
        let mut err = (r5.integral - r3.integral).abs();
        if straddle {
            // the level boundary could move the entire |f| mass of the cell
            err = err.max(r5.abs_integral.max(r3.abs_integral));
        }
        if r5.nonfinite + r3.nonfinite > 0 {
            err = err.max(r5.abs_integral.max(1.0));
        }
        Cell {
            lo,
            hi,
            value: r5.integral,
            err,
            straddle,
            sep_mask: r5.sep_mask | r3.sep_mask,
            id,
        }
    }

    fn widest_axis<I: Iterator<Item = usize>>(&self, cell: &Cell, axes: I) -> Option<usize> {
        axes.filter(|&i| cell.hi[i] - cell.lo[i] > self.min_widths[i])
            .max_by(|&a, &b| {
                let wa = (cell.hi[a] - cell.lo[a]) / self.min_widths[a];
                let wb = (cell.hi[b] - cell.lo[b]) / self.min_widths[b];
                wa.partial_cmp(&wb).unwrap().then(b.cmp(&a))
            })
    }

    fn splittable_axis(&self, cell: &Cell) -> Option<usize> {
        let d = cell.lo.len();
        // straddle cells split where the level indicator actually flips,
        // otherwise refinement never localizes the boundary
        if cell.straddle && cell.sep_mask != 0 {
            if let Some(ax) =
                self.widest_axis(cell, (0..d).filter(|i| cell.sep_mask & (1 << i) != 0))
            {
                return Some(ax);
            }
        }
        // singular descent next: a ρ interval touching 0 is the pole side
        for i in (0..d).step_by(2) {
            if cell.lo[i] == 0.0 && cell.hi[i] - cell.lo[i] > self.min_widths[i] {
                return Some(i);
            }
        }
        self.widest_axis(cell, 0..d)
    }
}

fn kahan_sum_by_id(cells: &[Cell]) -> f64 {
    let mut pairs: Vec<(u64, f64)> = cells.iter().map(|c| (c.id, c.value)).collect();
    pairs.sort_unstable_by_key(|(id, _)| *id);
    let mut s = 0.0f64;
    let mut comp = 0.0f64;
    for (_, v) in pairs {
        let y = v - comp;
        let t = s + y;
        comp = (t - s) - y;
        s = t;
    }
    s
}

fn singular_center(region: &Polydisc, cfg: &QuadConfig) -> bool {
    cfg.singular_points.iter().any(|p| {
        p.len() == region.dim()
            && p.iter()
                .zip(&region.center)
                .zip(&region.radii)
                .all(|((s, c), r)| (s - c).norm() <= 1e-12 * r)
    })
}

/// Seed cells: tensor product of per-axis partitions, with dyadic ρ splits
/// toward a singular center.
fn seed_cells(region: &Polydisc, dyadic: bool, depth: u32) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = region.dim();
    let mut axis_parts: Vec<Vec<(f64, f64)>> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let r = region.radii[i];
        let mut rho = Vec::new();
        if dyadic && depth > 0 {
            let mut hi = r * 0.5f64.powi(depth as i32);
            rho.push((0.0, hi));
            for _ in 0..depth {
                let lo = hi;
                hi = (hi * 2.0).min(r);
                rho.push((lo, hi));
            }
            rho.last_mut().unwrap().1 = r;
        } else {
            rho.push((0.0, r));
        }
        axis_parts.push(rho);
        axis_parts.push(vec![(0.0, TWO_PI)]);
    }
    let mut cells: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
    for parts in &axis_parts {
        let mut next = Vec::with_capacity(cells.len() * parts.len());
        for (lo, hi) in &cells {
            for (a, b) in parts {
                let mut l = lo.clone();
                let mut h = hi.clone();
                l.push(*a);
                h.push(*b);
                next.push((l, h));
            }
        }
        cells = next;
    }
    cells
}

/// Bin cell values into dyadic shells of the first ρ axis; report whether
/// the deepest populated shells stopped decaying.
fn shells_not_decaying(region: &Polydisc, cells: &[Cell], floor: f64) -> bool {
    let r = region.radii[0];
    let mut shells = vec![0.0f64; 64];
    for c in cells {
        if c.hi[0] <= 0.0 {
            continue;
        }
        let level = -(c.hi[0] / r).log2();
        let k = level.floor().clamp(0.0, 63.0) as usize;
        shells[k] += c.value;
    }
    let active: Vec<f64> = shells
        .into_iter()
        .filter(|s| s.abs() > floor)
        .collect();
    if active.len() < 8 {
        return false;
    }
    let tail = &active[active.len() - 6..];
    let mut nondecay = 0;
    for w in tail.windows(2) {
        if w[1].abs() >= 0.85 * w[0].abs() {
            nondecay += 1;
        }
    }
    nondecay >= 4
}

fn run(
    f: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    level: Option<(&(dyn Fn(&[Complex64]) -> f64 + Sync), f64)>,
    region: &Polydisc,
    cfg: &QuadConfig,
) -> IntegralEstimate {
    let mesh = Mesh::new(region, f, level);
    let dyadic = singular_center(region, cfg);
    let seeds = seed_cells(region, dyadic, cfg.dyadic_depth);
    let mut cells: Vec<Cell> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(k, (lo, hi))| mesh.eval_cell(lo, hi, k as u64))
        .collect();
    let mut next_id = cells.len() as u64;
    let mut status = QuadStatus::Converged;

    loop {
        let straddle_amb: f64 = cells.iter().filter(|c| c.straddle).map(|c| c.err).sum();
        let tot_err: f64 = cells.iter().map(|c| c.err).sum();
        let regular_err = tot_err - straddle_amb;
        if regular_err <= 0.9 * cfg.tol && straddle_amb <= cfg.tol / 10.0 {
            break;
        }
        if cells.len() >= cfg.max_cells {
            status = QuadStatus::MaxCellsReached;
            break;
        }
        // early divergence bail-out: deep shells around a declared pole
        // that stopped decaying will never pass the error budget
        if dyadic
            && cells.len() >= 4096
            && tot_err > cfg.tol
            && shells_not_decaying(region, &cells, cfg.tol / 100.0)
        {
            status = QuadStatus::DivergenceSuspected;
            break;
        }

        let live = cells.len() as f64;
        let cutoff = cfg.tol / (2.0 * live);
        let mut split_jobs: Vec<(usize, usize)> = (0..cells.len())
            .filter_map(|i| {
                if cells[i].err > cutoff {
                    mesh.splittable_axis(&cells[i]).map(|ax| (i, ax))
                } else {
                    None
                }
            })
            .collect();
        if split_jobs.is_empty() {
            let worst = (0..cells.len())
                .filter_map(|i| mesh.splittable_axis(&cells[i]).map(|ax| (i, ax)))
                .max_by(|&(a, _), &(b, _)| {
                    cells[a]
                        .err
                        .partial_cmp(&cells[b].err)
                        .unwrap()
                        .then(cells[b].id.cmp(&cells[a].id))
                });
            match worst {
                Some(j) if cells[j.0].err > 0.0 => split_jobs.push(j),
                _ => {
                    if tot_err > cfg.tol {
                        status = QuadStatus::MaxCellsReached;
                    }
                    break;
                }
            }
        }
        if split_jobs.len() + cells.len() > cfg.max_cells {
            split_jobs.sort_by(|&(a, _), &(b, _)| {
                cells[b]
                    .err
                    .partial_cmp(&cells[a].err)
                    .unwrap()
                    .then(cells[a].id.cmp(&cells[b].id))
            });
            split_jobs.truncate(cfg.max_cells.saturating_sub(cells.len()).max(1));
        }

        let jobs: Vec<(usize, usize, u64)> = split_jobs
            .iter()
            .enumerate()
            .map(|(k, &(i, ax))| (i, ax, next_id + 2 * k as u64))
            .collect();
        next_id += 2 * jobs.len() as u64;
        let children: Vec<(usize, Cell, Cell)> = jobs
            .par_iter()
            .map(|&(i, axis, base_id)| {
                let cell = &cells[i];
                let mid = 0.5 * (cell.lo[axis] + cell.hi[axis]);
                let mut hi1 = cell.hi.clone();
                hi1[axis] = mid;
                let mut lo2 = cell.lo.clone();
                lo2[axis] = mid;
                (
                    i,
                    mesh.eval_cell(cell.lo.clone(), hi1, base_id),
                    mesh.eval_cell(lo2, cell.hi.clone(), base_id + 1),
                )
            })
            .collect();
        for (i, c1, c2) in children {
            cells[i] = c1;
            cells.push(c2);
        }
    }

    let value = kahan_sum_by_id(&cells);
    let abs_error: f64 = cells.iter().map(|c| c.err).sum();
    if !value.is_finite() || value.abs() > 1e15 {
        status = QuadStatus::DivergenceSuspected;
    } else if status == QuadStatus::MaxCellsReached
        && dyadic
        && shells_not_decaying(region, &cells, cfg.tol / 100.0)
    {
        status = QuadStatus::DivergenceSuspected;
    }

    IntegralEstimate {
        value,
        abs_error,
        cells_used: cells.len(),
        status,
    }
}

/// ∫_region f over the polydisc. `f` is a pointwise function on ℂⁿ; poles
/// must be declared in the config.
pub fn integrate(
    f: impl Fn(&[Complex64]) -> f64 + Sync,
    region: &Polydisc,
    cfg: &QuadConfig,
) -> IntegralEstimate {
    run(&f, None, region, cfg)
}

/// ∫_{region ∩ {φ < -t}} f. Cells straddling the level set are refined until
/// their ambiguity contributes less than tol/10.
pub fn integrate_sublevel(
    f: impl Fn(&[Complex64]) -> f64 + Sync,
    phi: impl Fn(&[Complex64]) -> f64 + Sync,
    t: f64,
    region: &Polydisc,
    cfg: &QuadConfig,
) -> IntegralEstimate {
    run(&f, Some((&phi, t)), region, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrability {
    Converges,
    Diverges,
    Indeterminate,
}

/// Dyadic annulus diagnostics for local integrability at a point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrabilityVerdict {
    pub verdict: Integrability,
    /// (level j, I_j) with I_j over {2^{-j-1}ρ0 ≤ |z-center| ≤ 2^{-j}ρ0}
    pub annulus_integrals: Vec<(u32, f64)>,
    /// fitted slope of log2 I_j against j
    pub decay_slope: f64,
}

impl IntegrabilityVerdict {
    /// Membership decision used by exponent searches: a clear `Converges`,
    /// or an `Indeterminate` whose fitted slope is negative beyond the noise
    /// floor. Borderline-flat ladders count as non-integrable, biasing
    /// exponent estimates conservatively downward.
    pub fn is_integrable(&self) -> bool {
        match self.verdict {
            Integrability::Converges => true,
            Integrability::Diverges => false,
            Integrability::Indeterminate => self.decay_slope < -1e-3,
        }
    }
}

/// Local integrability of f ≥ 0 at `center` from the decay of dyadic
/// annulus integrals: Converges if the fitted log2-slope is below -0.05,
/// Diverges above +0.05 or when partial sums exceed 10⁶·I_0, else
/// Indeterminate.
pub fn integrability_at(
    f: impl Fn(&[Complex64]) -> f64 + Sync,
    center: &[Complex64],
    rho0: f64,
    levels: u32,
    tol_rel: f64,
) -> IntegrabilityVerdict {
    assert!(levels >= 8, "need at least 8 annulus levels");
    let mut integrals: Vec<(u32, f64)> = Vec::with_capacity(levels as usize);
    let mut running = 0.0f64;
    let mut diverged_by_sum = false;
    for j in 0..levels {
        let outer = rho0 * 0.5f64.powi(j as i32);
        let inner = 0.5 * outer;
        let ij = annulus_integral(&f, center, inner, outer, tol_rel);
        running += ij;
        integrals.push((j, ij));
        if integrals[0].1 > 0.0 && running > 1e6 * integrals[0].1 {
            diverged_by_sum = true;
            break;
        }
    }
    let usable: Vec<(f64, f64)> = integrals
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(j, v)| (*j as f64, v.log2()))
        .collect();
    // fit on the deeper half of the ladder where lower-order terms are gone
    let keep = (usable.len() / 2).max(usable.len().min(4));
    let pts = &usable[usable.len() - keep..];
    let slope = fit_slope(pts);
    let verdict = if diverged_by_sum || slope > 0.05 {
        Integrability::Diverges
    } else if slope < -0.05 {
        Integrability::Converges
    } else {
        Integrability::Indeterminate
    };
    IntegrabilityVerdict {
        verdict,
        annulus_integrals: integrals,
        decay_slope: slope,
    }
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// ∫ f over the Euclidean annulus {inner ≤ |z−center| ≤ outer}.
pub fn annulus_integral(
    f: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    center: &[Complex64],
    inner: f64,
    outer: f64,
    tol_rel: f64,
) -> f64 {
    let n = center.len();
    // absolute tolerance from a few magnitude probes on the mid sphere
    let mid = 0.5 * (inner + outer);
    let mut probe: f64 = 0.0;
    for i in 0..n {
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let mut z = center.to_vec();
            z[i] += dir * mid;
            probe = probe.max(f(&z).abs());
        }
    }
    let shell_vol = (0..n).map(|_| std::f64::consts::PI * outer * outer).product::<f64>();
    let tol = (probe * shell_vol * tol_rel).max(1e-280);
    let cfg = QuadConfig {
        tol,
        max_cells: 100_000,
        singular_points: vec![],
        dyadic_depth: 0,
    };
    let region = Polydisc::new(center.to_vec(), vec![outer; n]);
    if n == 1 {
        // exact in polar coordinates: one seed cell [inner, outer] × [0, 2π]
        let mesh = Mesh::new(&region, f, None);
        return run_seeded(
            &mesh,
            vec![(vec![inner, 0.0], vec![outer, TWO_PI])],
            &cfg,
        );
    }
    // n ≥ 2: indicator of the shell via a two-sided level function
    let phi_shell = move |z: &[Complex64]| -> f64 {
        let r: f64 = z
            .iter()
            .zip(center)
            .map(|(zi, ci)| (zi - ci).norm_sqr())
            .sum::<f64>()
            .sqrt();
        (inner - r).max(r - outer)
    };
    integrate_sublevel(f, phi_shell, 0.0, &region, &cfg).value
}

/// Minimal adaptive loop over explicit seed cells (no divergence checks).
fn run_seeded(mesh: &Mesh, seeds: Vec<(Vec<f64>, Vec<f64>)>, cfg: &QuadConfig) -> f64 {
    let mut cells: Vec<Cell> = seeds
        .into_iter()
        .enumerate()
        .map(|(k, (lo, hi))| mesh.eval_cell(lo, hi, k as u64))
        .collect();
    let mut next_id = cells.len() as u64;
    loop {
        let tot_err: f64 = cells.iter().map(|c| c.err).sum();
        if tot_err <= cfg.tol || cells.len() >= cfg.max_cells {
            break;
        }
        let cutoff = cfg.tol / (2.0 * cells.len() as f64);
        let split_jobs: Vec<(usize, usize)> = (0..cells.len())
            .filter_map(|i| {
                if cells[i].err > cutoff {
                    mesh.splittable_axis(&cells[i]).map(|ax| (i, ax))
                } else {
                    None
                }
            })
            .collect();
        if split_jobs.is_empty() {
            break;
        }
        let jobs: Vec<(usize, usize, u64)> = split_jobs
            .iter()
            .enumerate()
            .map(|(k, &(i, ax))| (i, ax, next_id + 2 * k as u64))
            .collect();
        next_id += 2 * jobs.len() as u64;
        let children: Vec<(usize, Cell, Cell)> = jobs
            .par_iter()
            .map(|&(i, axis, base_id)| {
                let cell = &cells[i];
                let midp = 0.5 * (cell.lo[axis] + cell.hi[axis]);
                let mut hi1 = cell.hi.clone();
                hi1[axis] = midp;
                let mut lo2 = cell.lo.clone();
                lo2[axis] = midp;
                (
                    i,
                    mesh.eval_cell(cell.lo.clone(), hi1, base_id),
                    mesh.eval_cell(lo2, cell.hi.clone(), base_id + 1),
                )
            })
            .collect();
        for (i, c1, c2) in children {
            cells[i] = c1;
            cells.push(c2);
        }
    }
    kahan_sum_by_id(&cells)
}

/// |LHS − RHS| of the layer-cake identity
/// ∫ f e^{−φ} = ∫ f + ∫_0^∞ (∫_{φ<−t} f) e^t dt, valid when φ < 0 on the
/// region.
pub fn fubini_tail_residual(
    f: impl Fn(&[Complex64]) -> f64 + Sync,
    phi: impl Fn(&[Complex64]) -> f64 + Sync,
    region: &Polydisc,
    cfg: &QuadConfig,
) -> Result<f64, QuadError> {
    let lhs = integrate(|z| f(z) * (-phi(z)).exp(), region, cfg);
    if !lhs.is_converged() {
        return Err(QuadError::Diverges(
            "left-hand side ∫ f e^{-φ} did not converge".into(),
        ));
    }
    let base = integrate(&f, region, cfg);
    if !base.is_converged() {
        return Err(QuadError::Diverges("∫ f did not converge".into()));
    }
    let sub_cfg = QuadConfig {
        tol: cfg.tol / 20.0,
        ..cfg.clone()
    };
    let s = |t: f64| -> f64 { integrate_sublevel(&f, &phi, t, region, &sub_cfg).value };
    let cut = cfg.tol * (-5.0f64).exp();
    let mut t_end = 1.0;
    while s(t_end) * t_end.exp() > cut && t_end < 700.0 {
        t_end *= 2.0;
    }
    let tail = adaptive_simpson_1d(&|t: f64| s(t) * t.exp(), 0.0, t_end, cfg.tol / 2.0, 16);
    let rhs = base.value + tail;
    Ok((lhs.value - rhs).abs())
}

/// Plain adaptive Simpson on a closed interval.
pub fn adaptive_simpson_1d(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[cfg(test)]
mod tests;
