//! Coherent Point Drift: EM registration of a template point set (GMM centroids) to a
//! target point set, in affine and non-rigid (motion-coherent) variants.
//!
//! The template moves; the target stays fixed. Drivers normalise each cloud to zero mean
//! and unit RMS radius, run EM in that frame and map results back into the target frame.
//! `estep`, `mstep_affine` and `mstep_nonrigid` work in whatever frame they are given.

use std::cell::RefCell;
use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{bbox_diagonal, Correspondences, Point};

const DIM: f64 = 3.0;
/// Responsibility mass below which a template point is treated as unobserved.
const MIN_MASS: f64 = 1e-100;
/// σ² below this fraction of the squared target bbox diagonal stops EM as degenerate.
const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CpdConfig {
    /// Uniform outlier weight `w ∈ [0, 1)`.
    pub outlier_weight: f64,
    /// Motion-coherence kernel width (non-rigid only), in normalised units.
    pub beta: f64,
    /// Motion regularisation weight (non-rigid only).
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the relative objective change drops below this.
    pub tol: f64,
    /// Membership bias `γ ≥ 1` applied to prior pairs.
    pub prior_strength: f64,
}

impl CpdConfig {
    pub fn affine() -> Self {
        Self {
            outlier_weight: 0.1,
            beta: 2.0,
            lambda: 3.0,
            max_iter: 200,
            tol: 1e-8,
            prior_strength: 10.0,
        }
    }

    pub fn nonrigid() -> Self {
        Self {
            max_iter: 300,
            ..Self::affine()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.outlier_weight) {
            return Err(Error::argument(format!(
                "outlier weight must lie in [0, 1), got {}",
                self.outlier_weight
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::argument(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::argument(format!("CPD lambda must be positive, got {}", self.lambda)));
        }
        if self.max_iter == 0 {
            return Err(Error::argument("CPD max_iter must be at least 1"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::argument(format!("CPD tol must be non-negative, got {}", self.tol)));
        }
        if !(self.prior_strength >= 1.0 && self.prior_strength.is_finite()) {
            return Err(Error::argument(format!(
                "prior strength must be at least 1, got {}",
                self.prior_strength
            )));
        }
        Ok(())
    }
}

/// One EM cycle as recorded in the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdIteration {
    pub iter: usize,
    /// Variance used by this cycle's E-step.
    pub sigma2: f64,
    /// Objective at the start of the cycle (negative log-likelihood up to a constant,
    /// plus the motion penalty for the non-rigid variant).
    pub objective: f64,
    /// Template points whose most responsible target point changed since the previous cycle.
    pub corr_changed: usize,
}

pub fn format_cpd_log(log: &[CpdIteration]) -> String {
    let mut out = String::from("iter,sigma2,objective,corr_changed\n");
    for r in log {
        let _ = writeln!(out, "{},{:.12e},{:.12e},{}", r.iter, r.sigma2, r.objective, r.corr_changed);
    }
    out
}

/// Posterior memberships of one E-step.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    /// `M × N`; column `n` holds the template memberships of target point `n`.
    pub p: DMatrix<f64>,
    /// Outlier mass per target point.
    pub outlier: Vec<f64>,
    /// `N·D/2·ln σ² − Σ_n ln(Σ_m π_mn exp(−‖x_n − t_m‖²/2σ²) + c)`.
    pub objective: f64,
}

impl Responsibilities {
    /// `P 1`: mass received by each template point.
    pub fn p1(&self) -> Vec<f64> {
        self.p.row_iter().map(|r| r.sum()).collect()
    }

    /// `Pᵀ 1`: inlier mass of each target point.
    pub fn pt1(&self) -> Vec<f64> {
        self.p.column_iter().map(|c| c.sum()).collect()
    }

    /// `P X`.
    pub fn px(&self, target: &[Point]) -> Vec<Point> {
        let mut out = vec![Point::zeros(); self.p.nrows()];
        for (n, col) in self.p.column_iter().enumerate() {
            let x = target[n];
            for (m, &v) in col.iter().enumerate() {
                out[m] += v * x;
            }
        }
        out
    }

    /// Most responsible target point per template point; ties go to the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        let m = self.p.nrows();
        let mut best = vec![(f64::NEG_INFINITY, 0usize); m];
        for (n, col) in self.p.column_iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                if v > best[i].0 {
                    best[i] = (v, n);
                }
            }
        }
        best.into_iter().map(|b| b.1).collect()
    }
}

/// Per target point, the template indices carrying a prior.
fn prior_lists(priors: &Correspondences, m: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    priors.validate(m, n)?;
    let mut lists = vec![Vec::new(); n];
    for c in priors.pairs() {
        lists[c.dst].push(c.src);
    }
    Ok(lists)
}

/// E-step with optional prior pairs biased by `gamma`.
///
/// Mixing weights are `γ` on prior pairs and 1 elsewhere, rescaled per target point to sum
/// to `M`. With `gamma == 1` priors are ignored altogether.
pub fn estep(
    template: &[Point],
    target: &[Point],
    sigma2: f64,
    w: f64,
    priors: Option<&Correspondences>,
    gamma: f64,
) -> Result<Responsibilities> {
    let (m, n) = (template.len(), target.len());
    if m == 0 || n == 0 {
        return Err(Error::argument("E-step needs non-empty point sets"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::argument(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(0.0..1.0).contains(&w) {
        return Err(Error::argument(format!("outlier weight must lie in [0, 1), got {w}")));
    }
    let lists = match priors {
        Some(p) if gamma != 1.0 => Some(prior_lists(p, m, n)?),
        _ => None,
    };
    let ln_c = if w > 0.0 {
        (DIM / 2.0) * (2.0 * std::f64::consts::PI * sigma2).ln() + (w / (1.0 - w)).ln() + (m as f64 / n as f64).ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln_gamma = gamma.ln();
    let inv = 1.0 / (2.0 * sigma2);

    let mut p = DMatrix::zeros(m, n);
    let mut lse = vec![0.0; n];
    let mut outlier = vec![0.0; n];
    p.as_mut_slice()
        .par_chunks_mut(m)
        .zip(lse.par_iter_mut())
        .zip(outlier.par_iter_mut())
        .enumerate()
        .for_each(|(j, ((col, lse_j), out_j))| {
            let x = target[j];
            let mut ln_scale = 0.0;
            if let Some(l) = &lists {
                let k = l[j].len() as f64;
                ln_scale = -((m as f64 - k + gamma * k) / m as f64).ln();
            }
            for (i, v) in col.iter_mut().enumerate() {
                *v = -(x - template[i]).norm_squared() * inv + ln_scale;
            }
            if let Some(l) = &lists {
                for &i in &l[j] {
                    col[i] += ln_gamma;
                }
            }
            let top = col.iter().copied().fold(ln_c, f64::max);
            let mut s = (ln_c - top).exp();
            for v in col.iter() {
                s += (v - top).exp();
            }
            let total = top + s.ln();
            for v in col.iter_mut() {
                *v = (*v - total).exp();
            }
            *lse_j = total;
            *out_j = (ln_c - total).exp();
        });
    let objective = n as f64 * DIM / 2.0 * sigma2.ln() - lse.iter().sum::<f64>();
    Ok(Responsibilities { p, outlier, objective })
}

fn check_mass(r: &Responsibilities) -> Result<f64> {
    let np: f64 = r.p.sum();
    if !(np > 0.0) {
        return Err(Error::Solver("no responsibility mass on any template point".into()));
    }
    Ok(np)
}

/// Affine update `t_m = B y_m + t` with the matching variance.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineStep {
    pub b: Matrix3<f64>,
    pub t: Vector3<f64>,
    pub sigma2: f64,
}

impl AffineStep {
    pub fn apply(&self, p: &Point) -> Point {
        self.b * p + self.t
    }
}

pub fn mstep_affine(template: &[Point], target: &[Point], r: &Responsibilities) -> Result<AffineStep> {
    let np = check_mass(r)?;
    let p1 = r.p1();
    let pt1 = r.pt1();
    let px = r.px(target);
    let mu_x = target.iter().zip(&pt1).map(|(x, w)| *w * x).sum::<Point>() / np;
    let mu_y = template.iter().zip(&p1).map(|(y, w)| *w * y).sum::<Point>() / np;

    // A = X̂ᵀ Pᵀ Ŷ, Yd = Ŷᵀ d(P1) Ŷ
    let mut a = Matrix3::zeros();
    let mut yd = Matrix3::zeros();
    for i in 0..template.len() {
        let yh = template[i] - mu_y;
        a += (px[i] - p1[i] * mu_x) * yh.transpose();
        yd += p1[i] * yh * yh.transpose();
    }
    let ev = yd.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if !(hi > 0.0) || lo <= 1e-12 * hi {
        return Err(Error::RankDeficient(
            "weighted template covariance is singular; the affine map is undetermined".into(),
        ));
    }
    let b = a * yd.try_inverse().expect("positive definite by the eigenvalue check");
    let t = mu_x - b * mu_y;
    let xx: f64 = target
        .iter()
        .zip(&pt1)
        .map(|(x, w)| w * (x - mu_x).norm_squared())
        .sum();
    let sigma2 = ((xx - (a * b.transpose()).trace()) / (np * DIM)).abs();
    Ok(AffineStep { b, t, sigma2 })
}

/// `G_ij = exp(−‖y_i − y_j‖² / 2β²)`.
pub fn gaussian_kernel(points: &[Point], beta: f64) -> DMatrix<f64> {
    let inv = 1.0 / (2.0 * beta * beta);
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = (-(points[i] - points[j]).norm_squared() * inv).exp();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[derive(Debug, Clone)]
pub struct NonrigidStep {
    /// `M × 3` coefficients; the moved template is `Y + G W`.
    pub w: DMatrix<f64>,
    pub deformed: Vec<Point>,
    pub sigma2: f64,
    /// Ridge added to the system diagonal when the plain factorisation failed.
    pub ridge: Option<f64>,
}

/// Solves `(G + λσ² d(P1)⁻¹) W = d(P1)⁻¹ P X − Y` and updates σ².
pub fn mstep_nonrigid(
    template: &[Point],
    target: &[Point],
    r: &Responsibilities,
    g: &DMatrix<f64>,
    lambda: f64,
    sigma2: f64,
) -> Result<NonrigidStep> {
    let m = template.len();
    if g.nrows() != m || g.ncols() != m {
        return Err(Error::argument(format!("G is {}x{}, expected {m}x{m}", g.nrows(), g.ncols())));
    }
    let np = check_mass(r)?;
    let p1 = r.p1();
    let pt1 = r.pt1();
    let px = r.px(target);

    let mut a = g.clone();
    let mut rhs = DMatrix::zeros(m, 3);
    for i in 0..m {
        let mass = p1[i].max(MIN_MASS);
        a[(i, i)] += lambda * sigma2 / mass;
        let mean = if p1[i] > MIN_MASS { px[i] / p1[i] } else { template[i] };
        for c in 0..3 {
            rhs[(i, c)] = mean[c] - template[i][c];
        }
    }
    let (w, ridge) = match a.clone().cholesky() {
        Some(ch) => (ch.solve(&rhs), None),
        None => {
            let ridge = 1e-9 * a.trace() / m as f64;
            for i in 0..m {
                a[(i, i)] += ridge;
            }
            let ch = a.cholesky().ok_or_else(|| {
                Error::Solver("non-rigid CPD system is not positive definite even with a ridge".into())
            })?;
            (ch.solve(&rhs), Some(ridge))
        }
    };
    let gw = g * &w;
    let deformed: Vec<Point> = (0..m)
        .map(|i| template[i] + Point::new(gw[(i, 0)], gw[(i, 1)], gw[(i, 2)]))
        .collect();
    let xx: f64 = target.iter().zip(&pt1).map(|(x, w)| w * x.norm_squared()).sum();
    let cross: f64 = px.iter().zip(&deformed).map(|(a, b)| a.dot(b)).sum();
    let tt: f64 = deformed.iter().zip(&p1).map(|(t, w)| w * t.norm_squared()).sum();
    let sigma2 = ((xx - 2.0 * cross + tt) / (np * DIM)).max(0.0);
    Ok(NonrigidStep {
        w,
        deformed,
        sigma2,
        ridge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Normalization {
    mean: Point,
    scale: f64,
}

fn normalize(points: &[Point], which: &str) -> Result<(Vec<Point>, Normalization)> {
    let mean = points.iter().sum::<Point>() / points.len() as f64;
    let scale = (points.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / points.len() as f64).sqrt();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::RankDeficient(format!("{which} points all coincide")));
    }
    Ok((points.iter().map(|p| (p - mean) / scale).collect(), Normalization { mean, scale }))
}

fn check_inputs(template: &[Point], target: &[Point], cfg: &CpdConfig) -> Result<()> {
    cfg.validate()?;
    if template.len() < 4 || target.len() < 4 {
        return Err(Error::argument(format!(
            "CPD needs at least 4 points per set, got {} and {}",
            template.len(),
            target.len()
        )));
    }
    if template.iter().chain(target).any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::argument("CPD input contains non-finite coordinates"));
    }
    Ok(())
}

fn initial_sigma2(template: &[Point], target: &[Point]) -> f64 {
    let (m, n) = (template.len() as f64, target.len() as f64);
    let sx: Point = target.iter().sum();
    let sy: Point = template.iter().sum();
    let xx: f64 = target.iter().map(|p| p.norm_squared()).sum();
    let yy: f64 = template.iter().map(|p| p.norm_squared()).sum();
    (m * xx + n * yy - 2.0 * sx.dot(&sy)) / (DIM * m * n)
}

/// How an EM run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// σ² collapsed; the returned state is the last one computed.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct AffineResult {
    /// Maps template coordinates to target coordinates: `t_m = B y_m + t`.
    pub b: Matrix3<f64>,
    pub t: Vector3<f64>,
    /// Final variance in target units².
    pub sigma2: f64,
    pub deformed: Vec<Point>,
    pub log: Vec<CpdIteration>,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct NonrigidResult {
    /// Coefficients scaled to target units; `G` is evaluated on the normalised template.
    pub w: DMatrix<f64>,
    pub sigma2: f64,
    pub deformed: Vec<Point>,
    pub log: Vec<CpdIteration>,
    pub termination: Termination,
    /// Largest ridge added to the non-rigid system, if any.
    pub ridge: Option<f64>,
}

/// Shared EM loop; `mstep` returns the new template positions and σ².
fn run_em(
    y: &[Point],
    x: &[Point],
    cfg: &CpdConfig,
    priors: Option<&Correspondences>,
    mut penalty: impl FnMut() -> f64,
    mut mstep: impl FnMut(&Responsibilities, f64) -> Result<(Vec<Point>, f64)>,
) -> Result<(Vec<Point>, f64, Vec<CpdIteration>, Termination)> {
    let floor = SIGMA2_FLOOR * bbox_diagonal(x).powi(2);
    let gamma = if priors.is_some() { cfg.prior_strength } else { 1.0 };
    let mut t = y.to_vec();
    let mut sigma2 = initial_sigma2(y, x);
    let mut log = Vec::new();
    let mut prev: Option<(f64, Vec<usize>)> = None;
    let mut termination = Termination::MaxIterations;
    if !(sigma2 > floor) {
        return Ok((t, sigma2, log, Termination::Degenerate));
    }
    for iter in 1..=cfg.max_iter {
        let r = estep(&t, x, sigma2, cfg.outlier_weight, priors, gamma)?;
        let objective = r.objective + penalty();
        let arg = r.argmax();
        let corr_changed = match &prev {
            Some((_, a)) => a.iter().zip(&arg).filter(|(a, b)| a != b).count(),
            None => arg.len(),
        };
        log.push(CpdIteration {
            iter,
            sigma2,
            objective,
            corr_changed,
        });
        if let Some((last, _)) = &prev {
            if ((last - objective) / objective).abs() < cfg.tol {
                termination = Termination::Converged;
                break;
            }
        }
        prev = Some((objective, arg));
        let (next, s2) = mstep(&r, sigma2)?;
        t = next;
        sigma2 = s2;
        if !(sigma2 > floor) {
            termination = Termination::Degenerate;
            break;
        }
    }
    Ok((t, sigma2, log, termination))
}

pub fn cpd_affine(template: &[Point], target: &[Point], cfg: &CpdConfig) -> Result<AffineResult> {
    check_inputs(template, target, cfg)?;
    let (x, nx) = normalize(target, "target")?;
    let (y, ny) = normalize(template, "template")?;
    let mut step = AffineStep {
        b: Matrix3::identity(),
        t: Vector3::zeros(),
        sigma2: 0.0,
    };
    let (t, sigma2, log, termination) = run_em(&y, &x, cfg, None, || 0.0, |r, _| {
        step = mstep_affine(&y, &x, r)?;
        Ok((y.iter().map(|p| step.apply(p)).collect(), step.sigma2))
    })?;
    let b = step.b * (nx.scale / ny.scale);
    let tr = nx.scale * step.t + nx.mean - b * ny.mean;
    Ok(AffineResult {
        b,
        t: tr,
        sigma2: sigma2 * nx.scale * nx.scale,
        deformed: t.iter().map(|p| nx.scale * p + nx.mean).collect(),
        log,
        termination,
    })
}

/// Non-rigid CPD; `priors` pair template indices with target indices.
pub fn cpd_nonrigid(
    template: &[Point],
    target: &[Point],
    cfg: &CpdConfig,
    priors: Option<&Correspondences>,
) -> Result<NonrigidResult> {
    check_inputs(template, target, cfg)?;
    if let Some(p) = priors {
        p.validate(template.len(), target.len())?;
    }
    let (x, nx) = normalize(target, "target")?;
    let (y, _) = normalize(template, "template")?;
    let g = gaussian_kernel(&y, cfg.beta);
    let w = RefCell::new(DMatrix::zeros(y.len(), 3));
    let mut ridge: Option<f64> = None;
    let (t, sigma2, log, termination) = run_em(
        &y,
        &x,
        cfg,
        priors,
        || {
            let w = w.borrow();
            cfg.lambda / 2.0 * (w.transpose() * &g * &*w).trace()
        },
        |r, s2| {
            let step = mstep_nonrigid(&y, &x, r, &g, cfg.lambda, s2)?;
            if let Some(v) = step.ridge {
                ridge = Some(ridge.map_or(v, |old| old.max(v)));
            }
            *w.borrow_mut() = step.w;
            Ok((step.deformed, step.sigma2))
        },
    )?;
    Ok(NonrigidResult {
        w: w.into_inner() * nx.scale,
        sigma2: sigma2 * nx.scale * nx.scale,
        deformed: t.iter().map(|p| nx.scale * p + nx.mean).collect(),
        log,
        termination,
        ridge,
    })
}
