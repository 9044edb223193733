use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{pcbc_or_nan, spectral_norm_diff, IterationRecord, MapKind, Mapping, RectDomain};
use crate::beltrami::{ComplexField, SOLVER_CLAMP};
use crate::cloud::DEFAULT_K_PLANAR;
use crate::error::{Error, Result};
use crate::mls::WeightKind;
use crate::qc::{
    assemble_hybrid, assemble_m1, assemble_m3, solve_constrained, Domain, Factorization, Gamma, M3Scheme, SparseOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeichOptions {
    pub gamma: Gamma,
    /// Stop once the step norm falls below this.
    pub eps: f64,
    pub max_iter: usize,
    pub k: usize,
    pub smoothing: Smoothing,
    /// History length of the Anderson mixing of iterates; 0 runs the plain
    /// fixed-point iteration.
    pub anderson: usize,
    pub scheme: M3Scheme,
    pub weight: WeightKind,
}

impl Default for TeichOptions {
    fn default() -> Self {
        Self {
            gamma: Gamma::Finite(0.5),
            eps: 1e-6,
            max_iter: 200,
            k: DEFAULT_K_PLANAR,
            smoothing: Smoothing::default(),
            anderson: 0,
            scheme: M3Scheme::Combined,
            weight: WeightKind::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// A solve failed or produced non-finite values.
    Diverged,
}

/// Checks that the final map is a discrete Teichmüller map: near-constant
/// `|mu|`, `(L mu) conj(mu)` nearly real, and `sigma` close to `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PctCertificate {
    pub mean_abs: f64,
    /// `sd(|mu|) / mean(|mu|)`.
    pub cv: f64,
    /// Fraction of interior points passing the realness test.
    pub real_fraction: f64,
    /// `sup |sigma - mu|`.
    pub sigma_gap: f64,
    pub constant_norm: bool,
    pub real_laplacian: bool,
    pub consistent: bool,
}

impl PctCertificate {
    pub const CV_MAX: f64 = 0.15;
    pub const CV_MIN_MEAN: f64 = 0.05;
    pub const REAL_TOL: f64 = 0.1;
    pub const REAL_FRACTION: f64 = 0.9;
    pub const GAP_MAX: f64 = 0.05;

    pub fn passed(&self) -> bool {
        self.constant_norm && self.real_laplacian && self.consistent
    }
}

#[derive(Debug, Clone)]
pub struct TeichResult {
    /// Final (or best) iterate, with per-iteration diagnostics.
    pub mapping: Mapping,
    /// Diffuse PCBC of `mapping`.
    pub mu: ComplexField,
    /// Last coefficient handed to the solver.
    pub sigma: ComplexField,
    pub status: Status,
    pub iterations: usize,
    pub certificate: PctCertificate,
    /// Mean `|mu|` over points with `|mu| < 1`.
    pub k: f64,
    pub failure: Option<String>,
}

/// Mean, variance and count of `|z|` over finite values with `|z| < 1`.
fn feasible_stats(mu: &ComplexField) -> (f64, f64, usize) {
    let a: Vec<f64> = mu.values().iter().map(|z| z.norm()).filter(|r| *r < 1.0).collect();
    if a.is_empty() {
        return (f64::NAN, f64::NAN, 0);
    }
    let n = a.len() as f64;
    let m = a.iter().sum::<f64>() / n;
    let v = a.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
    (m, v, a.len())
}

fn apply_complex(l: &SparseOperator, z: &[Complex64]) -> Vec<Complex64> {
    (0..l.nrows())
        .map(|r| {
            let (cols, vals) = l.row(r);
            cols.iter().zip(vals).map(|(&c, &v)| z[c] * v).sum()
        })
        .collect()
}

/// How the argument field is smoothed each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// `tau = normalize((I + t D^-1 L) nu)`: one weighted neighbor average.
    /// Its reach shrinks with the spacing, so it converges slowly on dense
    /// clouds.
    Explicit { t: f64 },
    /// `tau = normalize((D - t L)^-1 D nu)` with `t = length^2 N / area`,
    /// which keeps the diffusion length near `length` (in rectangle units)
    /// at any resolution.
    Implicit { length: f64 },
}

/// Diffusion length of the default smoothing.
pub const SMOOTHING_LENGTH: f64 = 0.28;

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Implicit {
            length: SMOOTHING_LENGTH,
        }
    }
}

fn unit_argument(mu: &ComplexField) -> Vec<Complex64> {
    mu.values()
        .iter()
        .map(|z| {
            let r = z.norm();
            if r > 0.0 && r.is_finite() {
                z / r
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect()
}

fn normalized_or(s: Vec<Complex64>, nu: &[Complex64]) -> Vec<Complex64> {
    s.into_iter()
        .zip(nu)
        .map(|(s, n)| {
            let r = s.norm();
            if r > 0.0 && r.is_finite() {
                s / r
            } else {
                *n
            }
        })
        .collect()
}

/// Smoothing step built on `L = M3(0)` with `D = |diag L|`.
struct Smoother<'a> {
    l: &'a SparseOperator,
    d: Vec<f64>,
    t: f64,
    implicit: Option<Factorization>,
}

impl<'a> Smoother<'a> {
    fn new(l: &'a SparseOperator, mode: Smoothing, area: f64) -> Result<Self> {
        let t = match mode {
            Smoothing::Explicit { t } => t,
            Smoothing::Implicit { length } => length * length * l.nrows() as f64 / area,
        };
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothing step t = {t}")));
        }
        let d: Vec<f64> = (0..l.nrows()).map(|i| l.get(i, i).abs()).collect();
        let implicit = match mode {
            Smoothing::Explicit { .. } => None,
            Smoothing::Implicit { .. } => {
                let diag = SparseOperator::from_triplets(
                    d.len(),
                    d.len(),
                    d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
                )?;
                Some(Factorization::new(&diag.add_scaled(l, -t)?)?)
            }
        };
        Ok(Self { l, d, t, implicit })
    }

    fn direction(&self, mu: &ComplexField) -> Result<Vec<Complex64>> {
        let nu = unit_argument(mu);
        let s: Vec<Complex64> = match &self.implicit {
            None => {
                let lnu = apply_complex(self.l, &nu);
                nu.iter()
                    .zip(lnu)
                    .zip(&self.d)
                    .map(|((n, ln), &d)| if d > 0.0 { n + ln * (self.t / d) } else { *n })
                    .collect()
            }
            Some(f) => {
                let re = nu.iter().zip(&self.d).map(|(z, d)| z.re * d).collect();
                let im = nu.iter().zip(&self.d).map(|(z, d)| z.im * d).collect();
                let x = f.solve_many(&[re, im])?;
                x[0].iter().zip(&x[1]).map(|(&a, &b)| Complex64::new(a, b)).collect()
            }
        };
        Ok(normalized_or(s, &nu))
    }
}

/// Anderson mixing for the fixed-point map `x -> g(x)`, over the last
/// `depth` differences.
struct Anderson {
    depth: usize,
    xs: VecDeque<Vec<f64>>,
    gs: VecDeque<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self {
            depth,
            xs: VecDeque::new(),
            gs: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        self.xs.clear();
        self.gs.clear();
    }

    fn next(&mut self, x: Vec<f64>, g: Vec<f64>) -> Vec<f64> {
        if self.depth == 0 {
            return g;
        }
        self.xs.push_back(x);
        self.gs.push_back(g);
        if self.xs.len() > self.depth + 1 {
            self.xs.pop_front();
            self.gs.pop_front();
        }
        let m = self.xs.len() - 1;
        if m == 0 {
            return self.gs[m].clone();
        }
        let r: Vec<Vec<f64>> = self.xs.iter().zip(&self.gs).map(|(x, g)| g.iter().zip(x).map(|(a, b)| a - b).collect()).collect();
        let dr: Vec<Vec<f64>> = (0..m).map(|j| r[j + 1].iter().zip(&r[j]).map(|(a, b)| a - b).collect()).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut a = DMatrix::from_fn(m, m, |i, j| dot(&dr[i], &dr[j]));
        let b = DVector::from_fn(m, |i, _| dot(&dr[i], &r[m]));
        let ridge = 1e-10 * a.trace().max(f64::MIN_POSITIVE);
        for i in 0..m {
            a[(i, i)] += ridge;
        }
        let Some(c) = a.cholesky().map(|c| c.solve(&b)) else {
            let g = self.gs[m].clone();
            self.reset();
            return g;
        };
        let mut out = self.gs[m].clone();
        for j in 0..m {
            let (g1, g0) = (&self.gs[j + 1], &self.gs[j]);
            for (o, (p, q)) in out.iter_mut().zip(g1.iter().zip(g0)) {
                *o -= c[j] * (p - q);
            }
        }
        out
    }
}

/// Certificate of a final map. `l` is the unweighted generalized Laplacian
/// `M3(0)`. The realness and consistency tests run over the points flagged
/// in `free` (those neither on the boundary nor pinned as landmarks).
pub fn pct_certificate(mu: &ComplexField, sigma: &ComplexField, l: &SparseOperator, free: &[bool]) -> PctCertificate {
    let (mean, var, _) = feasible_stats(mu);
    let cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
    let lmu = apply_complex(l, mu.values());
    let mut total = 0usize;
    let mut real = 0usize;
    for (i, &inner) in free.iter().enumerate() {
        if !inner {
            continue;
        }
        total += 1;
        let z = mu.values()[i];
        let prod = lmu[i] * z.conj();
        if !prod.is_finite() {
            continue;
        }
        // L mu vanishing up to round-off is trivially real.
        let flat = lmu[i].norm() <= 1e-6 * l.row_l1(i) * z.norm();
        let den = lmu[i].norm() * z.norm();
        if flat || !(den > 0.0) || prod.im.abs() / den <= PctCertificate::REAL_TOL {
            real += 1;
        }
    }
    let real_fraction = if total > 0 { real as f64 / total as f64 } else { 1.0 };
    let sigma_gap = mu
        .values()
        .iter()
        .zip(sigma.values())
        .zip(free)
        .filter(|((m, _), &f)| f && m.norm() < 1.0)
        .map(|((m, s), _)| (m - s).norm())
        .fold(0.0, f64::max);
    PctCertificate {
        mean_abs: mean,
        cv,
        real_fraction,
        sigma_gap,
        constant_norm: mean.is_finite() && (mean < PctCertificate::CV_MIN_MEAN || cv <= PctCertificate::CV_MAX),
        real_laplacian: real_fraction >= PctCertificate::REAL_FRACTION,
        consistent: sigma_gap <= PctCertificate::GAP_MAX,
    }
}

/// Affine map of `src` onto `dst` (both of unit width).
fn affine(src: RectDomain, dst: RectDomain, p: [f64; 2]) -> [f64; 2] {
    [p[0], p[1] * dst.height / src.height]
}

/// Landmark-matching Teichmüller map of a planar cloud filling `src` onto
/// `dst`. Boundary points follow the affine map between the rectangles;
/// `landmarks` pin point indices to targets in `dst` and take precedence.
pub fn teichmuller_parameterize(
    points: &[[f64; 2]],
    boundary: &[usize],
    src: RectDomain,
    dst: RectDomain,
    landmarks: &[(usize, [f64; 2])],
    opts: &TeichOptions,
) -> Result<TeichResult> {
    let n = points.len();
    if boundary.len() < 3 {
        return Err(Error::MissingBoundary);
    }
    if !(opts.eps > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(format!(
            "eps = {} and max_iter = {} must be positive",
            opts.eps, opts.max_iter
        )));
    }
    for &(i, t) in landmarks {
        if i >= n {
            return Err(Error::InvalidArgument(format!("landmark index {i} of {n} points")));
        }
        if !dst.contains(t, 1e-12) || !t[0].is_finite() || !t[1].is_finite() {
            return Err(Error::InfeasibleLandmark { index: i, target: t });
        }
    }
    let domain = Domain::planar(points, boundary.to_vec(), opts.k, opts.weight)?;
    let zero = ComplexField::constant(n, Complex64::new(0.0, 0.0));
    let lap = assemble_m3(&domain, &zero, opts.scheme)?;
    let mut free: Vec<bool> = (0..n).map(|i| !domain.is_boundary(i)).collect();
    for &(i, _) in landmarks {
        free[i] = false;
    }
    let smoother = Smoother::new(&lap, opts.smoothing, src.height)?;

    let mut fixed: Vec<Option<[f64; 2]>> = vec![None; n];
    for &b in boundary {
        fixed[b] = Some(affine(src, dst, points[b]));
    }
    for &(i, t) in landmarks {
        fixed[i] = Some(t);
    }
    let constraints: Vec<(usize, f64)> = fixed
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.map(|p| [(i, p[0]), (i + n, p[1])]))
        .flatten()
        .collect();

    let mut f: Vec<[f64; 2]> = points.iter().map(|p| affine(src, dst, *p)).collect();
    let mut records = Vec::new();
    let mut status = Status::MaxIterations;
    let mut failure = None;
    let mut sigma = zero.clone();
    // (variance, iterate, its mu, sigma used to reach it)
    let mut best: Option<(f64, Vec<[f64; 2]>, ComplexField, ComplexField)> = None;
    let mut mu = pcbc_or_nan(domain.stencils(), &f);
    let mut mixer = Anderson::new(opts.anderson);
    // Last plain solver output, to fall back on when a mixed iterate fails.
    let mut plain: Option<Vec<[f64; 2]>> = None;
    let mut min_step = f64::INFINITY;
    let flat = |f: &[[f64; 2]]| -> Vec<f64> { f.iter().map(|p| p[0]).chain(f.iter().map(|p| p[1])).collect() };

    for it in 0..opts.max_iter {
        let (k, var, count) = feasible_stats(&mu);
        let solved = if count == 0 {
            Err(Error::InvalidArgument("no point with |mu| < 1".into()))
        } else {
            let tau = smoother.direction(&mu)?;
            sigma = ComplexField(tau.into_iter().map(|t| t * k).collect()).clamped(SOLVER_CLAMP).0;
            assemble_m1(&domain, &sigma)
                .and_then(|m1| Ok((m1, assemble_m3(&domain, &sigma, opts.scheme)?)))
                .and_then(|(m1, m3)| assemble_hybrid(&m1, &m3, opts.gamma))
                .and_then(|h| solve_constrained(&h, &vec![0.0; 2 * n], &constraints))
                .and_then(|s| {
                    if s.x.iter().all(|v| v.is_finite()) {
                        Ok(s)
                    } else {
                        Err(Error::InvalidArgument("non-finite solution".into()))
                    }
                })
        };
        let sol = match solved {
            Ok(s) => s,
            Err(e) => {
                if let Some(g) = plain.take() {
                    // The mixed iterate was bad; restart from the plain one.
                    log::debug!("iteration {it}: {e}; restarting mixing");
                    mixer.reset();
                    f = g;
                    mu = pcbc_or_nan(domain.stencils(), &f);
                    continue;
                }
                status = Status::Diverged;
                failure = Some(format!("iteration {it}: {e}"));
                break;
            }
        };
        if it > 0 && best.as_ref().is_none_or(|b| var < b.0) {
            best = Some((var, f.clone(), mu.clone(), sigma.clone()));
        }
        let next: Vec<[f64; 2]> = (0..n).map(|i| [sol.x[i], sol.x[i + n]]).collect();
        let step = spectral_norm_diff(&next, &f);
        records.push(IterationRecord {
            iteration: it,
            k,
            mean_abs: mu.mean_abs(),
            var_abs: var,
            excluded: n - count,
            step_norm: step,
            solve_method: sol.method,
            residual: sol.residual,
        });
        log::debug!("iteration {it}: k = {k:.6}, var = {var:.3e}, step = {step:.3e}");
        if !step.is_finite() {
            status = Status::Diverged;
            failure = Some(format!("non-finite step at iteration {it}"));
            break;
        }
        if step < opts.eps {
            f = next;
            mu = pcbc_or_nan(domain.stencils(), &f);
            status = Status::Converged;
            break;
        }
        if step > 10.0 * min_step {
            mixer.reset();
        }
        min_step = min_step.min(step);
        let mixed = mixer.next(flat(&f), flat(&next));
        let mut g: Vec<[f64; 2]> = (0..n).map(|i| [mixed[i], mixed[i + n]]).collect();
        for (i, c) in fixed.iter().enumerate() {
            if let Some(c) = c {
                g[i] = *c;
            }
        }
        if g.iter().all(|p| p[0].is_finite() && p[1].is_finite()) {
            plain = Some(next);
            f = g;
        } else {
            mixer.reset();
            plain = None;
            f = next;
        }
        mu = pcbc_or_nan(domain.stencils(), &f);
    }

    if status != Status::Converged {
        let (_, var, count) = feasible_stats(&mu);
        let last_ok = count > 0 && f.iter().all(|p| p[0].is_finite() && p[1].is_finite());
        if let Some(b) = best.filter(|b| !last_ok || b.0 < var) {
            f = b.1;
            mu = b.2;
            sigma = b.3;
        }
        log::warn!("Teichmüller iteration stopped: {status:?}");
    }
    let certificate = pct_certificate(&mu, &sigma, &lap, &free);
    let (k, _, _) = feasible_stats(&mu);
    let mut mapping = Mapping::new(f, MapKind::Teichmuller);
    mapping.diagnostics = records;
    Ok(TeichResult {
        iterations: mapping.diagnostics.len(),
        mapping,
        mu,
        sigma,
        status,
        certificate,
        k,
        failure,
    })
}
