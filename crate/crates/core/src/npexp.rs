//! Non-parametric exponential families.
//!
//! The sufficient statistics `t(x)` of a parametric family are augmented with
//! one kernel feature per observation, `t_a^i(x) = K_H(x^i; x)`. Parameters
//! `θ = (λ, λ_a)` maximize the penalized log-likelihood
//!
//! ```text
//! l(θ) = ⟨θ, (1/n) Σ_i s(x^i)⟩ - ln Z(θ) - Σ_i β_i |λ_a^i|,   s = (t, t_a)
//! ```
//!
//! which is the dual of matching `E[t]` exactly while keeping each augmented
//! mean within `β_i` of its empirical value. The fitter is cyclic coordinate
//! ascent: each global coordinate is solved exactly (moment matching) and each
//! augmented coordinate is set by the three-way KKT rule.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::expfam::{global_step, ExpFamModel, StatisticSet};
use crate::kde::{cross_validate, empirical_augmented_means, CvResult};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::math::{ln, sqrt};
use crate::quadrature::{Grid, Support};
use crate::sample::SampleSet;
use crate::solve1d::{solve_moment, SolveError, Tilted};
use crate::{Error, Result};

/// Augmented parameters are searched in `[-AUGMENTED_LIMIT, AUGMENTED_LIMIT]`.
pub const AUGMENTED_LIMIT: f64 = 50.0;

/// Magnitude below which an augmented parameter counts as zero.
pub const NONZERO_THRESHOLD: f64 = 1e-10;

/// Default `c` for every schedule.
pub const DEFAULT_BETA_SCALE: f64 = 0.02;

/// Default bandwidth candidates `{0.25, 0.5, ..., 3.0}`.
pub fn default_bandwidth_grid() -> Vec<f64> {
    (1..=12).map(|i| 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `β = c / √n`
    InvSqrt,
    /// `β = c / ln n`
    InvLog,
    /// `β = c`
    Constant,
}

/// Rule mapping a sample size to the box half-width `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub kind: ScheduleKind,
    pub scale: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::inv_sqrt(DEFAULT_BETA_SCALE)
    }
}

impl BetaSchedule {
    pub fn inv_sqrt(scale: f64) -> Self {
        BetaSchedule { kind: ScheduleKind::InvSqrt, scale }
    }

    pub fn inv_log(scale: f64) -> Self {
        BetaSchedule { kind: ScheduleKind::InvLog, scale }
    }

    pub fn constant(scale: f64) -> Self {
        BetaSchedule { kind: ScheduleKind::Constant, scale }
    }

    /// `β(n)`. The logarithmic schedule is infinite for `n < 2`.
    pub fn beta(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.kind {
            ScheduleKind::InvSqrt => self.scale / sqrt(n),
            ScheduleKind::InvLog if n < 2.0 => f64::INFINITY,
            ScheduleKind::InvLog => self.scale / ln(n),
            ScheduleKind::Constant => self.scale,
        }
    }
}

/// Fitted augmented model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpExpModel {
    /// Parametric part; `base.log_z` is the partition function of the base
    /// family alone.
    pub base: ExpFamModel,
    pub centers: SampleSet,
    pub kernel: KernelSpec,
    pub lambda_a: Vec<f64>,
    pub beta: Vec<f64>,
    /// Moment targets replacing the empirical means, if supplied.
    pub target_moments: Option<Vec<f64>>,
    /// `ln Z(λ, λ_a)` of the augmented model.
    pub log_z: f64,
}

impl NpExpModel {
    /// Model at given parameters; both partition functions are computed by
    /// quadrature.
    pub fn new(
        stats: StatisticSet,
        support: Support,
        centers: SampleSet,
        kernel: KernelSpec,
        lambda: Vec<f64>,
        lambda_a: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        kernel.validate()?;
        if lambda_a.len() != centers.len() {
            return Err(Error::DimensionMismatch { expected: centers.len(), got: lambda_a.len() });
        }
        if beta.len() != centers.len() {
            return Err(Error::DimensionMismatch { expected: centers.len(), got: beta.len() });
        }
        if centers.dim() != support.dim() || kernel.dim != support.dim() {
            return Err(Error::DimensionMismatch { expected: support.dim(), got: centers.dim() });
        }
        if let Some(v) = lambda_a.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(alloc::format!("augmented parameter {v}")));
        }
        let base = ExpFamModel::new(stats, support, lambda)?;
        let mut model = NpExpModel { base, centers, kernel, lambda_a, beta, target_moments: None, log_z: 0.0 };
        model.log_z = Workspace::from_model(&model, &model.centers)?.tilt.log_z;
        Ok(model)
    }

    /// Gradient of the smooth part `⟨θ, s̄⟩ - ln Z(θ)` at the model's
    /// parameters, with `s̄` the means of `(t, t_a)` over `sample`:
    /// `(t̄ - E[t], t̄_a - E[t_a])`.
    pub fn smooth_gradient(&self, sample: &SampleSet) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut m = self.clone();
        m.target_moments = None;
        let ws = Workspace::from_model(&m, sample)?;
        let g = ws.stat_cols.iter().zip(&ws.target).map(|(c, t)| t - ws.tilt.expect(c)).collect();
        let ga = ws.kern_cols.iter().zip(&ws.emp_aug).map(|(c, e)| e - ws.tilt.expect(c)).collect();
        Ok((g, ga))
    }

    /// Number of augmented parameters with `|λ_a^i| > 1e-10`.
    pub fn nonzero_count(&self) -> usize {
        self.lambda_a.iter().filter(|a| a.abs() > NONZERO_THRESHOLD).count()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let mut e = self.base.energy(x);
        for (c, a) in self.centers.points().zip(&self.lambda_a) {
            if *a != 0.0 {
                e += a * self.kernel.eval_unchecked(c, x);
            }
        }
        e
    }

    /// `⟨λ, t(x)⟩ + ⟨λ_a, t_a(x)⟩ - ln Z`, `-inf` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.base.support.dim() {
            return Err(Error::DimensionMismatch { expected: self.base.support.dim(), got: x.len() });
        }
        if !self.base.support.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.energy(x) - self.log_z)
    }

    /// Mean log-density over `sample`.
    pub fn mean_log_density(&self, sample: &SampleSet) -> Result<f64> {
        let mut s = 0.0;
        for x in sample.points() {
            s += self.log_density(x)?;
        }
        Ok(s / sample.len() as f64)
    }

    /// Quadrature of the density over the support.
    pub fn total_mass(&self) -> Result<f64> {
        let grid = self.base.support.grid();
        let terms: Vec<f64> =
            grid.iter_nodes().zip(&grid.log_weights).map(|(x, w)| w + self.energy(x) - self.log_z).collect();
        Ok(crate::math::exp(crate::log_sum_exp(&terms)))
    }

    /// Expected global and augmented statistics under the model.
    pub fn expected_statistics(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let ws = Workspace::from_model(self, &self.centers)?;
        Ok((
            ws.stat_cols.iter().map(|c| ws.tilt.expect(c)).collect(),
            ws.kern_cols.iter().map(|c| ws.tilt.expect(c)).collect(),
        ))
    }
}

/// Free-function form of [`NpExpModel::nonzero_count`].
pub fn nonzero_count(model: &NpExpModel) -> usize {
    model.nonzero_count()
}

/// Stopping rule for the coordinate-ascent fitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpExpOptions {
    /// Bound on both the moment residual and the KKT residual.
    pub tol: f64,
    pub max_outer: usize,
}

impl Default for NpExpOptions {
    fn default() -> Self {
        NpExpOptions { tol: 1e-6, max_outer: 500 }
    }
}

impl NpExpOptions {
    pub fn with_tol(tol: f64) -> Self {
        NpExpOptions { tol, ..Default::default() }
    }
}

/// Convergence record of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Completed outer iterations.
    pub iterations: usize,
    /// Training objective at the start of every outer iteration and at exit.
    pub objective: Vec<f64>,
    pub moment_residual: f64,
    pub kkt_residual: f64,
}

/// Everything the fitter needs besides the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NpExpProblem {
    pub stats: StatisticSet,
    pub support: Support,
    pub kernel: KernelSpec,
    pub schedule: BetaSchedule,
    pub target_moments: Option<Vec<f64>>,
}

impl NpExpProblem {
    pub fn new(stats: StatisticSet, support: Support, kernel: KernelSpec, schedule: BetaSchedule) -> Self {
        NpExpProblem { stats, support, kernel, schedule, target_moments: None }
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target_moments = Some(target);
        self
    }

    pub fn fit(&self, sample: &SampleSet, opts: NpExpOptions) -> Result<(NpExpModel, FitReport)> {
        let beta = alloc::vec![self.schedule.beta(sample.len()); sample.len()];
        fit_with_beta(sample, self, beta, opts)
    }
}

/// Fits with per-observation penalties `beta` (length `n`).
pub fn fit_with_beta(
    sample: &SampleSet,
    problem: &NpExpProblem,
    beta: Vec<f64>,
    opts: NpExpOptions,
) -> Result<(NpExpModel, FitReport)> {
    let mut ws = Workspace::new(sample, problem, beta)?;
    if problem.target_moments.is_none() {
        problem.stats.check_moment_curve(sample)?;
    }
    let mut objective = Vec::new();
    let mut iterations = 0;
    loop {
        let (mres, kres) = ws.residuals();
        objective.push(ws.objective());
        if mres.max(kres) <= opts.tol {
            let report = FitReport { iterations, objective, moment_residual: mres, kkt_residual: kres };
            return Ok((ws.into_model(problem, sample), report));
        }
        if iterations == opts.max_outer {
            return Err(Error::NotConverged { iterations, residual: mres.max(kres) });
        }
        ws.sweep(opts.tol, &problem.stats)?;
        ws.prox_newton();
        iterations += 1;
    }
}

/// Fits the augmented family with the empirical moment constraints.
pub fn fit(
    sample: &SampleSet,
    stats: &StatisticSet,
    support: &Support,
    kernel: &KernelSpec,
    schedule: BetaSchedule,
    tol: f64,
) -> Result<NpExpModel> {
    NpExpProblem::new(stats.clone(), support.clone(), *kernel, schedule)
        .fit(sample, NpExpOptions::with_tol(tol))
        .map(|(m, _)| m)
}

/// Fits with the global moments pinned to `target` instead of the empirical
/// means.
pub fn fit_with_target_moments(
    sample: &SampleSet,
    stats: &StatisticSet,
    support: &Support,
    kernel: &KernelSpec,
    schedule: BetaSchedule,
    target: &[f64],
    tol: f64,
) -> Result<NpExpModel> {
    NpExpProblem::new(stats.clone(), support.clone(), *kernel, schedule)
        .with_target(target.to_vec())
        .fit(sample, NpExpOptions::with_tol(tol))
        .map(|(m, _)| m)
}

/// Penalized log-likelihood of `sample` under `model`: sample means of the
/// global and augmented statistics, the model's partition function, and the
/// model's (training) penalty.
pub fn penalized_loglik(model: &NpExpModel, sample: &SampleSet) -> Result<f64> {
    let stats = &model.base.stats;
    let mean_t = stats.empirical_mean(sample)?;
    let mut l: f64 = mean_t.iter().zip(&model.base.lambda).map(|(m, l)| m * l).sum();
    let inv = 1.0 / sample.len() as f64;
    for ((c, a), b) in model.centers.points().zip(&model.lambda_a).zip(&model.beta) {
        if *a != 0.0 {
            let mut s = 0.0;
            for x in sample.points() {
                s += model.kernel.eval_unchecked(c, x);
            }
            l += a * s * inv - b * a.abs();
        }
    }
    Ok(l - model.log_z)
}

/// One exact update of augmented coordinate `j` (zero-based) with all other
/// coordinates held fixed; returns the new `λ_a^j`.
pub fn solve_augmented_coordinate(model: &NpExpModel, sample: &SampleSet, j: usize, tol: f64) -> Result<f64> {
    if j >= model.lambda_a.len() {
        return Err(Error::IndexOutOfRange { index: j, len: model.lambda_a.len() });
    }
    let ws = Workspace::from_model(model, sample)?;
    ws.augmented_update(j, tol)
}

/// Support used when the target density is unbounded: the sample range
/// widened by five times the largest candidate bandwidth.
pub fn default_support(sample: &SampleSet, h_max: f64, points_per_dim: usize) -> Result<Support> {
    Support::around_sample(sample, 5.0 * h_max, points_per_dim)
}

/// Bandwidth maximizing the cross-validated held-out log-likelihood of the
/// augmented model. The support is held fixed across folds. Fits that fail
/// score `-inf`.
pub fn cv_bandwidth(
    sample: &SampleSet,
    problem: &NpExpProblem,
    family: KernelFamily,
    grid: &[f64],
    folds: usize,
    opts: NpExpOptions,
) -> Result<CvResult> {
    cross_validate(sample, grid, folds, |h, train, test| {
        let mut p = problem.clone();
        p.kernel = KernelSpec { family, h, ..problem.kernel };
        let (model, _) = p.fit(train, opts)?;
        let mut s = 0.0;
        for x in test.points() {
            s += model.log_density(x)?;
        }
        Ok(s)
    })
}

/// Cross-validates the bandwidth, then fits on the whole sample. If the
/// full-sample fit fails at the winning bandwidth, the next best finite
/// candidate is tried. Returns the model and the CV scores; `CvResult::h` is
/// the bandwidth actually used.
pub fn fit_cv(
    sample: &SampleSet,
    problem: &NpExpProblem,
    family: KernelFamily,
    grid: &[f64],
    folds: usize,
    opts: NpExpOptions,
) -> Result<(NpExpModel, CvResult)> {
    let mut cv = cv_bandwidth(sample, problem, family, grid, folds, opts)?;
    let mut order: Vec<(f64, f64)> = cv.scores.iter().copied().filter(|(_, s)| s.is_finite()).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut first_err = None;
    for (h, _) in order {
        let mut p = problem.clone();
        p.kernel = KernelSpec { family, h, ..problem.kernel };
        match p.fit(sample, opts) {
            Ok((m, _)) => {
                cv.h = h;
                return Ok((m, cv));
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(Error::DegenerateCrossValidation))
}

/// Grid state shared by the fitter and the single-coordinate solver.
struct Workspace {
    grid: Grid,
    stat_cols: Vec<Vec<f64>>,
    kern_cols: Vec<Vec<f64>>,
    tilt: Tilted,
    lambda: Vec<f64>,
    lambda_a: Vec<f64>,
    target: Vec<f64>,
    emp_aug: Vec<f64>,
    beta: Vec<f64>,
}

impl Workspace {
    fn new(sample: &SampleSet, problem: &NpExpProblem, beta: Vec<f64>) -> Result<Self> {
        problem.kernel.validate()?;
        problem.support.validate()?;
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if sample.dim() != problem.support.dim() || problem.kernel.dim != sample.dim() {
            return Err(Error::DimensionMismatch { expected: problem.support.dim(), got: sample.dim() });
        }
        if beta.len() != sample.len() {
            return Err(Error::DimensionMismatch { expected: sample.len(), got: beta.len() });
        }
        if let Some(b) = beta.iter().find(|b| !(**b >= 0.0)) {
            return Err(Error::InvalidArgument(alloc::format!("penalty must be non-negative, got {b}")));
        }
        if let Some(p) = sample.points().find(|p| !problem.support.contains(p)) {
            return Err(Error::InvalidArgument(alloc::format!("sample point {p:?} lies outside the support")));
        }
        let target = match &problem.target_moments {
            Some(t) if t.len() != problem.stats.len() => {
                return Err(Error::DimensionMismatch { expected: problem.stats.len(), got: t.len() })
            }
            Some(t) => t.clone(),
            None => problem.stats.empirical_mean(sample)?,
        };
        let grid = problem.support.grid();
        let stat_cols = problem.stats.grid_columns(&grid)?;
        let kern_cols = kernel_columns(&grid, sample, &problem.kernel);
        let emp_aug = empirical_augmented_means(sample, &problem.kernel)?;
        let tilt = Tilted::new(grid.log_weights.clone(), alloc::vec![0.0; grid.len()]);
        Ok(Workspace {
            grid,
            stat_cols,
            kern_cols,
            tilt,
            lambda: alloc::vec![0.0; problem.stats.len()],
            lambda_a: alloc::vec![0.0; sample.len()],
            target,
            emp_aug,
            beta,
        })
    }

    /// Workspace at a given model's parameters, with augmented targets taken
    /// from `sample`.
    fn from_model(model: &NpExpModel, sample: &SampleSet) -> Result<Self> {
        let problem = NpExpProblem {
            stats: model.base.stats.clone(),
            support: model.base.support.clone(),
            kernel: model.kernel,
            schedule: BetaSchedule::constant(0.0),
            target_moments: model.target_moments.clone(),
        };
        if sample.dim() != model.centers.dim() {
            return Err(Error::DimensionMismatch { expected: model.centers.dim(), got: sample.dim() });
        }
        let mut ws = Workspace::new(&model.centers, &problem, model.beta.clone())?;
        if model.target_moments.is_none() {
            ws.target = model.base.stats.empirical_mean(sample)?;
        }
        ws.emp_aug = (0..model.centers.len())
            .map(|i| {
                let c = model.centers.point(i);
                let s: f64 = sample.points().map(|x| model.kernel.eval_unchecked(c, x)).sum();
                s / sample.len() as f64
            })
            .collect();
        ws.lambda.clone_from(&model.base.lambda);
        ws.lambda_a.clone_from(&model.lambda_a);
        ws.rebuild_energy();
        Ok(ws)
    }

    fn objective(&self) -> f64 {
        self.objective_at(&self.lambda, &self.lambda_a, self.tilt.log_z)
    }

    fn objective_at(&self, lambda: &[f64], lambda_a: &[f64], log_z: f64) -> f64 {
        let mut l: f64 = lambda.iter().zip(&self.target).map(|(a, b)| a * b).sum();
        for ((a, c), b) in lambda_a.iter().zip(&self.emp_aug).zip(&self.beta) {
            if *a != 0.0 {
                l += a * c - b * a.abs();
            }
        }
        l - log_z
    }

    /// Proximal Newton step over the global coordinates and the augmented
    /// coordinates that are nonzero or violate their KKT condition. The
    /// quadratic model of the smooth part (exact covariance Hessian) plus the
    /// ℓ1 penalty is minimized by cyclic soft-thresholding; the step is then
    /// backtracked until the true objective shows sufficient increase.
    /// Returns whether a step was taken.
    fn prox_newton(&mut self) -> bool {
        let k = self.stat_cols.len();
        let mut work = Vec::new();
        let mut grad = Vec::new();
        for i in 0..self.lambda_a.len() {
            let gap = self.emp_aug[i] - self.tilt.expect(&self.kern_cols[i]);
            if self.lambda_a[i] != 0.0 || gap.abs() > self.beta[i] {
                work.push(i);
                grad.push(gap);
            }
        }
        let mut g: Vec<f64> = self.stat_cols.iter().zip(&self.target).map(|(c, t)| t - self.tilt.expect(c)).collect();
        g.extend(grad);
        let m = k + work.len();
        let col = |a: usize| if a < k { &self.stat_cols[a] } else { &self.kern_cols[work[a - k]] };
        let centered: Vec<Vec<f64>> = (0..m)
            .map(|a| {
                let c = col(a);
                let mean = self.tilt.expect(c);
                c.iter().zip(&self.tilt.prob).map(|(v, p)| (v - mean) * sqrt(*p)).collect()
            })
            .collect();
        let mut h = alloc::vec![0.0; m * m];
        for a in 0..m {
            for b in 0..=a {
                let v: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                h[a * m + b] = v;
                h[b * m + a] = v;
            }
        }
        for a in 0..m {
            h[a * m + a] = h[a * m + a] * (1.0 + 1e-9) + 1e-300;
        }
        let cur = |a: usize| if a < k { self.lambda[a] } else { self.lambda_a[work[a - k]] };
        let pen = |a: usize| if a < k { 0.0 } else { self.beta[work[a - k]] };
        // Minimize -g·d + ½ dᵀHd + Σ pen |cur + d| by coordinate descent.
        let mut d = alloc::vec![0.0; m];
        let mut hd = alloc::vec![0.0; m];
        for round in 0..500 {
            let mut biggest = 0.0f64;
            for a in 0..m {
                let haa = h[a * m + a];
                let z = cur(a) + d[a] + (g[a] - hd[a]) / haa;
                let target = soft_threshold(z, pen(a) / haa) - cur(a);
                let step = target - d[a];
                if step != 0.0 {
                    for b in 0..m {
                        hd[b] += h[b * m + a] * step;
                    }
                    d[a] = target;
                    biggest = biggest.max(step.abs() * sqrt(haa));
                }
            }
            if biggest < 1e-13 {
                break;
            }
            // Every few sweeps, move toward the exact minimizer on the current
            // support and sign pattern, stopping at the first sign change.
            if round % 5 == 4 {
                self.support_steps(&h, &g, k, &work, &mut d, &mut hd);
            }
        }
        let old = self.objective();
        let mut predicted = 0.0;
        for a in 0..m {
            predicted += g[a] * d[a] - pen(a) * ((cur(a) + d[a]).abs() - cur(a).abs());
        }
        if !(predicted > 0.0) {
            return false;
        }
        let mut t = 1.0;
        for _ in 0..30 {
            let mut lambda = self.lambda.clone();
            let mut lambda_a = self.lambda_a.clone();
            for a in 0..m {
                let v = cur(a) + t * d[a];
                if a < k {
                    lambda[a] = v;
                } else {
                    lambda_a[work[a - k]] = if v.abs() < NONZERO_THRESHOLD * 1e-3 { 0.0 } else { v };
                }
            }
            let trial = self.tilt_at(&lambda, &lambda_a);
            let new = self.objective_at(&lambda, &lambda_a, trial.log_z);
            if new > old && new - old >= 1e-4 * t * predicted {
                self.lambda = lambda;
                self.lambda_a = lambda_a;
                self.tilt = trial;
                return true;
            }
            t *= 0.5;
        }
        false
    }

    /// Active-set steps for the proximal Newton subproblem: repeatedly solve
    /// the model exactly on the coordinates that are nonzero (globals always
    /// included) with signs fixed, cutting the step where an augmented
    /// coordinate reaches zero and dropping it.
    fn support_steps(&self, h: &[f64], g: &[f64], k: usize, work: &[usize], d: &mut [f64], hd: &mut [f64]) {
        let m = g.len();
        let cur = |a: usize| if a < k { self.lambda[a] } else { self.lambda_a[work[a - k]] };
        let pen = |a: usize| if a < k { 0.0 } else { self.beta[work[a - k]] };
        for _ in 0..m {
            let support: Vec<usize> = (0..m).filter(|&a| a < k || cur(a) + d[a] != 0.0).collect();
            let ns = support.len();
            let mut hs = alloc::vec![0.0; ns * ns];
            let mut rhs = alloc::vec![0.0; ns];
            for (r, &a) in support.iter().enumerate() {
                let sign = (cur(a) + d[a]).signum();
                rhs[r] = g[a] - hd[a] - if a < k { 0.0 } else { pen(a) * sign };
                for (c, &b) in support.iter().enumerate() {
                    hs[r * ns + c] = h[a * m + b];
                }
            }
            let Some(delta) = crate::linalg::solve_psd(&hs, &rhs) else { return };
            let mut t = 1.0f64;
            let mut hit = None;
            for (&a, dd) in support.iter().zip(&delta) {
                let x = cur(a) + d[a];
                if a >= k && x * (x + dd) <= 0.0 && *dd != 0.0 {
                    let ta = -x / dd;
                    if ta < t {
                        t = ta;
                        hit = Some(a);
                    }
                }
            }
            for (&a, dd) in support.iter().zip(&delta) {
                let step = if Some(a) == hit { -(cur(a) + d[a]) } else { t * dd };
                d[a] += step;
                for b in 0..m {
                    hd[b] += h[b * m + a] * step;
                }
            }
            if hit.is_none() {
                return;
            }
        }
    }

    fn tilt_at(&self, lambda: &[f64], lambda_a: &[f64]) -> Tilted {
        let mut energy = alloc::vec![0.0; self.grid.len()];
        for (col, l) in self.stat_cols.iter().zip(lambda).chain(self.kern_cols.iter().zip(lambda_a)) {
            if *l != 0.0 {
                for (e, v) in energy.iter_mut().zip(col) {
                    *e += l * v;
                }
            }
        }
        Tilted::new(self.grid.log_weights.clone(), energy)
    }

    fn rebuild_energy(&mut self) {
        self.tilt = self.tilt_at(&self.lambda, &self.lambda_a);
    }

    /// (max moment residual, max KKT residual).
    fn residuals(&self) -> (f64, f64) {
        let m =
            self.stat_cols.iter().zip(&self.target).map(|(c, t)| (self.tilt.expect(c) - t).abs()).fold(0.0, f64::max);
        let mut k = 0.0f64;
        for i in 0..self.lambda_a.len() {
            let gap = self.emp_aug[i] - self.tilt.expect(&self.kern_cols[i]);
            k = k.max(kkt_violation(self.lambda_a[i], gap, self.beta[i]));
        }
        (m, k)
    }

    fn sweep(&mut self, tol: f64, stats: &StatisticSet) -> Result<()> {
        for j in 0..self.stat_cols.len() {
            let delta = global_step(&self.tilt, &self.stat_cols[j], self.target[j], tol, j, stats)?;
            self.lambda[j] += delta;
            self.tilt.shift(delta, &self.stat_cols[j]);
        }
        for i in 0..self.lambda_a.len() {
            let new = self.augmented_update(i, tol)?;
            let delta = new - self.lambda_a[i];
            if delta != 0.0 {
                self.lambda_a[i] = new;
                self.tilt.shift(delta, &self.kern_cols[i]);
            }
        }
        if self.lambda.iter().any(|l| l.abs() > crate::expfam::LAMBDA_DIVERGENCE) {
            return Err(Error::BoundaryStatistics("canonical parameters diverged".into()));
        }
        Ok(())
    }

    /// Three-way rule: the positive root of `E[t_a^i] = c_i - β_i` if that
    /// root is positive, the root of `E[t_a^i] = c_i + β_i` if negative, else 0.
    fn augmented_update(&self, i: usize, tol: f64) -> Result<f64> {
        let col = &self.kern_cols[i];
        let a = self.lambda_a[i];
        let c = self.emp_aug[i];
        let beta = self.beta[i];
        let at_zero = if a == 0.0 { self.tilt.expect(col) } else { self.tilt.tilted_moments(-a, col, c).0 };
        let gap0 = c - at_zero;
        let goal = if gap0 > beta {
            c - beta
        } else if gap0 < -beta {
            c + beta
        } else {
            return Ok(0.0);
        };
        let delta = solve_moment(&self.tilt, col, goal, tol / 10.0, -AUGMENTED_LIMIT - a, AUGMENTED_LIMIT - a)
            .map_err(|e| match e {
                SolveError::NonFinite => Error::NonFinite(alloc::format!("augmented coordinate {i}")),
                _ => Error::NotBracketed { lo: -AUGMENTED_LIMIT, hi: AUGMENTED_LIMIT },
            })?;
        let new = a + delta;
        // The root's sign is fixed by the branch; clamp rounding noise.
        Ok(if gap0 > beta { new.max(0.0) } else { new.min(0.0) })
    }

    fn into_model(self, problem: &NpExpProblem, sample: &SampleSet) -> NpExpModel {
        let base_log_z = {
            let e: Vec<f64> = {
                let mut e = alloc::vec![0.0; self.grid.len()];
                for (col, l) in self.stat_cols.iter().zip(&self.lambda) {
                    for (ei, v) in e.iter_mut().zip(col) {
                        *ei += l * v;
                    }
                }
                e
            };
            Tilted::new(self.grid.log_weights.clone(), e).log_z
        };
        NpExpModel {
            base: ExpFamModel {
                stats: problem.stats.clone(),
                support: problem.support.clone(),
                lambda: self.lambda,
                log_z: base_log_z,
            },
            centers: sample.clone(),
            kernel: problem.kernel,
            lambda_a: self.lambda_a,
            beta: self.beta,
            target_moments: problem.target_moments.clone(),
            log_z: self.tilt.log_z,
        }
    }
}

fn soft_threshold(z: f64, kappa: f64) -> f64 {
    if z > kappa {
        z - kappa
    } else if z < -kappa {
        z + kappa
    } else {
        0.0
    }
}

/// Distance of `(λ_a, gap)` from the three-way KKT set.
pub fn kkt_violation(lambda_a: f64, gap: f64, beta: f64) -> f64 {
    if lambda_a > 0.0 {
        (gap - beta).abs()
    } else if lambda_a < 0.0 {
        (gap + beta).abs()
    } else {
        (gap.abs() - beta).max(0.0)
    }
}

fn kernel_columns(grid: &Grid, centers: &SampleSet, kernel: &KernelSpec) -> Vec<Vec<f64>> {
    centers.points().map(|c| grid.iter_nodes().map(|x| kernel.eval_unchecked(c, x)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::{fit_mle, FitOptions};

    fn gauss_problem(sample: &SampleSet, h: f64, schedule: BetaSchedule) -> NpExpProblem {
        NpExpProblem::new(
            StatisticSet::gaussian(1),
            default_support(sample, h, 2001).unwrap(),
            KernelSpec::gaussian(h),
            schedule,
        )
    }

    #[test]
    fn schedules() {
        assert!((BetaSchedule::inv_sqrt(1.0).beta(100) - 0.1).abs() < 1e-15);
        assert!((BetaSchedule::inv_log(2.0).beta(100) - 2.0 / ln(100.0)).abs() < 1e-15);
        assert_eq!(BetaSchedule::constant(0.3).beta(7), 0.3);
        assert_eq!(BetaSchedule::inv_log(1.0).beta(1), f64::INFINITY);
        for s in [BetaSchedule::inv_sqrt(1.0), BetaSchedule::inv_log(1.0), BetaSchedule::constant(1.0)] {
            let mut prev = f64::INFINITY;
            for n in 2..200 {
                let b = s.beta(n);
                assert!(b > 0.0 && b <= prev);
                prev = b;
            }
        }
    }

    #[test]
    fn huge_penalty_reduces_to_mle() {
        let sample = SampleSet::from_1d(&[-1.0, 1.0]).unwrap();
        let problem = gauss_problem(&sample, 1.0, BetaSchedule::constant(1e6));
        let (m, _) = problem.fit(&sample, NpExpOptions::with_tol(1e-9)).unwrap();
        assert!(m.lambda_a.iter().all(|a| *a == 0.0));
        assert_eq!(m.nonzero_count(), 0);
        let mle = fit_mle(&problem.stats, &problem.support, &sample, FitOptions::with_tol(1e-9)).unwrap();
        for (a, b) in m.base.lambda.iter().zip(&mle.lambda) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
        // Reduction: with λ_a = 0 the log-density equals the base family's.
        for x in [-2.0, 0.0, 0.7, 3.1] {
            let a = m.log_density(&[x]).unwrap();
            let b = m.base.log_density(&[x]).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn penalized_loglik_without_augmentation_is_expfam_loglik() {
        let sample = SampleSet::from_1d(&[-1.0, 0.2, 1.0, 1.5]).unwrap();
        let problem = gauss_problem(&sample, 0.5, BetaSchedule::constant(1e6));
        let (m, _) = problem.fit(&sample, NpExpOptions::with_tol(1e-9)).unwrap();
        let a = penalized_loglik(&m, &sample).unwrap();
        let b = m.base.log_likelihood(&sample).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kkt_certificate_and_monotone_objective() {
        let pts = [-2.1, -1.7, -0.3, 0.0, 0.4, 1.9, 2.2, 2.4, 3.0, -2.9, 0.8, 1.1];
        let sample = SampleSet::from_1d(&pts).unwrap();
        let tol = 1e-7;
        let problem = gauss_problem(&sample, 0.5, BetaSchedule::constant(0.02));
        let (m, report) = problem.fit(&sample, NpExpOptions::with_tol(tol)).unwrap();
        assert!(m.nonzero_count() > 0, "test needs active augmented features");
        for w in report.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{:?}", report.objective);
        }
        let (et, ea) = m.expected_statistics().unwrap();
        let emp = StatisticSet::gaussian(1).empirical_mean(&sample).unwrap();
        for (a, b) in et.iter().zip(&emp) {
            assert!((a - b).abs() <= tol);
        }
        let c = empirical_augmented_means(&sample, &m.kernel).unwrap();
        for i in 0..pts.len() {
            assert!(kkt_violation(m.lambda_a[i], c[i] - ea[i], m.beta[i]) <= tol);
        }
        assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_penalty_matches_exactly() {
        let sample = SampleSet::from_1d(&[-2.0, 0.0, 0.3, 2.5]).unwrap();
        let problem = gauss_problem(&sample, 0.5, BetaSchedule::constant(1e6));
        let (mut m, _) = problem.fit(&sample, NpExpOptions::default()).unwrap();
        m.beta = alloc::vec![0.0; 4];
        // A coordinate re-solved with β = 0 lands on the moment-matching root.
        for j in 0..4 {
            let a = solve_augmented_coordinate(&m, &sample, j, 1e-10).unwrap();
            let mut m2 = m.clone();
            m2.lambda_a[j] = a;
            let ws = Workspace::from_model(&m2, &sample).unwrap();
            let gap = ws.emp_aug[j] - ws.tilt.expect(&ws.kern_cols[j]);
            assert!(gap.abs() <= 1e-9, "{gap}");
        }
    }

    #[test]
    fn interior_case_returns_zero() {
        let sample = SampleSet::from_1d(&[-1.0, 0.0, 1.0]).unwrap();
        let problem = gauss_problem(&sample, 1.0, BetaSchedule::constant(10.0));
        let (m, _) = problem.fit(&sample, NpExpOptions::default()).unwrap();
        for j in 0..3 {
            assert_eq!(solve_augmented_coordinate(&m, &sample, j, 1e-8).unwrap(), 0.0);
        }
    }

    #[test]
    fn coordinate_solution_matches_grid_search() {
        // Uniform kernel, three quadrature nodes {0, 1, 2}.
        let sample = SampleSet::from_1d(&[0.8, 1.5]).unwrap();
        let stats = StatisticSet::parse(1, "x").unwrap();
        let support = Support::new(alloc::vec![0.0], alloc::vec![2.0], 3).unwrap();
        let kernel = KernelSpec::uniform(1.0);
        for beta in [0.0, 0.05, 0.2] {
            let problem = NpExpProblem::new(stats.clone(), support.clone(), kernel, BetaSchedule::constant(beta));
            // Start from λ = (0.4), λ_a = (0, 0) and update coordinate 0.
            let model = NpExpModel {
                base: ExpFamModel::new(stats.clone(), support.clone(), alloc::vec![0.4]).unwrap(),
                centers: sample.clone(),
                kernel,
                lambda_a: alloc::vec![0.0, 0.0],
                beta: alloc::vec![beta; 2],
                target_moments: None,
                log_z: 0.0,
            };
            let _ = &problem;
            let got = solve_augmented_coordinate(&model, &sample, 0, 1e-12).unwrap();
            // Oracle: maximize a c - ln Z(a) - β|a| over a dense grid, straight from the definitions.
            let w = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
            let xs = [0.0, 1.0, 2.0];
            let feat = |x: f64| if (x - 0.8).abs() <= 0.5 { 1.0 } else { 0.0 };
            let c = (feat(0.8) + feat(1.5)) / 2.0;
            let mut best = (f64::NEG_INFINITY, 0.0);
            let mut k = -100_000i64;
            while k <= 100_000 {
                let a = k as f64 * 1e-4;
                let z: f64 = (0..3).map(|g| w[g] * crate::math::exp(0.4 * xs[g] + a * feat(xs[g]))).sum();
                let v = a * c - ln(z) - beta * a.abs();
                if v > best.0 {
                    best = (v, a);
                }
                k += 1;
            }
            assert!((got - best.1).abs() <= 1e-4, "beta={beta}: {got} vs {}", best.1);
        }
    }

    #[test]
    fn bracket_limit_is_reported() {
        let sample = SampleSet::from_1d(&[0.8, 1.3]).unwrap();
        let stats = StatisticSet::parse(1, "x").unwrap();
        let support = Support::new(alloc::vec![0.0], alloc::vec![2.0], 3).unwrap();
        let kernel = KernelSpec::uniform(1.0);
        // Enormous λ pushes nearly all mass onto x=2; restoring the mass at x=1 needs λ_a > 50.
        let model = NpExpModel {
            base: ExpFamModel::new(stats.clone(), support.clone(), alloc::vec![60.0]).unwrap(),
            centers: sample.clone(),
            kernel,
            lambda_a: alloc::vec![0.0, 0.0],
            beta: alloc::vec![0.0; 2],
            target_moments: None,
            log_z: 0.0,
        };
        assert!(matches!(solve_augmented_coordinate(&model, &sample, 0, 1e-10), Err(Error::NotBracketed { .. })));
    }
}
