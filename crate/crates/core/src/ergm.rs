//! Exponential random graph models over (edges, triangles), with an optional
//! augmented feature that marks the neighbourhood of the observed graph's
//! statistics (the mass-preserving variant, NERGM).
//!
//! Edge and triangle counts enter the model rescaled by the observed graph's
//! counts, so `λ` is reported in rescaled units; [`ErgmModel::raw_lambda`]
//! converts. The augmented feature is the peak-normalized kernel
//! `K(t(G); t(G*)) / K(0)` evaluated on raw counts, which equals one at the
//! observation.
//!
//! For `n ≤ 8` every expectation is exact through a [`FeatureHistogram`].
//! Larger graphs are fitted by MCMC-MLE with a single-site Gibbs sampler.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{flip_delta, gof, stats, FeatureHistogram, Graph, GraphStats};
use crate::kernel::KernelSpec;
use crate::linalg::solve_psd;
use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Kernel bandwidth (raw count units) that works for small graphs.
pub const DEFAULT_GRAPH_BANDWIDTH: f64 = 8.0;
/// Fixed MCMC-MLE gradient step in rescaled units.
pub const DEFAULT_STEP_SIZE: f64 = 10.0;

/// The augmented statistic and its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub lambda_a: f64,
    /// Two-dimensional kernel over raw (edges, triangles).
    pub kernel: KernelSpec,
    /// Statistics of the observed graph.
    pub center: GraphStats,
}

impl Augmentation {
    pub fn feature(&self, s: GraphStats) -> f64 {
        let x = s.as_f64();
        let c = self.center.as_f64();
        self.kernel.eval_mass_indicator(&x, &c).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmModel {
    pub n: usize,
    /// `(λ_e, λ_△)` in rescaled units.
    pub lambda: [f64; 2],
    /// Multipliers applied to raw (edges, triangles): `1 / t(G*)`.
    pub scale: [f64; 2],
    pub augmented: Option<Augmentation>,
    /// ℓ1 penalty on `λ_a`; unused without augmentation.
    pub beta: f64,
}

/// `1 / count` per coordinate, with 1 for zero counts.
pub fn observed_scale(observed: GraphStats) -> [f64; 2] {
    let f = |v: u64| if v == 0 { 1.0 } else { 1.0 / v as f64 };
    [f(observed.edges), f(observed.triangles)]
}

impl ErgmModel {
    /// Plain ERGM.
    pub fn ergm(n: usize, lambda: [f64; 2], scale: [f64; 2]) -> Self {
        ErgmModel { n, lambda, scale, augmented: None, beta: 0.0 }
    }

    /// Mass-preserving ERGM with a Gaussian kernel of bandwidth `h` centred on
    /// `observed`, starting at `λ = 0`, `λ_a = 0`.
    pub fn nergm(n: usize, observed: GraphStats, h: f64, beta: f64) -> Result<Self> {
        let kernel = KernelSpec::new(crate::kernel::KernelFamily::Gaussian, h, 2)?;
        Self::nergm_with_kernel(n, observed, kernel, beta)
    }

    pub fn nergm_with_kernel(n: usize, observed: GraphStats, kernel: KernelSpec, beta: f64) -> Result<Self> {
        kernel.validate()?;
        if kernel.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: kernel.dim });
        }
        if !(beta >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("beta must be nonnegative, got {beta}")));
        }
        Ok(ErgmModel {
            n,
            lambda: [0.0; 2],
            scale: observed_scale(observed),
            augmented: Some(Augmentation { lambda_a: 0.0, kernel, center: observed }),
            beta,
        })
    }

    pub fn lambda_a(&self) -> f64 {
        self.augmented.map_or(0.0, |a| a.lambda_a)
    }

    /// `λ` per raw edge and raw triangle.
    pub fn raw_lambda(&self) -> [f64; 2] {
        [self.lambda[0] * self.scale[0], self.lambda[1] * self.scale[1]]
    }

    /// Rescaled (edges, triangles) and the augmented feature (0 if absent).
    pub fn features(&self, s: GraphStats) -> [f64; 3] {
        [
            s.edges as f64 * self.scale[0],
            s.triangles as f64 * self.scale[1],
            self.augmented.map_or(0.0, |a| a.feature(s)),
        ]
    }

    fn theta(&self) -> [f64; 3] {
        [self.lambda[0], self.lambda[1], self.lambda_a()]
    }

    fn set_theta(&mut self, th: &[f64]) {
        self.lambda = [th[0], th[1]];
        if let Some(a) = self.augmented.as_mut() {
            a.lambda_a = th[2];
        }
    }

    /// Unnormalized log-probability of any graph with statistics `s`.
    pub fn log_weight(&self, s: GraphStats) -> f64 {
        let f = self.features(s);
        let th = self.theta();
        th[0] * f[0] + th[1] * f[1] + if self.augmented.is_some() { th[2] * f[2] } else { 0.0 }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lambda.iter().chain(&self.scale).all(|v| v.is_finite())
            && self.lambda_a().is_finite()
            && self.beta >= 0.0;
        if !ok {
            return Err(Error::NonFinite("ERGM parameters".into()));
        }
        if let Some(a) = &self.augmented {
            a.kernel.validate()?;
        }
        Ok(())
    }
}

/// Per-cell probabilities of an exactly evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassTable {
    pub n: usize,
    /// `(stats, probability)` for every attainable cell, ordered by edges then
    /// triangles.
    pub cells: Vec<(GraphStats, f64)>,
}

impl MassTable {
    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.1).sum()
    }

    /// Most probable cell (first in order on ties).
    pub fn mode(&self) -> GraphStats {
        let mut best = (GraphStats::default(), f64::NEG_INFINITY);
        for &(s, p) in &self.cells {
            if p > best.1 {
                best = (s, p);
            }
        }
        best.0
    }

    /// Mass of cells with `|e - center.e| ≤ de` and `|△ - center.△| ≤ dt`.
    pub fn box_mass(&self, center: GraphStats, de: u64, dt: u64) -> f64 {
        self.cells
            .iter()
            .filter(|(s, _)| s.edges.abs_diff(center.edges) <= de && s.triangles.abs_diff(center.triangles) <= dt)
            .map(|c| c.1)
            .sum()
    }

    /// Mean raw (edges, triangles).
    pub fn mean(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for (s, p) in &self.cells {
            m[0] += p * s.edges as f64;
            m[1] += p * s.triangles as f64;
        }
        m
    }
}

/// Chebyshev distance between two statistic tuples.
pub fn chebyshev(a: GraphStats, b: GraphStats) -> u64 {
    a.edges.abs_diff(b.edges).max(a.triangles.abs_diff(b.triangles))
}

/// Histogram cells in design form.
struct Design {
    stats: Vec<GraphStats>,
    log_count: Vec<f64>,
    feats: Vec<[f64; 3]>,
}

impl Design {
    fn new(model: &ErgmModel, hist: &FeatureHistogram) -> Result<Self> {
        if hist.n() != model.n {
            return Err(Error::HistogramMismatch(alloc::format!(
                "histogram is for n = {}, model has n = {}",
                hist.n(),
                model.n
            )));
        }
        model.validate()?;
        let mut d = Design { stats: Vec::new(), log_count: Vec::new(), feats: Vec::new() };
        for (s, c) in hist.iter() {
            d.stats.push(s);
            d.log_count.push(ln(c as f64));
            d.feats.push(model.features(s));
        }
        Ok(d)
    }

    /// Log-partition, mean and covariance of the first `dim` features.
    fn moments(&self, th: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let dim = th.len();
        let lw: Vec<f64> = self
            .log_count
            .iter()
            .zip(&self.feats)
            .map(|(lc, f)| lc + (0..dim).map(|k| th[k] * f[k]).sum::<f64>())
            .collect();
        let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        let mut m = alloc::vec![0.0; dim];
        let mut c = alloc::vec![0.0; dim * dim];
        for (w, f) in lw.iter().zip(&self.feats) {
            let p = exp(w - max);
            s += p;
            for a in 0..dim {
                m[a] += p * f[a];
                for b in 0..dim {
                    c[a * dim + b] += p * f[a] * f[b];
                }
            }
        }
        for v in &mut m {
            *v /= s;
        }
        for a in 0..dim {
            for b in 0..dim {
                c[a * dim + b] = c[a * dim + b] / s - m[a] * m[b];
            }
        }
        (max + ln(s), m, c)
    }

    fn log_z(&self, th: &[f64]) -> f64 {
        let dim = th.len();
        let lw: Vec<f64> = self
            .log_count
            .iter()
            .zip(&self.feats)
            .map(|(lc, f)| lc + (0..dim).map(|k| th[k] * f[k]).sum::<f64>())
            .collect();
        crate::log_sum_exp(&lw)
    }

    /// Maximizes `⟨θ, target⟩ − ln Z(θ)` by damped Newton until every moment
    /// residual is within `tol`.
    fn fit(&self, target: &[f64], start: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut th = start.to_vec();
        let obj = |th: &[f64]| th.iter().zip(target).map(|(a, b)| a * b).sum::<f64>() - self.log_z(th);
        let mut f = obj(&th);
        let mut residual = f64::INFINITY;
        for _ in 0..500 {
            let (_, m, c) = self.moments(&th);
            let g: Vec<f64> = target.iter().zip(&m).map(|(t, m)| t - m).collect();
            residual = g.iter().fold(0.0, |r, v| r.max(v.abs()));
            if residual <= tol {
                return Ok(th);
            }
            let d = solve_psd(&c, &g).ok_or_else(|| Error::NonFinite("singular feature covariance".into()))?;
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = th.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let fc = obj(&cand);
                if fc.is_finite() && fc >= f + 1e-4 * t * slope {
                    th = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if th.iter().any(|v| !v.is_finite() || v.abs() > 1e4) {
                return Err(Error::BoundaryStatistics(
                    "parameters diverge: the target is not in the relative interior of the attainable statistics"
                        .into(),
                ));
            }
            if !moved {
                break;
            }
        }
        Err(Error::NotConverged { iterations: 500, residual })
    }
}

/// `ln Z` of the model, summing `count · exp(log_weight)` over the histogram.
pub fn exact_log_partition(model: &ErgmModel, hist: &FeatureHistogram) -> Result<f64> {
    let d = Design::new(model, hist)?;
    Ok(d.log_z(&model.theta()))
}

/// Probability of every attainable (edges, triangles) cell.
pub fn exact_mass(model: &ErgmModel, hist: &FeatureHistogram) -> Result<MassTable> {
    let d = Design::new(model, hist)?;
    let th = model.theta();
    let lz = d.log_z(&th);
    let cells = d
        .stats
        .iter()
        .zip(&d.log_count)
        .zip(&d.feats)
        .map(|((s, lc), f)| (*s, exp(lc + th[0] * f[0] + th[1] * f[1] + th[2] * f[2] - lz)))
        .collect();
    Ok(MassTable { n: model.n, cells })
}

/// Penalized log-likelihood of the observed statistics,
/// `⟨λ, t(G*)⟩ + λ_a t_a(G*) − ln Z − β|λ_a|`.
pub fn exact_log_likelihood(model: &ErgmModel, observed: GraphStats, hist: &FeatureHistogram) -> Result<f64> {
    let lz = exact_log_partition(model, hist)?;
    Ok(model.log_weight(observed) - lz - model.beta * model.lambda_a().abs())
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Checks that `target` (raw edges, triangles) lies strictly inside the convex
/// hull of the attainable statistics.
pub fn check_interior(hist: &FeatureHistogram, target: [f64; 2]) -> Result<()> {
    let mut pts: Vec<(f64, f64)> = hist.iter().map(|(s, _)| (s.edges as f64, s.triangles as f64)).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Vec<(f64, f64)> = if pass == 0 { pts.clone() } else { pts.iter().rev().cloned().collect() };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::BoundaryStatistics(alloc::format!(
            "attainable statistics for n = {} are collinear; the two-parameter model is not identifiable",
            hist.n()
        )));
    }
    let p = (target[0], target[1]);
    for k in 0..hull.len() {
        let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
        let len = sqrt((b.0 - a.0) * (b.0 - a.0) + (b.1 - a.1) * (b.1 - a.1));
        if cross(a, b, p) <= 1e-9 * len {
            return Err(Error::BoundaryStatistics(alloc::format!(
                "observed statistics ({}, {}) are not in the relative interior of the convex hull of attainable \
                 (edges, triangles); the maximum-likelihood estimate does not exist",
                target[0],
                target[1]
            )));
        }
    }
    Ok(())
}

/// ERGM whose expected (edges, triangles) equal `observed`, rescaled by the
/// observed counts.
pub fn exact_fit_ergm(observed: GraphStats, hist: &FeatureHistogram, tol: f64) -> Result<ErgmModel> {
    exact_fit_ergm_target(observed.as_f64(), observed_scale(observed), hist, tol)
}

/// ERGM matching a possibly fractional raw target under a given rescaling.
pub fn exact_fit_ergm_target(
    target: [f64; 2],
    scale: [f64; 2],
    hist: &FeatureHistogram,
    tol: f64,
) -> Result<ErgmModel> {
    check_interior(hist, target)?;
    let mut model = ErgmModel::ergm(hist.n(), [0.0; 2], scale);
    let d = Design::new(&model, hist)?;
    let th = d.fit(&[target[0] * scale[0], target[1] * scale[1]], &[0.0; 2], tol)?;
    model.set_theta(&th);
    Ok(model)
}

/// Mass-preserving ERGM for the observed graph with a Gaussian kernel of
/// bandwidth `h` (raw count units) and penalty `beta`.
pub fn exact_fit_nergm(observed: &Graph, hist: &FeatureHistogram, h: f64, beta: f64, tol: f64) -> Result<ErgmModel> {
    let s = stats(observed);
    let template = ErgmModel::nergm(observed.n(), s, h, beta)?;
    exact_fit_nergm_template(&template, hist, tol)
}

/// Exact fit for an arbitrary augmented template (its kernel, centre and β).
///
/// The ERGM fit is computed first. If the gap between the augmented feature's
/// observed value and its expectation is within `β`, `λ_a = 0` is optimal.
/// Otherwise the smooth problem with `E[t_a] = t_a(G*) ∓ β` is solved, the
/// sign following the gap.
pub fn exact_fit_nergm_template(template: &ErgmModel, hist: &FeatureHistogram, tol: f64) -> Result<ErgmModel> {
    let aug = template.augmented.ok_or_else(|| Error::InvalidArgument("template has no augmented feature".into()))?;
    let center = aug.center;
    check_interior(hist, center.as_f64())?;
    let mut model = template.clone();
    model.set_theta(&[0.0; 3]);
    let d = Design::new(&model, hist)?;
    let f_obs = model.features(center);
    let lam = d.fit(&f_obs[..2], &[0.0; 2], tol)?;
    let (_, m, _) = d.moments(&[lam[0], lam[1], 0.0]);
    let gap = f_obs[2] - m[2];
    if gap.abs() <= model.beta {
        model.set_theta(&[lam[0], lam[1], 0.0]);
        return Ok(model);
    }
    let sign = gap.signum();
    let target = [f_obs[0], f_obs[1], f_obs[2] - sign * model.beta];
    let th = d.fit(&target, &[lam[0], lam[1], 0.0], tol)?;
    if th[2] * sign < 0.0 {
        return Err(Error::NotConverged { iterations: 0, residual: th[2].abs() });
    }
    model.set_theta(&th);
    Ok(model)
}

/// Starting state of a Gibbs chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainInit {
    ObservedGraph,
    Empty,
    Random(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub num_samples: usize,
    pub init: ChainInit,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { burn_in: 1000, thinning: 100, num_samples: 100, init: ChainInit::ObservedGraph, seed: 0 }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 || self.thinning == 0 {
            return Err(Error::InvalidArgument("burn-in and thinning must be at least 1".into()));
        }
        if let ChainInit::Random(p) = self.init {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(alloc::format!("edge probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    pub unique_graphs: usize,
    pub unique_feature_tuples: usize,
    /// Largest Hamming distance between a draw and the initial graph.
    pub max_hops: usize,
}

/// Single-site Gibbs chain: each step picks a dyad uniformly at random and
/// resamples it from its conditional distribution.
#[derive(Debug, Clone)]
pub struct GibbsChain<'m> {
    model: &'m ErgmModel,
    graph: Graph,
    stats: GraphStats,
}

impl<'m> GibbsChain<'m> {
    pub fn new(model: &'m ErgmModel, init: Graph) -> Result<Self> {
        if init.n() != model.n {
            return Err(Error::DimensionMismatch { expected: model.n, got: init.n() });
        }
        if model.n < 2 {
            return Err(Error::InvalidArgument("Gibbs sampling needs at least two nodes".into()));
        }
        model.validate()?;
        let stats = stats(&init);
        Ok(GibbsChain { model, graph: init, stats })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn stats(&self) -> GraphStats {
        self.stats
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.model.n;
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (de, dt) = flip_delta(&self.graph, i, j).expect("distinct in-range dyad");
        let present = self.graph.has_edge(i, j);
        let other = GraphStats::new((self.stats.edges as i64 + de) as u64, (self.stats.triangles as i64 + dt) as u64);
        let (on, off) = if present { (self.stats, other) } else { (other, self.stats) };
        let z = self.model.log_weight(on) - self.model.log_weight(off);
        let p_on = 1.0 / (1.0 + exp(-z));
        let want = rng.random::<f64>() < p_on;
        if want != present {
            self.graph.toggle(i, j).expect("valid dyad");
            self.stats = other;
        }
    }
}

fn initial_graph<R: Rng + ?Sized>(n: usize, init: ChainInit, observed: Option<&Graph>, rng: &mut R) -> Result<Graph> {
    Ok(match init {
        ChainInit::ObservedGraph => observed
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("chain initialized at the observed graph, but none given".into()))?,
        ChainInit::Empty => Graph::new(n),
        ChainInit::Random(p) => Graph::random(n, p, rng),
    })
}

/// Thinned Gibbs draws from `model`. `observed` is the starting graph when
/// `config.init` is [`ChainInit::ObservedGraph`].
pub fn gibbs_sample(
    model: &ErgmModel,
    observed: Option<&Graph>,
    config: &ChainConfig,
) -> Result<(Vec<Graph>, SamplerDiagnostics)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    gibbs_sample_with(model, observed, config, &mut rng)
}

pub fn gibbs_sample_with<R: Rng + ?Sized>(
    model: &ErgmModel,
    observed: Option<&Graph>,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<(Vec<Graph>, SamplerDiagnostics)> {
    let (draws, stats, diag) = run_chain(model, observed, config, rng, true)?;
    debug_assert_eq!(draws.len(), stats.len());
    Ok((draws, diag))
}

fn run_chain<R: Rng + ?Sized>(
    model: &ErgmModel,
    observed: Option<&Graph>,
    config: &ChainConfig,
    rng: &mut R,
    keep_graphs: bool,
) -> Result<(Vec<Graph>, Vec<GraphStats>, SamplerDiagnostics)> {
    config.validate()?;
    let init = initial_graph(model.n, config.init, observed, rng)?;
    let mut chain = GibbsChain::new(model, init.clone())?;
    for _ in 0..config.burn_in {
        chain.step(rng);
    }
    let mut graphs = Vec::new();
    let mut all_stats = Vec::with_capacity(config.num_samples);
    let mut unique = BTreeSet::new();
    let mut tuples = BTreeSet::new();
    let mut max_hops = 0;
    for k in 0..config.num_samples {
        if k > 0 {
            for _ in 0..config.thinning {
                chain.step(rng);
            }
        }
        let g = chain.graph();
        max_hops = max_hops.max(g.hamming(&init));
        tuples.insert(chain.stats());
        all_stats.push(chain.stats());
        if keep_graphs {
            graphs.push(g.clone());
        }
        unique.insert(g.clone());
    }
    let diag = SamplerDiagnostics { unique_graphs: unique.len(), unique_feature_tuples: tuples.len(), max_hops };
    Ok((graphs, all_stats, diag))
}

/// Settings for [`mcmcmle_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub steps: usize,
    pub step_size: f64,
    /// Fraction of the final iterates averaged into the returned parameters
    /// (0 returns the last iterate).
    pub average_tail: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { steps: 500, step_size: DEFAULT_STEP_SIZE, average_tail: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub steps: usize,
    pub resamples: usize,
    /// Smallest effective sample size seen before a resample.
    pub min_ess: f64,
    /// Importance-weighted moment residual `t(G*) - E[t]` at the final iterate
    /// (rescaled units; third entry is the augmented feature).
    pub residual: Vec<f64>,
    pub diagnostics: SamplerDiagnostics,
}

/// A fresh sample whose weights fall below this fraction of the sample count
/// after one step counts as collapsed.
const COLLAPSE_FRACTION: f64 = 0.05;
/// Consecutive collapsed samples tolerated before giving up.
const MAX_COLLAPSES: usize = 50;
/// Parameter magnitude treated as divergence.
const DIVERGENCE_LIMIT: f64 = 1e4;

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// MCMC maximum likelihood by fixed-step gradient ascent (proximal in `λ_a`).
///
/// Expectations come from Gibbs draws at a reference parameter, reweighted by
/// `w_s ∝ exp⟨θ − θ_ref, f(G_s)⟩`. The sample is redrawn at the current
/// parameter whenever the effective sample size falls below half the sample
/// count. The starting parameters are those of `template`. Fails with
/// [`Error::EssCollapse`] when the sample is stale after a single step for
/// many consecutive steps.
pub fn mcmcmle_fit(
    observed: &Graph,
    template: &ErgmModel,
    chain: &ChainConfig,
    opts: &MleOptions,
) -> Result<(ErgmModel, MleReport)> {
    chain.validate()?;
    if template.n != observed.n() {
        return Err(Error::DimensionMismatch { expected: template.n, got: observed.n() });
    }
    if chain.num_samples < 2 {
        return Err(Error::InvalidArgument("MCMC-MLE needs at least two samples per draw".into()));
    }
    if !(opts.step_size > 0.0 && opts.step_size.is_finite()) || !(0.0..=1.0).contains(&opts.average_tail) {
        return Err(Error::InvalidArgument("step size must be positive and average_tail in [0, 1]".into()));
    }
    let obs = stats(observed);
    let m = observed.dyads() as u64;
    if obs.edges == 0 || obs.edges == m {
        return Err(Error::BoundaryStatistics(
            "observed graph is empty or complete, so its statistics are not in the relative interior of the \
             attainable set and the estimate does not exist"
                .into(),
        ));
    }
    let mut model = template.clone();
    model.validate()?;
    let dim = if model.augmented.is_some() { 3 } else { 2 };
    let f_obs = model.features(obs);
    let mut rng = ChaCha8Rng::seed_from_u64(chain.seed);

    let mut theta = model.theta();
    let mut reference = theta;
    let mut feats: Vec<[f64; 3]> = Vec::new();
    let mut diag = SamplerDiagnostics { unique_graphs: 0, unique_feature_tuples: 0, max_hops: 0 };
    let mut resamples = 0;
    let mut min_ess = f64::INFINITY;
    let mut fresh = false;
    let mut collapses = 0usize;
    let avg_from = opts.steps - ((opts.steps as f64 * opts.average_tail) as usize).min(opts.steps);
    let mut avg = [0.0; 3];
    let mut avg_count = 0usize;
    let mut residual = alloc::vec![0.0; dim];
    let mut weights: Vec<f64> = Vec::new();

    let weigh = |feats: &[[f64; 3]], theta: &[f64; 3], reference: &[f64; 3], w: &mut Vec<f64>| -> f64 {
        w.clear();
        w.extend(feats.iter().map(|f| (0..3).map(|k| (theta[k] - reference[k]) * f[k]).sum::<f64>()));
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in w.iter_mut() {
            *v = exp(*v - max);
            s += *v;
        }
        let mut s2 = 0.0;
        for v in w.iter_mut() {
            *v /= s;
            s2 += *v * *v;
        }
        1.0 / s2
    };

    for step in 0..=opts.steps {
        let mut ess = if feats.is_empty() { 0.0 } else { weigh(&feats, &theta, &reference, &mut weights) };
        if !(ess >= chain.num_samples as f64 / 2.0) {
            if fresh && ess < COLLAPSE_FRACTION * chain.num_samples as f64 {
                collapses += 1;
                if collapses >= MAX_COLLAPSES {
                    return Err(Error::EssCollapse { ess, samples: chain.num_samples });
                }
            } else {
                collapses = 0;
            }
            if !feats.is_empty() {
                min_ess = min_ess.min(ess);
            }
            model.set_theta(&theta);
            let (_, draws, d) = run_chain(&model, Some(observed), chain, &mut rng, false)?;
            diag = d;
            feats = draws.iter().map(|s| model.features(*s)).collect();
            reference = theta;
            resamples += 1;
            ess = weigh(&feats, &theta, &reference, &mut weights);
            fresh = true;
        } else {
            fresh = false;
        }
        let _ = ess;
        let mut mean = [0.0; 3];
        for (w, f) in weights.iter().zip(&feats) {
            for k in 0..3 {
                mean[k] += w * f[k];
            }
        }
        for k in 0..dim {
            residual[k] = f_obs[k] - mean[k];
        }
        if step == opts.steps {
            break;
        }
        for k in 0..2 {
            theta[k] += opts.step_size * residual[k];
        }
        if dim == 3 {
            theta[2] = soft_threshold(theta[2] + opts.step_size * residual[2], opts.step_size * model.beta);
        }
        if theta.iter().any(|v| !(v.abs() < DIVERGENCE_LIMIT)) {
            return Err(Error::NonFinite("MCMC-MLE parameters diverge; reduce the step size".into()));
        }
        if step + 1 > avg_from {
            for k in 0..3 {
                avg[k] += theta[k];
            }
            avg_count += 1;
        }
    }
    if avg_count > 0 {
        for v in &mut avg {
            *v /= avg_count as f64;
        }
        model.set_theta(&avg);
    } else {
        model.set_theta(&theta);
    }
    let report = MleReport {
        steps: opts.steps,
        resamples,
        min_ess: if min_ess.is_finite() { min_ess } else { chain.num_samples as f64 },
        residual,
        diagnostics: diag,
    };
    Ok((model, report))
}

/// One statistic bin of a goodness-of-fit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofRow {
    pub stat: String,
    pub bin: usize,
    pub observed: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    /// Observed value inside `[p5, p95]`.
    pub covered: bool,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Observed degree, ESP and geodesic distributions against the 5/50/95
/// percentiles of the samples, bin by bin.
pub fn gof_compare(observed: &Graph, samples: &[Graph]) -> Result<Vec<GofRow>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to compare against".into()));
    }
    if let Some(g) = samples.iter().find(|g| g.n() != observed.n()) {
        return Err(Error::DimensionMismatch { expected: observed.n(), got: g.n() });
    }
    let obs = gof(observed);
    let reports: Vec<_> = samples.iter().map(gof).collect();
    let mut rows = Vec::new();
    for (fam, (name, values, offset)) in obs.families().iter().enumerate() {
        for (k, &o) in values.iter().enumerate() {
            let mut col: Vec<f64> = reports.iter().map(|r| r.families()[fam].1[k]).collect();
            col.sort_by(|a, b| a.total_cmp(b));
            let (p5, p50, p95) = (quantile(&col, 0.05), quantile(&col, 0.5), quantile(&col, 0.95));
            let eps = 1e-12;
            rows.push(GofRow {
                stat: String::from(*name),
                bin: k + offset,
                observed: o,
                p5,
                p50,
                p95,
                covered: o >= p5 - eps && o <= p95 + eps,
            });
        }
    }
    Ok(rows)
}
