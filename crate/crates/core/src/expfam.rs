//! Parametric exponential families on a compact support.
//!
//! Densities have the form `exp(⟨λ, t(x)⟩) / Z(λ)` with respect to Lebesgue
//! measure on a [`Support`] box; `Z` and all expectations are computed by
//! composite Simpson quadrature in log space.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::powi;
use crate::quadrature::{Grid, Support};
use crate::sample::SampleSet;
use crate::solve1d::{solve_moment, SolveError, Tilted};
use crate::{log_sum_exp, Error, Result};

/// A single sufficient statistic `ℝ^d → ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// `x_coord ^ power`.
    Monomial { coord: usize, power: u32 },
    /// `x_a * x_b`.
    Product { a: usize, b: usize },
}

impl Statistic {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Statistic::Monomial { coord, power } => powi(x[coord], power as i32),
            Statistic::Product { a, b } => x[a] * x[b],
        }
    }

    fn max_coord(&self) -> usize {
        match *self {
            Statistic::Monomial { coord, .. } => coord,
            Statistic::Product { a, b } => a.max(b),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Statistic::Monomial { coord, power: 1 } => write!(f, "x{coord}"),
            Statistic::Monomial { coord, power } => write!(f, "x{coord}^{power}"),
            Statistic::Product { a, b } => write!(f, "x{a}*x{b}"),
        }
    }
}

impl core::str::FromStr for Statistic {
    type Err = Error;

    /// Parses `x0`, `x0^2`, `x0*x1` (and `x`, `x^2` for coordinate 0).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(alloc::format!("cannot parse statistic '{s}'"));
        let coord = |v: &str| -> Result<usize> {
            let rest = v.trim().strip_prefix('x').ok_or_else(bad)?;
            if rest.is_empty() {
                Ok(0)
            } else {
                rest.parse().map_err(|_| bad())
            }
        };
        if let Some((a, b)) = s.split_once('*') {
            return Ok(Statistic::Product { a: coord(a)?, b: coord(b)? });
        }
        if let Some((base, p)) = s.split_once('^') {
            let power: u32 = p.trim().parse().map_err(|_| bad())?;
            if power == 0 {
                return Err(bad());
            }
            return Ok(Statistic::Monomial { coord: coord(base)?, power });
        }
        Ok(Statistic::Monomial { coord: coord(s)?, power: 1 })
    }
}

/// Ordered list of sufficient statistics with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StatisticSet {
    dim_in: usize,
    stats: Vec<Statistic>,
}

impl StatisticSet {
    pub fn new(dim_in: usize, stats: Vec<Statistic>) -> Result<Self> {
        if dim_in == 0 || stats.is_empty() {
            return Err(Error::InvalidArgument(
                "statistic set needs a positive input dimension and at least one statistic".into(),
            ));
        }
        if let Some(s) = stats.iter().find(|s| s.max_coord() >= dim_in) {
            return Err(Error::InvalidArgument(alloc::format!("statistic {s} refers to a coordinate >= {dim_in}")));
        }
        let names: Vec<String> = stats.iter().map(|s| s.to_string()).collect();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate statistic '{a}'")));
            }
        }
        Ok(StatisticSet { dim_in, stats })
    }

    /// First and second moments: `(x, x²)` in one dimension; all coordinates,
    /// their squares and the cross product in two.
    pub fn gaussian(dim: usize) -> Self {
        let mut stats: Vec<Statistic> = (0..dim).map(|c| Statistic::Monomial { coord: c, power: 1 }).collect();
        stats.extend((0..dim).map(|c| Statistic::Monomial { coord: c, power: 2 }));
        for a in 0..dim {
            for b in a + 1..dim {
                stats.push(Statistic::Product { a, b });
            }
        }
        StatisticSet { dim_in: dim, stats }
    }

    /// Parses a comma-separated list such as `x0,x0^2`.
    pub fn parse(dim_in: usize, list: &str) -> Result<Self> {
        let stats = list.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<Statistic>>>()?;
        Self::new(dim_in, stats)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn stats(&self) -> &[Statistic] {
        &self.stats
    }

    pub fn names(&self) -> Vec<String> {
        self.stats.iter().map(|s| s.to_string()).collect()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.stats) {
            *o = s.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.stats.iter().map(|s| s.eval(x)).collect()
    }

    /// Mean statistic vector over a sample.
    pub fn empirical_mean(&self, sample: &SampleSet) -> Result<Vec<f64>> {
        if sample.dim() != self.dim_in {
            return Err(Error::DimensionMismatch { expected: self.dim_in, got: sample.dim() });
        }
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        let mut acc = alloc::vec![0.0; self.len()];
        for p in sample.points() {
            for (a, s) in acc.iter_mut().zip(&self.stats) {
                *a += s.eval(p);
            }
        }
        let inv = 1.0 / sample.len() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }

    /// Column-major statistic values at every grid node: `columns[j][g]`.
    pub(crate) fn grid_columns(&self, grid: &Grid) -> Result<Vec<Vec<f64>>> {
        let mut cols = alloc::vec![Vec::with_capacity(grid.len()); self.len()];
        for x in grid.iter_nodes() {
            for (col, s) in cols.iter_mut().zip(&self.stats) {
                let v = s.eval(x);
                if !v.is_finite() {
                    return Err(Error::NonFinite(alloc::format!("statistic {s} at {x:?}")));
                }
                col.push(v);
            }
        }
        Ok(cols)
    }

    /// Detects a sample whose mean statistics sit on the moment curve: some
    /// statistic `y` and its square are both present while `y` is constant
    /// over the sample, so `E[y²] = E[y]²` is a boundary point.
    pub(crate) fn check_moment_curve(&self, sample: &SampleSet) -> Result<()> {
        for s in &self.stats {
            if let Statistic::Monomial { coord, power } = *s {
                let sq = Statistic::Monomial { coord, power: power * 2 };
                if self.stats.contains(&sq) {
                    let first = s.eval(sample.point(0));
                    if sample.points().all(|p| s.eval(p) == first) {
                        return Err(Error::BoundaryStatistics(alloc::format!(
                            "statistic {s} is constant over the sample while {sq} is also constrained; \
                             the empirical moments are not in the relative interior of the attainable set"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<String>> for StatisticSet {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        let stats = names.iter().map(|s| s.parse()).collect::<Result<Vec<Statistic>>>()?;
        let dim = stats.iter().map(|s| s.max_coord() + 1).max().unwrap_or(1);
        Self::new(dim, stats)
    }
}

impl From<StatisticSet> for Vec<String> {
    fn from(s: StatisticSet) -> Self {
        s.names()
    }
}

/// Fitted (or specified) exponential family density.
///
/// JSON: `{"stats":[names],"support":{...},"lambda":[...],"log_z":...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpFamModel {
    pub stats: StatisticSet,
    pub support: Support,
    pub lambda: Vec<f64>,
    pub log_z: f64,
}

/// Stopping rule for [`fit_mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: 1e-6, max_iterations: 10_000 }
    }
}

impl FitOptions {
    pub fn with_tol(tol: f64) -> Self {
        FitOptions { tol, ..Default::default() }
    }
}

fn check_lambda(stats: &StatisticSet, support: &Support, lambda: &[f64]) -> Result<()> {
    support.validate()?;
    if stats.dim_in() != support.dim() {
        return Err(Error::DimensionMismatch { expected: support.dim(), got: stats.dim_in() });
    }
    if lambda.len() != stats.len() {
        return Err(Error::DimensionMismatch { expected: stats.len(), got: lambda.len() });
    }
    Ok(())
}

fn energies(columns: &[Vec<f64>], lambda: &[f64], len: usize) -> Vec<f64> {
    let mut e = alloc::vec![0.0; len];
    for (col, l) in columns.iter().zip(lambda) {
        if *l != 0.0 {
            for (ei, v) in e.iter_mut().zip(col) {
                *ei += l * v;
            }
        }
    }
    e
}

/// `ln Z(λ)` by Simpson quadrature over the support.
pub fn partition(stats: &StatisticSet, support: &Support, lambda: &[f64]) -> Result<f64> {
    check_lambda(stats, support, lambda)?;
    let grid = support.grid();
    let cols = stats.grid_columns(&grid)?;
    let e = energies(&cols, lambda, grid.len());
    let terms: Vec<f64> = grid.log_weights.iter().zip(&e).map(|(w, e)| w + e).collect();
    let lz = log_sum_exp(&terms);
    if !lz.is_finite() {
        return Err(Error::NonFinite("log partition function".into()));
    }
    Ok(lz)
}

impl ExpFamModel {
    /// Builds a model and computes its log partition function.
    pub fn new(stats: StatisticSet, support: Support, lambda: Vec<f64>) -> Result<Self> {
        let log_z = partition(&stats, &support, &lambda)?;
        Ok(ExpFamModel { stats, support, lambda, log_z })
    }

    /// `⟨λ, t(x)⟩ - ln Z`, or `-inf` outside the support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support.dim() {
            return Err(Error::DimensionMismatch { expected: self.support.dim(), got: x.len() });
        }
        if !self.support.contains(x) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.energy(x) - self.log_z)
    }

    pub(crate) fn energy(&self, x: &[f64]) -> f64 {
        self.stats.stats().iter().zip(&self.lambda).map(|(s, l)| l * s.eval(x)).sum()
    }

    /// `E_f[t(X)]` by quadrature.
    pub fn expected_statistics(&self) -> Result<Vec<f64>> {
        let grid = self.support.grid();
        let cols = self.stats.grid_columns(&grid)?;
        let tilt = Tilted::new(grid.log_weights.clone(), energies(&cols, &self.lambda, grid.len()));
        Ok(cols.iter().map(|c| tilt.expect(c)).collect())
    }

    /// Average log-likelihood `⟨λ, mean t⟩ - ln Z` of a sample.
    pub fn log_likelihood(&self, sample: &SampleSet) -> Result<f64> {
        let mean = self.stats.empirical_mean(sample)?;
        Ok(mean.iter().zip(&self.lambda).map(|(m, l)| m * l).sum::<f64>() - self.log_z)
    }

    /// Gradient of [`Self::log_likelihood`]: `mean t - E_f[t]`.
    pub fn gradient(&self, sample: &SampleSet) -> Result<Vec<f64>> {
        let mean = self.stats.empirical_mean(sample)?;
        let e = self.expected_statistics()?;
        Ok(mean.iter().zip(&e).map(|(a, b)| a - b).collect())
    }

    /// Quadrature of `exp(log_density)` over the support; should be one.
    pub fn total_mass(&self) -> Result<f64> {
        let grid = self.support.grid();
        let terms: Vec<f64> =
            grid.iter_nodes().zip(&grid.log_weights).map(|(x, w)| w + self.energy(x) - self.log_z).collect();
        Ok(crate::math::exp(log_sum_exp(&terms)))
    }
}

/// Maximum-likelihood fit: moment matching `E_f[t] = mean t` by cyclic exact
/// coordinate maximization starting from `λ = 0`.
pub fn fit_mle(stats: &StatisticSet, support: &Support, sample: &SampleSet, opts: FitOptions) -> Result<ExpFamModel> {
    let target = stats.empirical_mean(sample)?;
    if let Some(p) = sample.points().find(|p| !support.contains(p)) {
        return Err(Error::InvalidArgument(alloc::format!("sample point {p:?} lies outside the support")));
    }
    stats.check_moment_curve(sample)?;
    fit_moments(stats, support, &target, opts)
}

/// Maximum-entropy fit to an arbitrary moment vector.
pub fn fit_moments(stats: &StatisticSet, support: &Support, target: &[f64], opts: FitOptions) -> Result<ExpFamModel> {
    let lambda0 = alloc::vec![0.0; stats.len()];
    check_lambda(stats, support, &lambda0)?;
    if target.len() != stats.len() {
        return Err(Error::DimensionMismatch { expected: stats.len(), got: target.len() });
    }
    let grid = support.grid();
    let cols = stats.grid_columns(&grid)?;
    let mut tilt = Tilted::new(grid.log_weights.clone(), alloc::vec![0.0; grid.len()]);
    let mut lambda = lambda0;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        residual = cols.iter().zip(target).map(|(c, t)| (tilt.expect(c) - t).abs()).fold(0.0, f64::max);
        if residual <= opts.tol {
            return Ok(ExpFamModel { stats: stats.clone(), support: support.clone(), lambda, log_z: tilt.log_z });
        }
        for (j, col) in cols.iter().enumerate() {
            let delta = global_step(&tilt, col, target[j], opts.tol, j, stats)?;
            lambda[j] += delta;
            tilt.shift(delta, col);
        }
        if lambda.iter().any(|l| l.abs() > LAMBDA_DIVERGENCE) {
            return Err(Error::BoundaryStatistics(alloc::format!(
                "canonical parameters diverged ({lambda:?}); target moments are on the boundary of the attainable set"
            )));
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iterations, residual })
}

pub(crate) const LAMBDA_DIVERGENCE: f64 = 1e8;

/// Exact 1-D update of a global coordinate.
pub(crate) fn global_step(
    tilt: &Tilted,
    col: &[f64],
    target: f64,
    tol: f64,
    j: usize,
    stats: &StatisticSet,
) -> Result<f64> {
    solve_moment(tilt, col, target, tol / 10.0, f64::NEG_INFINITY, f64::INFINITY).map_err(|e| match e {
        SolveError::Unattainable | SolveError::NotBracketed => Error::BoundaryStatistics(alloc::format!(
            "target {target} for statistic {} is not attainable in the interior of the support",
            stats.stats()[j]
        )),
        SolveError::NonFinite => Error::NonFinite(alloc::format!("moment equation for statistic {}", stats.stats()[j])),
    })
}
