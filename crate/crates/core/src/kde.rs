//! Kernel density estimation.
//!
//! Besides the estimator itself this module exposes the empirical mean of an
//! augmented statistic, `(1/n) Σ_j t_a^i(x^j)`, which equals the KDE evaluated
//! at `x^i`. The two are computed along independent code paths (kernel
//! arguments swapped) so the identity is a genuine check.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::kernel::{KernelFamily, KernelSpec};
use crate::math::ln;
use crate::sample::SampleSet;
use crate::{Error, Result};

/// `f(x) = (1/n) Σ_i K_H(x; x^i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    centers: SampleSet,
    kernel: KernelSpec,
}

impl KdeModel {
    pub fn new(centers: SampleSet, kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        if !kernel.is_density() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} kernel does not integrate to one and cannot be used for density estimation",
                kernel.family.name()
            )));
        }
        if centers.is_empty() {
            return Err(Error::InvalidArgument("kernel density estimate needs at least one center".into()));
        }
        if centers.dim() != kernel.dim {
            return Err(Error::DimensionMismatch { expected: kernel.dim, got: centers.dim() });
        }
        Ok(KdeModel { centers, kernel })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn centers(&self) -> &SampleSet {
        &self.centers
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.kernel.dim {
            return Err(Error::DimensionMismatch { expected: self.kernel.dim, got: x.len() });
        }
        let mut sum = 0.0;
        for c in self.centers.points() {
            sum += self.kernel.eval_unchecked(x, c);
        }
        Ok(sum / self.centers.len() as f64)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(ln(self.density(x)?))
    }
}

/// Free-function form of [`KdeModel::density`].
pub fn kde_density(model: &KdeModel, x: &[f64]) -> Result<f64> {
    model.density(x)
}

/// Empirical mean of the augmented statistic centered at observation `i`
/// (zero-based): `(1/n) Σ_j K_H(x^i; x^j)`.
pub fn empirical_augmented_mean(sample: &SampleSet, kernel: &KernelSpec, i: usize) -> Result<f64> {
    if i >= sample.len() {
        return Err(Error::IndexOutOfRange { index: i, len: sample.len() });
    }
    if sample.dim() != kernel.dim {
        return Err(Error::DimensionMismatch { expected: kernel.dim, got: sample.dim() });
    }
    let center = sample.point(i);
    let mut sum = 0.0;
    for x in sample.points() {
        sum += kernel.eval_unchecked(center, x);
    }
    Ok(sum / sample.len() as f64)
}

/// Empirical means of all `n` augmented statistics.
pub fn empirical_augmented_means(sample: &SampleSet, kernel: &KernelSpec) -> Result<Vec<f64>> {
    (0..sample.len()).map(|i| empirical_augmented_mean(sample, kernel, i)).collect()
}

/// Cross-validation outcome: chosen bandwidth and the mean held-out
/// log-likelihood of every candidate, in ascending bandwidth order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub h: f64,
    pub scores: Vec<(f64, f64)>,
}

/// K-fold cross-validation driver. Observation `i` belongs to fold `i % folds`.
/// `held_out_loglik(h, train, test)` returns the summed log-likelihood of
/// `test`. The candidate with the highest mean wins; ties go to the smaller `h`.
/// Candidates whose evaluation fails score `-inf`; if all fail the first
/// error is returned.
pub fn cross_validate<F>(sample: &SampleSet, grid: &[f64], folds: usize, mut held_out_loglik: F) -> Result<CvResult>
where
    F: FnMut(f64, &SampleSet, &SampleSet) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("bandwidth grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(alloc::format!("need at least 2 folds, got {folds}")));
    }
    let n = sample.len();
    if n < folds {
        return Err(Error::InvalidArgument(alloc::format!("{folds} folds requested for {n} observations")));
    }
    if let Some(h) = grid.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidArgument(alloc::format!("bandwidth candidates must be positive, got {h}")));
    }
    let mut hs = grid.to_vec();
    hs.sort_by(f64::total_cmp);
    hs.dedup();

    let splits: Vec<(SampleSet, SampleSet)> =
        (0..folds).map(|k| (sample.filter_rows(|i| i % folds != k), sample.filter_rows(|i| i % folds == k))).collect();

    let mut scores = Vec::with_capacity(hs.len());
    let mut first_err = None;
    let mut all_failed = true;
    for &h in &hs {
        let mut total = 0.0;
        let mut failed = false;
        for (train, test) in &splits {
            match held_out_loglik(h, train, test) {
                Ok(v) => total += v,
                Err(e) => {
                    first_err.get_or_insert(e);
                    failed = true;
                    break;
                }
            }
        }
        all_failed &= failed;
        let mean = if failed || total.is_nan() { f64::NEG_INFINITY } else { total / n as f64 };
        scores.push((h, mean));
    }
    if all_failed {
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for &(h, s) in &scores {
        if s > f64::NEG_INFINITY && best.is_none_or(|(_, bs)| s > bs) {
            best = Some((h, s));
        }
    }
    match best {
        Some((h, _)) => Ok(CvResult { h, scores }),
        None => Err(Error::DegenerateCrossValidation),
    }
}

/// Bandwidth maximizing the cross-validated KDE log-likelihood.
/// `folds == n` gives leave-one-out.
pub fn cv_bandwidth(sample: &SampleSet, family: KernelFamily, grid: &[f64], folds: usize) -> Result<CvResult> {
    let dim = sample.dim();
    cross_validate(sample, grid, folds, |h, train, test| {
        let model = KdeModel::new(train.clone(), KernelSpec::new(family, h, dim)?)?;
        let mut s = 0.0;
        for x in test.points() {
            s += model.log_density(x)?;
        }
        Ok(s)
    })
}
