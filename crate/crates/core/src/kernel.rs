//! Kernel functions.
//!
//! A kernel is used in two roles: as the smoother of a kernel density estimate,
//! and as the augmented statistic `t_a^i(x) = K_H(x^i; x)` that ties model mass to
//! the neighbourhood of observation `x^i`. The bandwidth matrix is isotropic,
//! `H = h² I_d`.

use serde::{Deserialize, Serialize};

use crate::math::{exp, sqrt, LN_2PI};
use crate::{Error, Result};

/// Kernel shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Standard normal density.
    Gaussian,
    /// Indicator of the unit hypercube `[-1/2, 1/2]^d`.
    Uniform,
    /// Logistic smoothing of the ball indicator `‖u‖ ≤ 1/2`. Not normalized.
    Smoothed,
    /// `-‖u‖²`. Only meaningful as an augmented feature, never as a density.
    Quadratic,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Smoothed => "smoothed",
            KernelFamily::Quadratic => "quadratic",
        }
    }
}

impl core::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "uniform" => Ok(KernelFamily::Uniform),
            "smoothed" | "smoothed-uniform" => Ok(KernelFamily::Smoothed),
            "quadratic" => Ok(KernelFamily::Quadratic),
            other => Err(Error::InvalidArgument(alloc::format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Kernel family with isotropic bandwidth `h` in `dim` dimensions.
///
/// Serializes as `{"family":"gaussian","h":1.5,"dim":1,"steepness":null}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub h: f64,
    pub dim: usize,
    /// Logistic steepness for [`KernelFamily::Smoothed`], in inverse data units.
    /// `None` means `20 / h`.
    #[serde(default)]
    pub steepness: Option<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, h: f64, dim: usize) -> Result<Self> {
        let spec = KernelSpec { family, h, dim, steepness: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(h: f64) -> Self {
        KernelSpec { family: KernelFamily::Gaussian, h, dim: 1, steepness: None }
    }

    pub fn uniform(h: f64) -> Self {
        KernelSpec { family: KernelFamily::Uniform, h, dim: 1, steepness: None }
    }

    pub fn with_steepness(mut self, steepness: f64) -> Self {
        self.steepness = Some(steepness);
        self
    }

    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("bandwidth must be positive, got {}", self.h)));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("kernel dimension must be positive".into()));
        }
        if let Some(c) = self.steepness {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("steepness must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// Whether `eval_scaled` integrates to one (usable as a KDE smoother).
    pub fn is_density(&self) -> bool {
        matches!(self.family, KernelFamily::Gaussian | KernelFamily::Uniform)
    }

    /// Logistic steepness in units of `u = (x - c) / h`.
    fn unit_steepness(&self) -> f64 {
        self.steepness.map_or(20.0, |c| c * self.h)
    }

    /// Unscaled kernel value `K(u)`.
    pub fn eval_base(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u.len())?;
        let sq: f64 = u.iter().map(|v| v * v).sum();
        Ok(self.base_from_parts(sq, || u.iter().all(|v| v.abs() <= 0.5)))
    }

    fn base_from_parts(&self, sq_norm: f64, in_cube: impl FnOnce() -> bool) -> f64 {
        match self.family {
            KernelFamily::Gaussian => exp(-0.5 * sq_norm - 0.5 * self.dim as f64 * LN_2PI),
            KernelFamily::Uniform => {
                if in_cube() {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Smoothed => {
                let s = self.unit_steepness();
                1.0 / (1.0 + exp(s * (sqrt(sq_norm) - 0.5)))
            }
            KernelFamily::Quadratic => -sq_norm,
        }
    }

    /// `K_H(x; center)`. Density families carry the `|H|^{-1/2} = h^{-d}` factor;
    /// the smoothed indicator and the quadratic feature are returned unscaled.
    pub fn eval_scaled(&self, x: &[f64], center: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(center.len())?;
        Ok(self.eval_unchecked(x, center))
    }

    /// `eval_scaled` without dimension checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], center: &[f64]) -> f64 {
        let inv_h = 1.0 / self.h;
        let mut sq = 0.0;
        let mut in_cube = true;
        for (a, b) in x.iter().zip(center) {
            let u = (a - b) * inv_h;
            sq += u * u;
            in_cube &= u.abs() <= 0.5;
        }
        let k = self.base_from_parts(sq, || in_cube);
        if self.is_density() {
            let mut scale = 1.0;
            for _ in 0..self.dim {
                scale *= inv_h;
            }
            k * scale
        } else {
            k
        }
    }

    /// `K(u) / K(0)`: a mass indicator equal to one at the center. For the
    /// quadratic family this is `-‖u‖²` (which is already zero at the center).
    pub fn eval_mass_indicator(&self, x: &[f64], center: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(center.len())?;
        let inv_h = 1.0 / self.h;
        let mut sq = 0.0;
        let mut in_cube = true;
        for (a, b) in x.iter().zip(center) {
            let u = (a - b) * inv_h;
            sq += u * u;
            in_cube &= u.abs() <= 0.5;
        }
        Ok(match self.family {
            KernelFamily::Gaussian => exp(-0.5 * sq),
            KernelFamily::Quadratic => -sq,
            _ => self.base_from_parts(sq, || in_cube) / self.base_from_parts(0.0, || true),
        })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }
}
