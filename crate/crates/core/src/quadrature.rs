//! Compact supports and composite Simpson quadrature.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::ln;
use crate::sample::SampleSet;
use crate::{Error, Result};

pub const DEFAULT_POINTS_PER_DIM: usize = 2001;

/// Axis-aligned box `[lower, upper]` with a quadrature resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub quadrature_points_per_dim: usize,
}

impl Support {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points_per_dim: usize) -> Result<Self> {
        let s = Support { lower, upper, quadrature_points_per_dim: points_per_dim };
        s.validate()?;
        Ok(s)
    }

    /// `[lo, hi]` with the default resolution.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo], alloc::vec![hi], DEFAULT_POINTS_PER_DIM)
    }

    /// The sample's bounding box widened by `margin` on every side.
    pub fn around_sample(sample: &SampleSet, margin: f64, points_per_dim: usize) -> Result<Self> {
        let (mut lo, mut hi) = sample.bounds();
        for v in &mut lo {
            *v -= margin;
        }
        for v in &mut hi {
            *v += margin;
        }
        Self::new(lo, hi, points_per_dim)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lower.len();
        if d == 0 || d > 2 {
            return Err(Error::InvalidArgument(alloc::format!("support dimension must be 1 or 2, got {d}")));
        }
        if self.upper.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.upper.len() });
        }
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "support bounds must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        let m = self.quadrature_points_per_dim;
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "Simpson quadrature needs an odd point count >= 3, got {m}"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    /// Tensor-product Simpson grid.
    pub fn grid(&self) -> Grid {
        let m = self.quadrature_points_per_dim;
        let axes: Vec<(Vec<f64>, Vec<f64>)> =
            self.lower.iter().zip(&self.upper).map(|(&lo, &hi)| simpson_axis(lo, hi, m)).collect();
        let d = axes.len();
        let count = m.pow(d as u32);
        let mut nodes = Vec::with_capacity(count * d);
        let mut log_weights = Vec::with_capacity(count);
        if d == 1 {
            let (xs, ws) = &axes[0];
            nodes.extend_from_slice(xs);
            log_weights.extend(ws.iter().map(|&w| ln(w)));
        } else {
            let (x0, w0) = &axes[0];
            let (x1, w1) = &axes[1];
            for i in 0..m {
                for j in 0..m {
                    nodes.push(x0[i]);
                    nodes.push(x1[j]);
                    log_weights.push(ln(w0[i] * w1[j]));
                }
            }
        }
        Grid { dim: d, nodes, log_weights }
    }
}

fn simpson_axis(lo: f64, hi: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let step = (hi - lo) / (m - 1) as f64;
    let xs = (0..m).map(|i| if i == m - 1 { hi } else { lo + step * i as f64 }).collect();
    let ws = (0..m)
        .map(|i| {
            let c = if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * step / 3.0
        })
        .collect();
    (xs, ws)
}

/// Quadrature nodes (row-major, `dim` coordinates each) with log weights.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn node(&self, g: usize) -> &[f64] {
        &self.nodes[g * self.dim..(g + 1) * self.dim]
    }

    pub fn iter_nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }
}
