//! Observation matrices.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `n` observations of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
    /// Free-form provenance (file name, generator description, seed).
    #[serde(default)]
    pub source: Option<String>,
}

impl SampleSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("sample dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim * (data.len() / dim + 1), got: data.len() });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(alloc::format!("sample value {v}")));
        }
        Ok(SampleSet { dim, data, source: None })
    }

    /// One-dimensional sample from a slice of values.
    pub fn from_1d(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows selected by `keep(i)`, in order.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize) -> bool) -> SampleSet {
        let data = self.points().enumerate().filter(|(i, _)| keep(*i)).flat_map(|(_, p)| p.iter().copied()).collect();
        SampleSet { dim: self.dim, data, source: self.source.clone() }
    }

    /// Componentwise minimum and maximum.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = alloc::vec![f64::INFINITY; self.dim];
        let mut hi = alloc::vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for c in 0..self.dim {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        (lo, hi)
    }
}
