//! Long-form CSV for external plotting tools.

use std::str::FromStr;

use npef_core::ergm::GofRow;

use crate::error::{Error, Result};
use crate::experiment::SummaryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Density,
    Gof,
    LlVsN,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(PlotKind::Density),
            "gof" => Ok(PlotKind::Gof),
            "ll-vs-n" => Ok(PlotKind::LlVsN),
            other => Err(Error::Input(format!("unknown plot kind '{other}'; expected density, gof or ll-vs-n"))),
        }
    }
}

/// Data for one plot.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    /// `(method, [(x, density)])` curves.
    Density(Vec<(String, Vec<(f64, f64)>)>),
    Gof(Vec<GofRow>),
    LlVsN(Vec<SummaryRow>),
}

impl PlotData {
    fn kind(&self) -> PlotKind {
        match self {
            PlotData::Density(_) => PlotKind::Density,
            PlotData::Gof(_) => PlotKind::Gof,
            PlotData::LlVsN(_) => PlotKind::LlVsN,
        }
    }
}

/// Renders `data` as the CSV of the named kind, one row per point:
///
/// - `density`: `x,method,density`
/// - `gof`: `stat,bin,observed,p5,p50,p95`
/// - `ll-vs-n`: `generator,n,method,median_ll,mad`
pub fn emit_plot_data(data: &PlotData, kind: &str) -> Result<String> {
    let kind: PlotKind = kind.parse()?;
    if kind != data.kind() {
        return Err(Error::Input(format!("plot kind {kind:?} does not match the supplied {:?} data", data.kind())));
    }
    let mut s = String::new();
    match data {
        PlotData::Density(curves) => {
            s.push_str("x,method,density\n");
            for (method, pts) in curves {
                for (x, d) in pts {
                    s.push_str(&format!("{x},{method},{d}\n"));
                }
            }
        }
        PlotData::Gof(rows) => {
            s.push_str("stat,bin,observed,p5,p50,p95\n");
            for r in rows {
                s.push_str(&format!("{},{},{},{},{},{}\n", r.stat, r.bin, r.observed, r.p5, r.p50, r.p95));
            }
        }
        PlotData::LlVsN(rows) => {
            s.push_str("generator,n,method,median_ll,mad\n");
            for r in rows {
                s.push_str(&format!("\"{}\",{},{},{},{}\n", r.generator, r.n, r.method, r.median_ll, r.mad));
            }
        }
    }
    Ok(s)
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect(),
    }
}
