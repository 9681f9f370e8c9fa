//! File formats: sample CSV, model JSON, edge lists, histogram CSV and
//! goodness-of-fit reports.

use std::fs;
use std::path::{Path, PathBuf};

use npef_core::ergm::{ErgmModel, GofRow};
use npef_core::expfam::ExpFamModel;
use npef_core::graph::{format_edge_list, parse_edge_list, FeatureHistogram, GofReport, Graph};
use npef_core::kde::KdeModel;
use npef_core::npexp::NpExpModel;
use npef_core::sample::SampleSet;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Any model the CLI writes, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SavedModel {
    ExpFamily(ExpFamModel),
    NpExp(NpExpModel),
    Kde(KdeModel),
    Ergm(ErgmModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::ExpFamily(_) => "exp-family",
            SavedModel::NpExp(_) => "np-exp",
            SavedModel::Kde(_) => "kde",
            SavedModel::Ergm(_) => "ergm",
        }
    }

    /// Log-density of a continuous model; `None` for graph models.
    pub fn log_density(&self, x: &[f64]) -> Option<npef_core::Result<f64>> {
        match self {
            SavedModel::ExpFamily(m) => Some(m.log_density(x)),
            SavedModel::NpExp(m) => Some(m.log_density(x)),
            SavedModel::Kde(m) => Some(m.log_density(x)),
            SavedModel::Ergm(_) => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SavedModel::ExpFamily(m) => Some(m.support.dim()),
            SavedModel::NpExp(m) => Some(m.base.support.dim()),
            SavedModel::Kde(m) => Some(m.kernel().dim),
            SavedModel::Ergm(_) => None,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    s.push('\n');
    write_text(path, &s)
}

/// Parses sample CSV text: one observation per row, equal column counts, an
/// optional non-numeric header row.
pub fn parse_samples_csv(text: &str, origin: &Path) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut dim = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(origin, e))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if k == 0 => continue,
            Err(e) => return Err(Error::parse(origin, format!("row {}: {e}", k + 1))),
        };
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::parse(origin, format!("row {} has {} columns, expected {d}", k + 1, row.len())))
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::parse(origin, "no observations"))?;
    let source = origin.display().to_string();
    Ok(SampleSet::new(dim, data)?.with_source(source))
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    parse_samples_csv(&read_text(path)?, path)
}

pub fn write_samples(path: &Path, sample: &SampleSet) -> Result<()> {
    let mut s = String::new();
    for x in sample.points() {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write_text(path, &s)
}

/// Reads an edge list; `n` overrides any `# nodes` declaration.
pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<Graph> {
    parse_edge_list(&read_text(path)?, n).map_err(|e| Error::parse(path, e))
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    write_text(path, &format_edge_list(g))
}

pub fn write_histogram(path: &Path, h: &FeatureHistogram) -> Result<()> {
    write_text(path, &h.to_csv())
}

/// Reads `edges,triangles,count` rows for an `n`-node histogram.
pub fn read_histogram(path: &Path, n: usize) -> Result<FeatureHistogram> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<(u64, u64, u64)>() {
        rows.push(rec.map_err(|e| Error::parse(path, e))?);
    }
    FeatureHistogram::from_entries(n, rows).map_err(|e| Error::parse(path, e))
}

/// Long-form CSV of one GoF report: `stat,bin,value`.
pub fn gof_report_csv(r: &GofReport) -> String {
    let mut s = String::from("stat,bin,value\n");
    for (name, values, offset) in r.families() {
        for (k, v) in values.iter().enumerate() {
            s.push_str(&format!("{name},{},{v}\n", k + offset));
        }
    }
    s.push_str(&format!("unreachable,0,{}\n", r.unreachable_fraction));
    s
}

/// `stat,bin,observed,p5,p50,p95,covered`.
pub fn gof_rows_csv(rows: &[GofRow]) -> String {
    let mut s = String::from("stat,bin,observed,p5,p50,p95,covered\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{},{}\n", r.stat, r.bin, r.observed, r.p5, r.p50, r.p95, r.covered));
    }
    s
}

/// Edge-list files of a directory in name order.
pub fn read_graph_dir(dir: &Path, n: Option<usize>) -> Result<Vec<Graph>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "edges" || x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!("{}: no .edges or .txt files", dir.display())));
    }
    paths.iter().map(|p| read_edge_list(p, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_is_optional() {
        let p = Path::new("mem.csv");
        let a = parse_samples_csv("x,y\n1,2\n3,4\n", p).unwrap();
        let b = parse_samples_csv("1,2\n3,4\n\n", p).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_eq!(a.dim(), 2);
        assert!(parse_samples_csv("1,2\n3\n", p).is_err());
        assert!(parse_samples_csv("1\nfoo\n", p).is_err());
        assert!(parse_samples_csv("x\n", p).is_err());
    }
}
