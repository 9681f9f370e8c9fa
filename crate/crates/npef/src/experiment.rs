//! Experiment drivers: held-out log-likelihood of density estimators on
//! synthetic data, and the exact 8-node ERGM/NERGM comparison.

use std::fmt;
use std::str::FromStr;

use npef_core::ergm::{chebyshev, exact_fit_ergm, exact_fit_nergm, exact_mass, ErgmModel, MassTable};
use npef_core::expfam::{fit_mle, FitOptions, StatisticSet};
use npef_core::graph::{enumerate_feature_histogram, example_graph_g8, stats, GraphStats};
use npef_core::kde::{self, KdeModel};
use npef_core::kernel::{KernelFamily, KernelSpec};
use npef_core::npexp::{default_bandwidth_grid, default_support, fit_cv, BetaSchedule, NpExpOptions, NpExpProblem};
use npef_core::quadrature::DEFAULT_POINTS_PER_DIM;
use npef_core::sample::SampleSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Data-generating distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// `w·N(mu1, sigma1²) + (1 − w)·N(mu2, sigma2²)`.
    Mixture2 {
        mu1: f64,
        sigma1: f64,
        mu2: f64,
        sigma2: f64,
        w: f64,
    },
    StudentT {
        df: f64,
    },
}

impl Generator {
    pub fn standard_mixture() -> Self {
        Generator::Mixture2 { mu1: -3.0, sigma1: 1.0, mu2: 3.0, sigma2: 1.0, w: 0.5 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Generator::Normal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Generator::Mixture2 { mu1, sigma1, mu2, sigma2, w } => {
                mu1.is_finite() && mu2.is_finite() && sigma1 > 0.0 && sigma2 > 0.0 && (0.0..=1.0).contains(&w)
            }
            Generator::StudentT { df } => df > 0.0 && df.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid generator parameters: {self}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Generator::Normal { mu, sigma } => {
                let d = Normal::new(mu, sigma).expect("validated");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            Generator::Mixture2 { mu1, sigma1, mu2, sigma2, w } => {
                let a = Normal::new(mu1, sigma1).expect("validated");
                let b = Normal::new(mu2, sigma2).expect("validated");
                (0..n).map(|_| if rng.random::<f64>() < w { a.sample(rng) } else { b.sample(rng) }).collect()
            }
            Generator::StudentT { df } => {
                let d = StudentT::new(df).expect("validated");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    }

    /// True `(E x, E x²)`, when finite.
    pub fn moments(&self) -> Option<[f64; 2]> {
        match *self {
            Generator::Normal { mu, sigma } => Some([mu, sigma * sigma + mu * mu]),
            Generator::Mixture2 { mu1, sigma1, mu2, sigma2, w } => Some([
                w * mu1 + (1.0 - w) * mu2,
                w * (sigma1 * sigma1 + mu1 * mu1) + (1.0 - w) * (sigma2 * sigma2 + mu2 * mu2),
            ]),
            Generator::StudentT { df } if df > 2.0 => Some([0.0, df / (df - 2.0)]),
            Generator::StudentT { .. } => None,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Generator::Normal { mu, sigma } => write!(f, "normal({mu},{sigma})"),
            Generator::Mixture2 { mu1, sigma1, mu2, sigma2, w } => {
                write!(f, "mixture({mu1},{sigma1},{mu2},{sigma2},{w})")
            }
            Generator::StudentT { df } => write!(f, "student-t({df})"),
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    /// `normal(0,1)`, `mixture(-3,1,3,1,0.5)`, `student-t(6)`; `name:args`
    /// also works, and a bare `mixture` or `normal` gets the defaults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], s[i + 1..].trim_end_matches(')')),
            None => (s, ""),
        };
        let v: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Input(format!("bad generator arguments in '{s}'")))?
        };
        let g = match (name, v.as_slice()) {
            ("normal", []) => Generator::Normal { mu: 0.0, sigma: 1.0 },
            ("normal", [mu, sigma]) => Generator::Normal { mu: *mu, sigma: *sigma },
            ("mixture", []) => Generator::standard_mixture(),
            ("mixture", [mu1, sigma1, mu2, sigma2, w]) => {
                Generator::Mixture2 { mu1: *mu1, sigma1: *sigma1, mu2: *mu2, sigma2: *sigma2, w: *w }
            }
            ("student-t" | "t", [df]) => Generator::StudentT { df: *df },
            _ => {
                return Err(Error::Input(format!(
                    "unknown generator '{s}'; expected normal(mu,sigma), mixture(mu1,s1,mu2,s2,w) or student-t(df)"
                )))
            }
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NPG")]
    Npg,
    #[serde(rename = "NPG-lgN")]
    NpgLgN,
    #[serde(rename = "CNPG")]
    Cnpg,
    #[serde(rename = "KDE")]
    Kde,
    #[serde(rename = "parametric-MLE")]
    ParametricMle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Npg, Method::NpgLgN, Method::Cnpg, Method::Kde, Method::ParametricMle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Npg => "NPG",
            Method::NpgLgN => "NPG-lgN",
            Method::Cnpg => "CNPG",
            Method::Kde => "KDE",
            Method::ParametricMle => "parametric-MLE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s.trim())).ok_or_else(|| {
            Error::Input(format!("unknown method '{s}'; expected NPG, NPG-lgN, CNPG, KDE or parametric-MLE"))
        })
    }
}

/// Bandwidth choice for kernel-based methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// K-fold cross-validation over a candidate grid, per method.
    Cv {
        grid: Vec<f64>,
        folds: usize,
    },
    Fixed(f64),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Cv { grid: default_bandwidth_grid(), folds: 5 }
    }
}

impl Bandwidth {
    fn max(&self) -> f64 {
        match self {
            Bandwidth::Cv { grid, .. } => grid.iter().cloned().fold(0.0, f64::max),
            Bandwidth::Fixed(h) => *h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: Generator,
    pub n_grid: Vec<usize>,
    pub eval_n: usize,
    pub seeds: Vec<u64>,
    pub schedule: BetaSchedule,
    pub bandwidth: Bandwidth,
    pub methods: Vec<Method>,
    pub points_per_dim: usize,
    pub tol: f64,
}

/// Evaluation-set size used when none is given.
pub const DEFAULT_EVAL_N: usize = 100_000;

impl ExperimentSpec {
    /// All methods, `n ∈ {10, 100, 1000}`, 20 seeds, CV bandwidths.
    pub fn new(generator: Generator) -> Self {
        ExperimentSpec {
            generator,
            n_grid: vec![10, 100, 1000],
            eval_n: DEFAULT_EVAL_N,
            seeds: (0..20).collect(),
            schedule: BetaSchedule::default(),
            bandwidth: Bandwidth::default(),
            methods: Method::ALL.to_vec(),
            points_per_dim: DEFAULT_POINTS_PER_DIM,
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] < 2 {
            return Err(Error::Input("n grid must be nonempty, strictly ascending and at least 2".into()));
        }
        if self.eval_n < 1000 {
            return Err(Error::Input(format!("evaluation set size {} below 1000", self.eval_n)));
        }
        if self.seeds.is_empty() || self.methods.is_empty() {
            return Err(Error::Input("need at least one seed and one method".into()));
        }
        match &self.bandwidth {
            Bandwidth::Cv { grid, folds } => {
                if grid.is_empty() || grid.iter().any(|h| !(*h > 0.0)) || *folds < 2 {
                    return Err(Error::Input("CV grid must be positive and folds at least 2".into()));
                }
            }
            Bandwidth::Fixed(h) if !(*h > 0.0 && h.is_finite()) => {
                return Err(Error::Input(format!("bandwidth must be positive, got {h}")));
            }
            _ => {}
        }
        if self.methods.contains(&Method::Cnpg) && self.generator.moments().is_none() {
            return Err(Error::Input(format!("CNPG needs finite true moments, {} has none", self.generator)));
        }
        Ok(())
    }
}

/// One (n, seed, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub generator: String,
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    /// Mean log-density over the evaluation set.
    pub heldout_ll: Option<f64>,
    pub nonzero: Option<usize>,
    pub h: Option<f64>,
    pub error: Option<String>,
}

/// Per (n, method) medians over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub generator: String,
    pub n: usize,
    pub method: Method,
    pub median_ll: f64,
    /// Median absolute deviation of the held-out LL (unscaled).
    pub mad: f64,
    pub median_nonzero: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityResults {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

fn stream_seed(seed: u64, n: u64, salt: u64) -> u64 {
    let mut x = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ n.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 31;
    x.wrapping_mul(0x94D0_49BB_1331_11EB)
}

/// Training sample for `(n, seed)`.
pub fn training_sample(g: &Generator, n: usize, seed: u64) -> Vec<f64> {
    g.sample(n, &mut ChaCha8Rng::seed_from_u64(stream_seed(seed, n as u64, 1)))
}

/// Evaluation set for `seed`, shared across `n` and methods.
pub fn evaluation_sample(g: &Generator, eval_n: usize, seed: u64) -> Vec<f64> {
    g.sample(eval_n, &mut ChaCha8Rng::seed_from_u64(stream_seed(seed, 0, 2)))
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mad(v: &[f64]) -> f64 {
    let mut c = v.to_vec();
    let m = median(&mut c);
    let mut d: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    median(&mut d)
}

fn mean_log_density(eval: &[f64], mut f: impl FnMut(&[f64]) -> npef_core::Result<f64>) -> Result<f64> {
    let mut s = 0.0;
    for x in eval {
        s += f(std::slice::from_ref(x))?;
    }
    Ok(s / eval.len() as f64)
}

/// Fits one method on `train` and scores it on `eval`:
/// `(held-out LL, nonzero count, bandwidth)`.
pub fn fit_and_score(
    spec: &ExperimentSpec,
    method: Method,
    train: &[f64],
    eval: &[f64],
) -> Result<(f64, Option<usize>, Option<f64>)> {
    let sample = SampleSet::from_1d(train)?;
    let support = default_support(&sample, spec.bandwidth.max(), spec.points_per_dim)?;
    let stats = StatisticSet::gaussian(1);
    let opts = NpExpOptions::with_tol(spec.tol);
    match method {
        Method::ParametricMle => {
            let m = fit_mle(&stats, &support, &sample, FitOptions::with_tol(spec.tol))?;
            Ok((mean_log_density(eval, |x| m.log_density(x))?, None, None))
        }
        Method::Kde => {
            let h = match &spec.bandwidth {
                Bandwidth::Cv { grid, folds } => kde::cv_bandwidth(&sample, KernelFamily::Gaussian, grid, *folds)?.h,
                Bandwidth::Fixed(h) => *h,
            };
            let m = KdeModel::new(sample, KernelSpec::gaussian(h))?;
            Ok((mean_log_density(eval, |x| m.log_density(x))?, None, Some(h)))
        }
        Method::Npg | Method::NpgLgN | Method::Cnpg => {
            let schedule =
                if method == Method::NpgLgN { BetaSchedule::inv_log(spec.schedule.scale) } else { spec.schedule };
            let mut problem = NpExpProblem::new(stats, support, KernelSpec::gaussian(spec.bandwidth.max()), schedule);
            if method == Method::Cnpg {
                let m = spec.generator.moments().ok_or_else(|| Error::Input("no true moments".into()))?;
                problem = problem.with_target(m.to_vec());
            }
            let (model, h) = match &spec.bandwidth {
                Bandwidth::Cv { grid, folds } => {
                    let (m, cv) = fit_cv(&sample, &problem, KernelFamily::Gaussian, grid, *folds, opts)?;
                    (m, cv.h)
                }
                Bandwidth::Fixed(h) => {
                    problem.kernel = KernelSpec::gaussian(*h);
                    (problem.fit(&sample, opts)?.0, *h)
                }
            };
            Ok((mean_log_density(eval, |x| model.log_density(x))?, Some(model.nonzero_count()), Some(h)))
        }
    }
}

/// Runs every (n, seed, method) cell. Cells run in parallel on the current
/// rayon pool; output order is fixed (n, then seed, then method order in the
/// spec). Failed fits are recorded in the cell's `error` column.
pub fn run_density_experiment(spec: &ExperimentSpec) -> Result<DensityResults> {
    spec.validate()?;
    let generator = spec.generator.to_string();
    let evals: Vec<Vec<f64>> =
        spec.seeds.par_iter().map(|&s| evaluation_sample(&spec.generator, spec.eval_n, s)).collect();
    let jobs: Vec<(usize, usize, Method)> = spec
        .n_grid
        .iter()
        .flat_map(|&n| (0..spec.seeds.len()).flat_map(move |k| spec.methods.iter().map(move |&m| (n, k, m))))
        .collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(n, k, method)| {
            let seed = spec.seeds[k];
            let train = training_sample(&spec.generator, n, seed);
            let mut cell = CellResult {
                generator: generator.clone(),
                n,
                seed,
                method,
                heldout_ll: None,
                nonzero: None,
                h: None,
                error: None,
            };
            match fit_and_score(spec, method, &train, &evals[k]) {
                Ok((ll, nz, h)) => {
                    cell.heldout_ll = Some(ll);
                    cell.nonzero = nz;
                    cell.h = h;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    let summary = summarize(spec, &cells);
    Ok(DensityResults { cells, summary })
}

pub fn summarize(spec: &ExperimentSpec, cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &n in &spec.n_grid {
        for &method in &spec.methods {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.n == n && c.method == method).collect();
            let lls: Vec<f64> = group.iter().filter_map(|c| c.heldout_ll).collect();
            let mut nz: Vec<f64> = group.iter().filter_map(|c| c.nonzero.map(|v| v as f64)).collect();
            rows.push(SummaryRow {
                generator: spec.generator.to_string(),
                n,
                method,
                median_ll: median(&mut lls.clone()),
                mad: mad(&lls),
                median_nonzero: median(&mut nz),
                failures: group.iter().filter(|c| c.error.is_some()).count(),
            });
        }
    }
    rows
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// `generator,n,seed,method,heldout_ll,nonzero,h,error`.
pub fn cells_csv(cells: &[CellResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(["generator", "n", "seed", "method", "heldout_ll", "nonzero", "h", "error"]).map_err(io)?;
    for c in cells {
        w.write_record([
            c.generator.clone(),
            c.n.to_string(),
            c.seed.to_string(),
            c.method.to_string(),
            opt(&c.heldout_ll),
            opt(&c.nonzero),
            opt(&c.h),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?).map_err(|e| Error::Input(e.to_string()))
}

/// `generator,n,method,median_ll,mad,median_nonzero,failures`.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("generator,n,method,median_ll,mad,median_nonzero,failures\n");
    for r in rows {
        s.push_str(&format!(
            "\"{}\",{},{},{},{},{},{}\n",
            r.generator, r.n, r.method, r.median_ll, r.mad, r.median_nonzero, r.failures
        ));
    }
    s
}

/// Exact ERGM and NERGM fits on the 8-node example graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G8Report {
    pub edges: Vec<(usize, usize)>,
    pub observed: GraphStats,
    pub h: f64,
    pub beta: f64,
    pub ergm: ErgmModel,
    pub nergm: ErgmModel,
    pub ergm_mode: GraphStats,
    pub nergm_mode: GraphStats,
    pub ergm_mode_distance: u64,
    pub nergm_mode_distance: u64,
    /// Half-widths of the neighbourhood box in (edges, triangles).
    pub box_half_width: (u64, u64),
    pub ergm_box_mass: f64,
    pub nergm_box_mass: f64,
    pub ergm_total_mass: f64,
    pub nergm_total_mass: f64,
}

pub struct G8Result {
    pub report: G8Report,
    pub ergm_mass: MassTable,
    pub nergm_mass: MassTable,
}

/// Enumerates all 8-node graphs, fits both models exactly and compares their
/// mass near the observed statistics.
pub fn run_g8_experiment(h: f64, beta: f64) -> Result<G8Result> {
    let g = example_graph_g8();
    let observed = stats(&g);
    if observed != GraphStats::new(22, 29) {
        return Err(Error::Input(format!("example graph has statistics {observed:?}, expected (22, 29)")));
    }
    let hist = enumerate_feature_histogram(8)?;
    let ergm = exact_fit_ergm(observed, &hist, 1e-9)?;
    let nergm = exact_fit_nergm(&g, &hist, h, beta, 1e-9)?;
    let ergm_mass = exact_mass(&ergm, &hist)?;
    let nergm_mass = exact_mass(&nergm, &hist)?;
    let (de, dt) = (2, 5);
    let report = G8Report {
        edges: g.edges().collect(),
        observed,
        h,
        beta,
        ergm_mode: ergm_mass.mode(),
        nergm_mode: nergm_mass.mode(),
        ergm_mode_distance: chebyshev(ergm_mass.mode(), observed),
        nergm_mode_distance: chebyshev(nergm_mass.mode(), observed),
        box_half_width: (de, dt),
        ergm_box_mass: ergm_mass.box_mass(observed, de, dt),
        nergm_box_mass: nergm_mass.box_mass(observed, de, dt),
        ergm_total_mass: ergm_mass.total(),
        nergm_total_mass: nergm_mass.total(),
        ergm,
        nergm,
    };
    Ok(G8Result { report, ergm_mass, nergm_mass })
}

/// `edges,triangles,mass` for every attainable cell.
pub fn mass_csv(t: &MassTable) -> String {
    let mut s = String::from("edges,triangles,mass\n");
    for (st, p) in &t.cells {
        s.push_str(&format!("{},{},{}\n", st.edges, st.triangles, p));
    }
    s
}
