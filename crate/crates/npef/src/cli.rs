//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use npef_core::ergm::{
    exact_fit_ergm, exact_fit_nergm, gibbs_sample, gof_compare, mcmcmle_fit, ChainConfig, ChainInit, ErgmModel,
    MleOptions, DEFAULT_GRAPH_BANDWIDTH, DEFAULT_STEP_SIZE,
};
use npef_core::expfam::{fit_mle, FitOptions, StatisticSet};
use npef_core::graph::{enumerate_feature_histogram, gof, stats, FeatureHistogram, Graph, MAX_ENUMERATION_NODES};
use npef_core::kde::{self, KdeModel};
use npef_core::kernel::{KernelFamily, KernelSpec};
use npef_core::npexp::{
    default_bandwidth_grid, default_support, fit_cv, BetaSchedule, NpExpOptions, NpExpProblem, DEFAULT_BETA_SCALE,
};
use npef_core::quadrature::DEFAULT_POINTS_PER_DIM;

use crate::error::{Error, Result};
use crate::experiment::{
    cells_csv, mass_csv, run_density_experiment, run_g8_experiment, summary_csv, Bandwidth, ExperimentSpec, Generator,
    Method, SummaryRow, DEFAULT_EVAL_N,
};
use crate::io::{
    gof_report_csv, gof_rows_csv, read_edge_list, read_graph_dir, read_histogram, read_json, read_samples, read_text,
    write_edge_list, write_histogram, write_json, write_text, SavedModel,
};
use crate::plots::{emit_plot_data, linspace, PlotData};

#[derive(Debug, Parser)]
#[command(name = "npef", version, about = "Non-parametric exponential families and mass-preserving ERGMs")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress informational output on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a density to a sample CSV.
    FitDensity(FitDensityArgs),
    /// Per-point log-density of a sample under a saved model.
    EvalDensity(EvalDensityArgs),
    /// Kernel density estimate with fixed or cross-validated bandwidth.
    Kde(KdeArgs),
    /// Fit an ERGM on edges and triangles.
    FitErgm(GraphFitArgs),
    /// Fit a mass-preserving ERGM.
    FitNergm(GraphFitArgs),
    /// Draw graphs from a saved ERGM by Gibbs sampling.
    SampleGraphs(SampleGraphsArgs),
    /// Goodness-of-fit statistics, alone or against a directory of samples.
    Gof(GofArgs),
    /// Exact (edges, triangles) histogram over all labeled graphs.
    Enumerate(EnumerateArgs),
    /// Held-out log-likelihood of density estimators on synthetic data.
    ExperimentDensity(ExperimentDensityArgs),
    /// Exact ERGM vs NERGM on the 8-node example graph.
    ExperimentG8(ExperimentG8Args),
    /// Long-form CSV for plotting.
    EmitPlots(EmitPlotsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    InvSqrt,
    InvLog,
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Uniform,
    Smoothed,
    Quadratic,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Uniform => KernelFamily::Uniform,
            KernelArg::Smoothed => KernelFamily::Smoothed,
            KernelArg::Quadratic => KernelFamily::Quadratic,
        }
    }
}

/// `cv` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HArg {
    Cv,
    Fixed(f64),
}

impl std::str::FromStr for HArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "cv" {
            return Ok(HArg::Cv);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(HArg::Fixed(h)),
            _ => Err(format!("expected 'cv' or a positive bandwidth, got '{s}'")),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitDensityArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `gaussian`, or a comma list such as `x,x^2` or `x0,x1,x0^2,x0*x1,x1^2`.
    #[arg(long, default_value = "gaussian")]
    pub stats: String,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelArg,
    #[arg(long, default_value = "cv")]
    pub h: HArg,
    #[arg(long, value_enum, default_value = "inv-sqrt")]
    pub beta_schedule: ScheduleArg,
    #[arg(long, default_value_t = DEFAULT_BETA_SCALE)]
    pub beta_scale: f64,
    /// Fit to these moments instead of the sample's, e.g. "0,10".
    #[arg(long)]
    pub target_moments: Option<String>,
    /// Fit the plain exponential family (no kernel features).
    #[arg(long)]
    pub parametric: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_DIM)]
    pub points_per_dim: usize,
    /// Candidate bandwidths for `--h cv`, comma separated.
    #[arg(long)]
    pub h_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalDensityArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Per-point CSV (coordinates then log_density); stdout summary only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelArg,
    #[arg(long, default_value = "cv")]
    pub h: HArg,
    #[arg(long)]
    pub h_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a density curve `x,density` (1-D only).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Exact,
    Mcmc,
}

#[derive(Debug, Args)]
pub struct GraphFitArgs {
    /// Edge list of the observed graph.
    #[arg(long)]
    pub graph: PathBuf,
    /// Node count (overrides the file's `# nodes` line).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: FitMode,
    /// Precomputed histogram CSV for exact mode (enumerated otherwise).
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRAPH_BANDWIDTH)]
    pub h: f64,
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_SIZE)]
    pub step_size: f64,
    /// Gradient steps in MCMC mode.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub thinning: usize,
    /// Draws per MCMC sample.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleGraphsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Start the chain at this graph (otherwise from the empty graph).
    #[arg(long)]
    pub observed: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub thinning: usize,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub samples_dir: Option<PathBuf>,
    /// `.json` for JSON, anything else for CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentDensityArgs {
    /// normal(mu,sigma), mixture(mu1,s1,mu2,s2,w) or student-t(df).
    #[arg(long, default_value = "mixture(-3,1,3,1,0.5)")]
    pub generator: String,
    /// Sample sizes, comma separated.
    #[arg(long, default_value = "10,100,1000")]
    pub n: String,
    #[arg(long, default_value_t = DEFAULT_EVAL_N)]
    pub eval_n: usize,
    /// Number of seeds; seeds are `--seed`, `--seed + 1`, ...
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Methods, comma separated.
    #[arg(long, default_value = "NPG,NPG-lgN,CNPG,KDE,parametric-MLE")]
    pub methods: String,
    #[arg(long, default_value = "cv")]
    pub h: HArg,
    #[arg(long)]
    pub h_grid: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value = "inv-sqrt")]
    pub beta_schedule: ScheduleArg,
    #[arg(long, default_value_t = DEFAULT_BETA_SCALE)]
    pub beta_scale: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_DIM)]
    pub points_per_dim: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Per-cell results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per (n, method) medians CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentG8Args {
    #[arg(long, default_value_t = DEFAULT_GRAPH_BANDWIDTH)]
    pub h: f64,
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmitPlotsArgs {
    /// density, gof or ll-vs-n.
    #[arg(long)]
    pub kind: String,
    /// Model JSON files (density), a comparison JSON from `gof` (gof), or a
    /// summary CSV (ll-vs-n).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = -10.0)]
    pub from: f64,
    #[arg(long, default_value_t = 10.0)]
    pub to: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn schedule(kind: ScheduleArg, scale: f64) -> Result<BetaSchedule> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Input(format!("beta scale must be nonnegative, got {scale}")));
    }
    Ok(match kind {
        ScheduleArg::InvSqrt => BetaSchedule::inv_sqrt(scale),
        ScheduleArg::InvLog => BetaSchedule::inv_log(scale),
        ScheduleArg::Const => BetaSchedule::constant(scale),
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| Error::Input(format!("bad {what} '{v}' in '{s}'"))))
        .collect()
}

fn h_grid(s: &Option<String>) -> Result<Vec<f64>> {
    match s {
        Some(s) => parse_list(s, "bandwidth"),
        None => Ok(default_bandwidth_grid()),
    }
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { seed: cli.seed, quiet: cli.quiet };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(Error::Input("--threads must be at least 1".into()));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::Input(e.to_string()))?
    };
    pool.install(|| dispatch(&ctx, cli.command))
}

fn dispatch(ctx: &Ctx, cmd: Command) -> Result<()> {
    match cmd {
        Command::FitDensity(a) => fit_density(ctx, a),
        Command::EvalDensity(a) => eval_density(ctx, a),
        Command::Kde(a) => kde_cmd(ctx, a),
        Command::FitErgm(a) => fit_graph(ctx, a, false),
        Command::FitNergm(a) => fit_graph(ctx, a, true),
        Command::SampleGraphs(a) => sample_graphs(ctx, a),
        Command::Gof(a) => gof_cmd(ctx, a),
        Command::Enumerate(a) => enumerate(ctx, a),
        Command::ExperimentDensity(a) => experiment_density(ctx, a),
        Command::ExperimentG8(a) => experiment_g8(ctx, a),
        Command::EmitPlots(a) => emit_plots(ctx, a),
    }
}

fn statistic_set(spec: &str, dim: usize) -> Result<StatisticSet> {
    if spec == "gaussian" {
        Ok(StatisticSet::gaussian(dim))
    } else {
        Ok(StatisticSet::parse(dim, spec)?)
    }
}

fn fit_density(ctx: &Ctx, a: FitDensityArgs) -> Result<()> {
    let sample = read_samples(&a.input)?;
    let stats = statistic_set(&a.stats, sample.dim())?;
    let grid = h_grid(&a.h_grid)?;
    let h_max = match a.h {
        HArg::Cv => grid.iter().cloned().fold(0.0, f64::max),
        HArg::Fixed(h) => h,
    };
    let support = default_support(&sample, h_max, a.points_per_dim)?;
    let target = a.target_moments.as_deref().map(|s| parse_list::<f64>(s, "moment")).transpose()?;
    if a.parametric {
        let opts = FitOptions::with_tol(a.tol);
        let m = match &target {
            Some(t) => npef_core::expfam::fit_moments(&stats, &support, t, opts)?,
            None => fit_mle(&stats, &support, &sample, opts)?,
        };
        ctx.info(format!("log-likelihood per point {:.6}", m.log_likelihood(&sample)? / sample.len() as f64));
        return write_json(&a.out, &SavedModel::ExpFamily(m));
    }
    let family: KernelFamily = a.kernel.into();
    let kernel = KernelSpec::new(family, h_max, sample.dim())?;
    let mut problem = NpExpProblem::new(stats, support, kernel, schedule(a.beta_schedule, a.beta_scale)?);
    if let Some(t) = target {
        problem = problem.with_target(t);
    }
    let opts = NpExpOptions::with_tol(a.tol);
    let model = match a.h {
        HArg::Cv => {
            let (m, cv) = fit_cv(&sample, &problem, family, &grid, a.folds, opts)?;
            ctx.info(format!("cross-validated bandwidth {}", cv.h));
            m
        }
        HArg::Fixed(_) => {
            let (m, rep) = problem.fit(&sample, opts)?;
            ctx.info(format!("converged in {} iterations", rep.iterations));
            m
        }
    };
    ctx.info(format!("nonzero augmented parameters {} of {}", model.nonzero_count(), sample.len()));
    write_json(&a.out, &SavedModel::NpExp(model))
}

fn eval_density(_ctx: &Ctx, a: EvalDensityArgs) -> Result<()> {
    let model: SavedModel = read_json(&a.model)?;
    let sample = read_samples(&a.input)?;
    if let Some(d) = model.dim() {
        if d != sample.dim() {
            return Err(npef_core::Error::DimensionMismatch { expected: d, got: sample.dim() }.into());
        }
    }
    let mut out = String::new();
    let cols: Vec<String> = (0..sample.dim()).map(|k| format!("x{k}")).collect();
    out.push_str(&format!("{},log_density\n", cols.join(",")));
    let mut total = 0.0;
    for x in sample.points() {
        let ld = model.log_density(x).ok_or_else(|| {
            Error::Input(format!("{} is a {} model, not a density", a.model.display(), model.kind()))
        })??;
        total += ld;
        let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{},{ld}\n", xs.join(",")));
    }
    if let Some(p) = &a.out {
        write_text(p, &out)?;
    }
    println!("total_log_density={total} mean_log_density={} n={}", total / sample.len() as f64, sample.len());
    Ok(())
}

fn kde_cmd(ctx: &Ctx, a: KdeArgs) -> Result<()> {
    let sample = read_samples(&a.input)?;
    let family: KernelFamily = a.kernel.into();
    let h = match a.h {
        HArg::Cv => {
            let cv = kde::cv_bandwidth(&sample, family, &h_grid(&a.h_grid)?, a.folds)?;
            ctx.info(format!("cross-validated bandwidth {}", cv.h));
            cv.h
        }
        HArg::Fixed(h) => h,
    };
    let model = KdeModel::new(sample.clone(), KernelSpec::new(family, h, sample.dim())?)?;
    if let Some(path) = &a.curve {
        if sample.dim() != 1 {
            return Err(Error::Input("density curves are only available in one dimension".into()));
        }
        let (lo, hi) = sample.bounds();
        let pad = 4.0 * h;
        let mut s = String::from("x,density\n");
        for x in linspace(lo[0] - pad, hi[0] + pad, a.curve_points) {
            s.push_str(&format!("{x},{}\n", model.density(&[x])?));
        }
        write_text(path, &s)?;
    }
    write_json(&a.out, &SavedModel::Kde(model))
}

fn load_histogram(ctx: &Ctx, path: &Option<PathBuf>, n: usize) -> Result<FeatureHistogram> {
    match path {
        Some(p) => read_histogram(p, n),
        None => {
            if n > MAX_ENUMERATION_NODES {
                return Err(Error::Input(format!(
                    "exact mode enumerates all graphs and supports at most {MAX_ENUMERATION_NODES} nodes; use --mode mcmc"
                )));
            }
            ctx.info(format!("enumerating all graphs on {n} nodes"));
            Ok(enumerate_feature_histogram(n)?)
        }
    }
}

fn fit_graph(ctx: &Ctx, a: GraphFitArgs, augmented: bool) -> Result<()> {
    let g = read_edge_list(&a.graph, a.nodes)?;
    let obs = stats(&g);
    ctx.info(format!("observed graph: {} nodes, {} edges, {} triangles", g.n(), obs.edges, obs.triangles));
    let model = match a.mode {
        FitMode::Exact => {
            let hist = load_histogram(ctx, &a.histogram, g.n())?;
            if augmented {
                exact_fit_nergm(&g, &hist, a.h, a.beta, a.tol)?
            } else {
                exact_fit_ergm(obs, &hist, a.tol)?
            }
        }
        FitMode::Mcmc => {
            let template = if augmented {
                ErgmModel::nergm(g.n(), obs, a.h, a.beta)?
            } else {
                ErgmModel::ergm(g.n(), [0.0; 2], npef_core::ergm::observed_scale(obs))
            };
            let chain = ChainConfig {
                burn_in: a.burn_in,
                thinning: a.thinning,
                num_samples: a.samples,
                init: ChainInit::ObservedGraph,
                seed: ctx.seed,
            };
            let opts = MleOptions { steps: a.steps, step_size: a.step_size, ..Default::default() };
            let (m, rep) = mcmcmle_fit(&g, &template, &chain, &opts)?;
            ctx.info(format!("{} resamples, final residual {:?}", rep.resamples, rep.residual));
            m
        }
    };
    ctx.info(format!("lambda (rescaled) {:?}, lambda_a {}", model.lambda, model.lambda_a()));
    write_json(&a.out, &SavedModel::Ergm(model))
}

fn load_ergm(path: &Path) -> Result<ErgmModel> {
    match read_json::<SavedModel>(path)? {
        SavedModel::Ergm(m) => Ok(m),
        other => Err(Error::Input(format!("{} holds a {} model, expected an ERGM", path.display(), other.kind()))),
    }
}

fn sample_graphs(ctx: &Ctx, a: SampleGraphsArgs) -> Result<()> {
    let model = load_ergm(&a.model)?;
    let observed = a.observed.as_ref().map(|p| read_edge_list(p, Some(model.n))).transpose()?;
    let cfg = ChainConfig {
        burn_in: a.burn_in,
        thinning: a.thinning,
        num_samples: a.count,
        init: if observed.is_some() { ChainInit::ObservedGraph } else { ChainInit::Empty },
        seed: ctx.seed,
    };
    let (draws, diag) = gibbs_sample(&model, observed.as_ref(), &cfg)?;
    let width = a.count.max(1).to_string().len();
    for (k, g) in draws.iter().enumerate() {
        write_edge_list(&a.out_dir.join(format!("sample_{k:0width$}.edges")), g)?;
    }
    write_json(&a.out_dir.join("diagnostics.json"), &diag)?;
    ctx.info(format!(
        "{} draws: {} unique graphs, {} unique feature tuples, max hops {}",
        draws.len(),
        diag.unique_graphs,
        diag.unique_feature_tuples,
        diag.max_hops
    ));
    Ok(())
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "json")
}

fn gof_cmd(ctx: &Ctx, a: GofArgs) -> Result<()> {
    let observed = read_edge_list(&a.observed, None)?;
    match &a.samples_dir {
        None => {
            let r = gof(&observed);
            if is_json(&a.out) {
                write_json(&a.out, &r)
            } else {
                write_text(&a.out, &gof_report_csv(&r))
            }
        }
        Some(dir) => {
            let samples = read_graph_dir(dir, Some(observed.n()))?;
            let rows = gof_compare(&observed, &samples)?;
            let covered = rows.iter().filter(|r| r.covered).count();
            ctx.info(format!("{covered} of {} bins covered by the 5-95% band", rows.len()));
            if is_json(&a.out) {
                write_json(&a.out, &rows)
            } else {
                write_text(&a.out, &gof_rows_csv(&rows))
            }
        }
    }
}

fn enumerate(ctx: &Ctx, a: EnumerateArgs) -> Result<()> {
    let t = std::time::Instant::now();
    let h = enumerate_feature_histogram(a.n)?;
    ctx.info(format!("{} graphs in {:.2?}", h.total(), t.elapsed()));
    write_histogram(&a.out, &h)
}

fn experiment_density(ctx: &Ctx, a: ExperimentDensityArgs) -> Result<()> {
    let generator: Generator = a.generator.parse()?;
    let methods: Vec<Method> = parse_list(&a.methods, "method")?;
    let bandwidth = match a.h {
        HArg::Cv => Bandwidth::Cv { grid: h_grid(&a.h_grid)?, folds: a.folds },
        HArg::Fixed(h) => Bandwidth::Fixed(h),
    };
    let spec = ExperimentSpec {
        generator,
        n_grid: parse_list(&a.n, "sample size")?,
        eval_n: a.eval_n,
        seeds: (0..a.seeds).map(|k| ctx.seed + k).collect(),
        schedule: schedule(a.beta_schedule, a.beta_scale)?,
        bandwidth,
        methods,
        points_per_dim: a.points_per_dim,
        tol: a.tol,
    };
    let t = std::time::Instant::now();
    let res = run_density_experiment(&spec)?;
    write_text(&a.out, &cells_csv(&res.cells)?)?;
    if let Some(p) = &a.summary {
        write_text(p, &summary_csv(&res.summary))?;
    }
    for r in &res.summary {
        ctx.info(format!(
            "n={:<5} {:<15} median LL {:.4} (MAD {:.4}), median nonzero {}, failures {}",
            r.n,
            r.method.name(),
            r.median_ll,
            r.mad,
            r.median_nonzero,
            r.failures
        ));
    }
    ctx.info(format!("{} cells in {:.1?}", res.cells.len(), t.elapsed()));
    Ok(())
}

fn experiment_g8(ctx: &Ctx, a: ExperimentG8Args) -> Result<()> {
    let res = run_g8_experiment(a.h, a.beta)?;
    let r = &res.report;
    write_text(&a.out_dir.join("ergm_mass.csv"), &mass_csv(&res.ergm_mass))?;
    write_text(&a.out_dir.join("nergm_mass.csv"), &mass_csv(&res.nergm_mass))?;
    write_edge_list(&a.out_dir.join("g8.edges"), &Graph::from_edges(8, &r.edges)?)?;
    write_json(&a.out_dir.join("report.json"), r)?;
    ctx.info(format!(
        "ERGM mode ({}, {}) box mass {:.4}; NERGM mode ({}, {}) box mass {:.4}",
        r.ergm_mode.edges,
        r.ergm_mode.triangles,
        r.ergm_box_mass,
        r.nergm_mode.edges,
        r.nergm_mode.triangles,
        r.nergm_box_mass
    ));
    Ok(())
}

/// Reads a summary CSV written by `experiment-density --summary`.
pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = read_text(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(|e| Error::Input(format!("{}: {e}", path.display())))).collect()
}

fn emit_plots(ctx: &Ctx, a: EmitPlotsArgs) -> Result<()> {
    let data = match a.kind.as_str() {
        "density" => {
            let xs = linspace(a.from, a.to, a.points);
            let mut curves = Vec::new();
            for p in &a.input {
                let m: SavedModel = read_json(p)?;
                if m.dim() != Some(1) {
                    return Err(Error::Input(format!("{}: density curves need a 1-D density model", p.display())));
                }
                let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| m.kind().into());
                let mut pts = Vec::with_capacity(xs.len());
                for &x in &xs {
                    let ld = m.log_density(&[x]).expect("1-D density model")?;
                    pts.push((x, ld.exp()));
                }
                curves.push((name, pts));
            }
            PlotData::Density(curves)
        }
        "gof" => {
            let mut rows = Vec::new();
            for p in &a.input {
                rows.extend(read_json::<Vec<npef_core::ergm::GofRow>>(p)?);
            }
            PlotData::Gof(rows)
        }
        "ll-vs-n" => {
            let mut rows = Vec::new();
            for p in &a.input {
                rows.extend(read_summary_csv(p)?);
            }
            PlotData::LlVsN(rows)
        }
        _ => PlotData::Density(Vec::new()),
    };
    let csv = emit_plot_data(&data, &a.kind)?;
    write_text(&a.out, &csv)?;
    ctx.info(format!("wrote {}", a.out.display()));
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit code, printing a
/// single `error[<class>]: ...` line on failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first =
                e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("error[input]: {first}");
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", crate::error::error_line(&e));
            e.class().exit_code()
        }
    }
}
