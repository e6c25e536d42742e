//! Command-line front end.
//!
//! Every command writes its results and a `<command>.manifest.json` into the
//! `--out` directory. Exit codes: 0 on success, 1 on invalid input or
//! configuration, 2 on numerical failure.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use coxfuse_core::inference::debias_and_intervals;
use coxfuse_core::predict::{cohesion_predict, make_folds};
use coxfuse_core::simulate::Simulator;
use coxfuse_core::solver::{fit, LineSearch};
use coxfuse_core::{CvConfig, DebiasConfig, PenaltyConfig, RegionGraph, ScoreMetric, SolverConfig, TuningGrid};
use serde_json::json;

use crate::drivers::{run_bench, tune_parallel, with_threads, BenchConfig, Tuning};
use crate::dto::{
    CellScoreDoc, CovarianceName, CvDoc, FitDoc, FusionName, GridSpec, InferenceDoc, PenaltyDoc, PredictDoc,
    ScenarioSpec, SolverDoc, SCHEMA_VERSION,
};
use crate::error::CliError;
use crate::io::{self, format_float};
use crate::manifest::{manifest_path, read_json, write_json, ManifestBuilder};
use crate::standardize::Standardization;

#[derive(Debug, Parser)]
#[command(
    name = "coxfuse",
    version,
    about = "Penalized Poisson fits, de-biased inference and simulation for spatial counts on a region graph"
)]
pub struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw replicates of a scenario and write them as input files.
    Simulate(SimulateArgs),
    /// Fit baselines and covariate effects.
    Fit(FitArgs),
    /// De-biased estimates and confidence intervals from a fit.
    Infer(InferArgs),
    /// Select (gamma, tau) by cross-validation and refit.
    Cv(CvArgs),
    /// Predict baselines of regions added to the graph.
    Predict(PredictArgs),
    /// Coverage, type I error and power over simulated replicates.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Region file: region_id,area,offset,count.
    #[arg(long)]
    pub regions: PathBuf,
    /// Covariate file: region_id,x1,...,xp.
    #[arg(long)]
    pub covariates: PathBuf,
    /// Edge file: region_i,region_j[,weight].
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    #[arg(long, value_enum, default_value = "l2")]
    pub fusion: FusionName,
    /// Fusion penalty weight.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Covariate lasso weight.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Smoothing parameter of the l1 fusion (default 0.01 / edges).
    #[arg(long)]
    pub xi: Option<f64>,
    /// Ridge added to the Laplacian of the l2 fusion.
    #[arg(long, default_value_t = coxfuse_core::graph::DEFAULT_RIDGE)]
    pub delta: f64,
}

impl PenaltyArgs {
    fn config(&self) -> PenaltyConfig {
        PenaltyConfig {
            gamma: self.gamma,
            tau: self.tau,
            fusion: self.fusion.into(),
            xi: self.xi,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LineSearchName {
    Armijo,
    Literal,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative objective change at which iteration stops.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Alternate between the baseline and covariate blocks.
    #[arg(long)]
    pub block_alternating: bool,
    #[arg(long, value_enum, default_value = "armijo")]
    pub line_search: LineSearchName,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            block_alternating: self.block_alternating,
            line_search: match self.line_search {
                LineSearchName::Armijo => LineSearch::Armijo,
                LineSearchName::Literal => LineSearch::Literal,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DebiasArgs {
    /// Constraint level of the de-biasing program (default 0.1·sqrt(ln(max(p, 2)) / n)).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum, default_value = "sandwich")]
    pub covariance: CovarianceName,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Use the fit even if the solver did not converge.
    #[arg(long)]
    pub allow_unconverged: bool,
}

impl DebiasArgs {
    fn config(&self) -> DebiasConfig {
        DebiasConfig {
            eta: self.eta,
            covariance: self.covariance.into(),
            level: self.level,
            allow_unconverged: self.allow_unconverged,
            ..DebiasConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricName {
    Mse,
    Deviance,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Center and scale covariates before fitting; results are reported on
    /// the original scale.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// fit.json written by `fit` or the `fit` member of `cv` output.
    #[arg(long)]
    pub fit: PathBuf,
    #[command(flatten)]
    pub debias: DebiasArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Grid JSON: {"gamma": [...], "tau": [...], "fusion": "l1"|"l2", "k": 5, "seed": 1}.
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "mse")]
    pub metric: MetricName,
    #[arg(long)]
    pub standardize: bool,
    /// Overrides the grid seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// fit.json of the training regions.
    #[arg(long)]
    pub fit: PathBuf,
    /// Edge file of the extended graph.
    #[arg(long)]
    pub edges: PathBuf,
    /// Region file covering the held-out regions; enables mean predictions.
    #[arg(long, requires = "covariates")]
    pub regions: Option<PathBuf>,
    #[arg(long, requires = "regions")]
    pub covariates: Option<PathBuf>,
    /// Ridge of the Laplacian used for prediction.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub replicates: usize,
    /// Grid JSON; without it every replicate uses --gamma and --tau.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub debias: DebiasArgs,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                crate::error::EXIT_VALIDATION
            } else {
                0
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Infer(a) => infer(a),
        Command::Cv(a) => with_threads(threads, || cv(a))?,
        Command::Predict(a) => predict(a),
        Command::Bench(a) => with_threads(threads, || bench(a))?,
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::File {
        path: dir.to_path_buf(),
        source,
    })
}

fn data_inputs(m: ManifestBuilder, d: &DataArgs) -> ManifestBuilder {
    m.input(&d.regions).input(&d.covariates).input(&d.edges)
}

fn load(d: &DataArgs) -> Result<(coxfuse_core::Dataset, RegionGraph), CliError> {
    Ok(io::load_dataset(&d.regions, &d.covariates, &d.edges)?)
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut spec: ScenarioSpec = read_json(&a.scenario)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let sc = spec.to_scenario();
    let sim = Simulator::new(sc.clone())?;
    create_dir(&a.out)?;
    let g = sc.graph();
    let ids = g.region_ids().to_vec();
    let mut seeds = Vec::with_capacity(a.replicates);
    for r in 0..a.replicates {
        let seed = sim.replicate_seed(r as u64);
        let rep = sim.generate(seed);
        let dir = a.out.join(format!("rep_{r:04}"));
        create_dir(&dir)?;
        io::write_regions(&dir.join("regions.csv"), &rep.dataset, &ids)?;
        io::write_covariates(&dir.join("covariates.csv"), &rep.dataset, &ids)?;
        io::write_edges(&dir.join("edges.csv"), &g)?;
        io::write_latent(&dir.join("latent.csv"), &sc, &rep.latent, &ids)?;
        seeds.push(seed);
    }
    let resolved = ScenarioSpec {
        beta_true: Some(sc.beta_true.clone()),
        grf_range: Some(sc.grf_range),
        fine_grid: Some(sc.fine_grid),
        ..spec
    };
    write_json(&a.out.join("scenario.json"), &resolved)?;
    let m = ManifestBuilder::start("simulate")
        .input(&a.scenario)
        .seed(sc.seed)
        .config(json!({ "scenario": to_value(&resolved), "replicates": a.replicates, "replicate_seeds": seeds }))
        .finish();
    write_json(&manifest_path(&a.out, "simulate"), &m)
}

fn run_fit(a: FitArgs) -> Result<(), CliError> {
    let (d, g) = load(&a.data)?;
    let pen = a.penalty.config();
    let scfg = a.solver.config();
    let st = a.standardize.then(|| Standardization::from_data(&d));
    let work = match &st {
        Some(s) => s.apply(&d)?,
        None => d.clone(),
    };
    let fr = fit(&work, &g, &pen, &scfg)?;
    let doc = FitDoc::new(&fr, g.region_ids(), d.covariate_names(), st);
    create_dir(&a.out)?;
    write_json(&a.out.join("fit.json"), &doc)?;
    let m = data_inputs(ManifestBuilder::start("fit"), &a.data)
        .config(json!({
            "penalty": to_value(&PenaltyDoc::from(&pen)),
            "solver": to_value(&SolverDoc::from(&scfg)),
            "standardize": a.standardize,
        }))
        .finish();
    write_json(&manifest_path(&a.out, "fit"), &m)
}

/// Accepts either a fit document or a `cv` document.
fn read_fit(path: &Path) -> Result<FitDoc, CliError> {
    let value: serde_json::Value = read_json(path)?;
    let inner = match value.get("fit") {
        Some(f) if value.get("scores").is_some() => f.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn infer(a: InferArgs) -> Result<(), CliError> {
    let (d, g) = load(&a.data)?;
    let doc = read_fit(&a.fit)?;
    if doc.region_ids != g.region_ids() {
        return Err(CliError::Validation(format!(
            "{} was fitted on different regions than the input files",
            a.fit.display()
        )));
    }
    let work = match &doc.standardization {
        Some(s) => s.apply(&d)?,
        None => d.clone(),
    };
    let cfg = a.debias.config();
    let mut res = debias_and_intervals(&work, &doc.to_fit_result(), &cfg)?;
    if let Some(s) = &doc.standardization {
        s.inference_to_original(&mut res);
    }
    create_dir(&a.out)?;
    write_json(&a.out.join("inference.json"), &InferenceDoc::from(&res))?;
    let m = data_inputs(ManifestBuilder::start("infer"), &a.data)
        .input(&a.fit)
        .config(json!({
            "eta": a.debias.eta,
            "eta_used": res.eta_used,
            "covariance": cfg.covariance.as_str(),
            "level": cfg.level,
            "allow_unconverged": cfg.allow_unconverged,
        }))
        .finish();
    write_json(&manifest_path(&a.out, "infer"), &m)
}

fn cv(a: CvArgs) -> Result<(), CliError> {
    let (d, g) = load(&a.data)?;
    let mut spec: GridSpec = read_json(&a.grid)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let grid = TuningGrid::new(spec.gamma.clone(), spec.tau.clone(), spec.fusion.into());
    let scfg = a.solver.config();
    let cvcfg = CvConfig {
        metric: match a.metric {
            MetricName::Mse => ScoreMetric::Mse,
            MetricName::Deviance => ScoreMetric::Deviance,
        },
        ..CvConfig::default()
    };
    let st = a.standardize.then(|| Standardization::from_data(&d));
    let work = match &st {
        Some(s) => s.apply(&d)?,
        None => d.clone(),
    };
    let plan = make_folds(&g, spec.k, spec.seed)?;
    let tuned = tune_parallel(&work, &g, &grid, &scfg, &plan, &cvcfg)?;
    let fr = fit(&work, &g, &grid.cell(tuned.gamma, tuned.tau), &scfg)?;
    let doc = CvDoc {
        schema_version: SCHEMA_VERSION,
        gamma: tuned.gamma,
        tau: tuned.tau,
        best_score: tuned.best_score,
        k: spec.k,
        seed: spec.seed,
        scores: tuned
            .scores
            .iter()
            .map(|c| CellScoreDoc {
                gamma: c.gamma,
                tau: c.tau,
                score: Some(c.score).filter(|s| s.is_finite()),
            })
            .collect(),
        fit: FitDoc::new(&fr, g.region_ids(), d.covariate_names(), st),
    };
    create_dir(&a.out)?;
    write_json(&a.out.join("cv.json"), &doc)?;
    let m = data_inputs(ManifestBuilder::start("cv"), &a.data)
        .input(&a.grid)
        .seed(spec.seed)
        .config(json!({
            "grid": to_value(&spec),
            "solver": to_value(&SolverDoc::from(&scfg)),
            "metric": format!("{:?}", a.metric).to_lowercase(),
            "standardize": a.standardize,
            "fold_assignment": plan.assignment,
        }))
        .finish();
    write_json(&manifest_path(&a.out, "cv"), &m)
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let doc = read_fit(&a.fit)?;
    let edges = io::read_edges(&a.edges)?;
    let rows = match &a.regions {
        Some(p) => io::read_regions(p)?,
        None => Vec::new(),
    };
    let mut ids: BTreeSet<String> = doc.region_ids.iter().cloned().collect();
    ids.extend(edges.iter().flat_map(|(i, j, _)| [i.clone(), j.clone()]));
    ids.extend(rows.iter().map(|r| r.id.clone()));
    let ids: Vec<String> = ids.into_iter().collect();
    let g = io::assemble_graph(&ids, &edges, &a.edges)?;
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let train: Vec<usize> = doc.region_ids.iter().map(|s| index[s.as_str()]).collect();
    let trained: BTreeSet<&str> = doc.region_ids.iter().map(String::as_str).collect();
    let held_out: Vec<String> = ids.iter().filter(|s| !trained.contains(s.as_str())).cloned().collect();
    if held_out.is_empty() {
        return Err(CliError::Validation(String::from(
            "the extended graph has no regions beyond the fit",
        )));
    }
    let l = g.laplacian(a.delta)?;
    let alpha_hat = cohesion_predict(&l, &train, &doc.alpha)?;

    let mu_hat = match &a.covariates {
        Some(cpath) => {
            let cov = io::read_covariates(cpath)?;
            if cov.names != doc.covariate_names {
                return Err(CliError::Validation(format!(
                    "covariates {:?} do not match the fit's {:?}",
                    cov.names, doc.covariate_names
                )));
            }
            let by_id: BTreeMap<&str, &io::RegionRow> = rows.iter().map(|r| (r.id.as_str(), r)).collect();
            let mut mu = Vec::with_capacity(held_out.len());
            for (id, alpha) in held_out.iter().zip(&alpha_hat) {
                let row = by_id
                    .get(id.as_str())
                    .ok_or_else(|| CliError::Validation(format!("held-out region `{id}` is not in the region file")))?;
                let x = cov
                    .rows
                    .get(id)
                    .ok_or_else(|| io::IoError::MissingCovariates(id.clone()))?;
                let xb: f64 = x.iter().zip(&doc.beta).map(|(x, b)| x * b).sum();
                let eta = (alpha + xb).clamp(
                    -coxfuse_core::model::LINEAR_PREDICTOR_BOUND,
                    coxfuse_core::model::LINEAR_PREDICTOR_BOUND,
                );
                mu.push(row.area * row.offset * eta.exp());
            }
            Some(mu)
        }
        None => None,
    };
    let out = PredictDoc {
        schema_version: SCHEMA_VERSION,
        region_ids: held_out,
        alpha_hat,
        mu_hat,
    };
    create_dir(&a.out)?;
    write_json(&a.out.join("predict.json"), &out)?;
    let mut m = ManifestBuilder::start("predict").input(&a.fit).input(&a.edges);
    if let (Some(r), Some(c)) = (&a.regions, &a.covariates) {
        m = m.input(r).input(c);
    }
    let m = m.config(json!({ "delta": a.delta })).finish();
    write_json(&manifest_path(&a.out, "predict"), &m)
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let mut spec: ScenarioSpec = read_json(&a.scenario)?;
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.replicates == 0 {
        return Err(CliError::Validation(String::from("--replicates must be >= 1")));
    }
    let sc = spec.to_scenario();
    let (tuning, grid_echo) = match &a.grid {
        Some(p) => {
            let gs: GridSpec = read_json(p)?;
            let grid = TuningGrid::new(gs.gamma.clone(), gs.tau.clone(), gs.fusion.into());
            (
                Tuning::Grid {
                    grid,
                    k: gs.k,
                    seed: gs.seed,
                },
                to_value(&gs),
            )
        }
        None => (
            Tuning::Fixed(a.penalty.config()),
            to_value(&PenaltyDoc::from(&a.penalty.config())),
        ),
    };
    let cfg = BenchConfig {
        replicates: a.replicates,
        tuning,
        solver: a.solver.config(),
        debias: a.debias.config(),
        cv: CvConfig::default(),
    };
    cfg.solver.validate()?;
    cfg.debias.validate()?;
    let sim = Simulator::new(sc.clone())?;
    let res = run_bench(&sim, &cfg)?;
    create_dir(&a.out)?;

    let mt = &res.metrics;
    let opt = |v: Option<f64>| v.map_or_else(String::new, format_float);
    let summary = vec![
        vec![String::from("replicates"), mt.replicates.to_string()],
        vec![String::from("failed_replicates"), res.failures.len().to_string()],
        vec![String::from("coverage"), format_float(mt.coverage)],
        vec![String::from("type_one_error"), opt(mt.type_one_error)],
        vec![String::from("power"), opt(mt.power)],
        vec![String::from("mean_l1_error"), format_float(mt.mean_l1_error)],
    ];
    io::write_table(&a.out.join("bench_summary.csv"), &["metric", "value"], &summary)?;

    let coords: Vec<Vec<String>> = (0..sc.p)
        .map(|j| {
            vec![
                res.outcomes[0].inference.names[j].clone(),
                format_float(sc.beta_true[j]),
                format_float(mt.coverage_by_coordinate[j]),
                format_float(mt.rejection_by_coordinate[j]),
                format_float(mt.debiased_bias[j]),
                format_float(mt.estimate_bias[j]),
                format_float(mt.error_q05[j]),
                format_float(mt.error_q95[j]),
            ]
        })
        .collect();
    io::write_table(
        &a.out.join("bench_coordinates.csv"),
        &[
            "name",
            "beta_true",
            "coverage",
            "rejection_rate",
            "debiased_bias",
            "estimate_bias",
            "error_q05",
            "error_q95",
        ],
        &coords,
    )?;

    let reps: Vec<Vec<String>> = res
        .outcomes
        .iter()
        .map(|o| {
            let inf = &o.inference;
            let covered = (0..inf.p()).filter(|&j| inf.covers(j, sc.beta_true[j])).count();
            let l1: f64 = inf.beta_hat.iter().zip(&sc.beta_true).map(|(b, t)| (b - t).abs()).sum();
            vec![
                o.index.to_string(),
                o.seed.to_string(),
                format_float(o.gamma),
                format_float(o.tau),
                format_float(covered as f64 / inf.p() as f64),
                format_float(l1),
                format_float(inf.eta_used),
            ]
        })
        .collect();
    io::write_table(
        &a.out.join("bench_replicates.csv"),
        &["replicate", "seed", "gamma", "tau", "coverage", "l1_error", "eta_used"],
        &reps,
    )?;

    let m = ManifestBuilder::start("bench")
        .input(&a.scenario)
        .seed(sc.seed)
        .config(json!({
            "scenario": to_value(&spec),
            "replicates": a.replicates,
            "tuning": grid_echo,
            "solver": to_value(&SolverDoc::from(&cfg.solver)),
            "eta": a.debias.eta,
            "covariance": cfg.debias.covariance.as_str(),
            "level": cfg.debias.level,
            "failures": res.failures.iter().map(|(r, e)| json!({ "replicate": r, "reason": e })).collect::<Vec<_>>(),
        }))
        .finish();
    write_json(&manifest_path(&a.out, "bench"), &m)
}
