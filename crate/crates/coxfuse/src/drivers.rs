//! Thread-parallel drivers: grid tuning over (cell, fold) pairs and
//! simulation benchmarks over replicates.
//!
//! Work items are independent and results are collected in input order, so
//! outputs do not depend on the thread count.

use coxfuse_core::inference::debias_and_intervals;
use coxfuse_core::predict::{cv_fold_score, make_folds, select_best, CellScore, TuneResult};
use coxfuse_core::simulate::{evaluate_replicates, replicate_seed, ReplicateMetrics, Simulator};
use coxfuse_core::solver::fit;
use coxfuse_core::{
    CvConfig, Dataset, DebiasConfig, FoldPlan, InferenceResult, PenaltyConfig, PredictError, RegionGraph, SolverConfig,
    TuningGrid,
};
use rayon::prelude::*;

use crate::error::CliError;

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation(String::from("--threads must be >= 1"))),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Cross-validated grid search with every (cell, fold) fit run in parallel.
pub fn tune_parallel(
    d: &Dataset,
    g: &RegionGraph,
    grid: &TuningGrid,
    scfg: &SolverConfig,
    plan: &FoldPlan,
    cv: &CvConfig,
) -> Result<TuneResult, PredictError> {
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.k).map(move |f| (c, f)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, f)| cv_fold_score(d, g, &grid.cell(cells[c].0, cells[c].1), scfg, plan, f, cv))
        .collect::<Result<Vec<f64>, _>>()?;
    let cell_scores: Vec<CellScore> = cells
        .iter()
        .zip(scores.chunks(plan.k))
        .map(|(&(gamma, tau), s)| CellScore {
            gamma,
            tau,
            score: s.iter().sum::<f64>() / plan.k as f64,
        })
        .collect();
    select_best(&cell_scores)
}

/// How each benchmark replicate chooses its penalty.
#[derive(Debug, Clone, PartialEq)]
pub enum Tuning {
    Fixed(PenaltyConfig),
    /// Cross-validation with `k` folds; replicate `r` uses fold seed
    /// `replicate_seed(seed, r)`.
    Grid {
        grid: TuningGrid,
        k: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub replicates: usize,
    pub tuning: Tuning,
    pub solver: SolverConfig,
    pub debias: DebiasConfig,
    pub cv: CvConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    pub gamma: f64,
    pub tau: f64,
    pub inference: InferenceResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub outcomes: Vec<ReplicateOutcome>,
    /// Replicates whose tuning, fit or inference failed numerically, with the
    /// reason.
    pub failures: Vec<(usize, String)>,
    pub metrics: ReplicateMetrics,
}

/// Tunes (if requested), fits and de-biases one replicate.
pub fn analyze_replicate(
    d: &Dataset,
    g: &RegionGraph,
    cfg: &BenchConfig,
    index: usize,
) -> Result<(f64, f64, InferenceResult), CliError> {
    let pen = match &cfg.tuning {
        Tuning::Fixed(p) => *p,
        Tuning::Grid { grid, k, seed } => {
            let plan = make_folds(g, *k, replicate_seed(*seed, index as u64))?;
            let t = coxfuse_core::predict::tune(d, g, grid, &cfg.solver, &plan, &cfg.cv)?;
            grid.cell(t.gamma, t.tau)
        }
    };
    let fr = fit(d, g, &pen, &cfg.solver)?;
    let inf = debias_and_intervals(d, &fr, &cfg.debias)?;
    Ok((pen.gamma, pen.tau, inf))
}

/// Simulates, analyzes and scores `cfg.replicates` replicates in parallel.
pub fn run_bench(sim: &Simulator, cfg: &BenchConfig) -> Result<BenchOutcome, CliError> {
    if cfg.replicates == 0 {
        return Err(CliError::Validation(String::from("bench needs at least one replicate")));
    }
    if let Tuning::Grid { grid, .. } = &cfg.tuning {
        grid.validate()?;
    }
    cfg.solver.validate()?;
    cfg.debias.validate()?;
    let g = sim.scenario().graph();
    let results: Vec<Result<ReplicateOutcome, (usize, CliError)>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = sim.replicate_seed(r as u64);
            let rep = sim.generate(seed);
            analyze_replicate(&rep.dataset, &g, cfg, r)
                .map(|(gamma, tau, inference)| ReplicateOutcome {
                    index: r,
                    seed,
                    gamma,
                    tau,
                    inference,
                })
                .map_err(|e| (r, e))
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(o) => outcomes.push(o),
            Err((r, e @ CliError::Numerical(_))) => failures.push((r, e.to_string())),
            Err((_, e)) => return Err(e),
        }
    }
    if outcomes.is_empty() {
        return Err(CliError::Numerical(format!(
            "all {} replicates failed; first: {}",
            failures.len(),
            failures[0].1
        )));
    }
    let inf: Vec<InferenceResult> = outcomes.iter().map(|o| o.inference.clone()).collect();
    let metrics = evaluate_replicates(&inf, &sim.scenario().beta_true)?;
    Ok(BenchOutcome {
        outcomes,
        failures,
        metrics,
    })
}
