//! Baseline prediction for held-out regions, fold plans, cross-validation and
//! tuning-grid selection.
//!
//! Held-out baselines are the harmonic extension of the training baselines,
//! `α̂₂ = −L₂₂⁻¹L₂₁α̂₁`. A held-out component with no edge into the training
//! set is predicted to be 0.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphError, LaplacianMatrix, RegionGraph};
use crate::linalg::{conjugate_gradient, Cholesky, CsrMatrix};
use crate::model::{clamp_predictor, Dataset};
use crate::penalty::{FusionKind, PenaltyConfig};
use crate::solver::{fit, FitError, FitResult, SolverConfig};

/// Largest held-out block solved by dense Cholesky; larger blocks use
/// conjugate gradients.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{got} training baselines for {expected} training regions")]
    LengthMismatch { expected: usize, got: usize },
    #[error("held-out Laplacian block is singular; retry with a positive ridge")]
    SingularBlock,
    #[error("invalid fold plan: {0}")]
    InvalidFolds(String),
    #[error("tuning grid is empty")]
    EmptyGrid,
    #[error("every tuning-grid cell diverged")]
    AllDiverged,
}

/// Predicts held-out baselines from training baselines.
///
/// `alpha_train[k]` belongs to the `k`-th smallest index of `train_idx`. The
/// result is ordered by ascending held-out index, as in
/// [`LaplacianMatrix::partition`].
pub fn cohesion_predict(
    l: &LaplacianMatrix,
    train_idx: &[usize],
    alpha_train: &[f64],
) -> Result<Vec<f64>, PredictError> {
    let blocks = l.partition(train_idx)?;
    if alpha_train.len() != blocks.train.len() {
        return Err(PredictError::LengthMismatch {
            expected: blocks.train.len(),
            got: alpha_train.len(),
        });
    }
    // Reorder to ascending training index.
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    order.sort_by_key(|&k| train_idx[k]);
    let a1: Vec<f64> = order.iter().map(|&k| alpha_train[k]).collect();

    let nt = blocks.test.len();
    let rhs: Vec<f64> = blocks.l21.matvec(&a1).into_iter().map(|v| -v).collect();
    let coupled = coupled_nodes(&blocks.l22, &blocks.l21);
    let keep: Vec<usize> = (0..nt).filter(|&i| coupled[i]).collect();
    let mut out = vec![0.0; nt];
    if keep.is_empty() {
        return Ok(out);
    }
    let sub = blocks.l22.submatrix(&keep, &keep);
    let b: Vec<f64> = keep.iter().map(|&i| rhs[i]).collect();
    let x = solve_spd(&sub, &b)?;
    for (k, &i) in keep.iter().enumerate() {
        out[i] = x[k];
    }
    Ok(out)
}

/// Full baseline vector: training values in place, held-out values predicted.
pub fn extend_baselines(
    l: &LaplacianMatrix,
    train_idx: &[usize],
    alpha_train: &[f64],
) -> Result<Vec<f64>, PredictError> {
    let pred = cohesion_predict(l, train_idx, alpha_train)?;
    let mut full = vec![0.0; l.n()];
    for (&i, &a) in train_idx.iter().zip(alpha_train) {
        full[i] = a;
    }
    let mut in_train = vec![false; l.n()];
    for &i in train_idx {
        in_train[i] = true;
    }
    let test = (0..l.n()).filter(|&i| !in_train[i]);
    for (i, v) in test.zip(pred) {
        full[i] = v;
    }
    Ok(full)
}

/// Held-out nodes whose component in the held-out subgraph touches the
/// training set.
fn coupled_nodes(l22: &CsrMatrix, l21: &CsrMatrix) -> Vec<bool> {
    let n = l22.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        let (cols, vals) = l22.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut root_coupled = vec![false; n];
    for i in 0..n {
        if l21.row(i).1.iter().any(|&v| v != 0.0) {
            let r = find(&mut parent, i);
            root_coupled[r] = true;
        }
    }
    (0..n).map(|i| root_coupled[find(&mut parent, i)]).collect()
}

fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, PredictError> {
    if a.nrows() <= DIRECT_SOLVE_LIMIT {
        let chol = Cholesky::factor_owned(a.to_dense()).ok_or(PredictError::SingularBlock)?;
        Ok(chol.solve(b))
    } else {
        let out = conjugate_gradient(a, b, 1e-12, 20 * a.nrows());
        if out.converged {
            Ok(out.x)
        } else {
            Err(PredictError::SingularBlock)
        }
    }
}

/// Assignment of regions to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Validates an explicit assignment.
    pub fn from_assignment(k: usize, assignment: Vec<usize>, seed: u64) -> Result<Self, PredictError> {
        if k < 2 {
            return Err(PredictError::InvalidFolds(format!("k must be >= 2, got {k}")));
        }
        let mut sizes = vec![0usize; k];
        for &f in &assignment {
            if f >= k {
                return Err(PredictError::InvalidFolds(format!("fold id {f} >= k = {k}")));
            }
            sizes[f] += 1;
        }
        if let Some(f) = sizes.iter().position(|&s| s == 0) {
            return Err(PredictError::InvalidFolds(format!("fold {f} is empty")));
        }
        Ok(Self { k, assignment, seed })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Regions held out in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == f).collect()
    }

    /// Regions used for training in fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

/// Uniformly random, seeded assignment of the graph's regions to `k` folds
/// whose sizes differ by at most one.
pub fn make_folds(g: &RegionGraph, k: usize, seed: u64) -> Result<FoldPlan, PredictError> {
    make_folds_n(g.n(), k, seed)
}

/// [`make_folds`] for `n` regions.
pub fn make_folds_n(n: usize, k: usize, seed: u64) -> Result<FoldPlan, PredictError> {
    if k < 2 || k > n {
        return Err(PredictError::InvalidFolds(format!(
            "k must satisfy 2 <= k <= n = {n}, got {k}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldPlan { k, assignment, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMetric {
    /// Mean squared error of held-out counts.
    Mse,
    /// Mean Poisson deviance of held-out counts.
    Deviance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub metric: ScoreMetric,
    /// Ridge of the Laplacian used to predict held-out baselines.
    pub prediction_delta: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            metric: ScoreMetric::Mse,
            prediction_delta: 0.0,
        }
    }
}

/// Held-out counts scored against predicted means.
pub fn score_counts(y: &[f64], mu: &[f64], metric: ScoreMetric) -> f64 {
    let total: f64 = y
        .iter()
        .zip(mu)
        .map(|(&y, &m)| match metric {
            ScoreMetric::Mse => (y - m) * (y - m),
            ScoreMetric::Deviance => {
                let t = if y > 0.0 { y * libm::log(y / m) } else { 0.0 };
                2.0 * (t - (y - m))
            }
        })
        .sum();
    total / y.len() as f64
}

/// Predicted means for all regions of `d` from a fit on the regions
/// `train_idx`.
pub fn predict_means(
    d: &Dataset,
    l: &LaplacianMatrix,
    train_idx: &[usize],
    fit: &FitResult,
) -> Result<Vec<f64>, PredictError> {
    let alpha = extend_baselines(l, train_idx, &fit.theta_hat.alpha)?;
    Ok((0..d.n())
        .map(|i| {
            let eta = alpha[i] + crate::linalg::dot(d.x().row(i), &fit.theta_hat.beta);
            d.exposure()[i] * libm::exp(clamp_predictor(eta))
        })
        .collect())
}

/// Score of a single fold; `+∞` when the training fit fails.
pub fn cv_fold_score(
    d: &Dataset,
    g: &RegionGraph,
    pcfg: &PenaltyConfig,
    scfg: &SolverConfig,
    plan: &FoldPlan,
    fold: usize,
    cv: &CvConfig,
) -> Result<f64, PredictError> {
    if plan.n() != d.n() || g.n() != d.n() {
        return Err(PredictError::InvalidFolds(format!(
            "plan covers {} regions, graph {}, data {}",
            plan.n(),
            g.n(),
            d.n()
        )));
    }
    let train = plan.train_indices(fold);
    let test = plan.test_indices(fold);
    let sub_d = d.subset(&train);
    let sub_g = g.induced_subgraph(&train)?;
    let fr = match fit(&sub_d, &sub_g, pcfg, scfg) {
        Ok(fr) if fr.theta_hat.is_finite() => fr,
        Ok(_) | Err(FitError::Diverged { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e.into()),
    };
    let l = g.laplacian(cv.prediction_delta)?;
    let mu = match predict_means(d, &l, &train, &fr) {
        Ok(mu) => mu,
        Err(PredictError::SingularBlock) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let y: Vec<f64> = test.iter().map(|&i| d.y()[i]).collect();
    let m: Vec<f64> = test.iter().map(|&i| mu[i]).collect();
    let s = score_counts(&y, &m, cv.metric);
    Ok(if s.is_finite() { s } else { f64::INFINITY })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    /// Mean of the per-fold scores.
    pub mean: f64,
    pub per_fold: Vec<f64>,
}

/// Mean held-out score over the folds of `plan`.
pub fn cv_score(
    d: &Dataset,
    g: &RegionGraph,
    pcfg: &PenaltyConfig,
    scfg: &SolverConfig,
    plan: &FoldPlan,
    cv: &CvConfig,
) -> Result<CvScore, PredictError> {
    let per_fold = (0..plan.k)
        .map(|f| cv_fold_score(d, g, pcfg, scfg, plan, f, cv))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvScore {
        mean: per_fold.iter().sum::<f64>() / plan.k as f64,
        per_fold,
    })
}

/// Candidate `(γ, τ)` values for one fusion kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    pub gamma_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub fusion: FusionKind,
    pub xi: Option<f64>,
    pub delta: f64,
}

impl TuningGrid {
    pub fn new(gamma_values: Vec<f64>, tau_values: Vec<f64>, fusion: FusionKind) -> Self {
        Self {
            gamma_values,
            tau_values,
            fusion,
            xi: None,
            delta: crate::graph::DEFAULT_RIDGE,
        }
    }

    /// Penalty configuration of a grid cell.
    pub fn cell(&self, gamma: f64, tau: f64) -> PenaltyConfig {
        PenaltyConfig {
            gamma,
            tau,
            fusion: self.fusion,
            xi: self.xi,
            delta: self.delta,
        }
    }

    /// All cells, `γ` varying slowest.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut v = Vec::with_capacity(self.gamma_values.len() * self.tau_values.len());
        for &g in &self.gamma_values {
            for &t in &self.tau_values {
                v.push((g, t));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), PredictError> {
        if self.gamma_values.is_empty() || self.tau_values.is_empty() {
            return Err(PredictError::EmptyGrid);
        }
        for &(g, t) in &self.cells() {
            self.cell(g, t).validate().map_err(FitError::from)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScore {
    pub gamma: f64,
    pub tau: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub gamma: f64,
    pub tau: f64,
    pub best_score: f64,
    pub scores: Vec<CellScore>,
}

/// Picks the cell with the smallest score, preferring larger `τ` and then
/// larger `γ` among ties. Non-finite scores never win.
pub fn select_best(scores: &[CellScore]) -> Result<TuneResult, PredictError> {
    if scores.is_empty() {
        return Err(PredictError::EmptyGrid);
    }
    let mut best: Option<CellScore> = None;
    for c in scores.iter().filter(|c| c.score.is_finite()) {
        best = match best {
            None => Some(*c),
            Some(b) => {
                let better = c.score < b.score
                    || (c.score == b.score && (c.tau > b.tau || (c.tau == b.tau && c.gamma > b.gamma)));
                Some(if better { *c } else { b })
            }
        };
    }
    let b = best.ok_or(PredictError::AllDiverged)?;
    Ok(TuneResult {
        gamma: b.gamma,
        tau: b.tau,
        best_score: b.score,
        scores: scores.to_vec(),
    })
}

/// Scores every grid cell by cross-validation and selects the best.
pub fn tune(
    d: &Dataset,
    g: &RegionGraph,
    grid: &TuningGrid,
    scfg: &SolverConfig,
    plan: &FoldPlan,
    cv: &CvConfig,
) -> Result<TuneResult, PredictError> {
    grid.validate()?;
    let scores = grid
        .cells()
        .into_iter()
        .map(|(gamma, tau)| {
            let s = cv_score(d, g, &grid.cell(gamma, tau), scfg, plan, cv)?;
            Ok(CellScore {
                gamma,
                tau,
                score: s.mean,
            })
        })
        .collect::<Result<Vec<_>, PredictError>>()?;
    select_best(&scores)
}
