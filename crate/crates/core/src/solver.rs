//! Proximal gradient descent for the penalized Poisson objective
//!
//! ```text
//! f(θ) = −ℓ(α̃, β) + R_γ(α̃) + τ‖β‖₁
//! ```
//!
//! where `R_γ` is the fusion penalty of [`PenaltyConfig`]. Each iteration
//! takes a gradient step on the smooth part `−ℓ + R_γ`, soft-thresholds the
//! `β` block at `η·τ`, clamps the baselines to the linear-predictor bound and
//! backtracks on the step size `η` from `initial_step`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{IncidenceMatrix, RegionGraph};
use crate::linalg::{dot, norm1};
use crate::model::{clamp_predictor, Dataset, ModelError, ParamVector};
use crate::penalty::{shrink, PenaltyConfig, PenaltyError};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `α̃ᵢ = log((yᵢ + 0.5)/(|Ωᵢ|Pᵢ))`, `β = 0`.
    DataDriven,
    Zero,
    Warm(ParamVector),
}

/// Sufficient-decrease rule used by the backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearch {
    /// Accept `θ⁺` when `f(θ⁺) ≤ f(θ) − (a/η)‖θ⁺ − θ‖²`. Without an active
    /// proximal map this is `f(θ − η∇) ≤ f(θ) − aη‖∇‖²`.
    Armijo,
    /// Shrink while `f(θ⁺) − f(θ) ≥ −a‖θ‖²`, giving up after
    /// `max_backtracks` reductions.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative objective tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant.
    pub a: f64,
    /// Step shrink factor in `(0, 1)`.
    pub b: f64,
    pub block_alternating: bool,
    pub init: Init,
    pub line_search: LineSearch,
    /// Step size each backtracking search starts from.
    pub initial_step: f64,
    /// Steps below this stop the solver with [`StopReason::Stalled`].
    pub min_step: f64,
    /// Backtracking cap for [`LineSearch::Literal`].
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 5000,
            a: 1e-4,
            b: 0.5,
            block_alternating: false,
            init: Init::DataDriven,
            line_search: LineSearch::Armijo,
            initial_step: 1.0,
            min_step: 1e-20,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: String| Err(FitError::InvalidConfig(m));
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return bad(format!("tol must be > 0, got {}", self.tol));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return bad(format!("a must be > 0, got {}", self.a));
        }
        if !(self.b > 0.0 && self.b < 1.0) {
            return bad(format!("b must lie in (0, 1), got {}", self.b));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return bad(format!("initial_step must be > 0, got {}", self.initial_step));
        }
        if !(self.min_step > 0.0) {
            return bad(format!("min_step must be > 0, got {}", self.min_step));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative objective change fell below `tol`.
    Converged,
    /// The proximal step left `θ` unchanged.
    FixedPoint,
    /// No step above `min_step` decreased the objective.
    Stalled,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
    #[error("graph has {graph} regions but the dataset has {data}")]
    GraphMismatch { graph: usize, data: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("objective is not finite at iteration {iteration}")]
    Diverged { iteration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    /// Objective at the starting point followed by one value per accepted
    /// iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub penalty: PenaltyConfig,
    pub solver: SolverConfig,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial value")
    }
}

/// Penalized objective `f(θ)`.
pub fn objective(d: &Dataset, theta: &ParamVector, b: &IncidenceMatrix, pcfg: &PenaltyConfig) -> Result<f64, FitError> {
    pcfg.validate()?;
    d.check_theta(theta)?;
    if b.n_regions() != d.n() {
        return Err(FitError::GraphMismatch {
            graph: b.n_regions(),
            data: d.n(),
        });
    }
    let ll = d.loglik_unchecked(theta);
    let fusion = pcfg.fusion_value(&theta.alpha, b)?;
    Ok(-ll + fusion + pcfg.tau * norm1(&theta.beta))
}

/// Starting point for `init`.
pub fn initial_theta(d: &Dataset, init: &Init) -> Result<ParamVector, FitError> {
    let mut theta = match init {
        Init::DataDriven => ParamVector::new(
            d.y()
                .iter()
                .zip(d.exposure())
                .map(|(y, e)| libm::log((y + 0.5) / e))
                .collect(),
            vec![0.0; d.p()],
        ),
        Init::Zero => ParamVector::zeros(d.n(), d.p()),
        Init::Warm(t) => {
            d.check_theta(t)?;
            if !t.is_finite() {
                return Err(FitError::InvalidConfig(String::from(
                    "warm start contains non-finite values",
                )));
            }
            t.clone()
        }
    };
    theta.clamp_alpha();
    Ok(theta)
}

/// Fits by proximal gradient descent, alternating between the `α̃` and `β`
/// blocks when `scfg.block_alternating` is set.
pub fn fit(d: &Dataset, g: &RegionGraph, pcfg: &PenaltyConfig, scfg: &SolverConfig) -> Result<FitResult, FitError> {
    run(d, g, pcfg, scfg, scfg.block_alternating)
}

/// Fits by alternating proximal gradient steps on `α̃` (with `β` fixed) and
/// on `β` (with `α̃` fixed).
pub fn fit_block_alternating(
    d: &Dataset,
    g: &RegionGraph,
    pcfg: &PenaltyConfig,
    scfg: &SolverConfig,
) -> Result<FitResult, FitError> {
    run(d, g, pcfg, scfg, true)
}

#[derive(Clone, Copy)]
enum Block {
    Both,
    Alpha,
    Beta,
}

struct Problem<'a> {
    d: &'a Dataset,
    b: IncidenceMatrix,
    pcfg: &'a PenaltyConfig,
    scfg: &'a SolverConfig,
}

enum StepOutcome {
    Moved(ParamVector, f64),
    Unchanged,
    Stalled,
}

impl Problem<'_> {
    fn value(&self, theta: &ParamVector) -> f64 {
        let ll = self.d.loglik_unchecked(theta);
        let fusion = self.pcfg.fusion_value(&theta.alpha, &self.b).unwrap_or(f64::NAN);
        -ll + fusion + self.pcfg.tau * norm1(&theta.beta)
    }

    /// Gradient of the smooth part `−ℓ + R_γ`.
    fn smooth_gradient(&self, theta: &ParamVector) -> Result<ParamVector, FitError> {
        let r = self.d.residuals_unchecked(theta);
        let mut gb = self.d.x().t_matvec(&r);
        for v in &mut gb {
            *v = -*v;
        }
        let fusion = self.pcfg.fusion(&theta.alpha, &self.b)?;
        let ga = r.iter().zip(&fusion.gradient).map(|(ri, fi)| fi - ri).collect();
        Ok(ParamVector::new(ga, gb))
    }

    fn prox_candidate(&self, theta: &ParamVector, grad: &ParamVector, step: f64, block: Block) -> ParamVector {
        let mut cand = theta.clone();
        if !matches!(block, Block::Beta) {
            for (a, g) in cand.alpha.iter_mut().zip(&grad.alpha) {
                *a = clamp_predictor(*a - step * g);
            }
        }
        if !matches!(block, Block::Alpha) {
            let t = step * self.pcfg.tau;
            for (bj, g) in cand.beta.iter_mut().zip(&grad.beta) {
                *bj = shrink(*bj - step * g, t);
            }
        }
        cand
    }

    fn step(&self, theta: &ParamVector, f: f64, block: Block) -> Result<StepOutcome, FitError> {
        let grad = self.smooth_gradient(theta)?;
        let theta_sq = dot(&theta.alpha, &theta.alpha) + dot(&theta.beta, &theta.beta);
        let mut step = self.scfg.initial_step;
        let mut backtracks = 0usize;
        loop {
            let cand = self.prox_candidate(theta, &grad, step, block);
            let dist2 = sq_dist(&cand, theta);
            if dist2 == 0.0 {
                return Ok(StepOutcome::Unchanged);
            }
            let fc = self.value(&cand);
            let accept = fc.is_finite()
                && match self.scfg.line_search {
                    LineSearch::Armijo => fc <= f - self.scfg.a / step * dist2,
                    LineSearch::Literal => fc - f < -self.scfg.a * theta_sq,
                };
            if accept {
                return Ok(StepOutcome::Moved(cand, fc));
            }
            step *= self.scfg.b;
            backtracks += 1;
            let exhausted = match self.scfg.line_search {
                LineSearch::Armijo => false,
                LineSearch::Literal => backtracks >= self.scfg.max_backtracks,
            };
            if step < self.scfg.min_step || exhausted {
                return Ok(StepOutcome::Stalled);
            }
        }
    }
}

fn sq_dist(a: &ParamVector, b: &ParamVector) -> f64 {
    a.alpha
        .iter()
        .zip(&b.alpha)
        .chain(a.beta.iter().zip(&b.beta))
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn run(
    d: &Dataset,
    g: &RegionGraph,
    pcfg: &PenaltyConfig,
    scfg: &SolverConfig,
    alternating: bool,
) -> Result<FitResult, FitError> {
    pcfg.validate()?;
    scfg.validate()?;
    if g.n() != d.n() {
        return Err(FitError::GraphMismatch {
            graph: g.n(),
            data: d.n(),
        });
    }
    let problem = Problem {
        d,
        b: g.incidence(),
        pcfg,
        scfg,
    };
    let mut theta = initial_theta(d, &scfg.init)?;
    let mut f = problem.value(&theta);
    if !f.is_finite() {
        return Err(FitError::Diverged { iteration: 0 });
    }
    let mut trace = vec![f];
    let blocks: &[Block] = if alternating {
        if d.p() == 0 {
            &[Block::Alpha]
        } else {
            &[Block::Alpha, Block::Beta]
        }
    } else {
        &[Block::Both]
    };

    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;
    while iterations < scfg.max_iter {
        let f_start = f;
        let mut moved = false;
        let mut stalled = 0;
        for &block in blocks {
            match problem.step(&theta, f, block)? {
                StepOutcome::Moved(t, fc) => {
                    theta = t;
                    f = fc;
                    moved = true;
                }
                StepOutcome::Unchanged => {}
                StepOutcome::Stalled => stalled += 1,
            }
        }
        if !moved {
            stop = if stalled > 0 {
                StopReason::Stalled
            } else {
                StopReason::FixedPoint
            };
            break;
        }
        iterations += 1;
        trace.push(f);
        if !f.is_finite() {
            return Err(FitError::Diverged { iteration: iterations });
        }
        if libm::fabs(f - f_start) < scfg.tol * libm::fabs(f_start) {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(FitResult {
        theta_hat: theta,
        objective_trace: trace,
        iterations,
        converged: stop != StopReason::MaxIter,
        stop_reason: stop,
        penalty: *pcfg,
        solver: scfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use approx::assert_abs_diff_eq;

    fn one_region(y: u64, exposure: f64) -> (Dataset, RegionGraph) {
        let d = Dataset::new(vec![y], vec![exposure], vec![1.0], Matrix::zeros(1, 0)).unwrap();
        (d, RegionGraph::from_index_edges(1, []).unwrap())
    }

    #[test]
    fn objective_examples() {
        let (d, g) = one_region(0, 1.0);
        let b = g.incidence();
        let f = objective(&d, &ParamVector::zeros(1, 0), &b, &PenaltyConfig::l2(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f, 1.0);

        let d = Dataset::new(vec![0], vec![1.0], vec![1.0], Matrix::from_rows(&[[0.0]])).unwrap();
        let th = ParamVector::new(vec![0.0], vec![1.0]);
        let f = objective(&d, &th, &b, &PenaltyConfig::l2(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(f, 1.0 + 2.0);
    }

    #[test]
    fn closed_form_single_region() {
        let (d, g) = one_region(4, 2.0);
        let r = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.theta_hat.alpha[0], 2f64.ln(), epsilon = 1e-4);
        let r = fit_block_alternating(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.theta_hat.alpha[0], 2f64.ln(), epsilon = 1e-4);
    }

    #[test]
    fn huge_tau_zeroes_beta() {
        let d = Dataset::new(
            vec![1, 5, 2],
            vec![1.0; 3],
            vec![1.0; 3],
            Matrix::from_rows(&[[0.5, -1.0], [1.0, 0.2], [-0.3, 0.4]]),
        )
        .unwrap();
        let g = RegionGraph::from_index_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let p = PenaltyConfig::l2(1.0, 1e6);
        for r in [
            fit(&d, &g, &p, &SolverConfig::default()).unwrap(),
            fit_block_alternating(&d, &g, &p, &SolverConfig::default()).unwrap(),
        ] {
            assert_eq!(r.theta_hat.beta, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn strong_fusion_equalizes_identical_regions() {
        let d = Dataset::new(vec![3, 3], vec![1.0; 2], vec![1.0; 2], Matrix::zeros(2, 0)).unwrap();
        let g = RegionGraph::from_index_edges(2, [(0, 1, 1.0)]).unwrap();
        let p = PenaltyConfig::l2(100.0, 0.0).with_delta(0.0);
        let a = fit(&d, &g, &p, &SolverConfig::default()).unwrap();
        let b = fit_block_alternating(&d, &g, &p, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(a.theta_hat.alpha[0], a.theta_hat.alpha[1], epsilon = 1e-3);
        assert!(a.theta_hat.max_abs_diff(&b.theta_hat) < 1e-3);
    }

    #[test]
    fn trace_is_monotone() {
        let d = Dataset::new(
            vec![0, 7, 2, 1],
            vec![2.0; 4],
            vec![1.0; 4],
            Matrix::from_rows(&[[0.1], [0.4], [-0.2], [-0.5]]),
        )
        .unwrap();
        let g = RegionGraph::lattice(2);
        let r = fit(&d, &g, &PenaltyConfig::l1_smoothed(0.5, 0.3), &SolverConfig::default()).unwrap();
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn zero_count_baseline_stays_bounded() {
        let (d, g) = one_region(0, 1.0);
        let scfg = SolverConfig {
            max_iter: 100_000,
            ..SolverConfig::default()
        };
        let r = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &scfg).unwrap();
        assert!(r.theta_hat.alpha[0] >= -30.0);
        assert!(r.theta_hat.alpha[0] < -5.0);
    }

    #[test]
    fn errors() {
        let (d, _) = one_region(1, 1.0);
        let g2 = RegionGraph::from_index_edges(2, []).unwrap();
        assert!(matches!(
            fit(&d, &g2, &PenaltyConfig::l2(0.0, 0.0), &SolverConfig::default()),
            Err(FitError::GraphMismatch { .. })
        ));
        let g = RegionGraph::from_index_edges(1, []).unwrap();
        let bad = SolverConfig {
            b: 1.5,
            ..SolverConfig::default()
        };
        assert!(matches!(
            fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &bad),
            Err(FitError::InvalidConfig(_))
        ));
        assert!(matches!(
            fit(&d, &g, &PenaltyConfig::l2(-1.0, 0.0), &SolverConfig::default()),
            Err(FitError::Penalty(_))
        ));
        let warm = SolverConfig {
            init: Init::Warm(ParamVector::zeros(2, 0)),
            ..SolverConfig::default()
        };
        assert!(matches!(
            fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &warm),
            Err(FitError::Model(_))
        ));
    }

    #[test]
    fn max_iter_reports_unconverged() {
        let (d, g) = one_region(50, 1.0);
        let scfg = SolverConfig {
            max_iter: 1,
            init: Init::Zero,
            ..SolverConfig::default()
        };
        let r = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &scfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.stop_reason, StopReason::MaxIter);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn literal_rule_runs() {
        let (d, g) = one_region(4, 2.0);
        let scfg = SolverConfig {
            line_search: LineSearch::Literal,
            ..SolverConfig::default()
        };
        let r = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &scfg).unwrap();
        assert!(r.theta_hat.is_finite());
    }
}
