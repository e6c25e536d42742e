//! JSON documents read and written by the command-line front end.
//!
//! Every output document carries `schema_version`; keys are only added or
//! removed together with a version bump. Non-finite numbers are written as
//! `null`.

use coxfuse_core::simulate::{default_fine_grid, reference_beta, Baseline, UnstructuredLaw};
use coxfuse_core::solver::{LineSearch, StopReason};
use coxfuse_core::{
    CovarianceKind, FitResult, FusionKind, InferenceResult, Init, ParamVector, PenaltyConfig, Scenario, SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::standardize::Standardization;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FusionName {
    /// Smoothed absolute differences.
    L1,
    /// Squared differences.
    L2,
}

impl From<FusionName> for FusionKind {
    fn from(f: FusionName) -> Self {
        match f {
            FusionName::L1 => FusionKind::L1Smoothed,
            FusionName::L2 => FusionKind::L2,
        }
    }
}

impl From<FusionKind> for FusionName {
    fn from(f: FusionKind) -> Self {
        match f {
            FusionKind::L1Smoothed => FusionName::L1,
            FusionKind::L2 => FusionName::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceName {
    Sandwich,
    Gaussian,
}

impl From<CovarianceName> for CovarianceKind {
    fn from(c: CovarianceName) -> Self {
        match c {
            CovarianceName::Sandwich => CovarianceKind::Sandwich,
            CovarianceName::Gaussian => CovarianceKind::GaussianError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyDoc {
    pub fusion: FusionName,
    pub gamma: f64,
    pub tau: f64,
    /// Smoothing parameter of the `l1` fusion; `null` selects the default.
    pub xi: Option<f64>,
    pub delta: f64,
}

impl From<&PenaltyConfig> for PenaltyDoc {
    fn from(p: &PenaltyConfig) -> Self {
        Self {
            fusion: p.fusion.into(),
            gamma: p.gamma,
            tau: p.tau,
            xi: p.xi,
            delta: p.delta,
        }
    }
}

impl From<&PenaltyDoc> for PenaltyConfig {
    fn from(p: &PenaltyDoc) -> Self {
        PenaltyConfig {
            gamma: p.gamma,
            tau: p.tau,
            fusion: p.fusion.into(),
            xi: p.xi,
            delta: p.delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDoc {
    pub tol: f64,
    pub max_iter: usize,
    pub a: f64,
    pub b: f64,
    pub block_alternating: bool,
    pub line_search: String,
}

impl From<&SolverConfig> for SolverDoc {
    fn from(s: &SolverConfig) -> Self {
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            a: s.a,
            b: s.b,
            block_alternating: s.block_alternating,
            line_search: match s.line_search {
                LineSearch::Armijo => "armijo",
                LineSearch::Literal => "literal",
            }
            .to_string(),
        }
    }
}

impl SolverDoc {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            a: self.a,
            b: self.b,
            block_alternating: self.block_alternating,
            init: Init::DataDriven,
            line_search: if self.line_search == "literal" {
                LineSearch::Literal
            } else {
                LineSearch::Armijo
            },
            ..SolverConfig::default()
        }
    }
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::FixedPoint => "fixed_point",
        StopReason::Stalled => "stalled",
        StopReason::MaxIter => "max_iter",
    }
}

fn parse_stop(s: &str) -> StopReason {
    match s {
        "fixed_point" => StopReason::FixedPoint,
        "stalled" => StopReason::Stalled,
        "max_iter" => StopReason::MaxIter,
        _ => StopReason::Converged,
    }
}

/// Output of `fit`. Parameters are on the original covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDoc {
    pub schema_version: u32,
    pub region_ids: Vec<String>,
    pub covariate_names: Vec<String>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: String,
    pub penalty: PenaltyDoc,
    pub solver: SolverDoc,
    /// Present when the fit ran on standardized covariates.
    pub standardization: Option<Standardization>,
}

impl FitDoc {
    /// `fit` must hold parameters on the scale of the data it was fitted to;
    /// they are mapped back through `standardization` when present.
    pub fn new(
        fit: &FitResult,
        region_ids: &[String],
        covariate_names: &[String],
        standardization: Option<Standardization>,
    ) -> Self {
        let theta = match &standardization {
            Some(s) => s.to_original(&fit.theta_hat),
            None => fit.theta_hat.clone(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            region_ids: region_ids.to_vec(),
            covariate_names: covariate_names.to_vec(),
            alpha: theta.alpha,
            beta: theta.beta,
            objective: fit.objective(),
            objective_trace: fit.objective_trace.clone(),
            iterations: fit.iterations,
            converged: fit.converged,
            stop_reason: stop_name(fit.stop_reason).to_string(),
            penalty: (&fit.penalty).into(),
            solver: (&fit.solver).into(),
            standardization,
        }
    }

    /// The fit on the scale it was computed on.
    pub fn to_fit_result(&self) -> FitResult {
        let theta = ParamVector::new(self.alpha.clone(), self.beta.clone());
        let theta_hat = match &self.standardization {
            Some(s) => s.to_standardized(&theta),
            None => theta,
        };
        FitResult {
            theta_hat,
            objective_trace: self.objective_trace.clone(),
            iterations: self.iterations,
            converged: self.converged,
            stop_reason: parse_stop(&self.stop_reason),
            penalty: (&self.penalty).into(),
            solver: self.solver.to_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub name: String,
    pub beta_hat: f64,
    pub b_hat: f64,
    pub sigma_hat: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub z: Option<f64>,
    pub p_value: f64,
}

/// Output of `infer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceDoc {
    pub schema_version: u32,
    pub coefficients: Vec<CoefficientDoc>,
    pub eta_used: f64,
    pub covariance_kind: String,
    pub level: f64,
    pub zeta_hat: Option<f64>,
}

impl From<&InferenceResult> for InferenceDoc {
    fn from(r: &InferenceResult) -> Self {
        let coefficients = (0..r.p())
            .map(|j| CoefficientDoc {
                name: r.names[j].clone(),
                beta_hat: r.beta_hat[j],
                b_hat: r.b_hat[j],
                sigma_hat: r.sigma_hat[j],
                ci_lower: r.ci_lower[j],
                ci_upper: r.ci_upper[j],
                z: Some(r.z_scores[j]).filter(|z| z.is_finite()),
                p_value: r.p_values[j],
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            coefficients,
            eta_used: r.eta_used,
            covariance_kind: r.covariance.as_str().to_string(),
            level: r.level,
            zeta_hat: r.zeta_hat,
        }
    }
}

fn default_k() -> usize {
    5
}

fn default_seed() -> u64 {
    1
}

/// Tuning-grid specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
    pub fusion: FusionName,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellScoreDoc {
    pub gamma: f64,
    pub tau: f64,
    /// `null` when a fold fit diverged.
    pub score: Option<f64>,
}

/// Output of `cv`: the grid scores and the refit at the selected cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvDoc {
    pub schema_version: u32,
    pub gamma: f64,
    pub tau: f64,
    pub best_score: f64,
    pub k: usize,
    pub seed: u64,
    pub scores: Vec<CellScoreDoc>,
    pub fit: FitDoc,
}

/// Output of `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictDoc {
    pub schema_version: u32,
    /// Held-out regions in lexicographic order.
    pub region_ids: Vec<String>,
    pub alpha_hat: Vec<f64>,
    /// Predicted mean counts; present when covariates were supplied.
    pub mu_hat: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineName {
    Radial,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnstructuredDoc {
    InvGamma { shape: f64, rate: f64 },
    Normal { variance: f64 },
    None,
}

fn default_unstructured() -> UnstructuredDoc {
    UnstructuredDoc::InvGamma { shape: 2.0, rate: 1.0 }
}

fn default_baseline() -> BaselineName {
    BaselineName::Radial
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn half() -> f64 {
    0.5
}

/// Simulation scenario. Omitted keys take the lattice-design defaults; a
/// missing `beta_true` uses `(−1, −1, 1, 1, 0, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub m: usize,
    pub p: usize,
    #[serde(default)]
    pub beta_true: Option<Vec<f64>>,
    #[serde(default = "default_baseline")]
    pub baseline: BaselineName,
    /// Defaults to `0.2·m`.
    #[serde(default)]
    pub grf_range: Option<f64>,
    #[serde(default = "one")]
    pub grf_variance: f64,
    #[serde(default = "default_unstructured")]
    pub unstructured: UnstructuredDoc,
    /// Fine cells per side; defaults to the least multiple of `m` that is at
    /// least 60.
    #[serde(default)]
    pub fine_grid: Option<usize>,
    #[serde(default = "two")]
    pub offset: f64,
    #[serde(default = "half")]
    pub covariate_half_width: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            m: self.m,
            p: self.p,
            beta_true: self.beta_true.clone().unwrap_or_else(|| reference_beta(self.p)),
            baseline: match self.baseline {
                BaselineName::Radial => Baseline::Radial,
                BaselineName::Zero => Baseline::Zero,
            },
            grf_range: self.grf_range.unwrap_or(0.2 * self.m as f64),
            grf_variance: self.grf_variance,
            unstructured: match self.unstructured {
                UnstructuredDoc::InvGamma { shape, rate } => UnstructuredLaw::InvGammaNormal { shape, rate },
                UnstructuredDoc::Normal { variance } => UnstructuredLaw::Normal { variance },
                UnstructuredDoc::None => UnstructuredLaw::None,
            },
            fine_grid: self.fine_grid.unwrap_or_else(|| default_fine_grid(self.m)),
            offset: self.offset,
            covariate_half_width: self.covariate_half_width,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses_the_documented_keys() {
        let g: GridSpec =
            serde_json::from_str(r#"{"gamma": [0, 1], "tau": [0.5], "fusion": "l1", "k": 5, "seed": 1}"#).unwrap();
        assert_eq!(g.fusion, FusionName::L1);
        assert_eq!((g.k, g.seed), (5, 1));
        assert!(serde_json::from_str::<GridSpec>(r#"{"gamma": [1], "tau": [1], "fusion": "l2", "x": 1}"#).is_err());
    }

    #[test]
    fn scenario_defaults_follow_the_lattice_design() {
        let s: ScenarioSpec = serde_json::from_str(r#"{"m": 7, "p": 5}"#).unwrap();
        let sc = s.to_scenario();
        assert_eq!(sc, Scenario::reference_design(7, 5, 1));
        let s: ScenarioSpec =
            serde_json::from_str(r#"{"m": 4, "p": 1, "unstructured": {"law": "normal", "variance": 0.3}}"#).unwrap();
        assert_eq!(s.to_scenario().unstructured, UnstructuredLaw::Normal { variance: 0.3 });
    }
}
