//! De-biased estimates and confidence intervals for the covariate effects.
//!
//! With fitted means `μ̂ᵢ = |Ωᵢ|Pᵢ exp(α̂ᵢ + Xᵢβ̂)`:
//!
//! ```text
//! Ĥ = (1/n) Σᵢ XᵢᵀXᵢ μ̂ᵢ
//! Σ̂ = (2/n) Σᵢ XᵢᵀXᵢ [(yᵢ − μ̂ᵢ)² + (μ̂ᵢ − μ̄)²]          (sandwich)
//! Σ̃ = (1/n) Σᵢ XᵢᵀXᵢ [μ̂ᵢ + ζ μ̂ᵢ²]                      (Gaussian error)
//! b̂ = β̂ + (1/n) M Xᵀ(y − μ̂)
//! ```
//!
//! Row `j` of `M` solves `min mΣmᵀ` subject to `‖Ĥmᵀ − eⱼ‖∞ ≤ η`, and the
//! interval for `βⱼ` is `b̂ⱼ ± z·σ̂ⱼ/√n` with `σ̂ⱼ² = [MΣMᵀ]ⱼⱼ`.
//!
//! The row program is solved through its dual
//! `min_λ ¼λᵀQλ + λⱼ + η‖λ‖₁` with `Q = ĤΣ⁻¹Ĥ`, by cyclic coordinate
//! descent; the primal row is `m = −½Σ⁻¹Ĥλ`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, Cholesky, Matrix};
use crate::model::{predicted_mean, weighted_gram, Dataset, ModelError};
use crate::solver::FitResult;
use crate::stats::{normal_quantile, two_sided_p_value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("zeta must be finite and >= 0, got {0}")]
    NegativeZeta(f64),
    #[error("matrix dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error("covariance matrix is not positive definite even after jitter")]
    SingularCovariance,
    #[error("debiasing program infeasible for coordinates {coordinates:?} at eta = {eta}")]
    Infeasible { coordinates: Vec<usize>, eta: f64 },
    #[error("fit did not converge; set allow_unconverged to use it anyway")]
    NotConverged,
    #[error("no covariates to infer on")]
    NoCovariates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceKind {
    Sandwich,
    GaussianError,
}

impl CovarianceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceKind::Sandwich => "sandwich",
            CovarianceKind::GaussianError => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasConfig {
    /// Constraint tolerance; `None` means [`default_eta`].
    pub eta: Option<f64>,
    pub covariance: CovarianceKind,
    pub level: f64,
    /// Factor applied to `η` when a row program is infeasible.
    pub eta_growth: f64,
    /// Maximum number of `η` increases per row.
    pub max_growth: usize,
    /// Floors each summand of `ζ̂` at zero.
    pub positive_part: bool,
    /// Accepts fits that hit the iteration cap.
    pub allow_unconverged: bool,
    /// Optimality residual at which the row program counts as solved; it
    /// bounds the excess of `‖Ĥmᵀ − eⱼ‖∞` over `η`.
    pub dual_tol: f64,
    pub max_sweeps: usize,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        Self {
            eta: None,
            covariance: CovarianceKind::Sandwich,
            level: 0.95,
            eta_growth: 2.0,
            max_growth: 10,
            positive_part: true,
            allow_unconverged: false,
            dual_tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

impl DebiasConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: String| Err(InferenceError::InvalidConfig(m));
        if let Some(eta) = self.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return bad(format!("eta must be > 0, got {eta}"));
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level must lie in (0, 1), got {}", self.level));
        }
        if !(self.eta_growth > 1.0) || !self.eta_growth.is_finite() {
            return bad(format!("eta_growth must be > 1, got {}", self.eta_growth));
        }
        if !(self.dual_tol > 0.0) {
            return bad(format!("dual_tol must be > 0, got {}", self.dual_tol));
        }
        Ok(())
    }

    /// `η` in effect for `n` regions and `p` covariates.
    pub fn resolved_eta(&self, n: usize, p: usize) -> f64 {
        self.eta.unwrap_or_else(|| default_eta(n, p))
    }
}

/// `0.1·√(log p / n)`, with `log 2` standing in for `log p` when `p < 2`.
pub fn default_eta(n: usize, p: usize) -> f64 {
    0.1 * libm::sqrt(libm::log(p.max(2) as f64) / n.max(1) as f64)
}

/// `Ĥ = (1/n) Σᵢ XᵢᵀXᵢ μ̂ᵢ`.
pub fn empirical_hessian(d: &Dataset, theta: &crate::ParamVector) -> Result<Matrix, InferenceError> {
    let mu = predicted_mean(d, theta)?;
    let mut h = weighted_gram(d.x(), mu.as_slice());
    h.scale(1.0 / d.n() as f64);
    Ok(h)
}

/// `Σ̂ = (2/n) Σᵢ XᵢᵀXᵢ [(yᵢ − μ̂ᵢ)² + (μ̂ᵢ − μ̄)²]`.
pub fn sandwich_covariance(d: &Dataset, theta: &crate::ParamVector) -> Result<Matrix, InferenceError> {
    let mu = predicted_mean(d, theta)?;
    let mu = mu.as_slice();
    let mean = mu.iter().sum::<f64>() / d.n() as f64;
    let w: Vec<f64> = mu
        .iter()
        .zip(d.y())
        .map(|(m, y)| (y - m) * (y - m) + (m - mean) * (m - mean))
        .collect();
    let mut s = weighted_gram(d.x(), &w);
    s.scale(2.0 / d.n() as f64);
    Ok(s)
}

/// Moment estimate `ζ̂ = (1/n) Σᵢ [(yᵢ − mᵢ)² − mᵢ]/mᵢ²`.
pub fn zeta_hat(d: &Dataset, theta: &crate::ParamVector, positive_part: bool) -> Result<f64, InferenceError> {
    let mu = predicted_mean(d, theta)?;
    let total: f64 = mu
        .as_slice()
        .iter()
        .zip(d.y())
        .map(|(m, y)| {
            let t = ((y - m) * (y - m) - m) / (m * m);
            if positive_part {
                t.max(0.0)
            } else {
                t
            }
        })
        .sum();
    Ok(total / d.n() as f64)
}

/// `Σ̃ = (1/n) Σᵢ XᵢᵀXᵢ [mᵢ + ζ mᵢ²]`; `ζ = 0` gives the Poisson information.
pub fn gaussian_error_covariance(d: &Dataset, theta: &crate::ParamVector, zeta: f64) -> Result<Matrix, InferenceError> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(InferenceError::NegativeZeta(zeta));
    }
    let mu = predicted_mean(d, theta)?;
    let w: Vec<f64> = mu.as_slice().iter().map(|m| m + zeta * m * m).collect();
    let mut s = weighted_gram(d.x(), &w);
    s.scale(1.0 / d.n() as f64);
    Ok(s)
}

/// Solution of the row programs.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasRows {
    pub m: Matrix,
    /// `η` at which each row was solved.
    pub eta_per_row: Vec<f64>,
    /// Largest entry of `eta_per_row`.
    pub eta_used: f64,
    /// Jitter added to the diagonal of `Σ` to factor it (0 if none).
    pub jitter: f64,
}

/// Solves every row program of `M` for `Ĥ` and `Σ`.
pub fn solve_debias_rows(
    h: &Matrix,
    sigma: &Matrix,
    eta: f64,
    cfg: &DebiasConfig,
) -> Result<DebiasRows, InferenceError> {
    cfg.validate()?;
    let p = h.rows();
    if h.cols() != p || sigma.rows() != p || sigma.cols() != p {
        return Err(InferenceError::DimensionMismatch(format!(
            "H is {}x{}, Sigma is {}x{}",
            h.rows(),
            h.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(InferenceError::InvalidConfig(format!("eta must be > 0, got {eta}")));
    }
    let (chol, jitter) = factor_with_jitter(sigma)?;
    // Σ⁻¹Ĥ and Q = Ĥ Σ⁻¹ Ĥ.
    let sinv_h = chol.solve_matrix(h);
    let mut q = h.matmul(&sinv_h);
    symmetrize(&mut q);

    let mut m = Matrix::zeros(p, p);
    let mut eta_per_row = vec![0.0; p];
    let mut failed = Vec::new();
    let mut worst_eta = eta;
    for j in 0..p {
        let mut eta_j = eta;
        let mut grows = 0;
        loop {
            if let Some(lambda) = dual_row(&q, j, eta_j, cfg) {
                let row = primal_row(&sinv_h, &lambda);
                if row_feasible(h, &row, j, eta_j) {
                    m.row_mut(j).copy_from_slice(&row);
                    eta_per_row[j] = eta_j;
                    break;
                }
            }
            if grows >= cfg.max_growth {
                failed.push(j);
                worst_eta = worst_eta.max(eta_j);
                break;
            }
            eta_j *= cfg.eta_growth;
            grows += 1;
        }
    }
    if !failed.is_empty() {
        return Err(InferenceError::Infeasible {
            coordinates: failed,
            eta: worst_eta,
        });
    }
    let eta_used = eta_per_row.iter().copied().fold(0.0, f64::max);
    Ok(DebiasRows {
        m,
        eta_per_row,
        eta_used,
        jitter,
    })
}

fn symmetrize(a: &mut Matrix) {
    let p = a.rows();
    for i in 0..p {
        for k in (i + 1)..p {
            let v = 0.5 * (a[(i, k)] + a[(k, i)]);
            a[(i, k)] = v;
            a[(k, i)] = v;
        }
    }
}

fn factor_with_jitter(sigma: &Matrix) -> Result<(Cholesky, f64), InferenceError> {
    if let Some(c) = Cholesky::factor(sigma) {
        return Ok((c, 0.0));
    }
    let p = sigma.rows();
    let scale = (sigma.diagonal().iter().sum::<f64>() / p.max(1) as f64).max(f64::MIN_POSITIVE);
    let mut jitter = 1e-10 * scale;
    for _ in 0..8 {
        let mut s = sigma.clone();
        for i in 0..p {
            s[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::factor_owned(s) {
            return Ok((c, jitter));
        }
        jitter *= 100.0;
    }
    Err(InferenceError::SingularCovariance)
}

/// Coordinate descent on `¼λᵀQλ + λⱼ + η‖λ‖₁`, stopped when the optimality
/// residual (which equals the primal constraint violation) is below
/// `cfg.dual_tol`. `None` when the dual diverges or does not settle, which
/// signals an infeasible primal.
fn dual_row(q: &Matrix, j: usize, eta: f64, cfg: &DebiasConfig) -> Option<Vec<f64>> {
    let p = q.rows();
    let mut lambda = vec![0.0; p];
    // qlam = Qλ
    let mut qlam = vec![0.0; p];
    let diag_floor = 1e-14 * q.diagonal().iter().fold(0.0, |a: f64, &b| a.max(b));
    let e = |k: usize| if k == j { 1.0 } else { 0.0 };
    for _ in 0..cfg.max_sweeps {
        for k in 0..p {
            let old = lambda[k];
            let qkk = q[(k, k)];
            let c = 0.5 * (qlam[k] - qkk * old) + e(k);
            let new = if qkk > diag_floor {
                -crate::penalty::shrink(c, eta) / (0.5 * qkk)
            } else if libm::fabs(c) > eta {
                return None;
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                lambda[k] = new;
                for (r, qv) in qlam.iter_mut().zip(q.row(k)) {
                    *r += qv * delta;
                }
            }
        }
        if lambda.iter().any(|v| !v.is_finite() || libm::fabs(*v) > 1e15) {
            return None;
        }
        let residual = (0..p).fold(0.0, |worst: f64, k| {
            let g = 0.5 * qlam[k] + e(k);
            let r = if lambda[k] != 0.0 {
                libm::fabs(g + libm::copysign(eta, lambda[k]))
            } else {
                (libm::fabs(g) - eta).max(0.0)
            };
            worst.max(r)
        });
        if residual <= cfg.dual_tol {
            return Some(lambda);
        }
    }
    None
}

/// `m = −½ Σ⁻¹Ĥ λ`.
fn primal_row(sinv_h: &Matrix, lambda: &[f64]) -> Vec<f64> {
    let mut m = sinv_h.matvec(lambda);
    for v in &mut m {
        *v *= -0.5;
    }
    m
}

fn row_feasible(h: &Matrix, row: &[f64], j: usize, eta: f64) -> bool {
    (0..h.rows()).all(|k| {
        let e = if k == j { 1.0 } else { 0.0 };
        libm::fabs(dot(h.row(k), row) - e) <= eta + 1e-9
    })
}

/// De-biased estimates, intervals and tests for every covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub names: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub m: Matrix,
    pub sigma_hat: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub p_values: Vec<f64>,
    pub covariance: CovarianceKind,
    pub level: f64,
    pub eta_used: f64,
    pub eta_per_row: Vec<f64>,
    /// Overdispersion estimate, for the Gaussian-error covariance.
    pub zeta_hat: Option<f64>,
    pub n: usize,
}

impl InferenceResult {
    pub fn p(&self) -> usize {
        self.b_hat.len()
    }

    /// Whether the interval for coordinate `j` contains `value`.
    pub fn covers(&self, j: usize, value: f64) -> bool {
        self.ci_lower[j] <= value && value <= self.ci_upper[j]
    }
}

/// Covariance matrix of the requested kind, with `ζ̂` when applicable.
pub fn covariance_estimate(
    d: &Dataset,
    theta: &crate::ParamVector,
    cfg: &DebiasConfig,
) -> Result<(Matrix, Option<f64>), InferenceError> {
    match cfg.covariance {
        CovarianceKind::Sandwich => Ok((sandwich_covariance(d, theta)?, None)),
        CovarianceKind::GaussianError => {
            let z = zeta_hat(d, theta, cfg.positive_part)?;
            Ok((gaussian_error_covariance(d, theta, z.max(0.0))?, Some(z)))
        }
    }
}

pub fn debias_and_intervals(
    d: &Dataset,
    fit: &FitResult,
    cfg: &DebiasConfig,
) -> Result<InferenceResult, InferenceError> {
    cfg.validate()?;
    if !fit.converged && !cfg.allow_unconverged {
        return Err(InferenceError::NotConverged);
    }
    let p = d.p();
    if p == 0 {
        return Err(InferenceError::NoCovariates);
    }
    let n = d.n();
    let theta = &fit.theta_hat;
    let mu = predicted_mean(d, theta)?;
    let h = empirical_hessian(d, theta)?;
    let (sigma, zeta) = covariance_estimate(d, theta, cfg)?;
    let rows = solve_debias_rows(&h, &sigma, cfg.resolved_eta(n, p), cfg)?;

    let resid: Vec<f64> = d.y().iter().zip(mu.as_slice()).map(|(y, m)| y - m).collect();
    let score = d.x().t_matvec(&resid);
    let correction = rows.m.matvec(&score);
    let b_hat: Vec<f64> = theta
        .beta
        .iter()
        .zip(&correction)
        .map(|(b, c)| b + c / n as f64)
        .collect();

    let ms = rows.m.matmul(&sigma);
    let sigma_hat: Vec<f64> = (0..p)
        .map(|j| libm::sqrt(dot(ms.row(j), rows.m.row(j)).max(0.0)))
        .collect();
    let z = normal_quantile(1.0 - (1.0 - cfg.level) / 2.0);
    let root_n = libm::sqrt(n as f64);
    let mut ci_lower = Vec::with_capacity(p);
    let mut ci_upper = Vec::with_capacity(p);
    let mut z_scores = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let half = z * sigma_hat[j] / root_n;
        ci_lower.push(b_hat[j] - half);
        ci_upper.push(b_hat[j] + half);
        let zj = if sigma_hat[j] > 0.0 {
            b_hat[j] * root_n / sigma_hat[j]
        } else if b_hat[j] == 0.0 {
            0.0
        } else {
            libm::copysign(f64::INFINITY, b_hat[j])
        };
        z_scores.push(zj);
        p_values.push(two_sided_p_value(zj));
    }
    Ok(InferenceResult {
        names: d.covariate_names().to_vec(),
        beta_hat: theta.beta.clone(),
        b_hat,
        m: rows.m,
        sigma_hat,
        ci_lower,
        ci_upper,
        z_scores,
        p_values,
        covariance: cfg.covariance,
        level: cfg.level,
        eta_used: rows.eta_used,
        eta_per_row: rows.eta_per_row,
        zeta_hat: zeta,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RegionGraph;
    use crate::penalty::PenaltyConfig;
    use crate::solver::{fit, SolverConfig};
    use crate::ParamVector;
    use approx::assert_abs_diff_eq;

    fn data(y: &[u64], x: &[&[f64]], exposure: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|r| r.to_vec()).collect();
        Dataset::new(
            y.to_vec(),
            exposure.to_vec(),
            vec![1.0; y.len()],
            Matrix::from_rows(&rows),
        )
        .unwrap()
    }

    #[test]
    fn hessian_examples() {
        let d = data(&[0], &[&[1.0]], &[2.0]);
        let h = empirical_hessian(&d, &ParamVector::zeros(1, 1)).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 2.0);

        let d = data(&[0, 0], &[&[1.0], &[1.0]], &[1.0, 3.0]);
        let h = empirical_hessian(&d, &ParamVector::zeros(2, 1)).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 2.0);

        let d = data(&[0, 0], &[&[0.0, 0.0], &[0.0, 0.0]], &[1.0, 3.0]);
        assert_eq!(
            empirical_hessian(&d, &ParamVector::zeros(2, 2)).unwrap(),
            Matrix::zeros(2, 2)
        );
    }

    #[test]
    fn sandwich_examples() {
        let d = data(&[3], &[&[2.0]], &[1.0]);
        let s = sandwich_covariance(&d, &ParamVector::zeros(1, 1)).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 32.0);

        let d = data(&[2, 2], &[&[1.0], &[0.5]], &[2.0, 2.0]);
        let s = sandwich_covariance(&d, &ParamVector::zeros(2, 1)).unwrap();
        assert_eq!(s[(0, 0)], 0.0);
    }

    #[test]
    fn zeta_examples() {
        let d = data(&[3], &[&[1.0]], &[2.0]);
        let th = ParamVector::zeros(1, 1);
        assert_abs_diff_eq!(zeta_hat(&d, &th, false).unwrap(), -0.25);
        assert_eq!(zeta_hat(&d, &th, true).unwrap(), 0.0);
        let d = data(&[2], &[&[1.0]], &[2.0]);
        assert_eq!(zeta_hat(&d, &th, true).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_error_examples() {
        let d = data(&[0], &[&[1.0]], &[2.0]);
        let th = ParamVector::zeros(1, 1);
        assert_abs_diff_eq!(gaussian_error_covariance(&d, &th, 1.0).unwrap()[(0, 0)], 6.0);
        let info = gaussian_error_covariance(&d, &th, 0.0).unwrap();
        assert_eq!(info, empirical_hessian(&d, &th).unwrap());
        assert_eq!(
            gaussian_error_covariance(&d, &th, -0.1),
            Err(InferenceError::NegativeZeta(-0.1))
        );
    }

    #[test]
    fn identity_program() {
        let cfg = DebiasConfig::default();
        let i3 = Matrix::identity(3);
        let r = solve_debias_rows(&i3, &i3, 0.01, &cfg).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let want = if j == k { 0.99 } else { 0.0 };
                assert_abs_diff_eq!(r.m[(j, k)], want, epsilon = 1e-12);
            }
        }
        assert_eq!(r.eta_used, 0.01);
        let r = solve_debias_rows(&i3, &i3, 1.5, &cfg).unwrap();
        assert_eq!(r.m, Matrix::zeros(3, 3));
    }

    #[test]
    fn rank_deficient_hessian_grows_eta() {
        let h = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let r = solve_debias_rows(&h, &Matrix::identity(2), 0.01, &DebiasConfig::default()).unwrap();
        assert!(r.eta_used >= 0.5 - 1e-12);
        for j in 0..2 {
            for k in 0..2 {
                let e = if j == k { 1.0 } else { 0.0 };
                let v = dot(h.row(k), r.m.row(j)) - e;
                assert!(v.abs() <= r.eta_per_row[j] + 1e-8);
            }
        }
    }

    #[test]
    fn zero_hessian_is_infeasible() {
        let cfg = DebiasConfig {
            max_growth: 3,
            ..DebiasConfig::default()
        };
        let err = solve_debias_rows(&Matrix::zeros(2, 2), &Matrix::identity(2), 0.01, &cfg);
        assert_eq!(
            err,
            Err(InferenceError::Infeasible {
                coordinates: vec![0, 1],
                eta: 0.08
            })
        );
    }

    #[test]
    fn single_residual_correction() {
        // y − μ̂ = 1, X = [1], n = 1, M = (1 − η)
        let d = data(&[2], &[&[1.0]], &[1.0]);
        let theta = ParamVector::zeros(1, 1);
        let g = RegionGraph::from_index_edges(1, []).unwrap();
        let mut fr = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &SolverConfig::default()).unwrap();
        fr.theta_hat = theta;
        let eta = 0.01;
        let cfg = DebiasConfig {
            eta: Some(eta),
            covariance: CovarianceKind::GaussianError,
            ..DebiasConfig::default()
        };
        // Ĥ = Σ̃ = [1] here, so M = (1 − η) exactly.
        let r = debias_and_intervals(&d, &fr, &cfg).unwrap();
        assert_abs_diff_eq!(r.m[(0, 0)], 1.0 - eta, epsilon = 1e-12);
        assert_abs_diff_eq!(r.b_hat[0], 1.0 - eta, epsilon = 1e-12);
        let half = r.ci_upper[0] - r.b_hat[0];
        assert_abs_diff_eq!(half, 1.959_963_984_540_054 * r.sigma_hat[0], epsilon = 1e-12);
    }

    #[test]
    fn unconverged_fit_is_rejected() {
        let d = data(&[2, 1], &[&[1.0], &[-1.0]], &[1.0, 1.0]);
        let g = RegionGraph::from_index_edges(2, [(0, 1, 1.0)]).unwrap();
        let scfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        let fr = fit(&d, &g, &PenaltyConfig::l2(1.0, 0.0), &scfg).unwrap();
        assert!(!fr.converged);
        assert_eq!(
            debias_and_intervals(&d, &fr, &DebiasConfig::default()),
            Err(InferenceError::NotConverged)
        );
        let cfg = DebiasConfig {
            allow_unconverged: true,
            ..DebiasConfig::default()
        };
        assert!(debias_and_intervals(&d, &fr, &cfg).is_ok());
    }

    #[test]
    fn config_validation() {
        let bad = DebiasConfig {
            level: 1.0,
            ..DebiasConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DebiasConfig {
            eta: Some(0.0),
            ..DebiasConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_abs_diff_eq!(default_eta(100, 10), 0.1 * (10f64.ln() / 100.0).sqrt());
        assert_abs_diff_eq!(default_eta(4, 1), 0.1 * (2f64.ln() / 4.0).sqrt());
    }
}
