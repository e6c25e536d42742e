//! Observed counts, parameters, and the discretized Poisson log-likelihood.
//!
//! For region `i` with count `yᵢ`, offset `Pᵢ`, area `|Ωᵢ|`, covariates `Xᵢ`,
//! baseline `α̃ᵢ` and effects `β`:
//!
//! ```text
//! ℓ(α̃, β) = Σᵢ yᵢ (log Pᵢ + α̃ᵢ + Xᵢβ) − Σᵢ |Ωᵢ| Pᵢ exp(α̃ᵢ + Xᵢβ)
//! ```
//!
//! The `−log(yᵢ!)` constant is dropped. The linear predictor inside `exp` is
//! clamped to `[−LINEAR_PREDICTOR_BOUND, LINEAR_PREDICTOR_BOUND]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{dot, Matrix};

/// Bound on `α̃ᵢ + Xᵢβ` inside the exponential, and on the baselines kept by
/// the solver.
pub const LINEAR_PREDICTOR_BOUND: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{field}[{index}] = {value} is invalid: {reason}")]
    InvalidValue {
        field: &'static str,
        index: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("non-finite fitted mean at region {0}")]
    NonFiniteMean(usize),
}

/// Counts, offsets, areas and covariates for `n` regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    counts: Vec<u64>,
    y: Vec<f64>,
    offset: Vec<f64>,
    log_offset: Vec<f64>,
    area: Vec<f64>,
    exposure: Vec<f64>,
    x: Matrix,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// Validates and stores a dataset. Covariates are named `x1..xp`.
    pub fn new(counts: Vec<u64>, offset: Vec<f64>, area: Vec<f64>, x: Matrix) -> Result<Self, ModelError> {
        let n = counts.len();
        if offset.len() != n || area.len() != n || x.rows() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "{} counts, {} offsets, {} areas, {} covariate rows",
                n,
                offset.len(),
                area.len(),
                x.rows()
            )));
        }
        for (i, &v) in offset.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidValue {
                    field: "offset",
                    index: i,
                    value: v,
                    reason: "must be finite and > 0",
                });
            }
        }
        for (i, &v) in area.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidValue {
                    field: "area",
                    index: i,
                    value: v,
                    reason: "must be finite and > 0",
                });
            }
        }
        for (k, &v) in x.as_slice().iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::InvalidValue {
                    field: "x",
                    index: k,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        let covariate_names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        let y = counts.iter().map(|&c| c as f64).collect();
        let log_offset = offset.iter().map(|&p| libm::log(p)).collect();
        let exposure = area.iter().zip(&offset).map(|(a, p)| a * p).collect();
        Ok(Self {
            counts,
            y,
            offset,
            log_offset,
            area,
            exposure,
            x,
            covariate_names,
        })
    }

    /// Replaces the covariate names.
    pub fn with_covariate_names(mut self, names: Vec<String>) -> Result<Self, ModelError> {
        if names.len() != self.p() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} covariate names for {} covariates",
                names.len(),
                self.p()
            )));
        }
        self.covariate_names = names;
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Counts as floating point.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn log_offset(&self) -> &[f64] {
        &self.log_offset
    }

    pub fn area(&self) -> &[f64] {
        &self.area
    }

    /// `|Ωᵢ| Pᵢ` per region.
    pub fn exposure(&self) -> &[f64] {
        &self.exposure
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Restriction to the given regions, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Dataset {
            counts: idx.iter().map(|&i| self.counts[i]).collect(),
            y: pick(&self.y),
            offset: pick(&self.offset),
            log_offset: pick(&self.log_offset),
            area: pick(&self.area),
            exposure: pick(&self.exposure),
            x: self.x.select_rows(idx),
            covariate_names: self.covariate_names.clone(),
        }
    }

    pub(crate) fn check_theta(&self, theta: &ParamVector) -> Result<(), ModelError> {
        if theta.alpha.len() != self.n() || theta.beta.len() != self.p() {
            return Err(ModelError::DimensionMismatch(format!(
                "parameter has {} baselines and {} effects; data has n = {}, p = {}",
                theta.alpha.len(),
                theta.beta.len(),
                self.n(),
                self.p()
            )));
        }
        Ok(())
    }

    /// `α̃ᵢ + Xᵢβ`, unclamped.
    pub(crate) fn linear_predictor(&self, theta: &ParamVector) -> Vec<f64> {
        theta
            .alpha
            .iter()
            .enumerate()
            .map(|(i, a)| a + dot(self.x.row(i), &theta.beta))
            .collect()
    }

    pub(crate) fn means_from_predictor(&self, eta: &[f64]) -> Vec<f64> {
        eta.iter()
            .zip(&self.exposure)
            .map(|(e, b)| b * libm::exp(clamp_predictor(*e)))
            .collect()
    }

    pub(crate) fn loglik_unchecked(&self, theta: &ParamVector) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.n() {
            let eta = theta.alpha[i] + dot(self.x.row(i), &theta.beta);
            ll += self.y[i] * (self.log_offset[i] + eta) - self.exposure[i] * libm::exp(clamp_predictor(eta));
        }
        ll
    }

    /// Residuals `y − μ`.
    pub(crate) fn residuals_unchecked(&self, theta: &ParamVector) -> Vec<f64> {
        let eta = self.linear_predictor(theta);
        self.means_from_predictor(&eta)
            .into_iter()
            .zip(&self.y)
            .map(|(m, y)| y - m)
            .collect()
    }
}

#[inline]
pub(crate) fn clamp_predictor(eta: f64) -> f64 {
    eta.clamp(-LINEAR_PREDICTOR_BOUND, LINEAR_PREDICTOR_BOUND)
}

/// Parameters `θ = (α̃, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParamVector {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self { alpha, beta }
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        Self {
            alpha: alloc::vec![0.0; n],
            beta: alloc::vec![0.0; p],
        }
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(&self.beta).all(|v| v.is_finite())
    }

    /// Concatenation `(α̃, β)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.extend_from_slice(&self.beta);
        v
    }

    /// Inverse of [`ParamVector::to_flat`] with `n` baselines.
    pub fn from_flat(flat: &[f64], n: usize) -> Self {
        Self {
            alpha: flat[..n].to_vec(),
            beta: flat[n..].to_vec(),
        }
    }

    /// Clamps every baseline into `[−LINEAR_PREDICTOR_BOUND, LINEAR_PREDICTOR_BOUND]`.
    pub fn clamp_alpha(&mut self) {
        for a in &mut self.alpha {
            *a = clamp_predictor(*a);
        }
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .chain(self.beta.iter().zip(&other.beta))
            .fold(0.0, |m, (a, b)| f64::max(m, libm::fabs(a - b)))
    }
}

/// Expected counts `μᵢ = |Ωᵢ| Pᵢ exp(α̃ᵢ + Xᵢβ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedMeans(pub Vec<f64>);

impl FittedMeans {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn predicted_mean(d: &Dataset, theta: &ParamVector) -> Result<FittedMeans, ModelError> {
    d.check_theta(theta)?;
    let mu = d.means_from_predictor(&d.linear_predictor(theta));
    if let Some(i) = mu.iter().position(|m| !m.is_finite() || !(*m > 0.0)) {
        return Err(ModelError::NonFiniteMean(i));
    }
    Ok(FittedMeans(mu))
}

pub fn loglik(d: &Dataset, theta: &ParamVector) -> Result<f64, ModelError> {
    d.check_theta(theta)?;
    Ok(d.loglik_unchecked(theta))
}

/// Gradient of `ℓ`: `(y − μ, Xᵀ(y − μ))`.
pub fn grad_loglik(d: &Dataset, theta: &ParamVector) -> Result<ParamVector, ModelError> {
    d.check_theta(theta)?;
    let r = d.residuals_unchecked(theta);
    let gb = d.x().t_matvec(&r);
    Ok(ParamVector { alpha: r, beta: gb })
}

/// `−∇²_β ℓ = Σᵢ Xᵢᵀ Xᵢ μᵢ` (not divided by `n`).
pub fn hessian_beta(d: &Dataset, theta: &ParamVector) -> Result<Matrix, ModelError> {
    let mu = predicted_mean(d, theta)?;
    Ok(weighted_gram(d.x(), mu.as_slice()))
}

/// `∇²_{β,α} ℓ = −Xᵀ diag(μ)`, a `p × n` matrix.
pub fn hessian_cross(d: &Dataset, theta: &ParamVector) -> Result<Matrix, ModelError> {
    let mu = predicted_mean(d, theta)?;
    let x = d.x();
    Ok(Matrix::from_fn(d.p(), d.n(), |j, i| -x[(i, j)] * mu.0[i]))
}

/// `Σᵢ wᵢ XᵢᵀXᵢ`.
pub(crate) fn weighted_gram(x: &Matrix, w: &[f64]) -> Matrix {
    let p = x.cols();
    let mut h = Matrix::zeros(p, p);
    for (i, &wi) in w.iter().enumerate() {
        h.add_outer(wi, x.row(i));
    }
    h
}
