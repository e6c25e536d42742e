//! Opt-in covariate standardization.
//!
//! Columns are centered and scaled to unit sample standard deviation before
//! fitting; constant columns are only centered. Since `Xβ = X̃β̃ − cᵀβ̃/s`,
//! results map back through `β = β̃/s` with the intercept shift absorbed into
//! every baseline.

use coxfuse_core::linalg::Matrix;
use coxfuse_core::{Dataset, InferenceResult, ParamVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn from_data(d: &Dataset) -> Self {
        let (n, p) = (d.n(), d.p());
        let mut center = vec![0.0; p];
        let mut scale = vec![1.0; p];
        for j in 0..p {
            let col = d.x().column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            center[j] = mean;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        Self { center, scale }
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset, coxfuse_core::ModelError> {
        let x = Matrix::from_fn(d.n(), d.p(), |i, j| (d.x()[(i, j)] - self.center[j]) / self.scale[j]);
        Dataset::new(d.counts().to_vec(), d.offset().to_vec(), d.area().to_vec(), x)?
            .with_covariate_names(d.covariate_names().to_vec())
    }

    /// Parameters on the original covariate scale.
    pub fn to_original(&self, theta: &ParamVector) -> ParamVector {
        let beta: Vec<f64> = theta.beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let shift: f64 = beta.iter().zip(&self.center).map(|(b, c)| b * c).sum();
        ParamVector::new(theta.alpha.iter().map(|a| a - shift).collect(), beta)
    }

    /// Inverse of [`Self::to_original`].
    pub fn to_standardized(&self, theta: &ParamVector) -> ParamVector {
        let shift: f64 = theta.beta.iter().zip(&self.center).map(|(b, c)| b * c).sum();
        let beta = theta.beta.iter().zip(&self.scale).map(|(b, s)| b * s).collect();
        ParamVector::new(theta.alpha.iter().map(|a| a + shift).collect(), beta)
    }

    /// Rescales estimates, intervals and the de-biasing rows to the original
    /// covariate scale. Test statistics are scale free and stay as they are.
    pub fn inference_to_original(&self, r: &mut InferenceResult) {
        for j in 0..r.p() {
            let s = self.scale[j];
            r.beta_hat[j] /= s;
            r.b_hat[j] /= s;
            r.sigma_hat[j] /= s;
            r.ci_lower[j] /= s;
            r.ci_upper[j] /= s;
            for v in r.m.row_mut(j) {
                *v /= s;
            }
        }
    }
}
