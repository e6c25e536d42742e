//! Sparsity and fusion penalties.
//!
//! The fusion penalties act on the baselines `α̃` through the incidence
//! matrix `B` of the region graph:
//!
//! - quadratic: `½ α̃ᵀ L̃ α̃ = ½‖Bα̃‖² + (δ/2)‖α̃‖²`, multiplied by `γ` in the
//!   objective;
//! - smoothed absolute differences: `h_ξ(α̃) = Σₖ q_ξ(zₖ)` with `z = γBα̃` and
//!   the Huber function `q_ξ(u) = u²/(2ξ)` for `|u| ≤ ξ`, `|u| − ξ/2` otherwise.
//!   `γ` is already inside `h_ξ`.

use alloc::vec::Vec;

use crate::graph::{IncidenceMatrix, DEFAULT_RIDGE};
use crate::linalg::norm1;

/// Accuracy target `ε` in the default smoothing parameter `ξ = ε/|E|`.
pub const DEFAULT_SMOOTHING_EPSILON: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PenaltyError {
    #[error("threshold must be >= 0, got {0}")]
    NegativeThreshold(f64),
    #[error("gamma must be finite and >= 0, got {0}")]
    InvalidGamma(f64),
    #[error("tau must be finite and >= 0, got {0}")]
    InvalidTau(f64),
    #[error("smoothing parameter xi must be finite and > 0, got {0}")]
    InvalidXi(f64),
    #[error("ridge delta must be finite and >= 0, got {0}")]
    InvalidDelta(f64),
    #[error("baselines have length {got}, incidence matrix has {expected} columns")]
    ShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FusionKind {
    /// Nesterov-smoothed absolute differences across edges.
    L1Smoothed,
    /// Quadratic Laplacian penalty.
    L2,
}

/// Tuning parameters of the penalized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub gamma: f64,
    pub tau: f64,
    pub fusion: FusionKind,
    /// Smoothing parameter; `None` means `ε/|E|` with
    /// [`DEFAULT_SMOOTHING_EPSILON`].
    pub xi: Option<f64>,
    /// Ridge added to the Laplacian by the quadratic penalty.
    pub delta: f64,
}

impl PenaltyConfig {
    pub fn new(fusion: FusionKind, gamma: f64, tau: f64) -> Self {
        Self {
            gamma,
            tau,
            fusion,
            xi: None,
            delta: DEFAULT_RIDGE,
        }
    }

    pub fn l2(gamma: f64, tau: f64) -> Self {
        Self::new(FusionKind::L2, gamma, tau)
    }

    pub fn l1_smoothed(gamma: f64, tau: f64) -> Self {
        Self::new(FusionKind::L1Smoothed, gamma, tau)
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = Some(xi);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<(), PenaltyError> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(PenaltyError::InvalidGamma(self.gamma));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(PenaltyError::InvalidTau(self.tau));
        }
        if let Some(xi) = self.xi {
            if !(xi > 0.0) || !xi.is_finite() {
                return Err(PenaltyError::InvalidXi(xi));
            }
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(PenaltyError::InvalidDelta(self.delta));
        }
        Ok(())
    }

    /// Smoothing parameter in effect for a graph with `n_edges` edges.
    pub fn resolved_xi(&self, n_edges: usize) -> f64 {
        self.xi.unwrap_or_else(|| default_xi(n_edges))
    }

    /// Fusion contribution to the objective and its gradient in `α̃`, with
    /// `γ` applied.
    pub fn fusion(&self, alpha: &[f64], b: &IncidenceMatrix) -> Result<FusionEval, PenaltyError> {
        match self.fusion {
            FusionKind::L2 => {
                let mut e = l2_fusion(alpha, b, self.delta)?;
                e.value *= self.gamma;
                for g in &mut e.gradient {
                    *g *= self.gamma;
                }
                Ok(e)
            }
            FusionKind::L1Smoothed => smoothed_l1_fusion(alpha, b, self.gamma, self.resolved_xi(b.n_edges())),
        }
    }

    /// Fusion contribution to the objective without the gradient.
    pub fn fusion_value(&self, alpha: &[f64], b: &IncidenceMatrix) -> Result<f64, PenaltyError> {
        check_shape(alpha, b)?;
        let z = b.apply(alpha);
        Ok(match self.fusion {
            FusionKind::L2 => {
                let q: f64 =
                    z.iter().map(|v| v * v).sum::<f64>() + self.delta * alpha.iter().map(|v| v * v).sum::<f64>();
                0.5 * self.gamma * q
            }
            FusionKind::L1Smoothed => {
                let xi = self.resolved_xi(b.n_edges());
                z.iter().map(|&u| huber(self.gamma * u, xi)).sum()
            }
        })
    }
}

/// `ξ = ε/|E|` with `ε` = [`DEFAULT_SMOOTHING_EPSILON`] (`ε` itself for an
/// edgeless graph).
pub fn default_xi(n_edges: usize) -> f64 {
    DEFAULT_SMOOTHING_EPSILON / n_edges.max(1) as f64
}

/// Value and gradient of a fusion penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionEval {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `sign(x)·max(|x| − t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> Result<f64, PenaltyError> {
    if !(t >= 0.0) {
        return Err(PenaltyError::NegativeThreshold(t));
    }
    Ok(shrink(x, t))
}

/// Elementwise soft-thresholding.
pub fn soft_threshold_in_place(x: &mut [f64], t: f64) -> Result<(), PenaltyError> {
    if !(t >= 0.0) {
        return Err(PenaltyError::NegativeThreshold(t));
    }
    for v in x {
        *v = shrink(*v, t);
    }
    Ok(())
}

#[inline]
pub(crate) fn shrink(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Clips every coordinate to `[−1, 1]`.
pub fn linf_project(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}

/// `q_ξ(u)`.
#[inline]
pub fn huber(u: f64, xi: f64) -> f64 {
    let a = libm::fabs(u);
    if a <= xi {
        u * u / (2.0 * xi)
    } else {
        a - 0.5 * xi
    }
}

fn check_shape(alpha: &[f64], b: &IncidenceMatrix) -> Result<(), PenaltyError> {
    if alpha.len() != b.n_regions() {
        return Err(PenaltyError::ShapeMismatch {
            expected: b.n_regions(),
            got: alpha.len(),
        });
    }
    Ok(())
}

/// `½ α̃ᵀ(BᵀB + δI)α̃` and its gradient `(BᵀB + δI)α̃`, without `γ`.
pub fn l2_fusion(alpha: &[f64], b: &IncidenceMatrix, delta: f64) -> Result<FusionEval, PenaltyError> {
    check_shape(alpha, b)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(PenaltyError::InvalidDelta(delta));
    }
    let z = b.apply(alpha);
    let mut gradient = b.apply_transpose(&z);
    let mut value = z.iter().map(|v| v * v).sum::<f64>();
    for (g, a) in gradient.iter_mut().zip(alpha) {
        *g += delta * a;
        value += delta * a * a;
    }
    Ok(FusionEval {
        value: 0.5 * value,
        gradient,
    })
}

/// `h_ξ(α̃)` with `z = γBα̃` and its gradient `γBᵀ clip(z/ξ)`.
pub fn smoothed_l1_fusion(alpha: &[f64], b: &IncidenceMatrix, gamma: f64, xi: f64) -> Result<FusionEval, PenaltyError> {
    check_shape(alpha, b)?;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(PenaltyError::InvalidXi(xi));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(PenaltyError::InvalidGamma(gamma));
    }
    let mut z = b.apply(alpha);
    let mut value = 0.0;
    for u in &mut z {
        *u *= gamma;
        value += huber(*u, xi);
        *u = (*u / xi).clamp(-1.0, 1.0);
    }
    let mut gradient = b.apply_transpose(&z);
    for g in &mut gradient {
        *g *= gamma;
    }
    Ok(FusionEval { value, gradient })
}

/// Unsmoothed `γ‖Bα̃‖₁`.
pub fn l1_fusion_exact(alpha: &[f64], b: &IncidenceMatrix, gamma: f64) -> Result<f64, PenaltyError> {
    check_shape(alpha, b)?;
    Ok(gamma * norm1(&b.apply(alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RegionGraph;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn edge() -> IncidenceMatrix {
        RegionGraph::from_index_edges(2, [(0, 1, 1.0)]).unwrap().incidence()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(2.0, 1.5).unwrap(), 0.5);
        assert_eq!(soft_threshold(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-2.5, 1.0).unwrap(), -1.5);
        assert_eq!(soft_threshold(0.37, 0.0).unwrap(), 0.37);
        assert_eq!(soft_threshold(1.0, -0.1), Err(PenaltyError::NegativeThreshold(-0.1)));
        let mut v = vec![3.0, -0.2, -4.0];
        soft_threshold_in_place(&mut v, 1.0).unwrap();
        assert_eq!(v, vec![2.0, 0.0, -3.0]);
    }

    #[test]
    fn linf_projection() {
        assert_eq!(linf_project(&[2.0, -3.0, 0.5]), vec![1.0, -1.0, 0.5]);
        assert_eq!(linf_project(&[0.0, 0.0]), vec![0.0, 0.0]);
        let inside = [0.9, -1.0, 1.0, 0.0];
        assert_eq!(linf_project(&inside), inside.to_vec());
    }

    #[test]
    fn l2_examples() {
        let g = RegionGraph::from_index_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let e = l2_fusion(&[1.0, 3.0, 0.0], &g.incidence(), 0.0).unwrap();
        assert_abs_diff_eq!(e.value, 6.5);

        let e = l2_fusion(&[1.0, 0.0], &edge(), 0.0).unwrap();
        assert_eq!(e.gradient, vec![1.0, -1.0]);

        let e = l2_fusion(&[2.5; 3], &g.incidence(), 0.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0; 3]);
    }

    #[test]
    fn l2_ridge_matches_laplacian() {
        let g = RegionGraph::from_index_edges(3, [(0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        let a = [0.3, -1.2, 2.0];
        let e = l2_fusion(&a, &g.incidence(), 0.25).unwrap();
        let la = g.laplacian(0.25).unwrap().apply(&a);
        for (x, y) in e.gradient.iter().zip(&la) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
        let q: f64 = a.iter().zip(&la).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(e.value, 0.5 * q, epsilon = 1e-14);
    }

    #[test]
    fn smoothed_examples() {
        let e = smoothed_l1_fusion(&[0.0, 2.0], &edge(), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.value, 1.5);
        assert_eq!(e.gradient, vec![-1.0, 1.0]);
        let e = smoothed_l1_fusion(&[0.0, 0.5], &edge(), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.value, 0.125);
        let e = smoothed_l1_fusion(&[4.0, 4.0], &edge(), 3.0, 0.1).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn gamma_applied_by_config() {
        let b = edge();
        let cfg = PenaltyConfig::l2(2.0, 0.0).with_delta(0.0);
        let e = cfg.fusion(&[1.0, 0.0], &b).unwrap();
        assert_abs_diff_eq!(e.value, 1.0);
        assert_eq!(e.gradient, vec![2.0, -2.0]);
        assert_abs_diff_eq!(cfg.fusion_value(&[1.0, 0.0], &b).unwrap(), 1.0);

        let cfg = PenaltyConfig::l1_smoothed(2.0, 0.0).with_xi(0.5);
        let e = cfg.fusion(&[1.0, 0.0], &b).unwrap();
        assert_abs_diff_eq!(e.value, 1.75);
        assert_abs_diff_eq!(cfg.fusion_value(&[1.0, 0.0], &b).unwrap(), 1.75);
    }

    #[test]
    fn validation_and_shapes() {
        assert!(PenaltyConfig::l2(-1.0, 0.0).validate().is_err());
        assert!(PenaltyConfig::l2(0.0, f64::NAN).validate().is_err());
        assert!(PenaltyConfig::l1_smoothed(1.0, 0.0).with_xi(0.0).validate().is_err());
        assert!(PenaltyConfig::l2(1.0, 1.0).with_delta(-1.0).validate().is_err());
        assert!(PenaltyConfig::l2(1.0, 1.0).validate().is_ok());
        assert_eq!(
            l2_fusion(&[1.0], &edge(), 0.0),
            Err(PenaltyError::ShapeMismatch { expected: 2, got: 1 })
        );
        assert!(smoothed_l1_fusion(&[1.0, 2.0, 3.0], &edge(), 1.0, 1.0).is_err());
    }

    #[test]
    fn default_smoothing() {
        assert_abs_diff_eq!(default_xi(4), 2.5e-3);
        assert_abs_diff_eq!(default_xi(0), 1e-2);
        assert_abs_diff_eq!(PenaltyConfig::l1_smoothed(1.0, 1.0).resolved_xi(10), 1e-3);
    }

    #[test]
    fn exact_l1() {
        let g = RegionGraph::from_index_edges(3, [(0, 1, 4.0), (1, 2, 1.0)]).unwrap();
        let v = l1_fusion_exact(&[1.0, 0.0, 2.0], &g.incidence(), 0.5).unwrap();
        assert_abs_diff_eq!(v, 0.5 * (2.0 + 2.0));
    }
}
