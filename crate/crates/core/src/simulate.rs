//! Log-Gaussian Cox process replicates on `[0, m]²` split into `m²` unit
//! cells, and replicate-level summaries of inference results.
//!
//! The log-intensity at `s` is `α⁰(s) + Xᵢβ⁰ + ε(s)` where
//! `α⁰(s) = ‖s‖/(4m)` and `ε` is the sum of a zero-mean Gaussian random field
//! with covariance `σ² exp(−d/ρ)` and independent `N(0, vₖ)` errors with
//! `vₖ ~ InvGamma(shape, rate)` per fine-grid cell. The expected count of
//! unit cell `i` is the midpoint-rule integral over its fine cells:
//!
//! ```text
//! λᵢ = P exp(Xᵢβ⁰) Σ_{c ⊂ Ωᵢ} exp(α⁰(s_c) + ε(s_c)) h²
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::graph::RegionGraph;
use crate::inference::InferenceResult;
use crate::linalg::{Cholesky, Matrix};
use crate::model::Dataset;

/// Minimum number of fine cells along each side of the domain.
pub const MIN_FINE_CELLS: usize = 60;

/// Expected counts at or above this are drawn from the normal approximation.
pub const NORMAL_APPROX_LAMBDA: f64 = 1e12;

// Substreams of a replicate's generator.
const STREAM_COVARIATES: u64 = 0;
const STREAM_GRF: u64 = 1;
const STREAM_UNSTRUCTURED: u64 = 2;
const STREAM_COUNTS: u64 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("covariance matrix factorization failed")]
    Factorization,
    #[error("no replicates to evaluate")]
    EmptyInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Deterministic part of the log-intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    /// `‖s‖/(4m)`.
    Radial,
    Zero,
}

/// Law of the unstructured error on each fine cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnstructuredLaw {
    /// `N(0, v)` with `v ~ InvGamma(shape, rate)` (density ∝ `v^(−shape−1) e^(−rate/v)`).
    InvGammaNormal {
        shape: f64,
        rate: f64,
    },
    /// `N(0, variance)`.
    Normal {
        variance: f64,
    },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Side length; the domain has `m²` unit cells.
    pub m: usize,
    pub p: usize,
    pub beta_true: Vec<f64>,
    pub baseline: Baseline,
    /// Range `ρ` of the exponential covariance.
    pub grf_range: f64,
    /// Marginal variance `σ²` of the random field; 0 disables it.
    pub grf_variance: f64,
    pub unstructured: UnstructuredLaw,
    /// Fine cells along each side of the domain; a multiple of `m`.
    pub fine_grid: usize,
    pub offset: f64,
    /// Covariates are drawn from `Uniform[−h, h]`.
    pub covariate_half_width: f64,
    pub seed: u64,
}

impl Scenario {
    /// The lattice design with `β⁰` from [`reference_beta`], `ρ = 0.2m`, `σ² = 1`,
    /// `InvGamma(2, 1)` unstructured variances, `P = 2` and `Uniform[−0.5, 0.5]`
    /// covariates.
    pub fn reference_design(m: usize, p: usize, seed: u64) -> Self {
        Self {
            m,
            p,
            beta_true: reference_beta(p),
            baseline: Baseline::Radial,
            grf_range: 0.2 * m as f64,
            grf_variance: 1.0,
            unstructured: UnstructuredLaw::InvGammaNormal { shape: 2.0, rate: 1.0 },
            fine_grid: default_fine_grid(m),
            offset: 2.0,
            covariate_half_width: 0.5,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.m * self.m
    }

    /// Fine cells per unit-cell side.
    pub fn subdivision(&self) -> usize {
        self.fine_grid / self.m
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::InvalidScenario(m));
        if self.m < 2 {
            return bad(format!("m must be >= 2, got {}", self.m));
        }
        if self.p < 1 {
            return bad(String::from("p must be >= 1"));
        }
        if self.beta_true.len() != self.p {
            return bad(format!(
                "beta_true has {} entries for p = {}",
                self.beta_true.len(),
                self.p
            ));
        }
        if self.beta_true.iter().any(|b| !b.is_finite()) {
            return bad(String::from("beta_true must be finite"));
        }
        if self.fine_grid < self.m || self.fine_grid % self.m != 0 {
            return bad(format!(
                "fine_grid = {} must be a positive multiple of m = {}",
                self.fine_grid, self.m
            ));
        }
        if !(self.grf_range > 0.0) || !self.grf_range.is_finite() {
            return bad(format!("grf_range must be > 0, got {}", self.grf_range));
        }
        if !(self.grf_variance >= 0.0) || !self.grf_variance.is_finite() {
            return bad(format!("grf_variance must be >= 0, got {}", self.grf_variance));
        }
        match self.unstructured {
            UnstructuredLaw::InvGammaNormal { shape, rate } => {
                if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
                    return bad(format!("inverse-gamma shape {shape} and rate {rate} must be > 0"));
                }
            }
            UnstructuredLaw::Normal { variance } => {
                if !(variance >= 0.0) || !variance.is_finite() {
                    return bad(format!("unstructured variance must be >= 0, got {variance}"));
                }
            }
            UnstructuredLaw::None => {}
        }
        if !(self.offset > 0.0) || !self.offset.is_finite() {
            return bad(format!("offset must be > 0, got {}", self.offset));
        }
        if !(self.covariate_half_width >= 0.0) || !self.covariate_half_width.is_finite() {
            return bad(format!(
                "covariate_half_width must be >= 0, got {}",
                self.covariate_half_width
            ));
        }
        Ok(())
    }

    /// Rook-adjacency graph of the unit cells.
    pub fn graph(&self) -> RegionGraph {
        RegionGraph::lattice(self.m)
    }

    /// `α⁰(s)`.
    pub fn baseline_at(&self, s: (f64, f64)) -> f64 {
        match self.baseline {
            Baseline::Radial => libm::sqrt(s.0 * s.0 + s.1 * s.1) / (4.0 * self.m as f64),
            Baseline::Zero => 0.0,
        }
    }

    /// Fine-grid midpoints, row-major from the origin.
    pub fn fine_points(&self) -> Vec<(f64, f64)> {
        let f = self.fine_grid;
        let h = self.m as f64 / f as f64;
        let mut pts = Vec::with_capacity(f * f);
        for r in 0..f {
            for c in 0..f {
                pts.push(((c as f64 + 0.5) * h, (r as f64 + 0.5) * h));
            }
        }
        pts
    }

    /// Unit cell containing fine cell `k`.
    pub fn unit_cell_of(&self, k: usize) -> usize {
        let f = self.fine_grid;
        let s = self.subdivision();
        let (r, c) = (k / f, k % f);
        (r / s) * self.m + c / s
    }
}

/// `β⁰`: `(−1, −1, 1, 1, 0, …)`, or five `−1`s followed by five `1`s when
/// `p ≥ 100`. Truncated when `p` is smaller than the pattern.
pub fn reference_beta(p: usize) -> Vec<f64> {
    let k = if p >= 100 { 5 } else { 2 };
    (0..p)
        .map(|j| {
            if j < k {
                -1.0
            } else if j < 2 * k {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Least multiple of `m` that is at least [`MIN_FINE_CELLS`].
pub fn default_fine_grid(m: usize) -> usize {
    if m == 0 {
        return MIN_FINE_CELLS;
    }
    MIN_FINE_CELLS.div_ceil(m) * m
}

/// `σ² exp(−d/ρ)`.
pub fn exponential_covariance(d: f64, range: f64, variance: f64) -> f64 {
    variance * libm::exp(-d / range)
}

/// Sampler for a zero-mean Gaussian random field with exponential
/// covariance on a fixed set of points.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    chol: Cholesky,
}

impl GrfSampler {
    /// Factors the covariance matrix, adding `1e−10·σ²` to the diagonal once
    /// if the plain factorization fails.
    pub fn new(points: &[(f64, f64)], range: f64, variance: f64) -> Result<Self, SimulationError> {
        if !(range > 0.0) || !(variance > 0.0) || !range.is_finite() || !variance.is_finite() {
            return Err(SimulationError::InvalidScenario(format!(
                "random field needs range > 0 and variance > 0, got {range} and {variance}"
            )));
        }
        let n = points.len();
        let cov = Matrix::from_fn(n, n, |a, b| {
            let (dx, dy) = (points[a].0 - points[b].0, points[a].1 - points[b].1);
            exponential_covariance(libm::sqrt(dx * dx + dy * dy), range, variance)
        });
        let chol = match Cholesky::factor(&cov) {
            Some(c) => c,
            None => {
                let mut cov = cov;
                for i in 0..n {
                    cov[(i, i)] += 1e-10 * variance;
                }
                Cholesky::factor_owned(cov).ok_or(SimulationError::Factorization)?
            }
        };
        Ok(Self { chol })
    }

    pub fn len(&self) -> usize {
        self.chol.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.chol.lower_mul(&z)
    }
}

/// One draw of the random field at `points`.
pub fn sample_grf(points: &[(f64, f64)], range: f64, variance: f64, seed: u64) -> Result<Vec<f64>, SimulationError> {
    let sampler = GrfSampler::new(points, range, variance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

/// Realized latent quantities of a replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    /// Expected count per unit cell.
    pub lambda: Vec<f64>,
    /// Random-field values per fine cell (zeros when disabled).
    pub structured: Vec<f64>,
    /// Unstructured errors per fine cell.
    pub unstructured: Vec<f64>,
    /// Variance of each unstructured error.
    pub unstructured_variance: Vec<f64>,
    pub fine_grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub dataset: Dataset,
    pub latent: Latent,
    pub seed: u64,
}

/// Generator for replicates of one scenario. The random-field factorization
/// is computed once and shared by all replicates.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    grf: Option<GrfSampler>,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self, SimulationError> {
        scenario.validate()?;
        let grf = if scenario.grf_variance > 0.0 {
            Some(GrfSampler::new(
                &scenario.fine_points(),
                scenario.grf_range,
                scenario.grf_variance,
            )?)
        } else {
            None
        };
        Ok(Self { scenario, grf })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Seed of replicate `r`, derived from the scenario seed.
    pub fn replicate_seed(&self, r: u64) -> u64 {
        replicate_seed(self.scenario.seed, r)
    }

    /// Replicate drawn from `rep_seed`; identical seeds give identical
    /// replicates.
    pub fn generate(&self, rep_seed: u64) -> Replicate {
        let sc = &self.scenario;
        let (n, p) = (sc.n(), sc.p);
        let stream = |s: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(rep_seed);
            r.set_stream(s);
            r
        };

        let mut rng = stream(STREAM_COVARIATES);
        let hw = sc.covariate_half_width;
        let x = Matrix::from_fn(n, p, |_, _| if hw > 0.0 { rng.random_range(-hw..hw) } else { 0.0 });

        let nf = sc.fine_grid * sc.fine_grid;
        let structured = match &self.grf {
            Some(g) => g.sample(&mut stream(STREAM_GRF)),
            None => vec![0.0; nf],
        };

        let mut rng = stream(STREAM_UNSTRUCTURED);
        let (unstructured_variance, unstructured): (Vec<f64>, Vec<f64>) = match sc.unstructured {
            UnstructuredLaw::InvGammaNormal { shape, rate } => {
                let gamma = Gamma::new(shape, 1.0 / rate).expect("validated parameters");
                (0..nf)
                    .map(|_| {
                        let v = 1.0 / gamma.sample(&mut rng);
                        let z: f64 = rng.sample(StandardNormal);
                        (v, libm::sqrt(v) * z)
                    })
                    .unzip()
            }
            UnstructuredLaw::Normal { variance } => (0..nf)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (variance, libm::sqrt(variance) * z)
                })
                .unzip(),
            UnstructuredLaw::None => (vec![0.0; nf], vec![0.0; nf]),
        };

        let h = sc.m as f64 / sc.fine_grid as f64;
        let mut integral = vec![0.0; n];
        for (k, s) in sc.fine_points().into_iter().enumerate() {
            let e = sc.baseline_at(s) + structured[k] + unstructured[k];
            integral[sc.unit_cell_of(k)] += libm::exp(e) * h * h;
        }
        let lambda: Vec<f64> = (0..n)
            .map(|i| {
                let xb: f64 = x.row(i).iter().zip(&sc.beta_true).map(|(a, b)| a * b).sum();
                sc.offset * libm::exp(xb) * integral[i]
            })
            .collect();

        let mut rng = stream(STREAM_COUNTS);
        let counts = lambda.iter().map(|&l| poisson_count(l, &mut rng)).collect();
        let dataset = Dataset::new(counts, vec![sc.offset; n], vec![1.0; n], x)
            .expect("simulated data satisfy dataset invariants");
        Replicate {
            dataset,
            latent: Latent {
                lambda,
                structured,
                unstructured,
                unstructured_variance,
                fine_grid: sc.fine_grid,
            },
            seed: rep_seed,
        }
    }
}

/// Builds a [`Simulator`] and draws one replicate. Use [`Simulator`] directly
/// to amortize the random-field factorization over many replicates.
pub fn generate_replicate(sc: &Scenario, rep_seed: u64) -> Result<Replicate, SimulationError> {
    Ok(Simulator::new(sc.clone())?.generate(rep_seed))
}

/// Seed of replicate `r` under scenario seed `seed` (SplitMix64 mixing).
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Poisson draw; large means use the normal approximation and results
/// saturate at `u64::MAX`.
pub fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda < NORMAL_APPROX_LAMBDA {
        let d = Poisson::new(lambda).expect("lambda is positive and finite");
        let y: f64 = d.sample(rng);
        return y as u64;
    }
    if !lambda.is_finite() {
        return u64::MAX;
    }
    let z: f64 = rng.sample(StandardNormal);
    let y = libm::round(lambda + libm::sqrt(lambda) * z);
    // `as` saturates
    y.max(0.0) as u64
}

/// Replicate-level summary of inference results against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub replicates: usize,
    /// Fraction of intervals containing `β⁰ⱼ`, averaged over coordinates.
    pub coverage: f64,
    /// Rejection rate over coordinates with `β⁰ⱼ = 0`; `None` if there are none.
    pub type_one_error: Option<f64>,
    /// Rejection rate over coordinates with `β⁰ⱼ ≠ 0`; `None` if there are none.
    pub power: Option<f64>,
    pub coverage_by_coordinate: Vec<f64>,
    pub rejection_by_coordinate: Vec<f64>,
    /// Mean of `b̂ⱼ − β⁰ⱼ`.
    pub debiased_bias: Vec<f64>,
    /// Mean of `β̂ⱼ − β⁰ⱼ`.
    pub estimate_bias: Vec<f64>,
    /// 5% and 95% quantiles of `β̂ⱼ − β⁰ⱼ`.
    pub error_q05: Vec<f64>,
    pub error_q95: Vec<f64>,
    /// Mean `‖β̂ − β⁰‖₁`.
    pub mean_l1_error: f64,
}

/// Coverage, type I error, power and elementwise error summaries. A
/// coordinate is rejected when its p-value is below `1 − level`.
pub fn evaluate_replicates(
    results: &[InferenceResult],
    beta_true: &[f64],
) -> Result<ReplicateMetrics, SimulationError> {
    if results.is_empty() {
        return Err(SimulationError::EmptyInput);
    }
    let p = beta_true.len();
    if let Some(r) = results.iter().find(|r| r.p() != p) {
        return Err(SimulationError::DimensionMismatch(format!(
            "result has {} coordinates, truth has {p}",
            r.p()
        )));
    }
    let nr = results.len() as f64;
    let mut cover = vec![0.0; p];
    let mut reject = vec![0.0; p];
    let mut dbias = vec![0.0; p];
    let mut ebias = vec![0.0; p];
    let mut errors = vec![Vec::with_capacity(results.len()); p];
    let mut l1 = 0.0;
    for r in results {
        let alpha = 1.0 - r.level;
        for j in 0..p {
            if r.covers(j, beta_true[j]) {
                cover[j] += 1.0;
            }
            if r.p_values[j] < alpha {
                reject[j] += 1.0;
            }
            dbias[j] += r.b_hat[j] - beta_true[j];
            let e = r.beta_hat[j] - beta_true[j];
            ebias[j] += e;
            errors[j].push(e);
            l1 += libm::fabs(e);
        }
    }
    let scale = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= nr);
    scale(&mut cover);
    scale(&mut reject);
    scale(&mut dbias);
    scale(&mut ebias);
    let mean_over = |pred: &dyn Fn(f64) -> bool| {
        let idx: Vec<usize> = (0..p).filter(|&j| pred(beta_true[j])).collect();
        if idx.is_empty() {
            None
        } else {
            Some(idx.iter().map(|&j| reject[j]).sum::<f64>() / idx.len() as f64)
        }
    };
    let type_one_error = mean_over(&|b| b == 0.0);
    let power = mean_over(&|b| b != 0.0);
    let (mut q05, mut q95) = (Vec::with_capacity(p), Vec::with_capacity(p));
    for e in &mut errors {
        e.sort_by(f64::total_cmp);
        q05.push(quantile_sorted(e, 0.05));
        q95.push(quantile_sorted(e, 0.95));
    }
    Ok(ReplicateMetrics {
        replicates: results.len(),
        coverage: cover.iter().sum::<f64>() / p.max(1) as f64,
        type_one_error,
        power,
        coverage_by_coordinate: cover,
        rejection_by_coordinate: reject,
        debiased_bias: dbias,
        estimate_bias: ebias,
        error_q05: q05,
        error_q95: q95,
        mean_l1_error: l1 / nr,
    })
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::CovarianceKind;
    use approx::assert_abs_diff_eq;

    fn flat(m: usize) -> Scenario {
        Scenario {
            baseline: Baseline::Zero,
            grf_variance: 0.0,
            unstructured: UnstructuredLaw::None,
            beta_true: vec![0.0; 2],
            fine_grid: 2 * m,
            ..Scenario::reference_design(m, 2, 1)
        }
    }

    #[test]
    fn constant_intensity() {
        let rep = generate_replicate(&flat(4), 9).unwrap();
        for &l in &rep.latent.lambda {
            assert_abs_diff_eq!(l, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reference_design_values() {
        let sc = Scenario::reference_design(10, 10, 0);
        assert_eq!(sc.beta_true, vec![-1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(sc.fine_grid, 60);
        assert_abs_diff_eq!(sc.grf_range, 2.0);
        let b = reference_beta(100);
        assert_eq!(&b[..11], &[-1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(default_fine_grid(7), 63);
        assert_eq!(default_fine_grid(30), 60);
        assert_eq!(default_fine_grid(61), 61);
    }

    #[test]
    fn baseline_values() {
        let sc = Scenario::reference_design(10, 1, 0);
        assert_abs_diff_eq!(sc.baseline_at((3.0, 4.0)), 5.0 / 40.0);
        assert_eq!(sc.baseline_at((0.0, 0.0)), 0.0);
    }

    #[test]
    fn covariance_values() {
        assert_eq!(exponential_covariance(0.0, 2.0, 1.5), 1.5);
        assert_abs_diff_eq!(
            exponential_covariance(2.0, 2.0, 1.0),
            0.367_879_441_171_442_3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn fine_cells_map_to_unit_cells() {
        let sc = Scenario {
            fine_grid: 6,
            ..Scenario::reference_design(3, 1, 0)
        };
        let pts = sc.fine_points();
        for (k, &(x, y)) in pts.iter().enumerate() {
            let unit = sc.unit_cell_of(k);
            assert_eq!(unit, (y as usize) * 3 + x as usize);
        }
    }

    #[test]
    fn deterministic_replicates() {
        let sc = Scenario::reference_design(3, 2, 5);
        let sim = Simulator::new(sc).unwrap();
        let a = sim.generate(11);
        let b = sim.generate(11);
        assert_eq!(a, b);
        assert_ne!(a, sim.generate(12));
        let v = &a.latent.unstructured_variance;
        assert!(v.iter().any(|x| (x - v[0]).abs() > 1e-6));
    }

    #[test]
    fn scenario_validation() {
        let bad = Scenario {
            fine_grid: 7,
            ..Scenario::reference_design(3, 1, 0)
        };
        assert!(matches!(bad.validate(), Err(SimulationError::InvalidScenario(_))));
        assert!(Scenario::reference_design(1, 1, 0).validate().is_err());
        assert!(Scenario::reference_design(3, 0, 0).validate().is_err());
        let bad = Scenario {
            beta_true: vec![1.0],
            ..Scenario::reference_design(3, 2, 0)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn poisson_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(poisson_count(0.0, &mut rng), 0);
        assert_eq!(poisson_count(f64::INFINITY, &mut rng), u64::MAX);
        let big = poisson_count(1e14, &mut rng) as f64;
        assert!((big - 1e14).abs() < 1e9);
    }

    fn result(lo: &[f64], hi: &[f64], pv: &[f64], b: &[f64]) -> InferenceResult {
        let p = lo.len();
        InferenceResult {
            names: vec![String::new(); p],
            beta_hat: b.to_vec(),
            b_hat: b.to_vec(),
            m: Matrix::identity(p),
            sigma_hat: vec![1.0; p],
            ci_lower: lo.to_vec(),
            ci_upper: hi.to_vec(),
            z_scores: vec![0.0; p],
            p_values: pv.to_vec(),
            covariance: CovarianceKind::Sandwich,
            level: 0.95,
            eta_used: 0.1,
            eta_per_row: vec![0.1; p],
            zeta_hat: None,
            n: 10,
        }
    }

    #[test]
    fn metrics_examples() {
        let truth = [1.0, 0.0];
        let r = result(&[0.0, -1.0], &[2.0, 1.0], &[1.0, 1.0], &[1.0, 0.0]);
        let m = evaluate_replicates(core::slice::from_ref(&r), &truth).unwrap();
        assert_eq!(m.coverage, 1.0);
        assert_eq!(m.type_one_error, Some(0.0));
        assert_eq!(m.power, Some(0.0));
        assert!(evaluate_replicates(&[], &truth).is_err());

        // Three results with hand-counted outcomes.
        let rs = [
            result(&[0.5, -0.5], &[1.5, 0.5], &[0.001, 0.8], &[1.0, 0.0]),
            result(&[1.2, 0.1], &[2.0, 0.9], &[0.0001, 0.01], &[1.6, 0.5]),
            result(&[-0.4, -0.6], &[0.8, 0.2], &[0.3, 0.6], &[0.2, -0.2]),
        ];
        let m = evaluate_replicates(&rs, &truth).unwrap();
        assert_abs_diff_eq!(m.coverage_by_coordinate[0], 1.0 / 3.0);
        assert_abs_diff_eq!(m.coverage_by_coordinate[1], 2.0 / 3.0);
        assert_abs_diff_eq!(m.coverage, 0.5);
        assert_abs_diff_eq!(m.power.unwrap(), 2.0 / 3.0);
        assert_abs_diff_eq!(m.type_one_error.unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(m.estimate_bias[0], (0.0 + 0.6 - 0.8) / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            m.mean_l1_error,
            (0.0 + 0.0 + 0.6 + 0.5 + 0.8 + 0.2) / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_abs_diff_eq!(quantile_sorted(&v, 0.05), 1.2);
        assert_eq!(quantile_sorted(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn replicate_seeds_differ() {
        assert_ne!(replicate_seed(1, 0), replicate_seed(1, 1));
        assert_ne!(replicate_seed(1, 0), replicate_seed(2, 0));
        assert_eq!(replicate_seed(3, 4), replicate_seed(3, 4));
    }
}
