mod common;

use common::{random_dataset, rng, to_na};
use coxfuse_core::inference::{
    debias_and_intervals, empirical_hessian, gaussian_error_covariance, sandwich_covariance, solve_debias_rows,
    CovarianceKind, DebiasConfig,
};
use coxfuse_core::linalg::{dot, Matrix};
use coxfuse_core::simulate::{evaluate_replicates, Scenario, Simulator, UnstructuredLaw};
use coxfuse_core::solver::fit;
use coxfuse_core::{ParamVector, PenaltyConfig, SolverConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_spd(r: &mut impl Rng, p: usize) -> Matrix {
    let a = Matrix::from_fn(p, p, |_, _| r.random_range(-1.0..1.0));
    let mut s = a.matmul(&a.transpose());
    for i in 0..p {
        s[(i, i)] += 0.1;
    }
    s
}

/// Minimum of `mᵀΣm` subject to `|Hm − e_j|_∞ ≤ η`, by enumerating which
/// constraints are active at their lower or upper bound.
fn active_set_oracle(h: &Matrix, sigma: &Matrix, j: usize, eta: f64) -> f64 {
    let p = h.rows();
    let hn = to_na(h);
    let sinv = to_na(sigma).try_inverse().unwrap();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(p as u32) {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut c = code;
        for k in 0..p {
            let e = if k == j { 1.0 } else { 0.0 };
            match c % 3 {
                1 => {
                    rows.push(k);
                    rhs.push(e - eta);
                }
                2 => {
                    rows.push(k);
                    rhs.push(e + eta);
                }
                _ => {}
            }
            c /= 3;
        }
        let m = if rows.is_empty() {
            DVector::zeros(p)
        } else {
            let a = DMatrix::from_fn(rows.len(), p, |r, k| hn[(rows[r], k)]);
            let gram = &a * &sinv * a.transpose();
            let Some(gi) = gram.try_inverse() else { continue };
            &sinv * a.transpose() * gi * DVector::from_vec(rhs)
        };
        let hm = &hn * &m;
        let feasible = (0..p).all(|k| {
            let e = if k == j { 1.0 } else { 0.0 };
            (hm[k] - e).abs() <= eta + 1e-9
        });
        if feasible {
            best = best.min((m.transpose() * to_na(sigma) * &m)[(0, 0)]);
        }
    }
    best
}

fn row_objective(m: &Matrix, sigma: &Matrix, j: usize) -> f64 {
    dot(&sigma.matvec(m.row(j)), m.row(j))
}

#[test]
fn program_matches_active_set_oracle() {
    let mut r = rng(41);
    let cfg = DebiasConfig::default();
    for case in 0..40 {
        let p = if case % 2 == 0 { 2 } else { 3 };
        let h = random_spd(&mut r, p);
        let s = random_spd(&mut r, p);
        let eta = r.random_range(0.01..0.3);
        let rows = solve_debias_rows(&h, &s, eta, &cfg).unwrap();
        assert_eq!(rows.eta_used, eta);
        for j in 0..p {
            let want = active_set_oracle(&h, &s, j, eta);
            let got = row_objective(&rows.m, &s, j);
            assert!(
                (got - want).abs() <= 1e-4 * want.max(1e-8),
                "case {case} row {j}: {got} vs {want}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rows_satisfy_constraints(seed in any::<u64>(), p in 1usize..8, eta in 1e-3f64..0.5) {
        let mut r = rng(seed);
        let h = random_spd(&mut r, p);
        let s = random_spd(&mut r, p);
        let rows = solve_debias_rows(&h, &s, eta, &DebiasConfig::default()).unwrap();
        let hm = h.matmul(&rows.m.transpose());
        for a in 0..p {
            for b in 0..p {
                let e = if a == b { 1.0 } else { 0.0 };
                prop_assert!((hm[(a, b)] - e).abs() <= rows.eta_used + 1e-8);
            }
        }
    }

    #[test]
    fn covariance_estimates_are_psd(seed in any::<u64>(), zeta in 0.0f64..3.0) {
        let mut r = rng(seed);
        let d = random_dataset(&mut r, 12, 4, 0);
        let theta = ParamVector::new(
            (0..12).map(|_| r.random_range(-1.0..1.0)).collect(),
            (0..4).map(|_| r.random_range(-1.0..1.0)).collect(),
        );
        let s = sandwich_covariance(&d, &theta).unwrap();
        prop_assert!(to_na(&s).symmetric_eigen().eigenvalues.min() >= -1e-10);
        let g = gaussian_error_covariance(&d, &theta, zeta).unwrap();
        let info = empirical_hessian(&d, &theta).unwrap();
        prop_assert!(to_na(&g).symmetric_eigen().eigenvalues.min() >= -1e-10);
        for j in 0..4 {
            prop_assert!(g[(j, j)] >= info[(j, j)] - 1e-12);
        }
    }
}

#[test]
fn intervals_bracket_estimates() {
    let mut r = rng(42);
    for _ in 0..10 {
        let d = random_dataset(&mut r, 30, 3, 0);
        let g = common::random_graph(&mut r, 30, 10);
        let fr = fit(&d, &g, &PenaltyConfig::l2(1.0, 0.5), &SolverConfig::default()).unwrap();
        for cov in [CovarianceKind::Sandwich, CovarianceKind::GaussianError] {
            let cfg = DebiasConfig {
                covariance: cov,
                ..DebiasConfig::default()
            };
            let res = debias_and_intervals(&d, &fr, &cfg).unwrap();
            for j in 0..3 {
                assert!(res.ci_lower[j] <= res.b_hat[j] && res.b_hat[j] <= res.ci_upper[j]);
                assert!(res.sigma_hat[j] >= 0.0);
                assert!((0.0..=1.0).contains(&res.p_values[j]));
            }
            assert_eq!(res.zeta_hat.is_some(), cov == CovarianceKind::GaussianError);
        }
    }
}

#[test]
fn sandwich_is_conservative_relative_to_poisson_information() {
    let sc = Scenario {
        fine_grid: 30,
        ..Scenario::reference_design(6, 5, 3)
    };
    let sim = Simulator::new(sc.clone()).unwrap();
    let g = sc.graph();
    let reps = 40;
    let mut ok = 0;
    for r in 0..reps {
        let rep = sim.generate(sim.replicate_seed(r));
        let d = &rep.dataset;
        let fr = fit(d, &g, &PenaltyConfig::l2(5.0, 0.5), &SolverConfig::default()).unwrap();
        let res = debias_and_intervals(d, &fr, &DebiasConfig::default()).unwrap();
        let s = sandwich_covariance(d, &fr.theta_hat).unwrap();
        let info = empirical_hessian(d, &fr.theta_hat).unwrap();
        let ms = res.m.matmul(&s).matmul(&res.m.transpose());
        let mi = res.m.matmul(&info).matmul(&res.m.transpose());
        if (0..sc.p).all(|j| ms[(j, j)] >= mi[(j, j)]) {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.95 * reps as f64, "{ok} of {reps}");
}

#[test]
fn pure_poisson_coverage_is_conservative() {
    let m = 20;
    let sc = Scenario {
        grf_variance: 0.0,
        unstructured: UnstructuredLaw::None,
        fine_grid: m,
        ..Scenario::reference_design(m, 10, 17)
    };
    let sim = Simulator::new(sc.clone()).unwrap();
    let g = sc.graph();
    let results: Vec<_> = (0..200)
        .map(|r| {
            let rep = sim.generate(sim.replicate_seed(r));
            let fr = fit(
                &rep.dataset,
                &g,
                &PenaltyConfig::l2(10.0, 1.0),
                &SolverConfig::default(),
            )
            .unwrap();
            debias_and_intervals(&rep.dataset, &fr, &DebiasConfig::default()).unwrap()
        })
        .collect();
    let metrics = evaluate_replicates(&results, &sc.beta_true).unwrap();
    assert!(metrics.coverage >= 0.93, "coverage {}", metrics.coverage);
}
