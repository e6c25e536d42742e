mod common;

use common::{random_dataset, random_graph, rng};
use coxfuse_core::linalg::Matrix;
use coxfuse_core::model::{grad_loglik, loglik};
use coxfuse_core::solver::{fit, fit_block_alternating, objective, StopReason};
use coxfuse_core::{Dataset, ParamVector, PenaltyConfig, RegionGraph, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn tight() -> SolverConfig {
    SolverConfig {
        tol: 1e-14,
        max_iter: 200_000,
        ..SolverConfig::default()
    }
}

/// Damped Newton on −ℓ with a pseudo-inverse Hessian, started from the
/// data-driven point.
fn newton_oracle(d: &Dataset) -> ParamVector {
    let (n, p) = (d.n(), d.p());
    let mut theta = ParamVector::new(
        d.y()
            .iter()
            .zip(d.exposure())
            .map(|(y, e)| ((y + 0.5) / e).ln())
            .collect(),
        vec![0.0; p],
    );
    let a = DMatrix::from_fn(n, n + p, |i, k| {
        if k < n {
            if i == k {
                1.0
            } else {
                0.0
            }
        } else {
            d.x()[(i, k - n)]
        }
    });
    for _ in 0..200 {
        let g = DVector::from_vec(grad_loglik(d, &theta).unwrap().to_flat());
        let eta: Vec<f64> = (0..n)
            .map(|i| theta.alpha[i] + d.x().row(i).iter().zip(&theta.beta).map(|(x, b)| x * b).sum::<f64>())
            .collect();
        let mu = DVector::from_fn(n, |i, _| d.exposure()[i] * eta[i].exp());
        let h = a.transpose() * DMatrix::from_diagonal(&mu) * &a;
        let step = h.pseudo_inverse(1e-10).unwrap() * &g;
        let f0 = -loglik(d, &theta).unwrap();
        let mut t = 1.0;
        loop {
            let flat: Vec<f64> = theta
                .to_flat()
                .iter()
                .zip(step.iter())
                .map(|(x, s)| x + t * s)
                .collect();
            let cand = ParamVector::from_flat(&flat, n);
            if -loglik(d, &cand).unwrap() <= f0 + 1e-14 * f0.abs() || t < 1e-10 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
        if step.norm() * t < 1e-13 {
            break;
        }
    }
    theta
}

#[test]
fn unpenalized_fit_matches_newton_oracle() {
    let mut r = rng(31);
    for _ in 0..10 {
        let n = r.random_range(3..20);
        let p = r.random_range(1..4);
        let d = random_dataset(&mut r, n, p, 1);
        let g = random_graph(&mut r, n, 3);
        let oracle = newton_oracle(&d);
        let res = fit(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &tight()).unwrap();
        assert!(res.converged);
        let diff = res.theta_hat.max_abs_diff(&oracle);
        assert!(diff < 1e-4, "max |θ − θ_oracle| = {diff}");
    }
}

#[test]
fn block_alternating_reaches_the_same_fitted_means_unpenalized() {
    let mut r = rng(32);
    for _ in 0..5 {
        let d = random_dataset(&mut r, 8, 2, 1);
        let g = random_graph(&mut r, 8, 3);
        let res = fit_block_alternating(&d, &g, &PenaltyConfig::l2(0.0, 0.0), &tight()).unwrap();
        let b = g.incidence();
        let f = objective(&d, &res.theta_hat, &b, &PenaltyConfig::l2(0.0, 0.0)).unwrap();
        let f_oracle = objective(&d, &newton_oracle(&d), &b, &PenaltyConfig::l2(0.0, 0.0)).unwrap();
        assert!((f - f_oracle).abs() <= 1e-8 * f_oracle.abs());
    }
}

#[test]
fn block_alternating_agrees_with_joint_fit_when_penalized() {
    let mut r = rng(33);
    for k in 0..6 {
        let d = random_dataset(&mut r, 10, 3, 0);
        let g = random_graph(&mut r, 10, 4);
        let pen = if k % 2 == 0 {
            PenaltyConfig::l2(1.5, 0.8)
        } else {
            PenaltyConfig::l1_smoothed(1.0, 0.5).with_xi(0.05)
        };
        let a = fit(&d, &g, &pen, &tight()).unwrap();
        let b = fit_block_alternating(&d, &g, &pen, &tight()).unwrap();
        let diff = a.theta_hat.max_abs_diff(&b.theta_hat);
        assert!(diff < 1e-3, "case {k}: {diff}");
    }
}

#[test]
fn objective_recomposes_from_parts() {
    let mut r = rng(34);
    let d = random_dataset(&mut r, 6, 2, 0);
    let g = random_graph(&mut r, 6, 3);
    let b = g.incidence();
    let theta = ParamVector::new(vec![0.1, -0.3, 0.5, 0.0, 0.2, -0.1], vec![0.7, -1.2]);
    let pen = PenaltyConfig::l2(2.0, 0.3).with_delta(0.1);
    let l = g.laplacian(0.1).unwrap();
    let quad: f64 = theta
        .alpha
        .iter()
        .zip(l.apply(&theta.alpha))
        .map(|(a, la)| a * la)
        .sum();
    let want = -loglik(&d, &theta).unwrap() + 2.0 * 0.5 * quad + 0.3 * (0.7 + 1.2);
    let got = objective(&d, &theta, &b, &pen).unwrap();
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
}

#[test]
fn accepted_steps_never_increase_the_objective() {
    let mut r = rng(35);
    for k in 0..10 {
        let d = random_dataset(&mut r, 12, 3, 0);
        let g = random_graph(&mut r, 12, 6);
        let pen = if k % 2 == 0 {
            PenaltyConfig::l2(r.random_range(0.0..5.0), r.random_range(0.0..3.0))
        } else {
            PenaltyConfig::l1_smoothed(r.random_range(0.0..5.0), r.random_range(0.0..3.0))
        };
        for res in [
            fit(&d, &g, &pen, &SolverConfig::default()).unwrap(),
            fit_block_alternating(&d, &g, &pen, &SolverConfig::default()).unwrap(),
        ] {
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10, "{} > {}", w[1], w[0]);
            }
        }
    }
}

#[test]
fn fixed_point_conditions_hold() {
    let mut r = rng(36);
    for k in 0..10 {
        let d = random_dataset(&mut r, 15, 4, 0);
        let g = random_graph(&mut r, 15, 6);
        let tau = r.random_range(0.5..6.0);
        let pen = if k % 2 == 0 {
            PenaltyConfig::l2(r.random_range(0.1..3.0), tau)
        } else {
            PenaltyConfig::l1_smoothed(r.random_range(0.1..3.0), tau)
        };
        let scfg = SolverConfig {
            tol: 1e-13,
            max_iter: 2_000_000,
            ..SolverConfig::default()
        };
        let res = fit(&d, &g, &pen, &scfg).unwrap();
        assert!(res.converged);
        let f = res.objective();
        let grad = grad_loglik(&d, &res.theta_hat).unwrap().beta;
        for (j, &bj) in res.theta_hat.beta.iter().enumerate() {
            let gj = -grad[j];
            if bj != 0.0 {
                assert!(
                    (gj + tau * bj.signum()).abs() <= 1e-3 * f.abs().max(1.0),
                    "case {k}, j {j}: {} vs {} iters {} {:?} f {f}",
                    gj,
                    tau * bj.signum(),
                    res.iterations,
                    res.stop_reason
                );
            } else {
                assert!(gj.abs() <= tau + 1e-3, "case {k}, j {j}");
            }
        }
    }
}

#[test]
fn fit_is_equivariant_under_region_permutation() {
    let mut r = rng(37);
    for _ in 0..5 {
        let n = 12;
        let d = random_dataset(&mut r, n, 3, 0);
        let g = random_graph(&mut r, n, 5);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let pd = d.subset(&perm);
        let pg = g.permuted(&perm).unwrap();
        let pen = PenaltyConfig::l2(1.0, 0.5);
        let a = fit(&d, &g, &pen, &tight()).unwrap();
        let b = fit(&pd, &pg, &pen, &tight()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((b.theta_hat.alpha[k] - a.theta_hat.alpha[i]).abs() < 1e-6);
        }
        for (x, y) in a.theta_hat.beta.iter().zip(&b.theta_hat.beta) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn p_zero_fits_baselines_only() {
    let d = Dataset::new(vec![2, 5, 1], vec![1.0; 3], vec![1.0; 3], Matrix::zeros(3, 0)).unwrap();
    let g = RegionGraph::from_index_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let pen = PenaltyConfig::l2(0.5, 0.0);
    let a = fit(&d, &g, &pen, &tight()).unwrap();
    let b = fit_block_alternating(&d, &g, &pen, &tight()).unwrap();
    assert!(a.theta_hat.max_abs_diff(&b.theta_hat) < 1e-6);
    assert!(matches!(
        a.stop_reason,
        StopReason::Converged | StopReason::Stalled | StopReason::FixedPoint
    ));
}
