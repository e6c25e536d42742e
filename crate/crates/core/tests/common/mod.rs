#![allow(dead_code)]

use coxfuse_core::linalg::Matrix;
use coxfuse_core::{Dataset, RegionGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected-ish graph: a spanning path plus extra random edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> RegionGraph {
    let mut edges = std::collections::BTreeMap::new();
    for i in 1..n {
        edges.insert((i - 1, i), rng.random_range(0.2..3.0));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)), rng.random_range(0.2..3.0));
        }
    }
    RegionGraph::from_index_edges(n, edges.into_iter().map(|((i, j), w)| (i, j, w))).unwrap()
}

/// Random Poisson-ish dataset with counts drawn independently of the model.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, min_count: u64) -> Dataset {
    let counts = (0..n).map(|_| rng.random_range(min_count..min_count + 12)).collect();
    let offset = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
    let area = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let x = Matrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    Dataset::new(counts, offset, area, x).unwrap()
}

pub fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
