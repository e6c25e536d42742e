//! Region adjacency graph, edge incidence matrix and graph Laplacian.
//!
//! Regions are indexed `0..n`. Every edge is stored once as `(i, j, w)` with
//! `i < j` and `w > 0`. The incidence matrix `B` has one row per edge with
//! `+√w` in column `i` and `-√w` in column `j`, so that `BᵀB = D - W`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CsrMatrix, Matrix};

/// Ridge added to the Laplacian when a regularized Laplacian is requested
/// without an explicit value.
pub const DEFAULT_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown region id `{0}`")]
    UnknownRegion(String),
    #[error("duplicate region id `{0}`")]
    DuplicateRegion(String),
    #[error("duplicate edge between `{0}` and `{1}`")]
    DuplicateEdge(String, String),
    #[error("self-loop on region `{0}`")]
    SelfLoop(String),
    #[error("edge between `{0}` and `{1}` has invalid weight {2} (must be finite and > 0)")]
    InvalidWeight(String, String, f64),
    #[error("region index {index} out of range for a graph with {n} regions")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("ridge must be finite and non-negative, got {0}")]
    NegativeRidge(f64),
    #[error("training index set must be non-empty")]
    EmptyTrainingSet,
    #[error("test index set must be non-empty (training set covers every region)")]
    EmptyTestSet,
    #[error("index {0} appears more than once in the training set")]
    DuplicateIndex(usize),
}

/// A weighted undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Graph induced by a partition of the observation window.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    region_ids: Vec<String>,
    edges: Vec<Edge>,
}

impl RegionGraph {
    /// Builds a graph from external region identifiers and an edge list.
    ///
    /// Edges are canonicalized to `i < j` and sorted; a pair given in both
    /// orientations counts as a duplicate.
    pub fn build<S: AsRef<str>>(region_ids: &[S], edge_list: &[(S, S, f64)]) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (k, id) in region_ids.iter().enumerate() {
            if index.insert(id.as_ref(), k).is_some() {
                return Err(GraphError::DuplicateRegion(id.as_ref().to_string()));
            }
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for (a, b, w) in edge_list {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index.get(a).ok_or_else(|| GraphError::UnknownRegion(a.to_string()))?;
            let ib = *index.get(b).ok_or_else(|| GraphError::UnknownRegion(b.to_string()))?;
            edges.push((ia, ib, *w));
        }
        let ids = region_ids.iter().map(|s| s.as_ref().to_string()).collect();
        Self::assemble(ids, edges)
    }

    /// Builds a graph over regions `0..n` from index-based edges. Region ids
    /// are the decimal indices.
    pub fn from_index_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::from_ids_and_index_edges(ids, edges)
    }

    /// Builds a graph with the given ids and index-based edges.
    pub fn from_ids_and_index_edges(
        region_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let mut seen = BTreeMap::new();
        for id in &region_ids {
            if seen.insert(id.as_str(), ()).is_some() {
                return Err(GraphError::DuplicateRegion(id.clone()));
            }
        }
        let n = region_ids.len();
        let edges: Vec<_> = edges.into_iter().collect();
        for &(i, j, _) in &edges {
            for index in [i, j] {
                if index >= n {
                    return Err(GraphError::IndexOutOfRange { index, n });
                }
            }
        }
        Self::assemble(region_ids, edges)
    }

    fn assemble(region_ids: Vec<String>, raw: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(raw.len());
        for (a, b, w) in raw {
            if a == b {
                return Err(GraphError::SelfLoop(region_ids[a].clone()));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::InvalidWeight(
                    region_ids[a].clone(),
                    region_ids[b].clone(),
                    w,
                ));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { i, j, weight: w });
        }
        edges.sort_by_key(|x| (x.i, x.j));
        for pair in edges.windows(2) {
            if (pair[0].i, pair[0].j) == (pair[1].i, pair[1].j) {
                return Err(GraphError::DuplicateEdge(
                    region_ids[pair[0].i].clone(),
                    region_ids[pair[0].j].clone(),
                ));
            }
        }
        Ok(Self { region_ids, edges })
    }

    /// Rook-adjacency lattice of `m × m` unit cells with unit weights.
    ///
    /// Cell `(row, col)` covers `[col, col+1] × [row, row+1]` and has index
    /// `row * m + col`. Ids are zero-padded so that lexicographic order equals
    /// index order.
    pub fn lattice(m: usize) -> Self {
        let n = m * m;
        let width = decimal_width(n.saturating_sub(1));
        let ids = (0..n).map(|k| format!("cell{:0width$}", k, width = width)).collect();
        let mut edges = Vec::with_capacity(2 * n);
        for r in 0..m {
            for c in 0..m {
                let k = r * m + c;
                if c + 1 < m {
                    edges.push(Edge {
                        i: k,
                        j: k + 1,
                        weight: 1.0,
                    });
                }
                if r + 1 < m {
                    edges.push(Edge {
                        i: k,
                        j: k + m,
                        weight: 1.0,
                    });
                }
            }
        }
        edges.sort_by_key(|x| (x.i, x.j));
        Self { region_ids: ids, edges }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.region_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn region_ids(&self) -> &[String] {
        &self.region_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.region_ids.iter().position(|r| r == id)
    }

    /// Weighted degrees `dᵢ = Σⱼ wᵢⱼ`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n()];
        for e in &self.edges {
            d[e.i] += e.weight;
            d[e.j] += e.weight;
        }
        d
    }

    /// Edge incidence matrix `B` (`|E| × n`).
    pub fn incidence(&self) -> IncidenceMatrix {
        let mut trip = Vec::with_capacity(2 * self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let s = libm::sqrt(e.weight);
            trip.push((k, e.i, s));
            trip.push((k, e.j, -s));
        }
        IncidenceMatrix(CsrMatrix::from_triplets(self.edges.len(), self.n(), &trip))
    }

    /// Laplacian `D - W + δI`.
    pub fn laplacian(&self, delta: f64) -> Result<LaplacianMatrix, GraphError> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(GraphError::NegativeRidge(delta));
        }
        let n = self.n();
        let mut trip = Vec::with_capacity(n + 2 * self.edges.len());
        for (i, d) in self.degrees().into_iter().enumerate() {
            trip.push((i, i, d + delta));
        }
        for e in &self.edges {
            trip.push((e.i, e.j, -e.weight));
            trip.push((e.j, e.i, -e.weight));
        }
        Ok(LaplacianMatrix {
            matrix: CsrMatrix::from_triplets(n, n, &trip),
            delta,
        })
    }

    /// Laplacian with the default ridge [`DEFAULT_RIDGE`].
    pub fn regularized_laplacian(&self) -> LaplacianMatrix {
        self.laplacian(DEFAULT_RIDGE).expect("default ridge is valid")
    }

    /// Subgraph induced by `keep` (in the given order), keeping only edges
    /// with both endpoints retained.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<RegionGraph, GraphError> {
        let n = self.n();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in keep.iter().enumerate() {
            if i >= n {
                return Err(GraphError::IndexOutOfRange { index: i, n });
            }
            if pos[i] != usize::MAX {
                return Err(GraphError::DuplicateIndex(i));
            }
            pos[i] = k;
        }
        let ids = keep.iter().map(|&i| self.region_ids[i].clone()).collect();
        let mut edges = Vec::new();
        for e in &self.edges {
            let (a, b) = (pos[e.i], pos[e.j]);
            if a != usize::MAX && b != usize::MAX {
                let (i, j) = if a < b { (a, b) } else { (b, a) };
                edges.push(Edge { i, j, weight: e.weight });
            }
        }
        edges.sort_by_key(|x| (x.i, x.j));
        Ok(RegionGraph { region_ids: ids, edges })
    }

    /// Relabels regions: region `k` of the result is region `perm[k]` of
    /// `self`. `perm` must be a permutation of `0..n`.
    pub fn permuted(&self, perm: &[usize]) -> Result<RegionGraph, GraphError> {
        if perm.len() != self.n() {
            return Err(GraphError::IndexOutOfRange {
                index: perm.len(),
                n: self.n(),
            });
        }
        self.induced_subgraph(perm)
    }
}

fn decimal_width(mut v: usize) -> usize {
    let mut w = 1;
    while v >= 10 {
        v /= 10;
        w += 1;
    }
    w
}

/// Sparse edge incidence matrix `B` (`|E| × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(CsrMatrix);

impl IncidenceMatrix {
    pub fn n_edges(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_regions(&self) -> usize {
        self.0.ncols()
    }

    /// `B α`: weighted differences across every edge.
    pub fn apply(&self, alpha: &[f64]) -> Vec<f64> {
        self.0.matvec(alpha)
    }

    /// `Bᵀ z`.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        self.0.t_matvec(z)
    }

    pub fn as_csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn to_dense(&self) -> Matrix {
        self.0.to_dense()
    }
}

/// Sparse symmetric Laplacian `L + δI`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: CsrMatrix,
    delta: f64,
}

impl LaplacianMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    pub fn as_csr(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> Matrix {
        self.matrix.to_dense()
    }

    /// Splits the Laplacian into training/test blocks.
    ///
    /// `train_idx` may be given in any order; both index sets are returned
    /// sorted ascending and the blocks follow that order.
    pub fn partition(&self, train_idx: &[usize]) -> Result<LaplacianBlocks, GraphError> {
        let n = self.n();
        if train_idx.is_empty() {
            return Err(GraphError::EmptyTrainingSet);
        }
        let mut in_train = vec![false; n];
        for &i in train_idx {
            if i >= n {
                return Err(GraphError::IndexOutOfRange { index: i, n });
            }
            if in_train[i] {
                return Err(GraphError::DuplicateIndex(i));
            }
            in_train[i] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| in_train[i]).collect();
        let test: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
        if test.is_empty() {
            return Err(GraphError::EmptyTestSet);
        }
        Ok(LaplacianBlocks {
            l11: self.matrix.submatrix(&train, &train),
            l12: self.matrix.submatrix(&train, &test),
            l21: self.matrix.submatrix(&test, &train),
            l22: self.matrix.submatrix(&test, &test),
            train,
            test,
        })
    }
}

/// Training/test blocks of a Laplacian, rows and columns in ascending
/// index order within each set.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianBlocks {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub l11: CsrMatrix,
    pub l12: CsrMatrix,
    pub l21: CsrMatrix,
    pub l22: CsrMatrix,
}

/// Convenience wrapper for [`LaplacianMatrix::partition`].
pub fn partition_laplacian(l: &LaplacianMatrix, train_idx: &[usize]) -> Result<LaplacianBlocks, GraphError> {
    l.partition(train_idx)
}
