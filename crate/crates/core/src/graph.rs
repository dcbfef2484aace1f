//! Neighborhood graphs and their Laplacians.
//!
//! Two graphs feed the objective: a kNN heat-kernel graph per view, which
//! encodes local geometry, and a supervised joint graph over all `n·V`
//! (sample, view) nodes that links every same-class pair, including the
//! same sample seen through two different views.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{LabelVector, ViewMatrix};
use crate::error::{Error, Result};

/// Symmetric non-negative weights in compressed-row form with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n_nodes: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    degree: Vec<f64>,
}

impl SparseGraph {
    /// Builds from per-node adjacency lists. Lists must already be symmetric.
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n_nodes = rows.len();
        let mut row_ptr = Vec::with_capacity(n_nodes + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut degree = Vec::with_capacity(n_nodes);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            degree.push(row.iter().map(|&(_, w)| w).sum());
            for (j, w) in row {
                cols.push(j);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_nodes,
            row_ptr,
            cols,
            weights,
            degree,
        }
    }

    /// Builds from `(i, j, w)` triplets, mirroring each one. Rejects
    /// self-loops and negative or non-finite weights; duplicates are summed.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_nodes];
        for &(i, j, w) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({i},{j}) outside {n_nodes} nodes"
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("edge ({i},{j}) has weight {w}")));
            }
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        Ok(Self::from_rows(rows))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Each undirected edge once, `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nodes).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for i in 0..self.n_nodes {
            for (j, w) in self.neighbors(i) {
                m[(i, j)] = w;
            }
        }
        m
    }

    /// `i j w` per line, each undirected edge once.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        for (i, j, w) in self.edges() {
            writeln!(f, "{i} {j} {w}")?;
        }
        f.flush()?;
        Ok(())
    }

    /// Computes `L y` without forming `L`, for each column of `y`.
    pub fn laplacian_mul(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(y.nrows(), y.ncols());
        for c in 0..y.ncols() {
            for i in 0..self.n_nodes {
                let mut acc = self.degree[i] * y[(i, c)];
                for (j, w) in self.neighbors(i) {
                    acc -= w * y[(j, c)];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    View,
    Joint,
}

/// `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub matrix: DMatrix<f64>,
    pub kind: LaplacianKind,
}

/// Heat-kernel weights `exp(-|xi - xj|^2 / t)` on the symmetrized kNN graph:
/// an edge exists when either endpoint is among the other's `k` nearest
/// neighbours. Distance ties go to the smaller sample index.
pub fn knn_heat_graph(x: &ViewMatrix, k: usize, t: f64) -> Result<SparseGraph> {
    let n = x.n_samples();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "neighbour count k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel width t = {t} must be positive"
        )));
    }
    let values = x.values();
    let rows: Vec<Vec<f64>> = values
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let sq_dist = |i: usize, j: usize| -> f64 {
        rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let nearest: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, sq_dist(i, j)))
                .collect();
            cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            cand
        })
        .collect();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, list) in nearest.iter().enumerate() {
        for &(j, d2) in list {
            let w = (-d2 / t).exp();
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    for row in &mut adj {
        row.sort_by_key(|&(j, _)| j);
        row.dedup_by_key(|e| e.0);
    }
    Ok(SparseGraph::from_rows(adj))
}

pub fn laplacian(g: &SparseGraph) -> Laplacian {
    laplacian_of_kind(g, LaplacianKind::View)
}

fn laplacian_of_kind(g: &SparseGraph, kind: LaplacianKind) -> Laplacian {
    let mut matrix = -g.to_dense();
    for (i, d) in g.degree().iter().enumerate() {
        matrix[(i, i)] = *d;
    }
    Laplacian { matrix, kind }
}

/// Supervised graph on `n·V` nodes; node `v·n + i` is sample `i` in view `v`
/// (zero-based). Two distinct nodes are linked with weight 1 when their
/// samples share a class.
pub fn joint_label_graph(labels: &LabelVector, n_views: usize) -> Result<SparseGraph> {
    if n_views == 0 {
        return Err(Error::invalid("joint graph needs at least one view"));
    }
    let n = labels.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
    for (i, &c) in labels.classes().iter().enumerate() {
        members[c - 1].push(i);
    }
    let rows = (0..n * n_views)
        .map(|p| {
            let class = labels.classes()[p % n];
            let mut row = Vec::with_capacity(members[class - 1].len() * n_views);
            for v in 0..n_views {
                for &j in &members[class - 1] {
                    let q = v * n + j;
                    if q != p {
                        row.push((q, 1.0));
                    }
                }
            }
            row
        })
        .collect();
    Ok(SparseGraph::from_rows(rows))
}

/// The joint Laplacian split into a `V × V` grid of `n × n` blocks.
pub fn joint_laplacian_blocks(
    g: &SparseGraph,
    n: usize,
    n_views: usize,
) -> Result<Vec<Vec<DMatrix<f64>>>> {
    if n == 0 || n_views == 0 || g.n_nodes() != n * n_views {
        return Err(Error::invalid(format!(
            "joint graph has {} nodes, not {n} samples x {n_views} views",
            g.n_nodes()
        )));
    }
    let mut blocks = vec![vec![DMatrix::zeros(n, n); n_views]; n_views];
    for p in 0..g.n_nodes() {
        let (s, i) = (p / n, p % n);
        blocks[s][s][(i, i)] += g.degree()[p];
        for (q, w) in g.neighbors(p) {
            let (t, j) = (q / n, q % n);
            blocks[s][t][(i, j)] -= w;
        }
    }
    Ok(blocks)
}

/// Laplacian of the joint graph, tagged as such.
pub fn joint_laplacian(g: &SparseGraph) -> Laplacian {
    laplacian_of_kind(g, LaplacianKind::Joint)
}
