//! Row-sparse projection learning.
//!
//! The objective combines three terms over the stacked projection `P`
//! (`m × d`, `m = Σ d_v`):
//!
//! ```text
//!   tr(Pᵀ H1 P) + α tr(Pᵀ H2 P) + β ‖P‖_{2,1}    s.t.  Pᵀ B P = I
//! ```
//!
//! `H1` preserves each view's local geometry, `H2` pulls same-class samples
//! together across all views, and the `ℓ2,1` term drives whole rows of `P`
//! to zero, which discards the corresponding input features. `B` is the
//! Gram matrix of the stacked features plus a ridge.
//!
//! The `ℓ2,1` term is handled by iterative reweighting: each pass replaces
//! it with `tr(Pᵀ H3 P)` for a diagonal `H3` built from the previous rows,
//! then solves a generalized symmetric eigenproblem for the `d` smallest
//! eigenpairs.

mod assemble;
mod format;

pub use assemble::{assemble_h1, assemble_h2, l21_norm, reweight_h3};
pub use format::{read_projection, write_projection, write_trace_csv};

pub use crate::linalg::{generalized_eigensolve, GeneralizedEigen};

use std::time::Instant;

use nalgebra::{DMatrix, DMatrixView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{block_offsets, stack_matrices, MultiViewDataset};
use crate::error::{Error, Result};

/// Solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct S3fseConfig {
    /// Weight of the supervised co-graph term.
    pub alpha: f64,
    /// Weight of the `ℓ2,1` row-sparsity term.
    pub beta: f64,
    /// Target subspace dimensionality.
    pub d: usize,
    /// Neighbours per node in the per-view graphs.
    pub k: usize,
    /// Heat-kernel width.
    pub t: f64,
    pub max_iter: usize,
    /// Relative objective change that ends the loop.
    pub tol: f64,
    /// Row-norm floor inside the reweighting.
    pub eps_row: f64,
    /// Added to the diagonal of the constraint matrix.
    pub ridge: f64,
    /// Row-norm threshold used for the sparsity column of the trace.
    pub sparsity_tau: f64,
    pub seed: u64,
}

impl Default for S3fseConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            d: 10,
            k: 5,
            t: 1.0,
            max_iter: 30,
            tol: 1e-6,
            eps_row: 1e-8,
            ridge: 1e-6,
            sparsity_tau: 1e-6,
            seed: 0,
        }
    }
}

impl S3fseConfig {
    pub fn validate(&self, total_dim: usize) -> Result<()> {
        if self.d == 0 || self.d > total_dim {
            return Err(Error::invalid(format!(
                "target dimensionality d = {} must lie in 1..={total_dim}",
                self.d
            )));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !nonneg(self.alpha) || !nonneg(self.beta) {
            return Err(Error::invalid(
                "alpha and beta must be finite and non-negative",
            ));
        }
        let positive = |v: f64| v > 0.0;
        if !positive(self.tol)
            || !positive(self.eps_row)
            || !positive(self.t)
            || !nonneg(self.ridge)
        {
            return Err(Error::invalid(
                "tol, eps_row and t must be positive; ridge non-negative",
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }

    /// `(key, value)` pairs of every field, for manifests and file headers.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("d", self.d.to_string()),
            ("k", self.k.to_string()),
            ("t", self.t.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("tol", self.tol.to_string()),
            ("eps_row", self.eps_row.to_string()),
            ("ridge", self.ridge.to_string()),
            ("sparsity_tau", self.sparsity_tau.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// The stacked projection with its per-view row partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    view_names: Vec<String>,
    dims: Vec<usize>,
    total: DMatrix<f64>,
}

impl ProjectionMatrix {
    pub fn new(view_names: Vec<String>, dims: Vec<usize>, total: DMatrix<f64>) -> Result<Self> {
        if view_names.len() != dims.len() {
            return Err(Error::invalid("one name per view block required"));
        }
        if dims.iter().sum::<usize>() != total.nrows() {
            return Err(Error::invalid(format!(
                "view dims {:?} do not sum to {} rows",
                dims,
                total.nrows()
            )));
        }
        Ok(Self {
            view_names,
            dims,
            total,
        })
    }

    pub fn total(&self) -> &DMatrix<f64> {
        &self.total
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn n_views(&self) -> usize {
        self.dims.len()
    }

    /// Target dimensionality.
    pub fn d(&self) -> usize {
        self.total.ncols()
    }

    /// Rows belonging to view `v`.
    pub fn block(&self, v: usize) -> DMatrixView<'_, f64> {
        let offsets = block_offsets(&self.dims);
        self.total.rows(offsets[v], self.dims[v])
    }
}

/// Per-iteration record of the reweighted loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub objective: Vec<f64>,
    pub sparsity: Vec<f64>,
    pub seconds: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Everything `fit` needs that does not change across iterations.
pub struct Problem {
    pub h1: DMatrix<f64>,
    pub h2: Option<DMatrix<f64>>,
    pub constraint: DMatrix<f64>,
}

impl Problem {
    /// Assembles `H1`, `H2` (skipped when `alpha == 0`) and `B`.
    pub fn assemble(ds: &MultiViewDataset, cfg: &S3fseConfig) -> Result<Self> {
        let h1 = assemble_h1(ds, cfg.k, cfg.t)?;
        let h2 = if cfg.alpha != 0.0 {
            Some(assemble_h2(ds)?)
        } else {
            None
        };
        let x = stack_matrices(ds.views().iter().map(|v| v.values()))?;
        let m = x.ncols();
        let constraint = x.tr_mul(&x) + DMatrix::identity(m, m) * cfg.ridge;
        Ok(Self { h1, h2, constraint })
    }

    /// `tr(Pᵀ H1 P) + α tr(Pᵀ H2 P) + β ‖P‖_{2,1}`.
    pub fn objective(&self, p: &DMatrix<f64>, alpha: f64, beta: f64) -> f64 {
        let mut f = (p.transpose() * &self.h1 * p).trace();
        if let Some(h2) = &self.h2 {
            f += alpha * (p.transpose() * h2 * p).trace();
        }
        f + beta * l21_norm(p)
    }

    fn system(&self, p: &DMatrix<f64>, cfg: &S3fseConfig) -> DMatrix<f64> {
        let mut a = self.h1.clone();
        if let Some(h2) = &self.h2 {
            a += h2 * cfg.alpha;
        }
        if cfg.beta != 0.0 {
            let h3 = reweight_h3(p, cfg.eps_row);
            for i in 0..a.nrows() {
                a[(i, i)] += cfg.beta * h3[i];
            }
        }
        a
    }
}

/// Runs the reweighted generalized-eigenproblem loop on (normalized)
/// training views and returns the final projection with its trace.
pub fn fit(ds: &MultiViewDataset, cfg: &S3fseConfig) -> Result<(ProjectionMatrix, SolveTrace)> {
    cfg.validate(ds.total_dim())?;
    let problem = Problem::assemble(ds, cfg)?;
    fit_problem(ds, &problem, cfg)
}

/// As [`fit`], reusing an already assembled problem.
pub fn fit_problem(
    ds: &MultiViewDataset,
    problem: &Problem,
    cfg: &S3fseConfig,
) -> Result<(ProjectionMatrix, SolveTrace)> {
    cfg.validate(ds.total_dim())?;
    let m = ds.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = DMatrix::from_fn(m, cfg.d, |_, _| rng.random_range(-1.0..=1.0));
    let mut trace = SolveTrace::default();
    let names: Vec<String> = ds.views().iter().map(|v| v.name().to_string()).collect();
    let dims = ds.view_dims();

    for iter in 1..=cfg.max_iter {
        let started = Instant::now();
        let a = problem.system(&p, cfg);
        p = generalized_eigensolve(&a, &problem.constraint, cfg.d)?.vectors;
        let f = problem.objective(&p, cfg.alpha, cfg.beta);
        if !f.is_finite() {
            return Err(Error::numerical(
                format!("objective became {f} at iteration {iter}"),
                "increase ridge or eps_row, or lower beta",
            ));
        }
        let zero_rows = p
            .row_iter()
            .filter(|r| r.norm() <= cfg.sparsity_tau)
            .count();
        trace.objective.push(f);
        trace.sparsity.push(zero_rows as f64 / m as f64);
        trace.seconds.push(started.elapsed().as_secs_f64());
        trace.iterations = iter;
        if iter > 1 {
            let prev = trace.objective[iter - 2];
            if (f - prev).abs() / prev.abs().max(1e-12) < cfg.tol {
                trace.converged = true;
                break;
            }
        }
    }
    log::debug!(
        "fit: {} iterations, converged = {}, final objective {:?}",
        trace.iterations,
        trace.converged,
        trace.objective.last()
    );
    Ok((ProjectionMatrix::new(names, dims, p)?, trace))
}

/// `Y = Σ_v X_v P_v`.
pub fn project(ds: &MultiViewDataset, p: &ProjectionMatrix) -> Result<DMatrix<f64>> {
    if ds.view_dims() != p.dims() {
        return Err(Error::invalid(format!(
            "dataset view dims {:?} do not match projection blocks {:?}",
            ds.view_dims(),
            p.dims()
        )));
    }
    let mut y = DMatrix::zeros(ds.n_samples(), p.d());
    for (v, view) in ds.views().iter().enumerate() {
        y += view.values() * p.block(v);
    }
    Ok(y)
}

/// Which rows survive a norm threshold, per view and overall.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSupport {
    pub tau: f64,
    /// Selected row indices local to each view.
    pub selected: Vec<Vec<usize>>,
    /// Rows per view.
    pub dims: Vec<usize>,
    /// Fraction of rows at or below `tau`, per view.
    pub view_row_sparsity: Vec<f64>,
    pub row_sparsity: f64,
    /// Fraction of individual entries with magnitude at or below `tau`.
    pub view_entry_sparsity: Vec<f64>,
    pub entry_sparsity: f64,
}

impl RowSupport {
    pub fn zero_rows(&self) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.selected)
            .map(|(d, s)| d - s.len())
            .collect()
    }
}

/// A row is selected when its Euclidean norm exceeds `tau`.
pub fn row_support(p: &ProjectionMatrix, tau: f64) -> Result<RowSupport> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::invalid(format!(
            "support threshold tau = {tau} must be positive"
        )));
    }
    let mut selected = Vec::with_capacity(p.n_views());
    let mut view_row_sparsity = Vec::with_capacity(p.n_views());
    let mut view_entry_sparsity = Vec::with_capacity(p.n_views());
    let (mut zero_rows, mut zero_entries) = (0usize, 0usize);
    for v in 0..p.n_views() {
        let block = p.block(v);
        let keep: Vec<usize> = block
            .row_iter()
            .enumerate()
            .filter(|(_, r)| r.norm() > tau)
            .map(|(i, _)| i)
            .collect();
        let rows = block.nrows();
        let small = block.iter().filter(|x| x.abs() <= tau).count();
        zero_rows += rows - keep.len();
        zero_entries += small;
        view_row_sparsity.push(ratio(rows - keep.len(), rows));
        view_entry_sparsity.push(ratio(small, rows * block.ncols()));
        selected.push(keep);
    }
    let m = p.total().nrows();
    Ok(RowSupport {
        tau,
        selected,
        dims: p.dims().to_vec(),
        view_row_sparsity,
        row_sparsity: ratio(zero_rows, m),
        view_entry_sparsity,
        entry_sparsity: ratio(zero_entries, m * p.d()),
    })
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
