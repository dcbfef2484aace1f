//! Quadratic-form matrices of the objective.

use nalgebra::{DMatrix, DVector};

use crate::data::{block_offsets, MultiViewDataset};
use crate::error::Result;
use crate::graph::{joint_label_graph, joint_laplacian_blocks, knn_heat_graph};

/// Sum of row-wise Euclidean norms.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

/// Block-diagonal `diag(X_vᵀ L_v X_v)` with `L_v` the Laplacian of the
/// view's kNN heat-kernel graph.
pub fn assemble_h1(ds: &MultiViewDataset, k: usize, t: f64) -> Result<DMatrix<f64>> {
    let dims = ds.view_dims();
    let offsets = block_offsets(&dims);
    let m = ds.total_dim();
    let mut h1 = DMatrix::zeros(m, m);
    for (v, view) in ds.views().iter().enumerate() {
        let g = knn_heat_graph(view, k, t)?;
        let x = view.values();
        let block = x.tr_mul(&g.laplacian_mul(x));
        h1.view_mut((offsets[v], offsets[v]), (dims[v], dims[v]))
            .copy_from(&symmetrize(block));
    }
    Ok(h1)
}

/// Grid of `X_sᵀ L^{st} X_t` blocks over the supervised joint Laplacian.
pub fn assemble_h2(ds: &MultiViewDataset) -> Result<DMatrix<f64>> {
    let n = ds.n_samples();
    let n_views = ds.n_views();
    let dims = ds.view_dims();
    let offsets = block_offsets(&dims);
    let g = joint_label_graph(ds.labels(), n_views)?;
    let blocks = joint_laplacian_blocks(&g, n, n_views)?;
    let m = ds.total_dim();
    let mut h2 = DMatrix::zeros(m, m);
    for s in 0..n_views {
        let xs = ds.views()[s].values();
        for t in 0..n_views {
            let xt = ds.views()[t].values();
            let block = xs.tr_mul(&(&blocks[s][t] * xt));
            h2.view_mut((offsets[s], offsets[t]), (dims[s], dims[t]))
                .copy_from(&block);
        }
    }
    Ok(symmetrize(h2))
}

/// Diagonal of the reweighting matrix: `1 / (2 max(|p_i|, eps_row))`.
pub fn reweight_h3(p: &DMatrix<f64>, eps_row: f64) -> DVector<f64> {
    DVector::from_iterator(
        p.nrows(),
        p.row_iter().map(|r| 1.0 / (2.0 * r.norm().max(eps_row))),
    )
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelVector, ViewKind, ViewMatrix};
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn dataset(views: Vec<DMatrix<f64>>, classes: Vec<usize>) -> MultiViewDataset {
        let c = *classes.iter().max().unwrap();
        MultiViewDataset::new(
            views
                .into_iter()
                .map(|m| ViewMatrix::new(ViewKind::Custom("v".into()), m).unwrap())
                .collect(),
            LabelVector::new(classes, c).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn l21_examples() {
        assert_eq!(l21_norm(&dmatrix![3.0, 4.0; 0.0, 0.0]), 5.0);
        assert_eq!(l21_norm(&DMatrix::zeros(3, 2)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(7, 3, &mut rng);
        let mut direct = 0.0;
        for i in 0..7 {
            let mut s = 0.0;
            for j in 0..3 {
                s += m[(i, j)] * m[(i, j)];
            }
            direct += s.sqrt();
        }
        assert!((l21_norm(&m) - direct).abs() < 1e-12);
    }

    #[test]
    fn duplicate_samples_annihilate_h1() {
        let ds = dataset(vec![dmatrix![1.0, 2.0; 1.0, 2.0]], vec![1, 1]);
        assert_eq!(assemble_h1(&ds, 1, 1.0).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn h1_is_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = dataset(
            vec![random(6, 2, &mut rng), random(6, 3, &mut rng)],
            vec![1; 6],
        );
        let h1 = assemble_h1(&ds, 2, 1.0).unwrap();
        assert_eq!(h1.shape(), (5, 5));
        assert!(h1.view((0, 2), (2, 3)).iter().all(|&v| v == 0.0));
        assert!(h1.view((2, 0), (3, 2)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_class_single_view_h2_uses_complete_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(5, 3, &mut rng);
        let ds = dataset(vec![x.clone()], vec![1; 5]);
        let complete = DMatrix::identity(5, 5) * 5.0 - DMatrix::from_element(5, 5, 1.0);
        let expected = x.transpose() * complete * &x;
        assert!((assemble_h2(&ds).unwrap() - expected).abs().max() < 1e-12);
    }

    #[test]
    fn distinct_classes_single_view_h2_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = dataset(vec![random(4, 3, &mut rng)], vec![1, 2, 3, 4]);
        assert_eq!(assemble_h2(&ds).unwrap(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn h3_floor_rule() {
        let p = dmatrix![0.3, 0.4; 0.0, 0.0];
        let h3 = reweight_h3(&p, 1e-8);
        assert!((h3[0] - 1.0).abs() < 1e-15);
        assert!((h3[1] - 5e7).abs() < 1e-6);
    }

    #[test]
    fn h3_trace_is_half_l21() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random(9, 4, &mut rng);
        let h3 = reweight_h3(&p, 1e-8);
        let tr = (p.transpose() * DMatrix::from_diagonal(&h3) * &p).trace();
        assert!((tr - 0.5 * l21_norm(&p)).abs() < 1e-10);
    }
}
