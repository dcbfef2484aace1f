//! Dense symmetric eigensolvers and sign conventions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Flips each column so that its largest-magnitude entry is positive.
/// Ties in magnitude resolve to the lowest row index.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending (or descending) and the sign convention applied.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>, descending: bool) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ord = eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    fix_column_signs(&mut vectors);
    (values, vectors)
}

/// Eigenpairs of the symmetric-definite pencil `A v = η B v`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// m × d, B-orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// d eigenvalues, ascending.
    pub values: DVector<f64>,
}

/// The `d` smallest eigenpairs of `A v = η B v` for symmetric `A` and
/// symmetric positive-definite `B`.
///
/// Reduces to a standard symmetric problem through the Cholesky factor
/// `B = L Lᵀ`: `C = L⁻¹ A L⁻ᵀ`, `v = L⁻ᵀ u`.
pub fn generalized_eigensolve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: usize,
) -> Result<GeneralizedEigen> {
    let m = a.nrows();
    if a.ncols() != m || b.nrows() != m || b.ncols() != m {
        return Err(Error::invalid(format!(
            "pencil shapes disagree: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if d == 0 || d > m {
        return Err(Error::invalid(format!(
            "requested {d} eigenpairs from an order-{m} pencil"
        )));
    }
    let b_sym = (b + b.transpose()) * 0.5;
    let chol = b_sym.cholesky().ok_or_else(|| {
        Error::numerical(
            "constraint matrix is not positive-definite (Cholesky failed)",
            "increase the ridge term",
        )
    })?;
    let l = chol.l();
    // C = L^-1 A L^-T, built as L^-1 (L^-1 A)^T using symmetry of A.
    let left = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::numerical("singular Cholesky factor", "increase the ridge term"))?;
    let c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::numerical("singular Cholesky factor", "increase the ridge term"))?;
    let (values, u) = symmetric_eigen_sorted(&c, false);
    let u = u.columns(0, d).into_owned();
    let mut vectors = l
        .transpose()
        .solve_upper_triangular(&u)
        .ok_or_else(|| Error::numerical("singular Cholesky factor", "increase the ridge term"))?;
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(
            "generalized eigenvectors are not finite",
            "increase the ridge term or rescale the inputs",
        ));
    }
    fix_column_signs(&mut vectors);
    Ok(GeneralizedEigen {
        vectors,
        values: values.rows(0, d).into_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let r = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        &r * r.transpose() + DMatrix::identity(m, m) * (m as f64 * 0.1)
    }

    /// Independent route: eigenvalues of the nonsymmetric B⁻¹A via Schur.
    fn pencil_oracle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let binv_a = b.clone().lu().solve(a).unwrap();
        let schur = binv_a.schur();
        let mut ev: Vec<f64> = schur.complex_eigenvalues().iter().map(|c| c.re).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn diagonal_pencil_picks_smallest() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let b = DMatrix::identity(3, 3);
        let ge = generalized_eigensolve(&a, &b, 1).unwrap();
        assert!((ge.values[0] - 1.0).abs() < 1e-14);
        assert!((ge.vectors.column(0) - DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn identical_pencil_has_unit_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_spd(6, &mut rng);
        let ge = generalized_eigensolve(&b, &b, 6).unwrap();
        for v in ge.values.iter() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn random_pencil_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_spd(20, &mut rng);
        let r = DMatrix::from_fn(20, 20, |_, _| rng.random_range(-1.0..1.0));
        let a = &r + r.transpose();
        let ge = generalized_eigensolve(&a, &b, 20).unwrap();
        let oracle = pencil_oracle(&a, &b);
        for (x, y) in ge.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        let gram = ge.vectors.transpose() * &b * &ge.vectors;
        assert!((gram - DMatrix::identity(20, 20)).abs().max() < 1e-8);
    }

    #[test]
    fn indefinite_constraint_reports_ridge_hint() {
        let a = DMatrix::identity(2, 2);
        let b = dmatrix![1.0, 0.0; 0.0, -1.0];
        match generalized_eigensolve(&a, &b, 1) {
            Err(Error::Numerical { hint, .. }) => assert!(hint.contains("ridge")),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_dimension_request() {
        let a = DMatrix::identity(2, 2);
        assert!(generalized_eigensolve(&a, &a, 3).is_err());
        assert!(generalized_eigensolve(&a, &a, 0).is_err());
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut m = dmatrix![0.1, -0.2; -0.9, 0.5];
        fix_column_signs(&mut m);
        assert_eq!(m, dmatrix![-0.1, -0.2; 0.9, 0.5]);
    }
}
