//! Singular data through symmetric eigendecompositions.
//!
//! nalgebra's bidiagonal SVD can lose accuracy on clustered singular values,
//! and clustered Schmidt spectra are exactly what the saturation results
//! produce. Squared values come from the smaller Gram matrix; vectors come
//! from the symmetric embedding, which keeps small singular values resolved.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Squared singular values of `m`, descending, clamped at zero.
pub(crate) fn squared_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = if m.nrows() <= m.ncols() { m * m.transpose() } else { m.tr_mul(m) };
    let mut values: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Squared singular values (descending) with left and right singular vectors
/// as columns. Partners of singular values at or below `1e-12 σ_1` are zero
/// columns.
///
/// Uses the eigenpairs `(±σ, (u, ±v)/√2)` of `[[0, M], [Mᵀ, 0]]`. Unlike the
/// Gram matrix this does not square the spectrum, so a singular vector is
/// accurate to `ε‖M‖ / gap` in σ rather than in σ².
pub(crate) fn singular_decomposition(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let rank = rows.min(cols);
    let mut aug = DMatrix::zeros(rows + cols, rows + cols);
    aug.view_mut((0, rows), (rows, cols)).copy_from(m);
    aug.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let eig = SymmetricEigen::new(aug);
    let mut order: Vec<usize> = (0..rows + cols).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(rank);
    let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let mut lambda = Vec::with_capacity(rank);
    let mut left = DMatrix::zeros(rows, rank);
    let mut right = DMatrix::zeros(cols, rank);
    for (c, &i) in order.iter().enumerate() {
        let sigma = eig.eigenvalues[i].max(0.0);
        lambda.push(sigma * sigma);
        if sigma > 1e-12 * top && sigma > 0.0 {
            let v = eig.eigenvectors.column(i);
            let (u_part, v_part) = (v.rows(0, rows), v.rows(rows, cols));
            left.set_column(c, &(u_part / u_part.norm()));
            right.set_column(c, &(v_part / v_part.norm()));
        }
    }
    (lambda, left, right)
}

/// Largest squared singular value with its unit singular vectors.
pub(crate) fn leading_singular_pair(m: &DMatrix<f64>) -> (f64, DVector<f64>, DVector<f64>) {
    let (lambda, left, right) = singular_decomposition(m);
    (lambda[0], left.column(0).into_owned(), right.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Every singular value of T_1/√3-like matrices is repeated, which is where
    // the bidiagonal SVD struggles.
    fn clustered() -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6, 4);
        for i in 0..4 {
            m[(i, i)] = 0.5;
        }
        m[(4, 0)] = 0.1;
        m[(5, 1)] = 0.1;
        m
    }

    #[test]
    fn reconstructs_both_orientations() {
        for m in [clustered(), clustered().transpose()] {
            let (lambda, u, v) = singular_decomposition(&m);
            let sigma = DMatrix::from_diagonal(&DVector::from_iterator(lambda.len(), lambda.iter().map(|l| l.sqrt())));
            assert!((&u * sigma * v.transpose() - &m).amax() < 1e-14);
            assert!((u.tr_mul(&u) - DMatrix::identity(lambda.len(), lambda.len())).amax() < 1e-14);
            for (a, b) in lambda.iter().zip(squared_singular_values(&m)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    // An exact null direction next to a small singular value.
    #[test]
    fn resolves_small_singular_values() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 3e-5;
        m[(1, 2)] = 3e-5;
        let (lambda, u, v) = singular_decomposition(&m);
        assert!((lambda[1].sqrt() - 3e-5 * 2f64.sqrt()).abs() < 1e-15);
        assert!((u.column(1).abs() - DVector::from_vec(vec![0.0, 1.0, 0.0])).amax() < 1e-12);
        assert!((v.column(1).abs() - DVector::from_vec(vec![0.0, 1.0, 1.0]) / 2f64.sqrt()).amax() < 1e-12);
        assert_eq!(u.column(2).norm(), 0.0);
    }

    #[test]
    fn leading_pair() {
        let (l, u, v) = leading_singular_pair(&clustered());
        assert!((l - 0.26).abs() < 1e-14);
        assert!(((clustered() * v) - u * l.sqrt()).amax() < 1e-14);
    }
}
