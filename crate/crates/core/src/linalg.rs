//! Dense decompositions used across the crate, backed by `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

pub fn to_dmatrix(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Solves `a · x = b` for symmetric positive-definite `a`.
pub fn cholesky_solve(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let chol = to_dmatrix(a)
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))?;
    let x = chol.solve(&to_dmatrix(b));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(from_dmatrix(&x))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending
/// order with matching eigenvector columns.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = SymmetricEigen::new(to_dmatrix(a));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `(a)^{-1/2}` for a symmetric positive-definite matrix.
pub fn inv_sqrt_symmetric(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (values, vectors) = symmetric_eigen(a);
    if values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::SingularSystem("matrix is not positive definite".into()));
    }
    let scaled = &vectors * &values.mapv(|v| 1.0 / v.sqrt());
    Ok(scaled.dot(&vectors.t()))
}

/// Thin SVD `x = u · diag(s) · vt` with singular values in descending order.
pub struct ThinSvd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

pub fn thin_svd(x: ArrayView2<'_, f64>) -> ThinSvd {
    let svd = nalgebra::SVD::new(to_dmatrix(x), true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    ThinSvd {
        u: Array2::from_shape_fn((u.nrows(), k), |(r, c)| u[(r, order[c])]),
        s: Array1::from_iter(order.iter().map(|&i| svd.singular_values[i])),
        vt: Array2::from_shape_fn((k, vt.ncols()), |(r, c)| vt[(order[r], c)]),
    }
}
