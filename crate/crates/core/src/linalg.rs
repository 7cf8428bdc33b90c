//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Singular values in descending order with the matching right singular
/// vectors as the columns of an `n × n` orthogonal matrix.
pub(crate) fn right_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &vt.row(i).transpose());
    }
    (s, v)
}

/// Left singular data: singular values descending and left singular vectors
/// as columns of an `m × m` matrix.
pub(crate) fn left_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    right_svd(&a.transpose())
}

/// Orthonormal basis (as columns) of `{x : A x ≈ 0}` using a singular-value
/// threshold.
pub(crate) fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let (s, v) = right_svd(a);
    let keep: Vec<usize> = (0..n).filter(|&i| s[i] < tol).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &v.column(i));
    }
    out
}

/// Minimal-norm least-squares solution of `A x = b`.
pub(crate) fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(n))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn det(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        1.0
    } else {
        a.clone().lu().determinant()
    }
}

/// Gradient of `det J(p)` given `J` and the directional derivatives
/// `dJ_j = ∂J/∂x_j`: `∂_j det J = Σ_c det(J with column c replaced by column c of dJ_j)`.
pub(crate) fn det_derivative(j: &DMatrix<f64>, dj: &DMatrix<f64>) -> f64 {
    let n = j.ncols();
    let mut total = 0.0;
    for c in 0..n {
        let mut m = j.clone();
        m.set_column(c, &dj.column(c));
        total += det(&m);
    }
    total
}
