//! Small dense helpers shared by the modules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of a symmetric matrix, sorted descending (stable on ties).
pub fn sym_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Eigen-decomposition with eigenpairs sorted by descending eigenvalue.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let p = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `a * aᵀ` for a column-major `rows × cols` matrix.
pub fn gram_rows(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = a.shape();
    let mut out = DMatrix::<f64>::zeros(n, n);
    if n == 0 || p == 0 {
        return out;
    }
    // SAFETY: pointers cover the full buffers with the strides given;
    // column-major layout means element (i, k) sits at i + k * n.
    unsafe {
        matrixmultiply::dgemm(
            n,
            p,
            n,
            1.0,
            a.as_ptr(),
            1,
            n as isize,
            a.as_ptr(),
            n as isize,
            1,
            0.0,
            out.as_mut_ptr(),
            1,
            n as isize,
        );
    }
    out
}

/// `aᵀ * a` for a column-major `rows × cols` matrix.
pub fn gram_cols(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = a.shape();
    let mut out = DMatrix::<f64>::zeros(p, p);
    if n == 0 || p == 0 {
        return out;
    }
    // SAFETY: as above; aᵀ(k, i) = a(i, k) at i + k * n.
    unsafe {
        matrixmultiply::dgemm(
            p,
            n,
            p,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            a.as_ptr(),
            1,
            n as isize,
            0.0,
            out.as_mut_ptr(),
            1,
            p as isize,
        );
    }
    out
}

/// `a * bᵀ` where `a` is `n × k` and `b` is `m × k`.
pub fn mul_transpose(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = a.shape();
    let (m, k2) = b.shape();
    assert_eq!(k, k2, "inner dimensions differ");
    let mut out = DMatrix::<f64>::zeros(n, m);
    if n == 0 || m == 0 || k == 0 {
        return out;
    }
    // SAFETY: bᵀ(j, c) = b(c, j) at c + j * m.
    unsafe {
        matrixmultiply::dgemm(
            n,
            k,
            m,
            1.0,
            a.as_ptr(),
            1,
            n as isize,
            b.as_ptr(),
            m as isize,
            1,
            0.0,
            out.as_mut_ptr(),
            1,
            n as isize,
        );
    }
    out
}

pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}
