use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Largest eigenvalue of `AᵀA` by power iteration from a fixed start, so
/// results are reproducible. Converges from below.
pub(crate) fn op_norm_sq(a: &DMatrix<f64>) -> f64 {
    let p = a.ncols();
    if p == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut v = DVector::from_fn(p, |j, _| 1.0 + 0.5 * ((j as f64) * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..1000 {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-10 * next {
            return next.max(norm);
        }
        est = next;
    }
    est
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// nonincreasing order (columns of the eigenvector matrix permuted to match).
pub(crate) fn sym_eigen_desc(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_eigen() {
        let a = DMatrix::from_fn(30, 8, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0 + 0.1 * j as f64);
        let exact = sym_eigen_desc(a.transpose() * &a).0[0];
        let est = op_norm_sq(&a);
        assert!((est - exact).abs() <= 1e-8 * exact, "{est} vs {exact}");
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sym_eigen_desc(m.clone());
        assert_eq!(vals.as_slice(), &[5.0, 2.0, 1.0]);
        let rec = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rec - m).amax() < 1e-12);
    }
}
