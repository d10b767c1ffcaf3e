use nalgebra::DMatrix;

use super::DenseMatrix;

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted ascending; column `j` of the returned matrix is the
/// unit eigenvector of eigenvalue `j`, signed so that its first component
/// with magnitude above `1e-12` is positive.
pub fn symmetric_eigen(s: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = s.rows();
    assert!(s.is_square());
    if n == 0 {
        return (Vec::new(), DenseMatrix::zeros(0, 0));
    }
    let m = DMatrix::from_row_slice(n, n, s.as_slice());
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-12)
            .map_or(1.0, |v| v.signum());
        for i in 0..n {
            vectors[(i, j)] = sign * col[i];
        }
    }
    (values, vectors)
}
