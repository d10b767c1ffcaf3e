use super::{ops, DenseMatrix, LinalgError};

/// Cholesky factor of a negative definite matrix: returns lower triangular
/// `L` with `S = -L Lᵀ` and a strictly positive diagonal.
///
/// A pivot of `-S` at or below `1e-12 (1 + ‖S‖∞)` fails with
/// [`LinalgError::NotNegativeDefinite`]; callers use this as the definiteness
/// test itself.
pub fn neg_def_cholesky(s: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let n = s.rows();
    let tol = 1e-12 * (1.0 + s.norm_inf());
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j);
        let mut d = -s[(j, j)] - lj[..j].iter().map(|v| v * v).sum::<f64>();
        ops::mul(j);
        if d <= tol || !d.is_finite() {
            return Err(LinalgError::NotNegativeDefinite { pivot: j, value: d });
        }
        d = d.sqrt();
        ops::sqrt(1);
        l[(j, j)] = d;
        ops::mul(j * (n - j - 1));
        ops::div(n - j - 1);
        for i in j + 1..n {
            let dotp: f64 = l.row(i)[..j].iter().zip(&l.row(j)[..j]).map(|(a, b)| a * b).sum();
            l[(i, j)] = (-s[(i, j)] - dotp) / d;
        }
    }
    Ok(l)
}

/// `true` when `S` is negative definite by the pivot test above.
pub fn is_negative_definite(s: &DenseMatrix) -> bool {
    neg_def_cholesky(s).is_ok()
}

/// `true` when `S` is positive definite, same pivot rule applied to `-S`.
pub fn is_positive_definite(s: &DenseMatrix) -> bool {
    neg_def_cholesky(&s.scale(-1.0)).is_ok()
}

/// Solves `U x = b` for upper triangular `U`.
pub fn solve_upper(u: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = u.rows();
    assert_eq!(b.len(), n);
    ops::mul(n * (n.saturating_sub(1)) / 2);
    ops::div(n);
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let row = u.row(i);
        let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / row[i];
    }
    x
}

/// Solves `Uᵀ x = b` for upper triangular `U`.
pub fn solve_upper_transpose(u: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = u.rows();
    assert_eq!(b.len(), n);
    ops::mul(n * (n.saturating_sub(1)) / 2);
    ops::div(n);
    let mut x = b.to_vec();
    for i in 0..n {
        let s: f64 = (0..i).map(|k| u[(k, i)] * x[k]).sum();
        x[i] = (x[i] - s) / u[(i, i)];
    }
    x
}

/// Solves `L x = b` for lower triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    ops::mul(n * (n.saturating_sub(1)) / 2);
    ops::div(n);
    let mut x = b.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / row[i];
    }
    x
}

/// Inverse of an upper triangular matrix, itself upper triangular.
pub fn invert_upper(u: &DenseMatrix) -> DenseMatrix {
    let n = u.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve_upper(u, &e);
        for i in 0..=j {
            inv[(i, j)] = col[i];
        }
    }
    inv
}
