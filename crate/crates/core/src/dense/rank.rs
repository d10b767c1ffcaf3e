use super::DenseMatrix;

/// Numerical row rank via modified Gram–Schmidt with greedy pivoting.
///
/// Rows are orthogonalized in order of largest remaining norm; the process
/// stops when the largest residual norm falls to `rel_tol * max(1, max row
/// norm)`.
pub fn row_rank(m: &DenseMatrix, rel_tol: f64) -> usize {
    let mut rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    let scale = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(1.0, f64::max);
    let tol = rel_tol * scale;
    let mut rank = 0;
    while !rows.is_empty() {
        let (best, norm) = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
        if norm <= tol {
            break;
        }
        let q: Vec<f64> = rows.swap_remove(best).iter().map(|v| v / norm).collect();
        for r in rows.iter_mut() {
            let proj: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (a, b) in r.iter_mut().zip(&q) {
                *a -= proj * b;
            }
        }
        rank += 1;
    }
    rank
}

/// `true` when the rows of `m` are linearly independent at `rel_tol`.
pub fn has_full_row_rank(m: &DenseMatrix, rel_tol: f64) -> bool {
    row_rank(m, rel_tol) == m.rows()
}
