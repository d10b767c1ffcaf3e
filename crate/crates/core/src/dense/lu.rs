use super::{ops, DenseMatrix, LinalgError};

/// LU factorization with partial (row) pivoting, `P A = L U`.
///
/// Used for the symmetric but indefinite Hessian of a minimax problem, where
/// a Cholesky factorization is unavailable.
#[derive(Clone, Debug)]
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Factors a square matrix. A pivot below `1e-14 ‖A‖∞` is reported as
    /// singular.
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let tol = 1e-14 * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= tol || piv_abs == 0.0 {
                return Err(LinalgError::Singular { pivot: k });
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            ops::div(n - k - 1);
            ops::mul((n - k - 1) * (n - k - 1));
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != 0.0 {
                    let (top, bottom) = lu.two_rows_mut(k, i);
                    for (b, t) in bottom[k + 1..].iter_mut().zip(&top[k + 1..]) {
                        *b -= l * t;
                    }
                }
            }
        }
        Ok(LuFactor { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        ops::mul(n * n);
        ops::div(n);
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves column by column.
    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rhs.rows(), self.n);
        let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
        for j in 0..rhs.cols() {
            let col = self.solve(&rhs.column(j));
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_diagonal_solve() {
        let g = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        let lu = LuFactor::new(&g).unwrap();
        assert_eq!(lu.solve(&[2.0, 2.0]), vec![2.0, -2.0]);
    }

    #[test]
    fn zero_leading_entry_needs_pivoting() {
        let g = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lu = LuFactor::new(&g).unwrap();
        assert_eq!(lu.solve(&[3.0, 5.0]), vec![5.0, 3.0]);
    }

    #[test]
    fn singular_is_rejected() {
        let g = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(LuFactor::new(&g), Err(LinalgError::Singular { .. })));
    }
}
