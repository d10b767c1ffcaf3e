use super::{ops, DenseMatrix};

/// Plane rotation acting on a pair of rows `(a, b)`:
/// `a' = c a + s b`, `b' = -s a + c b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Givens {
    pub c: f64,
    pub s: f64,
}

impl Givens {
    pub const IDENTITY: Givens = Givens { c: 1.0, s: 0.0 };

    /// Rotation mapping `(a, b)` to `(r, 0)` with `r = hypot(a, b) >= 0`.
    pub fn zeroing(a: f64, b: f64) -> (Givens, f64) {
        if b == 0.0 && a >= 0.0 {
            return (Givens::IDENTITY, a);
        }
        let r = a.hypot(b);
        ops::sqrt(1);
        ops::div(2);
        (Givens { c: a / r, s: b / r }, r)
    }

    /// Applies the rotation to two row slices.
    #[inline]
    pub fn apply(&self, a: &mut [f64], b: &mut [f64]) {
        debug_assert_eq!(a.len(), b.len());
        if *self == Givens::IDENTITY {
            return;
        }
        ops::mul(4 * a.len());
        for (x, y) in a.iter_mut().zip(b.iter_mut()) {
            let (u, v) = (*x, *y);
            *x = self.c * u + self.s * v;
            *y = -self.s * u + self.c * v;
        }
    }

    /// Right-multiplies columns `(j, j+1)` of `m` by the transpose of this
    /// rotation, i.e. the column counterpart of [`Givens::apply`].
    pub fn apply_columns(&self, m: &mut DenseMatrix, j: usize, k: usize) {
        if *self == Givens::IDENTITY {
            return;
        }
        ops::mul(4 * m.rows());
        for i in 0..m.rows() {
            let (u, v) = (m[(i, j)], m[(i, k)]);
            m[(i, j)] = self.c * u + self.s * v;
            m[(i, k)] = -self.s * u + self.c * v;
        }
    }
}

/// Reduces an upper-Hessenberg matrix (one subdiagonal) to upper triangular
/// form with a nonnegative diagonal, applying the same rotations to the rows
/// of every companion matrix. Returns the rotations used, column by column.
///
/// The accumulated orthogonal factor is never formed.
pub fn givens_apply_sequence(
    rp: &mut DenseMatrix,
    companions: &mut [&mut DenseMatrix],
) -> Vec<Givens> {
    let steps = rp.cols().min(rp.rows().saturating_sub(1));
    for c in companions.iter() {
        assert_eq!(c.rows(), rp.rows(), "companion row count mismatch");
    }
    let mut rotations = Vec::with_capacity(steps);
    for j in 0..steps {
        let (g, r) = Givens::zeroing(rp[(j, j)], rp[(j + 1, j)]);
        let (a, b) = rp.two_rows_mut(j, j + 1);
        g.apply(&mut a[j..], &mut b[j..]);
        rp[(j, j)] = r;
        rp[(j + 1, j)] = 0.0;
        for c in companions.iter_mut() {
            let (a, b) = c.two_rows_mut(j, j + 1);
            g.apply(a, b);
        }
        rotations.push(g);
    }
    // A trailing diagonal entry below the last rotation can still be negative
    // when the matrix is square; flip that row.
    if rp.rows() == rp.cols() && rp.rows() > 0 {
        let last = rp.rows() - 1;
        if rp[(last, last)] < 0.0 {
            for v in rp.row_mut(last) {
                *v = -*v;
            }
            for c in companions.iter_mut() {
                for v in c.row_mut(last) {
                    *v = -*v;
                }
            }
        }
    }
    rotations
}
