//! Active-set factorization.
//!
//! For the active normals `N = [n_i]_{i∈α}` (columns in insertion order) the
//! state keeps
//!
//! ```text
//!     −Nᵀ G⁻¹ N = Rᵀ R,     R⁻¹,     M = R⁻ᵀ Nᵀ G⁻¹
//! ```
//!
//! from which `N* = −R⁻¹ M` and `H = G⁻¹ + Mᵀ M` are applied without ever
//! being formed. Adding a constraint appends a column to `R`; dropping one
//! restores triangularity with Givens rotations.

use thiserror::Error;

use crate::dense::{self, ops, DenseMatrix, Givens, LinalgError};
use crate::problem::MinimaxQP;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("cannot add constraint {index}: curvature {delta:e} is not negative")]
    NonnegativeCurvature { index: usize, delta: f64 },
    #[error("cannot drop from an empty active set")]
    EmptyActiveSet,
    #[error("drop position {position} out of range for {q} active constraints")]
    PositionOutOfRange { position: usize, q: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-iteration vectors for an entering normal `n⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepVectors {
    /// `M n⁺`.
    pub d1: Vec<f64>,
    /// `H n⁺ = G⁻¹ n⁺ + Mᵀ d1`, the primal direction.
    pub d2: Vec<f64>,
    /// `n⁺ᵀ H n⁺`.
    pub delta: f64,
    /// `R⁻¹ d1 = −N* n⁺`, the negated dual direction.
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorState {
    n: usize,
    alpha: Vec<usize>,
    r: DenseMatrix,
    rinv: DenseMatrix,
    m: DenseMatrix,
}

impl FactorState {
    /// Empty active set for `n` variables.
    pub fn new(n: usize) -> Self {
        FactorState {
            n,
            alpha: Vec::new(),
            r: DenseMatrix::zeros(0, 0),
            rinv: DenseMatrix::zeros(0, 0),
            m: DenseMatrix::zeros(0, n),
        }
    }

    pub fn q(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn rinv(&self) -> &DenseMatrix {
        &self.rinv
    }

    pub fn m(&self) -> &DenseMatrix {
        &self.m
    }

    /// Builds the factorization of `alpha` directly.
    pub fn from_scratch(p: &MinimaxQP, alpha: &[usize]) -> Result<Self, FactorError> {
        let n = p.n();
        if alpha.is_empty() {
            return Ok(Self::new(n));
        }
        let d_alpha = p.d().select_rows(alpha);
        let w = p.solve_g_matrix(&d_alpha.transpose());
        let mut s = d_alpha.matmul(&w);
        s.symmetrize();
        let r = dense::neg_def_cholesky(&s)?.transpose();
        let rinv = dense::invert_upper(&r);
        let q = alpha.len();
        let mut m = DenseMatrix::zeros(q, n);
        for col in 0..n {
            let x = dense::solve_upper_transpose(&r, w.row(col));
            for (i, v) in x.into_iter().enumerate() {
                m[(i, col)] = v;
            }
        }
        Ok(FactorState {
            n,
            alpha: alpha.to_vec(),
            r,
            rinv,
            m,
        })
    }

    /// Computes `d1`, `d2`, `δ` and `r` for constraint `index`.
    pub fn step_vectors(&self, p: &MinimaxQP, index: usize) -> StepVectors {
        let normal = p.normal(index);
        let owned;
        let ginv_n = match p.constraint_set().ginv_normal(index) {
            Some(v) => v,
            None => {
                owned = p.solve_g(normal);
                &owned
            }
        };
        self.step_vectors_for(normal, ginv_n)
    }

    /// Same as [`FactorState::step_vectors`] for an arbitrary normal whose
    /// `G⁻¹ n` is already known.
    pub fn step_vectors_for(&self, normal: &[f64], ginv_n: &[f64]) -> StepVectors {
        let d1 = self.m.matvec(normal);
        let mut d2 = ginv_n.to_vec();
        if self.q() > 0 {
            let mt_d1 = self.m.tr_matvec(&d1);
            for (a, b) in d2.iter_mut().zip(mt_d1) {
                *a += b;
            }
        }
        let delta = dense::dot(normal, &d2);
        let r = self.rinv.matvec(&d1);
        StepVectors { d1, d2, delta, r }
    }

    /// Appends constraint `index`, whose step vectors are `sv`.
    pub fn add(&mut self, index: usize, sv: &StepVectors, tol: f64) -> Result<(), FactorError> {
        if sv.delta >= -tol {
            return Err(FactorError::NonnegativeCurvature {
                index,
                delta: sv.delta,
            });
        }
        let q = self.q();
        let rho = (-sv.delta).sqrt();
        ops::sqrt(1);
        ops::div(1);
        let inv_rho = 1.0 / rho;

        let mut r = DenseMatrix::zeros(q + 1, q + 1);
        let mut rinv = DenseMatrix::zeros(q + 1, q + 1);
        r.set_block(0, 0, &self.r);
        rinv.set_block(0, 0, &self.rinv);
        ops::mul(2 * q + self.n + 1);
        for i in 0..q {
            r[(i, q)] = -sv.d1[i];
            rinv[(i, q)] = sv.r[i] * inv_rho;
        }
        r[(q, q)] = rho;
        rinv[(q, q)] = inv_rho;

        let mut m = DenseMatrix::zeros(q + 1, self.n);
        m.set_block(0, 0, &self.m);
        for (dst, v) in m.row_mut(q).iter_mut().zip(&sv.d2) {
            *dst = v * inv_rho;
        }

        self.r = r;
        self.rinv = rinv;
        self.m = m;
        self.alpha.push(index);
        Ok(())
    }

    /// Removes the constraint at `position` (0-based) of the active list and
    /// returns its index.
    pub fn drop(&mut self, position: usize) -> Result<usize, FactorError> {
        let q = self.q();
        if q == 0 {
            return Err(FactorError::EmptyActiveSet);
        }
        if position >= q {
            return Err(FactorError::PositionOutOfRange { position, q });
        }

        // R without column `position` is upper Hessenberg from that column on.
        let mut hess = DenseMatrix::from_fn(q, q - 1, |i, j| {
            let src = if j < position { j } else { j + 1 };
            self.r[(i, src)]
        });
        for j in position..q - 1 {
            let (g, rad) = Givens::zeroing(hess[(j, j)], hess[(j + 1, j)]);
            {
                let (a, b) = hess.two_rows_mut(j, j + 1);
                g.apply(&mut a[j..], &mut b[j..]);
            }
            hess[(j, j)] = rad;
            hess[(j + 1, j)] = 0.0;
            let (a, b) = self.m.two_rows_mut(j, j + 1);
            g.apply(a, b);
            g.apply_columns(&mut self.rinv, j, j + 1);
        }

        // Rows of R⁻¹ follow the column permutation of R: `position` moves last.
        let order: Vec<usize> = (0..q).filter(|&i| i != position).collect();
        self.rinv = DenseMatrix::from_fn(q - 1, q - 1, |i, j| self.rinv[(order[i], j)]);
        self.r = hess.submatrix(0, 0, q - 1, q - 1);
        self.m = self.m.submatrix(0, 0, q - 1, self.n);
        Ok(self.alpha.remove(position))
    }

    /// `H v = G⁻¹ v + Mᵀ M v`.
    pub fn apply_h(&self, p: &MinimaxQP, v: &[f64]) -> Vec<f64> {
        let mut out = p.solve_g(v);
        if self.q() > 0 {
            let mv = self.m.matvec(v);
            for (a, b) in out.iter_mut().zip(self.m.tr_matvec(&mv)) {
                *a += b;
            }
        }
        out
    }

    /// `N* v = −R⁻¹ M v`.
    pub fn apply_nstar(&self, v: &[f64]) -> Vec<f64> {
        self.rinv
            .matvec(&self.m.matvec(v))
            .into_iter()
            .map(|x| -x)
            .collect()
    }

    /// Dense `H`, for diagnostics and tests.
    pub fn h_matrix(&self, p: &MinimaxQP) -> DenseMatrix {
        let ginv = p.solve_g_matrix(&DenseMatrix::identity(self.n));
        let mut h = ginv.add(&self.m.transpose().matmul(&self.m));
        h.symmetrize();
        h
    }

    /// Dense `N*`, for diagnostics and tests.
    pub fn nstar_matrix(&self) -> DenseMatrix {
        self.rinv.matmul(&self.m).scale(-1.0)
    }

    /// `N = D_αᵀ` in column order.
    pub fn normals(&self, p: &MinimaxQP) -> DenseMatrix {
        p.d().select_rows(&self.alpha).transpose()
    }

    /// Largest entrywise difference against `other` over `R`, `R⁻¹` and `M`.
    pub fn max_difference(&self, other: &FactorState) -> f64 {
        assert_eq!(self.alpha, other.alpha);
        let r = self.r.sub(&other.r).max_abs();
        let ri = self.rinv.sub(&other.rinv).max_abs();
        let m = self.m.sub(&other.m).max_abs();
        r.max(ri).max(m)
    }
}
