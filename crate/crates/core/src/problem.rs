//! Validated minimax QP instances.
//!
//! ```text
//!     min_x max_y   f(z) = ½ zᵀ G z + cᵀ z,     z = (x, y)
//!     s.t.          s(z) = D z + h <= 0,        D = [A  B]
//! ```
//!
//! with `G = [[G11, G12], [G12ᵀ, G22]]` and `G22` negative definite. A
//! [`MinimaxQP`] is immutable once built; its LU factorization of `G` and the
//! constraint classification ([`ConstraintSet`]) are computed once and shared.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{self, DenseMatrix, LinalgError, LuFactor};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("failed to read problem: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse problem: {0}")]
    Parse(String),
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("{0} contains non-finite entries")]
    NonFinite(&'static str),
    #[error("G22 is not negative definite")]
    G22NotNegativeDefinite,
    #[error("G is singular")]
    GSingular,
    #[error("constraint index {0} out of range")]
    IndexOutOfRange(usize),
}

/// On-disk JSON layout. Matrices are row-major flat arrays; `active_set`
/// holds 1-based constraint indices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub nx: usize,
    pub ny: usize,
    pub m: usize,
    #[serde(rename = "G11")]
    pub g11: Vec<f64>,
    #[serde(rename = "G12")]
    pub g12: Vec<f64>,
    #[serde(rename = "G22")]
    pub g22: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_set: Option<Vec<usize>>,
}

impl ProblemFile {
    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        serde_json::from_str(s).map_err(|e| ProblemError::Parse(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn from_reader(mut r: impl Read) -> Result<Self, ProblemError> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ProblemError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Planted or reference solution carried by the file, with the active
    /// set converted to 0-based indices.
    pub fn reference_solution(&self) -> Option<ReferenceSolution> {
        let z = self.z_star.clone()?;
        let u = self.u_star.clone().unwrap_or_else(|| vec![0.0; self.m]);
        let alpha = match &self.active_set {
            Some(a) => a.iter().map(|&i| i.saturating_sub(1)).collect(),
            None => (0..self.m).filter(|&i| u[i] != 0.0).collect(),
        };
        Some(ReferenceSolution { z, u, alpha })
    }
}

/// A candidate solution `(z, u, α)`; `u` is indexed by constraint (length
/// `m`) and `α` holds 0-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub alpha: Vec<usize>,
}

/// Objective, constraint values and gradient at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub f: f64,
    pub s: Vec<f64>,
    pub g: Vec<f64>,
}

/// Constraints that may enter the active set: `K = {i : nᵢᵀG⁻¹nᵢ < 0}`.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    /// Sorted 0-based indices in K.
    pub k: Vec<usize>,
    /// `nᵢᵀG⁻¹nᵢ` for every constraint.
    pub diag: Vec<f64>,
    in_k: Vec<bool>,
    ginv_n: Vec<Option<Vec<f64>>>,
    pub tol: f64,
}

impl ConstraintSet {
    pub fn contains(&self, i: usize) -> bool {
        self.in_k[i]
    }

    /// Cached `G⁻¹nᵢ`, present for `i ∈ K`.
    pub fn ginv_normal(&self, i: usize) -> Option<&[f64]> {
        self.ginv_n[i].as_deref()
    }
}

/// Outcome of testing `D G⁻¹ Dᵀ ⪯ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct Assumption2Report {
    pub holds: bool,
    pub max_eigenvalue: f64,
    pub tolerance: f64,
    /// Unit eigenvector of the largest eigenvalue when the test fails.
    pub certificate: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct MinimaxQP {
    nx: usize,
    ny: usize,
    m: usize,
    g11: DenseMatrix,
    g12: DenseMatrix,
    g22: DenseMatrix,
    cx: Vec<f64>,
    cy: Vec<f64>,
    a: DenseMatrix,
    b: DenseMatrix,
    h: Vec<f64>,
    g: DenseMatrix,
    c: Vec<f64>,
    d: DenseMatrix,
    g_lu: LuFactor,
    constraints: OnceLock<ConstraintSet>,
}

impl Clone for MinimaxQP {
    fn clone(&self) -> Self {
        MinimaxQP {
            nx: self.nx,
            ny: self.ny,
            m: self.m,
            g11: self.g11.clone(),
            g12: self.g12.clone(),
            g22: self.g22.clone(),
            cx: self.cx.clone(),
            cy: self.cy.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            h: self.h.clone(),
            g: self.g.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            g_lu: self.g_lu.clone(),
            constraints: OnceLock::new(),
        }
    }
}

fn check_len(field: &'static str, v: &[f64], expected: usize) -> Result<(), ProblemError> {
    if v.len() != expected {
        return Err(ProblemError::DimensionMismatch {
            field,
            expected,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ProblemError::NonFinite(field));
    }
    Ok(())
}

fn check_shape(field: &'static str, m: &DenseMatrix, rows: usize, cols: usize) -> Result<(), ProblemError> {
    if m.rows() != rows || m.cols() != cols {
        return Err(ProblemError::DimensionMismatch {
            field,
            expected: rows * cols,
            found: m.rows() * m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(ProblemError::NonFinite(field));
    }
    Ok(())
}

impl MinimaxQP {
    /// Validates the blocks and factors `G`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        g11: DenseMatrix,
        g12: DenseMatrix,
        g22: DenseMatrix,
        cx: Vec<f64>,
        cy: Vec<f64>,
        a: DenseMatrix,
        b: DenseMatrix,
        h: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        let nx = cx.len();
        let ny = cy.len();
        let m = h.len();
        check_shape("G11", &g11, nx, nx)?;
        check_shape("G12", &g12, nx, ny)?;
        check_shape("G22", &g22, ny, ny)?;
        check_shape("A", &a, m, nx)?;
        check_shape("B", &b, m, ny)?;
        check_len("cx", &cx, nx)?;
        check_len("cy", &cy, ny)?;
        check_len("h", &h, m)?;
        if !g11.is_symmetric() {
            return Err(ProblemError::NotSymmetric("G11"));
        }
        if !g22.is_symmetric() {
            return Err(ProblemError::NotSymmetric("G22"));
        }
        if !dense::is_negative_definite(&g22) {
            return Err(ProblemError::G22NotNegativeDefinite);
        }

        let n = nx + ny;
        let mut g = DenseMatrix::zeros(n, n);
        g.set_block(0, 0, &g11);
        g.set_block(0, nx, &g12);
        g.set_block(nx, 0, &g12.transpose());
        g.set_block(nx, nx, &g22);
        let mut d = DenseMatrix::zeros(m, n);
        d.set_block(0, 0, &a);
        d.set_block(0, nx, &b);
        let c: Vec<f64> = cx.iter().chain(&cy).copied().collect();
        let g_lu = LuFactor::new(&g).map_err(|e| match e {
            LinalgError::Singular { .. } => ProblemError::GSingular,
            _ => ProblemError::GSingular,
        })?;

        Ok(MinimaxQP {
            nx,
            ny,
            m,
            g11,
            g12,
            g22,
            cx,
            cy,
            a,
            b,
            h,
            g,
            c,
            d,
            g_lu,
            constraints: OnceLock::new(),
        })
    }

    pub fn from_file(pf: &ProblemFile) -> Result<Self, ProblemError> {
        let (nx, ny, m) = (pf.nx, pf.ny, pf.m);
        let mat = |field: &'static str, v: &[f64], r: usize, c: usize| {
            check_len(field, v, r * c)?;
            Ok::<_, ProblemError>(DenseMatrix::from_row_major(r, c, v.to_vec()).expect("length checked"))
        };
        check_len("cx", &pf.cx, nx)?;
        check_len("cy", &pf.cy, ny)?;
        check_len("h", &pf.h, m)?;
        Self::new(
            mat("G11", &pf.g11, nx, nx)?,
            mat("G12", &pf.g12, nx, ny)?,
            mat("G22", &pf.g22, ny, ny)?,
            pf.cx.clone(),
            pf.cy.clone(),
            mat("A", &pf.a, m, nx)?,
            mat("B", &pf.b, m, ny)?,
            pf.h.clone(),
        )
    }

    /// Reads and validates a JSON problem file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProblemError> {
        Self::from_file(&ProblemFile::read(path)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        Self::from_file(&ProblemFile::from_json(s)?)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            nx: self.nx,
            ny: self.ny,
            m: self.m,
            g11: self.g11.as_slice().to_vec(),
            g12: self.g12.as_slice().to_vec(),
            g22: self.g22.as_slice().to_vec(),
            a: self.a.as_slice().to_vec(),
            b: self.b.as_slice().to_vec(),
            cx: self.cx.clone(),
            cy: self.cy.clone(),
            h: self.h.clone(),
            z_star: None,
            u_star: None,
            active_set: None,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    /// Number of variables, `nx + ny`.
    pub fn n(&self) -> usize {
        self.nx + self.ny
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn g11(&self) -> &DenseMatrix {
        &self.g11
    }
    pub fn g12(&self) -> &DenseMatrix {
        &self.g12
    }
    pub fn g22(&self) -> &DenseMatrix {
        &self.g22
    }
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }
    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }
    pub fn g(&self) -> &DenseMatrix {
        &self.g
    }
    pub fn d(&self) -> &DenseMatrix {
        &self.d
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn h(&self) -> &[f64] {
        &self.h
    }
    /// Normal vector of constraint `i`, the `i`-th row of `D`.
    pub fn normal(&self, i: usize) -> &[f64] {
        self.d.row(i)
    }

    /// `G⁻¹ rhs` through the cached factorization.
    pub fn solve_g(&self, rhs: &[f64]) -> Vec<f64> {
        self.g_lu.solve(rhs)
    }

    pub fn solve_g_matrix(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.g_lu.solve_matrix(rhs)
    }

    pub fn evaluate(&self, z: &[f64]) -> Evaluation {
        assert_eq!(z.len(), self.n());
        let gz = self.g.matvec(z);
        let f = 0.5 * dense::dot(z, &gz) + dense::dot(&self.c, z);
        let g = gz.iter().zip(&self.c).map(|(a, b)| a + b).collect();
        Evaluation {
            f,
            s: self.constraint_values(z),
            g,
        }
    }

    /// `s(z) = D z + h`.
    pub fn constraint_values(&self, z: &[f64]) -> Vec<f64> {
        let mut s = self.d.matvec(z);
        for (si, hi) in s.iter_mut().zip(&self.h) {
            *si += hi;
        }
        s
    }

    pub fn constraint_value(&self, i: usize, z: &[f64]) -> f64 {
        dense::dot(self.d.row(i), z) + self.h[i]
    }

    /// Classifies constraints and caches `G⁻¹nᵢ` for `i ∈ K`.
    pub fn constraint_set(&self) -> &ConstraintSet {
        self.constraints.get_or_init(|| self.compute_constraint_set())
    }

    fn compute_constraint_set(&self) -> ConstraintSet {
        let mut diag = Vec::with_capacity(self.m);
        let mut solved = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let n_i = self.normal(i);
            let w = self.solve_g(n_i);
            diag.push(dense::dot(n_i, &w));
            solved.push(w);
        }
        let tol = 1e-12 * (1.0 + dense::norm_inf(&diag));
        let in_k: Vec<bool> = diag.iter().map(|&v| v < -tol).collect();
        let k = (0..self.m).filter(|&i| in_k[i]).collect();
        let ginv_n = solved
            .into_iter()
            .zip(&in_k)
            .map(|(w, &keep)| keep.then_some(w))
            .collect();
        ConstraintSet {
            k,
            diag,
            in_k,
            ginv_n,
            tol,
        }
    }

    /// `D G⁻¹ Dᵀ`, the matrix behind the second-order assumptions.
    pub fn dginvdt(&self) -> DenseMatrix {
        let ginv_dt = self.solve_g_matrix(&self.d.transpose());
        let mut s = self.d.matmul(&ginv_dt);
        s.symmetrize();
        s
    }

    /// Tests whether `D G⁻¹ Dᵀ` is negative semidefinite.
    pub fn check_assumption2(&self) -> Assumption2Report {
        if self.m == 0 {
            return Assumption2Report {
                holds: true,
                max_eigenvalue: 0.0,
                tolerance: 0.0,
                certificate: None,
            };
        }
        let s = self.dginvdt();
        let tolerance = 1e-10 * (1.0 + s.max_abs());
        let (vals, vecs) = dense::symmetric_eigen(&s);
        let top = *vals.last().expect("m > 0");
        let holds = top <= tolerance;
        Assumption2Report {
            holds,
            max_eigenvalue: top,
            tolerance,
            certificate: (!holds).then(|| vecs.column(self.m - 1)),
        }
    }

    /// The same objective with only the constraints in `rows`, renumbered
    /// in the given order.
    pub fn restrict(&self, rows: &[usize]) -> Result<MinimaxQP, ProblemError> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.m) {
            return Err(ProblemError::IndexOutOfRange(bad));
        }
        MinimaxQP::new(
            self.g11.clone(),
            self.g12.clone(),
            self.g22.clone(),
            self.cx.clone(),
            self.cy.clone(),
            self.a.select_rows(rows),
            self.b.select_rows(rows),
            rows.iter().map(|&i| self.h[i]).collect(),
        )
    }

    /// `Γ∅ = G11 − G12 G22⁻¹ G12ᵀ`.
    pub fn gamma_empty(&self) -> DenseMatrix {
        let lu = LuFactor::new(&self.g22).expect("G22 validated nonsingular");
        let x = lu.solve_matrix(&self.g12.transpose());
        let mut gamma = self.g11.sub(&self.g12.matmul(&x));
        gamma.symmetrize();
        gamma
    }
}
