//! Random instances with a planted solution `(z*, u*, α*)`.
//!
//! Both kinds draw `G22` strictly diagonally dominant with a negative
//! diagonal, `G12` uniform, and `Γ∅` strictly diagonally dominant with a
//! positive diagonal, then choose `c` and `h` so that `z*` is stationary,
//! constraints `0..na` are active and the rest are strictly inactive.
//!
//! * Type 1: `D` has unit rows and `G11` is chosen so that `Γ_{α*} = Γ∅`.
//! * Type 2: `G11 = Γ∅ + G12 G22⁻¹ G12ᵀ` and every row of `D` lies in the span
//!   of the eigenvectors of `G` with negative eigenvalues, so `D G⁻¹ Dᵀ ⪯ 0`.
//!
//! Random numbers come from ChaCha20 seeded with `GenSpec::seed`; each matrix
//! reads its own stream `(attempt << 8) | id`, and a uniform draw on `[a, b)`
//! is `a + (b − a) (x >> 11) 2⁻⁵³` for the next 64-bit output `x`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::{self, DenseMatrix, LuFactor};
use crate::problem::{MinimaxQP, ProblemFile};
use crate::verify;

pub const MAX_ATTEMPTS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Type1,
    Type2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: Kind,
    pub nx: usize,
    pub ny: usize,
    pub m: usize,
    pub na: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: u64, reason: String },
}

#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub problem: MinimaxQP,
    pub z_star: Vec<f64>,
    /// Multipliers for all `m` constraints, zero off the active set.
    pub u_star: Vec<f64>,
    /// `0..na`.
    pub active_set: Vec<usize>,
    /// Attempts used, starting at 1.
    pub attempts: u64,
}

impl PlantedInstance {
    /// Problem file carrying the planted solution (1-based active set).
    pub fn to_file(&self) -> ProblemFile {
        let mut pf = self.problem.to_file();
        pf.z_star = Some(self.z_star.clone());
        pf.u_star = Some(self.u_star.clone());
        pf.active_set = Some(self.active_set.iter().map(|i| i + 1).collect());
        pf
    }
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    G22 = 1,
    G12 = 2,
    Gamma = 3,
    ZStar = 4,
    U = 5,
    S = 6,
    D = 7,
}

struct Uniform(ChaCha20Rng);

impl Uniform {
    fn new(seed: u64, attempt: u64, stream: Stream) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream((attempt << 8) | stream as u64);
        Uniform(rng)
    }

    fn r(&mut self, a: f64, b: f64) -> f64 {
        let unit = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        a + (b - a) * unit
    }

    fn vec(&mut self, n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|_| self.r(a, b)).collect()
    }

    fn matrix(&mut self, rows: usize, cols: usize, a: f64, b: f64) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.r(a, b))
    }

    /// Symmetric matrix with `r(−1, 1)` off the diagonal and diagonal
    /// `sign (Sᵢ + r(0, 1) + 1)`, `Sᵢ` the off-diagonal absolute row sum.
    fn dominant(&mut self, n: usize, sign: f64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.r(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = sign * (off + self.r(0.0, 1.0) + 1.0);
        }
        m
    }
}

fn validate(spec: &GenSpec) -> Result<(), GenerateError> {
    if spec.na > spec.m {
        return Err(GenerateError::InvalidSpec(format!(
            "na = {} exceeds m = {}",
            spec.na, spec.m
        )));
    }
    if spec.na > spec.ny {
        return Err(GenerateError::InvalidSpec(format!(
            "na = {} exceeds ny = {}; active rows of B could not be independent",
            spec.na, spec.ny
        )));
    }
    if spec.ny == 0 {
        return Err(GenerateError::InvalidSpec("ny must be positive".into()));
    }
    Ok(())
}

/// Builds an instance for `spec`, redrawing until the planted point passes
/// [`verify::verify_spair`].
pub fn generate(spec: &GenSpec) -> Result<PlantedInstance, GenerateError> {
    validate(spec)?;
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        match attempt_once(spec, attempt) {
            Ok(mut inst) => {
                inst.attempts = attempt + 1;
                return Ok(inst);
            }
            Err(reason) => {
                log::debug!("attempt {attempt} rejected: {reason}");
                last = reason;
            }
        }
    }
    Err(GenerateError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

fn attempt_once(spec: &GenSpec, attempt: u64) -> Result<PlantedInstance, String> {
    let GenSpec { nx, ny, m, na, .. } = *spec;
    let n = nx + ny;
    let draw = |s: Stream| Uniform::new(spec.seed, attempt, s);

    let g22 = draw(Stream::G22).dominant(ny, -1.0);
    let g12 = draw(Stream::G12).matrix(nx, ny, -1.0, 1.0);
    let gamma = draw(Stream::Gamma).dominant(nx, 1.0);
    let z_star = draw(Stream::ZStar).vec(n, -5.0, 5.0);
    let mut u_star = vec![0.0; m];
    let mut u_draw = draw(Stream::U);
    for u in u_star.iter_mut().take(na) {
        *u = u_draw.r(-30.0, 0.0);
    }
    let mut s = vec![0.0; m];
    let mut s_draw = draw(Stream::S);
    for v in s.iter_mut().skip(na) {
        *v = s_draw.r(-1.0, 0.0);
    }
    let active: Vec<usize> = (0..na).collect();

    let g22_lu = LuFactor::new(&g22).map_err(|e| format!("G22: {e}"))?;
    let schur = g12.matmul(&g22_lu.solve_matrix(&g12.transpose()));
    let mut g11_type2 = gamma.add(&schur);
    g11_type2.symmetrize();

    let (g11, d) = match spec.kind {
        Kind::Type1 => {
            let mut d = draw(Stream::D).matrix(m, n, -1.0, 1.0);
            for i in 0..m {
                let norm = dense::norm2(d.row(i));
                if norm > 0.0 {
                    for v in d.row_mut(i) {
                        *v /= norm;
                    }
                }
            }
            let a_alpha = d.submatrix(0, 0, na, nx);
            let b_alpha = d.submatrix(0, nx, na, ny);
            if !dense::has_full_row_rank(&b_alpha, 1e-10) {
                return Err("B of the active rows is rank deficient".into());
            }
            let mut bordered = DenseMatrix::zeros(ny + na, ny + na);
            bordered.set_block(0, 0, &g22);
            bordered.set_block(0, ny, &b_alpha.transpose());
            bordered.set_block(ny, 0, &b_alpha);
            let lu = LuFactor::new(&bordered).map_err(|e| format!("bordered: {e}"))?;
            let mut rhs = DenseMatrix::zeros(ny + na, nx);
            rhs.set_block(0, 0, &g12.transpose());
            rhs.set_block(ny, 0, &a_alpha);
            let mut g11 = gamma.add(&rhs.transpose().matmul(&lu.solve_matrix(&rhs)));
            g11.symmetrize();
            (g11, d)
        }
        Kind::Type2 => {
            let mut g = DenseMatrix::zeros(n, n);
            g.set_block(0, 0, &g11_type2);
            g.set_block(0, nx, &g12);
            g.set_block(nx, 0, &g12.transpose());
            g.set_block(nx, nx, &g22);
            let (vals, vecs) = dense::symmetric_eigen(&g);
            let negative = vals.iter().filter(|&&v| v < 0.0).count();
            if negative != ny {
                return Err(format!("G has {negative} negative eigenvalues, expected {ny}"));
            }
            // Ascending order puts the negative eigenvectors first.
            let q_neg = vecs.submatrix(0, 0, n, ny);
            let d_t = draw(Stream::D).matrix(m, ny, -1.0, 1.0);
            (g11_type2, d_t.matmul(&q_neg.transpose()))
        }
    };

    let a = d.submatrix(0, 0, m, nx);
    let b = d.submatrix(0, nx, m, ny);
    // h = s − D z*;  c = −Dᵀu − G z*.
    let dz = d.matvec(&z_star);
    let h: Vec<f64> = s.iter().zip(&dz).map(|(si, v)| si - v).collect();
    let mut g = DenseMatrix::zeros(n, n);
    g.set_block(0, 0, &g11);
    g.set_block(0, nx, &g12);
    g.set_block(nx, 0, &g12.transpose());
    g.set_block(nx, nx, &g22);
    let gz = g.matvec(&z_star);
    let dtu = d.tr_matvec(&u_star);
    let c: Vec<f64> = gz.iter().zip(&dtu).map(|(x, y)| -x - y).collect();

    let problem = MinimaxQP::new(
        g11,
        g12,
        g22,
        c[..nx].to_vec(),
        c[nx..].to_vec(),
        a,
        b,
        h,
    )
    .map_err(|e| format!("invalid instance: {e}"))?;

    debug_assert!(
        spec.kind != Kind::Type2 || problem.check_assumption2().holds,
        "type 2 instance violates the curvature assumption"
    );

    let report = verify::verify_spair(&problem, &z_star, &active, &u_star);
    if !report.accepted() {
        return Err(format!("planted point rejected: {:?}", report.verdict));
    }
    Ok(PlantedInstance {
        problem,
        z_star,
        u_star,
        active_set: active,
        attempts: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: Kind, nx: usize, ny: usize, m: usize, na: usize, seed: u64) -> GenSpec {
        GenSpec {
            kind,
            nx,
            ny,
            m,
            na,
            seed,
        }
    }

    #[test]
    fn uniform_draws_stay_in_range() {
        let mut u = Uniform::new(3, 0, Stream::G12);
        for _ in 0..1000 {
            let v = u.r(-5.0, 5.0);
            assert!((-5.0..5.0).contains(&v));
        }
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a = Uniform::new(9, 0, Stream::G12).vec(4, 0.0, 1.0);
        let b = Uniform::new(9, 0, Stream::G12).vec(4, 0.0, 1.0);
        let c = Uniform::new(9, 0, Stream::G22).vec(4, 0.0, 1.0);
        let d = Uniform::new(9, 1, Stream::G12).vec(4, 0.0, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn same_seed_gives_identical_instances() {
        for kind in [Kind::Type1, Kind::Type2] {
            let s = spec(kind, 4, 6, 8, 3, 42);
            let a = generate(&s).unwrap();
            let b = generate(&s).unwrap();
            assert_eq!(a.to_file(), b.to_file());
        }
    }

    #[test]
    fn planted_structure_holds() {
        for kind in [Kind::Type1, Kind::Type2] {
            let inst = generate(&spec(kind, 5, 7, 10, 4, 1)).unwrap();
            let p = &inst.problem;
            let e = p.evaluate(&inst.z_star);
            for i in 0..4 {
                assert!(e.s[i].abs() < 1e-12);
            }
            for j in 4..10 {
                assert!(e.s[j] < 0.0 && e.s[j] >= -1.0 - 1e-12);
            }
            let dtu = p.d().tr_matvec(&inst.u_star);
            for (g, v) in e.g.iter().zip(dtu) {
                assert!((g + v).abs() < 1e-10);
            }
            assert!(dense::is_negative_definite(p.g22()));
            assert!(dense::is_positive_definite(&p.gamma_empty()));
        }
    }

    #[test]
    fn type1_rows_are_unit_length() {
        let inst = generate(&spec(Kind::Type1, 3, 4, 6, 2, 5)).unwrap();
        for i in 0..6 {
            assert!((dense::norm2(inst.problem.d().row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn type2_satisfies_curvature_assumption() {
        for seed in 0..5 {
            let inst = generate(&spec(Kind::Type2, 4, 6, 9, 3, seed)).unwrap();
            assert!(inst.problem.check_assumption2().holds);
        }
    }

    #[test]
    fn no_active_constraints_plants_unconstrained_point() {
        let inst = generate(&spec(Kind::Type2, 3, 3, 4, 0, 11)).unwrap();
        assert!(inst.active_set.is_empty());
        let z0 = crate::solver::initialize(&inst.problem).z;
        assert!(z0.iter().zip(&inst.z_star).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn too_many_active_constraints_is_rejected() {
        assert!(matches!(
            generate(&spec(Kind::Type1, 3, 2, 5, 3, 0)),
            Err(GenerateError::InvalidSpec(_))
        ));
        assert!(matches!(
            generate(&spec(Kind::Type2, 3, 4, 2, 3, 0)),
            Err(GenerateError::InvalidSpec(_))
        ));
    }

    #[test]
    fn file_carries_one_based_active_set() {
        let inst = generate(&spec(Kind::Type2, 2, 3, 4, 2, 8)).unwrap();
        let pf = inst.to_file();
        assert_eq!(pf.active_set, Some(vec![1, 2]));
        let sol = pf.reference_solution().unwrap();
        assert_eq!(sol.alpha, vec![0, 1]);
    }
}
