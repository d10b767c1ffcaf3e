//! Shared helpers for integration tests: a small seeded RNG, random problem
//! construction and an oracle written directly against nalgebra so it shares
//! no code with the library's own linear algebra.

#![allow(dead_code)]

use minimax_qp::{DenseMatrix, FactorState, MinimaxQP};
use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn r(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, a: f64, b: f64) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.r(a, b))
    }

    pub fn vector(&mut self, n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|_| self.r(a, b)).collect()
    }
}

/// Random saddle curvature: `G22 = −(LLᵀ + I)` and `G11` chosen so that
/// `G11 − G12 G22⁻¹ G12ᵀ = KKᵀ + I`.
pub fn random_curvature(rng: &mut Rng, nx: usize, ny: usize) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let l = rng.matrix(ny, ny, -1.0, 1.0);
    let g22 = l
        .matmul(&l.transpose())
        .add(&DenseMatrix::identity(ny))
        .scale(-1.0);
    let g12 = rng.matrix(nx, ny, -1.0, 1.0);
    let k = rng.matrix(nx, nx, -1.0, 1.0);
    let g22_inv = to_na(&g22).try_inverse().expect("G22 invertible");
    let g12n = to_na(&g12);
    let schur = &g12n * g22_inv * g12n.transpose();
    let gamma = k.matmul(&k.transpose()).add(&DenseMatrix::identity(nx));
    let g11 = DenseMatrix::from_fn(nx, nx, |i, j| {
        gamma[(i, j)] + 0.5 * (schur[(i, j)] + schur[(j, i)])
    });
    (g11, g12, g22)
}

/// Random instance from [`random_curvature`] with uniform `c`, `D`, `h`.
pub fn random_problem(rng: &mut Rng, nx: usize, ny: usize, m: usize) -> MinimaxQP {
    loop {
        let (g11, g12, g22) = random_curvature(rng, nx, ny);
        let a = rng.matrix(m, nx, -1.0, 1.0);
        let b = rng.matrix(m, ny, -1.0, 1.0);
        let cx = rng.vector(nx, -2.0, 2.0);
        let cy = rng.vector(ny, -2.0, 2.0);
        let h = rng.vector(m, -2.0, 1.0);
        if let Ok(p) = MinimaxQP::new(g11, g12, g22, cx, cy, a, b, h) {
            if to_na(p.g()).determinant().abs() > 1e-3 {
                return p;
            }
        }
    }
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// `Nα` with the normals of `alpha` as columns.
pub fn normals(p: &MinimaxQP, alpha: &[usize]) -> DMatrix<f64> {
    let d = to_na(p.d());
    DMatrix::from_fn(p.n(), alpha.len(), |i, j| d[(alpha[j], i)])
}

/// `H = G⁻¹ − G⁻¹N (NᵀG⁻¹N)⁻¹ NᵀG⁻¹` and `N* = (NᵀG⁻¹N)⁻¹ NᵀG⁻¹`.
pub fn explicit_operators(p: &MinimaxQP, alpha: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let ginv = to_na(p.g()).try_inverse().expect("G invertible");
    let n = normals(p, alpha);
    if alpha.is_empty() {
        return (ginv, DMatrix::zeros(0, p.n()));
    }
    let inner = (n.transpose() * &ginv * &n)
        .try_inverse()
        .expect("NᵀG⁻¹N invertible");
    let nstar = &inner * n.transpose() * &ginv;
    let h = &ginv - &ginv * &n * &nstar;
    (h, nstar)
}

/// `G⁻¹ + MᵀM` from the factor, without symmetrizing.
pub fn factor_h(p: &MinimaxQP, fs: &FactorState) -> DMatrix<f64> {
    let ginv = to_na(p.g()).try_inverse().expect("G invertible");
    let m = to_na(fs.m());
    ginv + m.transpose() * m
}

/// Builds a factor by adding candidates in order, skipping any with
/// curvature above `-margin`, until `q` constraints are active.
pub fn grow_factor(p: &MinimaxQP, order: &[usize], q: usize, margin: f64) -> FactorState {
    let mut fs = FactorState::new(p.n());
    for &i in order {
        if fs.q() == q {
            break;
        }
        let sv = fs.step_vectors(p, i);
        if sv.delta < -margin {
            fs.add(i, &sv, 1e-12).expect("negative curvature add");
        }
    }
    fs
}

#[derive(Clone, Debug)]
pub struct NaSPair {
    pub alpha: Vec<usize>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

/// All S-pairs by brute force over every subset of constraints. A subset
/// qualifies when its KKT system is solvable, multipliers are nonpositive,
/// every constraint holds, exactly the subset is active and [`gamma_pd`]
/// holds.
pub fn brute_force_spairs(p: &MinimaxQP, tol: f64) -> Vec<NaSPair> {
    let (n, m) = (p.n(), p.m());
    let g = to_na(p.g());
    let d = to_na(p.d());
    let c = DVector::from_column_slice(p.c());
    let h = DVector::from_column_slice(p.h());
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        let alpha: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let q = alpha.len();
        let da = DMatrix::from_fn(q, n, |r, j| d[(alpha[r], j)]);
        if q > 0 && da.clone().svd(false, false).singular_values.min() < 1e-9 {
            continue;
        }
        let mut kkt = DMatrix::zeros(n + q, n + q);
        kkt.view_mut((0, 0), (n, n)).copy_from(&g);
        kkt.view_mut((0, n), (n, q)).copy_from(&da.transpose());
        kkt.view_mut((n, 0), (q, n)).copy_from(&da);
        let mut rhs = DVector::zeros(n + q);
        rhs.rows_mut(0, n).copy_from(&(-&c));
        for (r, &i) in alpha.iter().enumerate() {
            rhs[n + r] = -h[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        let z = sol.rows(0, n).into_owned();
        let lam = sol.rows(n, q).into_owned();
        if lam.iter().any(|&l| l > tol) {
            continue;
        }
        let s = &d * &z + &h;
        if s.iter().any(|&v| v > tol) {
            continue;
        }
        let active: Vec<usize> = (0..m).filter(|&j| s[j].abs() <= tol).collect();
        if active != alpha {
            continue;
        }
        if !gamma_pd(p, &alpha) {
            continue;
        }
        let mut u = vec![0.0; m];
        for (r, &i) in alpha.iter().enumerate() {
            u[i] = lam[r];
        }
        out.push(NaSPair {
            alpha,
            z: z.iter().copied().collect(),
            u,
        });
    }
    out
}

/// `Γα` positive definite, tested by inertia: with `Bα` of full row rank,
/// `G` restricted to `{z : Dα z = 0}` must have exactly `ny − q` negative
/// and `nx` positive eigenvalues.
pub fn gamma_pd(p: &MinimaxQP, alpha: &[usize]) -> bool {
    let (nx, ny, n) = (p.nx(), p.ny(), p.n());
    let d = to_na(p.d());
    let q = alpha.len();
    let da = DMatrix::from_fn(q, n, |r, j| d[(alpha[r], j)]);
    let ba = DMatrix::from_fn(q, ny, |r, j| d[(alpha[r], nx + j)]);
    let rank_b = if q == 0 {
        0
    } else {
        ba.clone().svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count()
    };
    if rank_b < q {
        return false;
    }
    // Null space of Dα from the SVD of its transpose.
    let basis = if q == 0 {
        DMatrix::identity(n, n)
    } else {
        let svd = da.transpose().svd(true, false);
        let u = svd.u.unwrap();
        let full = if u.ncols() < n {
            // Extend to a full basis via QR of [U | I].
            let mut ext = DMatrix::zeros(n, u.ncols() + n);
            ext.view_mut((0, 0), (n, u.ncols())).copy_from(&u);
            ext.view_mut((0, u.ncols()), (n, n)).copy_from(&DMatrix::identity(n, n));
            ext.qr().q()
        } else {
            u
        };
        full.columns(q, n - q).into_owned()
    };
    let reduced = basis.transpose() * to_na(p.g()) * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = reduced.symmetric_eigen();
    let neg = eig.eigenvalues.iter().filter(|&&v| v < -1e-10).count();
    let pos = eig.eigenvalues.iter().filter(|&&v| v > 1e-10).count();
    neg == ny - rank_b && pos == n - q - neg
}

/// Instance satisfying `D G⁻¹ Dᵀ ⪯ 0`: every row of `D` is a signed,
/// scaled copy of an eigenvector of `G` with negative eigenvalue. Rows that
/// share an eigenvector are parallel, so infeasible subproblems occur.
pub fn parallel_normal_problem(rng: &mut Rng, nx: usize, ny: usize, m: usize) -> MinimaxQP {
    let (g11, g12, g22) = random_curvature(rng, nx, ny);
    let n = nx + ny;
    let mut g = DMatrix::zeros(n, n);
    g.view_mut((0, 0), (nx, nx)).copy_from(&to_na(&g11));
    g.view_mut((0, nx), (nx, ny)).copy_from(&to_na(&g12));
    g.view_mut((nx, 0), (ny, nx)).copy_from(&to_na(&g12).transpose());
    g.view_mut((nx, nx), (ny, ny)).copy_from(&to_na(&g22));
    let eig = g.symmetric_eigen();
    let neg: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    let mut d = DenseMatrix::zeros(m, n);
    for i in 0..m {
        let e = neg[rng.below(neg.len())];
        let scale = rng.r(0.5, 1.5) * if rng.unit() < 0.5 { -1.0 } else { 1.0 };
        for j in 0..n {
            d[(i, j)] = scale * eig.eigenvectors[(j, e)];
        }
    }
    let a = DenseMatrix::from_fn(m, nx, |i, j| d[(i, j)]);
    let b = DenseMatrix::from_fn(m, ny, |i, j| d[(i, nx + j)]);
    let cx = rng.vector(nx, -2.0, 2.0);
    let cy = rng.vector(ny, -2.0, 2.0);
    let h = rng.vector(m, -2.0, 1.0);
    MinimaxQP::new(g11, g12, g22, cx, cy, a, b, h).expect("valid instance")
}
