//! Optimality checks that do not depend on the solver.
//!
//! [`verify_spair`] tests a candidate `(z, α, u)` against the first and
//! second order conditions of a local minimax point. [`enumerate_spairs`]
//! finds every S-pair of a small instance by solving the KKT system of each
//! candidate active set.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dense::{self, DenseMatrix, LuFactor};
use crate::problem::MinimaxQP;
use crate::solver::feasibility_tolerance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("bordered matrix of the active set is singular")]
    BorderedSingular,
    #[error("enumeration is limited to {limit} constraints, instance has {m}")]
    TooManyConstraints { m: usize, limit: usize },
}

/// Result of the positive definiteness tests on `Γ_α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaStatus {
    Pd,
    NotPd,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Stationarity,
    Feasibility,
    Complementarity,
    Activity,
    Sign,
    GammaNotPositiveDefinite,
    GammaTestsDisagree,
    BorderedSingular,
    BRankDeficient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "reasons", rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject(Vec<RejectReason>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    /// `‖G z + c + Dᵀ u‖∞` with `u` zero off the active set.
    pub kkt_residual: f64,
    /// `max_j s_j(z)`.
    pub feasibility_max: f64,
    /// `max_j |u_j s_j(z)|`, including multipliers off the active set.
    pub complementarity_max: f64,
    /// `max_{i∈α} |s_i(z)|`.
    pub activity_max: f64,
    /// Largest positive multiplier, 0 if none.
    pub sign_violation: f64,
    /// Test through `N_αᵀ G⁻¹ N_α ≺ 0`.
    pub gamma_min_eig_proxy: GammaStatus,
    /// Test through the assembled `Γ_α`; `None` when it cannot be formed.
    pub gamma_direct: Option<GammaStatus>,
    pub strict_complementarity: bool,
    #[serde(rename = "B_alpha_rank_ok")]
    pub b_alpha_rank_ok: bool,
    pub tolerance: f64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

fn verification_scale(p: &MinimaxQP, z: &[f64], u: &[f64]) -> f64 {
    1.0 + p
        .g()
        .max_abs()
        .max(p.d().max_abs())
        .max(dense::norm_inf(p.c()))
        .max(dense::norm_inf(p.h()))
        .max(dense::norm_inf(z))
        .max(dense::norm_inf(u))
}

/// `Γ_α = G11 − [G12  A_αᵀ] [[G22, B_αᵀ], [B_α, 0]]⁻¹ [G12ᵀ; A_α]`.
pub fn gamma_matrix(p: &MinimaxQP, alpha: &[usize]) -> Result<DenseMatrix, VerifyError> {
    let (nx, ny, q) = (p.nx(), p.ny(), alpha.len());
    let b_alpha = p.b().select_rows(alpha);
    if !dense::has_full_row_rank(&b_alpha, 1e-10) {
        return Err(VerifyError::BorderedSingular);
    }
    let mut bordered = DenseMatrix::zeros(ny + q, ny + q);
    bordered.set_block(0, 0, p.g22());
    bordered.set_block(0, ny, &b_alpha.transpose());
    bordered.set_block(ny, 0, &b_alpha);
    let lu = LuFactor::new(&bordered).map_err(|_| VerifyError::BorderedSingular)?;
    let mut rhs = DenseMatrix::zeros(ny + q, nx);
    rhs.set_block(0, 0, &p.g12().transpose());
    rhs.set_block(ny, 0, &p.a().select_rows(alpha));
    let x = lu.solve_matrix(&rhs);
    let mut gamma = p.g11().sub(&rhs.transpose().matmul(&x));
    gamma.symmetrize();
    Ok(gamma)
}

/// Whether `N_αᵀ G⁻¹ N_α` is negative definite.
pub fn gamma_pd_by_equivalence(p: &MinimaxQP, alpha: &[usize]) -> bool {
    if alpha.is_empty() {
        return true;
    }
    let d_alpha = p.d().select_rows(alpha);
    let mut s = d_alpha.matmul(&p.solve_g_matrix(&d_alpha.transpose()));
    s.symmetrize();
    dense::is_negative_definite(&s)
}

fn pd_status(pd: bool) -> GammaStatus {
    if pd {
        GammaStatus::Pd
    } else {
        GammaStatus::NotPd
    }
}

/// Checks `(z, α, u)`, with `u` indexed by constraint (length `m`).
pub fn verify_spair(p: &MinimaxQP, z: &[f64], alpha: &[usize], u: &[f64]) -> VerificationReport {
    assert_eq!(z.len(), p.n(), "z has wrong length");
    assert_eq!(u.len(), p.m(), "u has wrong length");
    let tol = 1e-8 * verification_scale(p, z, u);
    let eval = p.evaluate(z);
    let mut grad = eval.g.clone();
    let dtu = p.d().tr_matvec(u);
    for (g, v) in grad.iter_mut().zip(&dtu) {
        *g += v;
    }
    let kkt_residual = dense::norm_inf(&grad);
    let feasibility_max = eval.s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_alpha = |j: usize| alpha.contains(&j);
    let complementarity_max = (0..p.m())
        .map(|j| {
            let off = if in_alpha(j) { 0.0 } else { u[j].abs() };
            (u[j] * eval.s[j]).abs().max(off)
        })
        .fold(0.0, f64::max);
    let activity_max = alpha.iter().map(|&i| eval.s[i].abs()).fold(0.0, f64::max);
    let sign_violation = u.iter().copied().fold(0.0, f64::max);
    let strict_complementarity = (0..p.m()).all(|j| {
        if in_alpha(j) {
            u[j] < -tol
        } else {
            eval.s[j] < -tol
        }
    });
    let b_alpha_rank_ok = dense::has_full_row_rank(&p.b().select_rows(alpha), 1e-10);
    let equivalence = pd_status(gamma_pd_by_equivalence(p, alpha));
    let gamma_direct = gamma_matrix(p, alpha)
        .ok()
        .map(|g| pd_status(g.rows() == 0 || dense::is_positive_definite(&g)));

    let mut reasons = Vec::new();
    if kkt_residual > tol {
        reasons.push(RejectReason::Stationarity);
    }
    if feasibility_max > tol {
        reasons.push(RejectReason::Feasibility);
    }
    if complementarity_max > tol {
        reasons.push(RejectReason::Complementarity);
    }
    if activity_max > tol {
        reasons.push(RejectReason::Activity);
    }
    if sign_violation > tol {
        reasons.push(RejectReason::Sign);
    }
    if !b_alpha_rank_ok {
        reasons.push(RejectReason::BRankDeficient);
    }
    match gamma_direct {
        None => reasons.push(RejectReason::BorderedSingular),
        Some(d) if d != equivalence => reasons.push(RejectReason::GammaTestsDisagree),
        _ => {}
    }
    if equivalence != GammaStatus::Pd {
        reasons.push(RejectReason::GammaNotPositiveDefinite);
    }
    VerificationReport {
        kkt_residual,
        feasibility_max,
        complementarity_max,
        activity_max,
        sign_violation,
        gamma_min_eig_proxy: equivalence,
        gamma_direct,
        strict_complementarity,
        b_alpha_rank_ok,
        tolerance: tol,
        verdict: if reasons.is_empty() {
            Verdict::Accept
        } else {
            Verdict::Reject(reasons)
        },
    }
}

/// An S-pair found by enumeration. `alpha` is sorted and `lambda` aligned
/// with it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSPair {
    pub z: Vec<f64>,
    pub alpha: Vec<usize>,
    pub lambda: Vec<f64>,
    pub f: f64,
}

impl OracleSPair {
    pub fn u_full(&self, m: usize) -> Vec<f64> {
        let mut u = vec![0.0; m];
        for (&i, &v) in self.alpha.iter().zip(&self.lambda) {
            u[i] = v;
        }
        u
    }
}

/// Largest `m` accepted by [`enumerate_spairs`].
pub const MAX_ENUMERATION_M: usize = 16;

/// Solves `[[G, D_αᵀ], [D_α, 0]] (z, λ) = (−c, −h_α)`.
pub fn solve_kkt(p: &MinimaxQP, alpha: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let (n, q) = (p.n(), alpha.len());
    let d_alpha = p.d().select_rows(alpha);
    let mut k = DenseMatrix::zeros(n + q, n + q);
    k.set_block(0, 0, p.g());
    k.set_block(0, n, &d_alpha.transpose());
    k.set_block(n, 0, &d_alpha);
    let lu = LuFactor::new(&k).ok()?;
    let mut rhs: Vec<f64> = p.c().iter().map(|v| -v).collect();
    rhs.extend(alpha.iter().map(|&i| -p.h()[i]));
    let mut sol = lu.solve(&rhs);
    let lambda = sol.split_off(n);
    Some((sol, lambda))
}

fn candidate(p: &MinimaxQP, alpha: &[usize], tol: f64) -> Option<OracleSPair> {
    if !dense::has_full_row_rank(&p.d().select_rows(alpha), 1e-10) {
        return None;
    }
    let (z, lambda) = solve_kkt(p, alpha)?;
    if lambda.iter().any(|&l| l > tol) {
        return None;
    }
    let eval = p.evaluate(&z);
    if eval.s.iter().any(|&s| s > tol) {
        return None;
    }
    let active: Vec<usize> = (0..p.m()).filter(|&j| eval.s[j].abs() <= tol).collect();
    if active != alpha {
        return None;
    }
    if !gamma_pd_by_equivalence(p, alpha) {
        return None;
    }
    let gamma = gamma_matrix(p, alpha).ok()?;
    if gamma.rows() > 0 && !dense::is_positive_definite(&gamma) {
        return None;
    }
    Some(OracleSPair {
        z,
        alpha: alpha.to_vec(),
        lambda,
        f: eval.f,
    })
}

/// Every S-pair of `p`, sorted by active set. Candidate active sets are the
/// subsets of `K` with independent normals.
pub fn enumerate_spairs(p: &MinimaxQP) -> Result<Vec<OracleSPair>, VerifyError> {
    if p.m() > MAX_ENUMERATION_M {
        return Err(VerifyError::TooManyConstraints {
            m: p.m(),
            limit: MAX_ENUMERATION_M,
        });
    }
    let k = &p.constraint_set().k;
    let tol = feasibility_tolerance(p);
    let mut found: Vec<OracleSPair> = (0u32..1 << k.len())
        .into_par_iter()
        .filter_map(|mask| {
            let alpha: Vec<usize> = (0..k.len())
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| k[b])
                .collect();
            candidate(p, &alpha, tol)
        })
        .collect();
    found.sort_by(|a, b| a.alpha.len().cmp(&b.alpha.len()).then(a.alpha.cmp(&b.alpha)));
    found.dedup_by(|a, b| a.alpha == b.alpha);
    Ok(found)
}

/// First oracle S-pair whose `z` lies within `tol` of `z` in the max norm.
pub fn find_match<'a>(spairs: &'a [OracleSPair], z: &[f64], tol: f64) -> Option<&'a OracleSPair> {
    spairs
        .iter()
        .find(|s| s.z.iter().zip(z).all(|(a, b)| (a - b).abs() <= tol))
}
