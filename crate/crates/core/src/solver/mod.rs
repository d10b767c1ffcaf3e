//! The dual active-set method.
//!
//! Starting from the unconstrained saddle point `z₀ = −G⁻¹c`, the solver
//! repeatedly picks a violated constraint `p` and moves along `d = H n_p`
//! while adjusting the multipliers along `−r`, until `p` becomes active
//! (full step) or an active multiplier reaches zero and its constraint is
//! dropped (partial step). Every intermediate state with no pending
//! constraint is an S-pair, and the objective strictly decreases from one
//! S-pair to the next.

pub mod trace;

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dense::{self, ops, OpCounter};
use crate::factor::{FactorError, FactorState, StepVectors};
use crate::problem::MinimaxQP;

pub use trace::{format_table, write_trace_csv, write_trace_json, TraceCsvRow};

/// Negative `r` entries above `-TOL_R` are treated as zero.
pub const TOL_R: f64 = 1e-12;
/// Multipliers at or below this count as dual feasible.
pub const TOL_DUAL: f64 = 1e-10;

/// How the entering constraint is chosen among the violated ones.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Largest `s_j(z)`, lowest index on ties.
    #[default]
    MostViolated,
    /// Lowest violated index.
    FirstIndex,
    /// The given 0-based indices in order, then most-violated.
    Sequence(Vec<usize>),
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub rule: SelectionRule,
    /// Defaults to `50 (m + 1)` direction computations.
    pub max_iterations: Option<usize>,
    /// Extra partial steps allowed per entering constraint beyond the
    /// active-set size at entry. Defaults to 1.
    pub extra_drops: Option<usize>,
    /// Store `z`, `s`, `u`, `d` and `r` in every trace row.
    pub record_vectors: bool,
}

impl SolveOptions {
    pub fn with_rule(rule: SelectionRule) -> Self {
        SolveOptions {
            rule,
            record_vectors: true,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// `t = t2`: the entering constraint becomes active.
    Full,
    /// `t = t1 < t2 < ∞`: a constraint leaves the active set.
    Partial,
    /// `t2 = ∞`, `t = t1`: a constraint leaves, the pending one is still
    /// violated.
    DualOnly,
    /// No violated constraint in `K`.
    Stop,
    /// `t = ∞`.
    Infeasible,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Full => "full",
            StepKind::Partial => "partial",
            StepKind::DualOnly => "dual-only",
            StepKind::Stop => "stop",
            StepKind::Infeasible => "infeasible",
        }
    }

    /// Whether this step drops a constraint.
    pub fn drops(&self) -> bool {
        matches!(self, StepKind::Partial | StepKind::DualOnly)
    }
}

/// One direction computation. State columns describe the start of the
/// iteration; `u` has one entry per constraint and includes the pending
/// multiplier of `p`. Vectors are empty unless recording was requested.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub f: f64,
    pub alpha: Vec<usize>,
    pub u: Vec<f64>,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub t1: f64,
    pub t2: f64,
    pub t: f64,
    pub kind: StepKind,
    /// Wall time from the step vectors through the factor update.
    pub elapsed_s: f64,
}

/// A point with its active set (insertion order) and multipliers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SPair {
    pub z: Vec<f64>,
    pub alpha: Vec<usize>,
    /// Multipliers aligned with `alpha`.
    pub u: Vec<f64>,
    pub f: f64,
}

impl SPair {
    /// Multipliers scattered to all `m` constraints.
    pub fn u_full(&self, m: usize) -> Vec<f64> {
        let mut u = vec![0.0; m];
        for (&i, &v) in self.alpha.iter().zip(&self.u) {
            u[i] = v;
        }
        u
    }

    /// Active set in increasing order.
    pub fn sorted_alpha(&self) -> Vec<usize> {
        let mut a = self.alpha.clone();
        a.sort_unstable();
        a
    }
}

/// State at which `t = ∞` was detected: with `r ≥ 0` and `δ ≥ 0`, the
/// subproblem with active set `alpha ∪ {p}` has no solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfeasibilityWitness {
    pub alpha: Vec<usize>,
    pub p: usize,
    pub r: Vec<f64>,
    pub delta: f64,
    pub z: Vec<f64>,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Termination {
    Optimal(SPair),
    Infeasible(InfeasibilityWitness),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "indices", rename_all = "snake_case")]
pub enum SolveWarning {
    /// Constraints outside `K` violated at the returned point.
    ViolatedOutsideK(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub termination: Termination,
    pub trace: Vec<IterationRecord>,
    pub adds: usize,
    pub drops: usize,
    pub ops: OpCounter,
    pub elapsed_s: f64,
    pub warnings: Vec<SolveWarning>,
}

impl SolveOutcome {
    pub fn spair(&self) -> Option<&SPair> {
        match &self.termination {
            Termination::Optimal(s) => Some(s),
            Termination::Infeasible(_) => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.spair().is_some()
    }

    /// Objective at every S-pair visited, in order: the start of the first
    /// row and the start of each row following a full step.
    pub fn spair_objectives(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, row) in self.trace.iter().enumerate() {
            if i == 0 || self.trace[i - 1].kind == StepKind::Full {
                out.push(row.f);
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("iteration limit of {limit} reached")]
    IterationLimitExceeded {
        limit: usize,
        trace: Box<Vec<IterationRecord>>,
    },
    #[error("constraint {p} was still pending after {drops} partial steps")]
    DropLimitExceeded {
        p: usize,
        drops: usize,
        trace: Box<Vec<IterationRecord>>,
    },
    #[error("G11 − G12 G22⁻¹ G12ᵀ is not positive definite, so the unconstrained point is not an S-pair")]
    GammaEmptyNotPositiveDefinite,
    #[error("forced constraint {index} is not a violated constraint of K outside the active set")]
    InvalidSequence { index: usize },
    #[error(transparent)]
    Factor(#[from] FactorError),
}

impl SolveError {
    pub fn trace(&self) -> Option<&[IterationRecord]> {
        match self {
            SolveError::IterationLimitExceeded { trace, .. }
            | SolveError::DropLimitExceeded { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Step lengths for one direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLengths {
    pub t1: f64,
    pub t2: f64,
    pub t: f64,
    /// Position in the active list of the blocking constraint for `t1`.
    pub k_position: Option<usize>,
}

impl StepLengths {
    pub fn kind(&self) -> StepKind {
        if self.t.is_infinite() {
            StepKind::Infeasible
        } else if self.t2 <= self.t1 {
            StepKind::Full
        } else if self.t2.is_infinite() {
            StepKind::DualOnly
        } else {
            StepKind::Partial
        }
    }
}

/// `t1` over active multipliers with `r_j < −TOL_R` (ties to the lowest
/// constraint index), `t2 = −s_p / δ` when `δ < −tol_k`.
pub fn step_lengths(
    sv: &StepVectors,
    alpha: &[usize],
    u: &[f64],
    s_p: f64,
    tol_k: f64,
) -> StepLengths {
    let mut t1 = f64::INFINITY;
    let mut k_position = None;
    for (j, (&rj, &uj)) in sv.r.iter().zip(u).enumerate() {
        if rj < -TOL_R {
            ops::div(1);
            let ratio = (uj / rj).max(0.0);
            let better = match k_position {
                None => true,
                Some(kp) => ratio < t1 || (ratio == t1 && alpha[j] < alpha[kp]),
            };
            if better {
                t1 = ratio;
                k_position = Some(j);
            }
        }
    }
    let t2 = if sv.delta < -tol_k {
        ops::div(1);
        -s_p / sv.delta
    } else {
        f64::INFINITY
    };
    StepLengths {
        t1,
        t2,
        t: t1.min(t2),
        k_position,
    }
}

/// Unconstrained saddle point `(−G⁻¹c, ∅)` with `f = ½ cᵀ z`.
pub fn initialize(p: &MinimaxQP) -> SPair {
    let neg_c: Vec<f64> = p.c().iter().map(|v| -v).collect();
    let z = p.solve_g(&neg_c);
    let f = 0.5 * dense::dot(p.c(), &z);
    SPair {
        z,
        alpha: Vec::new(),
        u: Vec::new(),
        f,
    }
}

/// Feasibility tolerance `1e-9 (1 + ‖h‖∞)`.
pub fn feasibility_tolerance(p: &MinimaxQP) -> f64 {
    1e-9 * (1.0 + dense::norm_inf(p.h()))
}

/// Violated constraint of `K` outside `alpha` chosen by `rule`, ignoring
/// forced sequences.
pub fn select_violated(
    p: &MinimaxQP,
    s: &[f64],
    alpha: &[usize],
    rule: &SelectionRule,
) -> Option<usize> {
    let tol = feasibility_tolerance(p);
    let candidates = p
        .constraint_set()
        .k
        .iter()
        .copied()
        .filter(|j| !alpha.contains(j) && s[*j] > tol);
    match rule {
        SelectionRule::FirstIndex => candidates.min(),
        _ => candidates.fold(None, |best: Option<usize>, j| match best {
            Some(b) if s[b] >= s[j] => Some(b),
            _ => Some(j),
        }),
    }
}

struct Run<'a> {
    p: &'a MinimaxQP,
    opts: &'a SolveOptions,
    fs: FactorState,
    z: Vec<f64>,
    u: Vec<f64>,
    f: f64,
    trace: Vec<IterationRecord>,
    adds: usize,
    drops: usize,
}

impl Run<'_> {
    fn record(&mut self, pending: Option<(usize, f64)>, row: RowData) {
        let iter = self.trace.len() + 1;
        let (z, s, u) = if self.opts.record_vectors {
            let mut u = vec![0.0; self.p.m()];
            for (&i, &v) in self.fs.alpha().iter().zip(&self.u) {
                u[i] = v;
            }
            if let Some((pi, pv)) = pending {
                u[pi] = pv;
            }
            (self.z.clone(), self.p.constraint_values(&self.z), u)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };
        let (d, r) = if self.opts.record_vectors {
            (row.d, row.r)
        } else {
            (Vec::new(), Vec::new())
        };
        self.trace.push(IterationRecord {
            iter,
            z,
            s,
            f: self.f,
            alpha: self.fs.alpha().to_vec(),
            u,
            p: row.p,
            k: row.k,
            d,
            r,
            t1: row.t1,
            t2: row.t2,
            t: row.t,
            kind: row.kind,
            elapsed_s: 0.0,
        });
    }
}

struct RowData {
    p: Option<usize>,
    k: Option<usize>,
    d: Vec<f64>,
    r: Vec<f64>,
    t1: f64,
    t2: f64,
    t: f64,
    kind: StepKind,
}

impl RowData {
    fn terminal(kind: StepKind) -> Self {
        RowData {
            p: None,
            k: None,
            d: Vec::new(),
            r: Vec::new(),
            t1: f64::NAN,
            t2: f64::NAN,
            t: f64::NAN,
            kind,
        }
    }
}

fn stamp(trace: &mut [IterationRecord], start: Instant) {
    if let Some(last) = trace.last_mut() {
        last.elapsed_s = start.elapsed().as_secs_f64();
    }
}

/// Runs the dual method to an S-pair with no violated constraint in `K`, or
/// to a certificate of infeasibility.
pub fn solve(p: &MinimaxQP, opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    let start = Instant::now();
    let (result, spent) = ops::measure(|| solve_inner(p, opts));
    let elapsed_s = start.elapsed().as_secs_f64();
    result.map(|mut out| {
        out.ops = spent;
        out.elapsed_s = elapsed_s;
        out
    })
}

fn solve_inner(p: &MinimaxQP, opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    if p.nx() > 0 && !dense::is_positive_definite(&p.gamma_empty()) {
        return Err(SolveError::GammaEmptyNotPositiveDefinite);
    }
    let cs = p.constraint_set();
    let tol_k = cs.tol;
    let tol_feas = feasibility_tolerance(p);
    let max_iter = opts.max_iterations.unwrap_or(50 * (p.m() + 1));
    let extra_drops = opts.extra_drops.unwrap_or(1);
    let forced: &[usize] = match &opts.rule {
        SelectionRule::Sequence(seq) => seq,
        _ => &[],
    };
    let mut forced_pos = 0;

    let start = initialize(p);
    let mut run = Run {
        p,
        opts,
        fs: FactorState::new(p.n()),
        z: start.z,
        u: Vec::new(),
        f: start.f,
        trace: Vec::new(),
        adds: 0,
        drops: 0,
    };

    loop {
        // Step 1: choose a violated constraint.
        let s = p.constraint_values(&run.z);
        let chosen = if forced_pos < forced.len() {
            let idx = forced[forced_pos];
            forced_pos += 1;
            let ok = idx < p.m()
                && cs.contains(idx)
                && !run.fs.alpha().contains(&idx)
                && s[idx] > tol_feas;
            if !ok {
                return Err(SolveError::InvalidSequence { index: idx });
            }
            Some(idx)
        } else {
            select_violated(p, &s, run.fs.alpha(), &opts.rule)
        };
        let Some(pi) = chosen else {
            run.record(None, RowData::terminal(StepKind::Stop));
            let outside: Vec<usize> = (0..p.m())
                .filter(|&j| !cs.contains(j) && s[j] > tol_feas)
                .collect();
            let mut warnings = Vec::new();
            if !outside.is_empty() {
                let one_based: Vec<usize> = outside.iter().map(|i| i + 1).collect();
                log::warn!("violated constraints outside K: {one_based:?}");
                warnings.push(SolveWarning::ViolatedOutsideK(outside));
            }
            let spair = SPair {
                z: run.z,
                alpha: run.fs.alpha().to_vec(),
                u: run.u,
                f: run.f,
            };
            return Ok(SolveOutcome {
                termination: Termination::Optimal(spair),
                trace: run.trace,
                adds: run.adds,
                drops: run.drops,
                ops: OpCounter::default(),
                elapsed_s: 0.0,
                warnings,
            });
        };

        let normal = p.normal(pi);
        let mut u_p = 0.0;
        let drop_budget = run.fs.q() + extra_drops;
        let mut episode_drops = 0;

        // Step 2: move until p is active.
        loop {
            if run.trace.len() >= max_iter {
                return Err(SolveError::IterationLimitExceeded {
                    limit: max_iter,
                    trace: Box::new(run.trace),
                });
            }
            let iter_start = Instant::now();
            let sv = run.fs.step_vectors(p, pi);
            let s_p = p.constraint_value(pi, &run.z);
            let sl = step_lengths(&sv, run.fs.alpha(), &run.u, s_p, tol_k);
            let kind = sl.kind();
            let k = match kind {
                StepKind::Partial | StepKind::DualOnly => sl.k_position.map(|kp| run.fs.alpha()[kp]),
                _ => None,
            };
            let row = RowData {
                p: Some(pi),
                k,
                d: sv.d2.clone(),
                r: sv.r.clone(),
                t1: sl.t1,
                t2: sl.t2,
                t: sl.t,
                kind,
            };
            run.record(Some((pi, u_p)), row);

            if kind == StepKind::Infeasible {
                let witness = InfeasibilityWitness {
                    alpha: run.fs.alpha().to_vec(),
                    p: pi,
                    r: sv.r,
                    delta: sv.delta,
                    z: run.z,
                    f: run.f,
                };
                return Ok(SolveOutcome {
                    termination: Termination::Infeasible(witness),
                    trace: run.trace,
                    adds: run.adds,
                    drops: run.drops,
                    ops: OpCounter::default(),
                    elapsed_s: 0.0,
                    warnings: Vec::new(),
                });
            }

            let t = sl.t;
            let dn = dense::dot(&sv.d2, normal);
            run.f += t * dn * (0.5 * t - u_p);
            dense::axpy(t, &sv.d2, &mut run.z);
            for (uj, rj) in run.u.iter_mut().zip(&sv.r) {
                *uj -= t * rj;
            }
            u_p -= t;
            ops::mul(run.u.len() + 3);

            if kind == StepKind::Full {
                run.fs.add(pi, &sv, tol_k)?;
                run.u.push(u_p);
                run.adds += 1;
                stamp(&mut run.trace, iter_start);
                break;
            }

            let kp = sl.k_position.expect("finite t1 has a blocking constraint");
            run.fs.drop(kp)?;
            run.u.remove(kp);
            run.drops += 1;
            episode_drops += 1;
            stamp(&mut run.trace, iter_start);
            if episode_drops > drop_budget {
                return Err(SolveError::DropLimitExceeded {
                    p: pi,
                    drops: episode_drops,
                    trace: Box::new(run.trace),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn forced(seq: &[usize]) -> SolveOptions {
        SolveOptions::with_rule(SelectionRule::Sequence(
            seq.iter().map(|i| i - 1).collect(),
        ))
    }

    #[test]
    fn initial_points() {
        let s = initialize(&fixtures::example1());
        assert!(close(&s.z, &[0.0, -1.0, 12.0, 31.0, 24.0, 6.0], 1e-12));
        assert!((s.f - 48.5).abs() < 1e-12);
        let s = initialize(&fixtures::example2());
        assert!(close(&s.z, &[1.0, -2.0, 11.0, 26.0, 17.0, 6.0], 1e-12));
        let s = initialize(&fixtures::infeasible());
        assert_eq!(s.z, vec![0.0, 0.0]);
        assert_eq!(s.f, 0.0);
    }

    #[test]
    fn selection_rules_at_start() {
        let p = fixtures::example1();
        let s = p.constraint_values(&initialize(&p).z);
        assert_eq!(select_violated(&p, &s, &[], &SelectionRule::MostViolated), Some(2));
        assert_eq!(select_violated(&p, &s, &[], &SelectionRule::FirstIndex), Some(1));
        assert_eq!(select_violated(&p, &[-1.0; 5], &[], &SelectionRule::MostViolated), None);
    }

    #[test]
    fn most_violated_ties_go_to_lowest_index() {
        let p = fixtures::example1();
        let s = [0.0, 3.0, 3.0, 1.0, 3.0];
        assert_eq!(select_violated(&p, &s, &[], &SelectionRule::MostViolated), Some(1));
        assert_eq!(select_violated(&p, &s, &[1], &SelectionRule::MostViolated), Some(2));
    }

    #[test]
    fn step_lengths_partial_case() {
        let sv = StepVectors {
            d1: vec![0.0],
            d2: vec![],
            delta: -9.0 / 4.0,
            r: vec![-5.0 / 4.0],
        };
        let sl = step_lengths(&sv, &[1], &[-29.0 / 12.0], 23.0 / 4.0, 1e-12);
        assert!((sl.t1 - 29.0 / 15.0).abs() < 1e-14);
        assert!((sl.t2 - 23.0 / 9.0).abs() < 1e-14);
        assert_eq!(sl.k_position, Some(0));
        assert_eq!(sl.kind(), StepKind::Partial);
    }

    #[test]
    fn step_lengths_dual_only_and_unbounded() {
        let sv = StepVectors {
            d1: vec![0.0, 0.0],
            d2: vec![],
            delta: 0.0,
            r: vec![-3.0, -1.0],
        };
        let sl = step_lengths(&sv, &[3, 4], &[-5.0, -4.0 / 3.0], 18.0, 1e-12);
        assert!((sl.t1 - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(sl.k_position, Some(1));
        assert_eq!(sl.kind(), StepKind::DualOnly);

        let sv = StepVectors {
            d1: vec![0.0],
            d2: vec![],
            delta: 1.0,
            r: vec![2.0],
        };
        let sl = step_lengths(&sv, &[0], &[-1.0], 1.0, 1e-12);
        assert!(sl.t.is_infinite());
        assert_eq!(sl.kind(), StepKind::Infeasible);
    }

    #[test]
    fn equal_lengths_count_as_full() {
        let sv = StepVectors {
            d1: vec![0.0],
            d2: vec![],
            delta: -1.0,
            r: vec![-1.0],
        };
        let sl = step_lengths(&sv, &[0], &[-2.0], 2.0, 1e-12);
        assert_eq!(sl.t1, sl.t2);
        assert_eq!(sl.kind(), StepKind::Full);
    }

    #[test]
    fn example1_single_full_step() {
        let p = fixtures::example1();
        let out = solve(&p, &SolveOptions::with_rule(SelectionRule::MostViolated)).unwrap();
        let sp = out.spair().unwrap();
        assert!(close(&sp.z, &[2.0, -1.0, 0.0, 3.0, 0.0, -2.0], 1e-12));
        assert!((sp.f - 6.5).abs() < 1e-12);
        assert_eq!(sp.alpha, vec![2]);
        assert!((sp.u[0] + 2.0).abs() < 1e-12);
        assert_eq!((out.adds, out.drops), (1, 0));
        let kinds: Vec<_> = out.trace.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, vec![StepKind::Full, StepKind::Stop]);
        assert!(out.warnings.is_empty());
        assert!(out.ops.weighted_total() > 0);
    }

    #[test]
    fn example1_path1() {
        let out = solve(&fixtures::example1(), &forced(&[2, 3])).unwrap();
        let f: Vec<f64> = out.trace.iter().map(|r| r.f).collect();
        assert!(close(&f, &[97.0 / 2.0, 323.0 / 24.0, 694.0 / 75.0, 13.0 / 2.0], 1e-12));
        let row = &out.trace[1];
        assert!(close(&row.r, &[-5.0 / 4.0], 1e-12));
        assert!((row.t1 - 29.0 / 15.0).abs() < 1e-12);
        assert!((row.t2 - 23.0 / 9.0).abs() < 1e-12);
        assert_eq!(row.k, Some(1));
        let z3 = [29.0 / 15.0, -1.0, 2.0 / 5.0, 59.0 / 15.0, 4.0 / 5.0, -26.0 / 15.0];
        assert!(close(&out.trace[2].z, &z3, 1e-12));
        assert!((out.trace[2].u[2] + 29.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn example1_path3() {
        let out = solve(&fixtures::example1(), &forced(&[4, 5, 2, 3])).unwrap();
        let f: Vec<f64> = out.trace.iter().map(|r| r.f).collect();
        let expected = [
            97.0 / 2.0,
            36.0,
            100.0 / 3.0,
            100.0 / 3.0,
            191.0 / 6.0,
            323.0 / 24.0,
            694.0 / 75.0,
            13.0 / 2.0,
        ];
        assert!(close(&f, &expected, 1e-12), "{f:?}");
        use StepKind::*;
        let kinds: Vec<_> = out.trace.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, vec![Full, Full, DualOnly, Partial, Full, Partial, Full, Stop]);
        let third = &out.trace[2];
        assert!(third.d.iter().all(|v| v.abs() < 1e-12));
        assert!((third.t - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(third.k, Some(4));
        assert_eq!((out.adds, out.drops), (4, 3));
        assert!(close(&out.spair().unwrap().z, &[2.0, -1.0, 0.0, 3.0, 0.0, -2.0], 1e-12));
    }

    #[test]
    fn infeasible_fixture_is_detected() {
        let out = solve(&fixtures::infeasible(), &SolveOptions::default()).unwrap();
        let Termination::Infeasible(w) = &out.termination else {
            panic!("expected infeasible");
        };
        assert_eq!(w.alpha, vec![0]);
        assert_eq!(w.p, 1);
        assert!(w.r.iter().all(|&v| v >= -1e-12));
        assert!(w.delta >= -1e-12);
        assert_eq!(out.trace.last().unwrap().kind, StepKind::Infeasible);
    }

    #[test]
    fn invalid_forced_index_is_rejected() {
        // Constraint 1 (1-based) is satisfied at z₀.
        let r = solve(&fixtures::example1(), &forced(&[1]));
        assert!(matches!(r, Err(SolveError::InvalidSequence { index: 0 })));
    }

    #[test]
    fn iteration_limit_carries_trace() {
        let opts = SolveOptions {
            max_iterations: Some(2),
            ..forced(&[4, 5, 2, 3])
        };
        match solve(&fixtures::example1(), &opts) {
            Err(e @ SolveError::IterationLimitExceeded { .. }) => {
                assert_eq!(e.trace().unwrap().len(), 2)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_linear_term_starts_at_origin() {
        let out = solve(&fixtures::infeasible(), &SolveOptions::default()).unwrap();
        assert_eq!(out.trace[0].f, 0.0);
    }
}
