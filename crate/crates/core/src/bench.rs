//! Benchmark harness over planted random instances.
//!
//! Every rep draws its own instance, solves it and compares the result with
//! the planted solution. Reps run on a bounded rayon pool and are aggregated
//! in rep order, so the output does not depend on scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dense;
use crate::generator::{self, GenSpec, Kind};
use crate::solver::{self, SolveOptions, StepKind, Termination};

/// Environment variable holding the default number of worker threads.
pub const JOBS_ENV: &str = "MMQP_JOBS";
/// Type 1 draws that end infeasible are replaced at most this many times.
pub const MAX_REDRAWS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Scale {
    pub nx: usize,
    pub ny: usize,
    pub m: usize,
    pub na: usize,
}

impl Scale {
    /// Parses `nx,ny,m,na`.
    pub fn parse(s: &str) -> Result<Scale, String> {
        let v: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
        match v.map_err(|e| format!("bad scale {s:?}: {e}"))?.as_slice() {
            &[nx, ny, m, na] => Ok(Scale { nx, ny, m, na }),
            _ => Err(format!("bad scale {s:?}: expected nx,ny,m,na")),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.nx, self.ny, self.m, self.na)
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub kind: Kind,
    pub scales: Vec<Scale>,
    pub reps: usize,
    pub seed: u64,
    /// Worker threads; `None` reads [`JOBS_ENV`] and falls back to rayon's
    /// default.
    pub jobs: Option<usize>,
    /// Zero every wall-clock field so output is byte-stable.
    pub deterministic: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kind: Kind::Type2,
            scales: vec![Scale {
                nx: 100,
                ny: 200,
                m: 300,
                na: 100,
            }],
            reps: 20,
            seed: 0,
            jobs: None,
            deterministic: false,
        }
    }
}

/// One iteration's wall time, for the full versus partial comparison.
#[derive(Clone, Debug, Serialize)]
pub struct StepTiming {
    pub iter: usize,
    pub kind: StepKind,
    /// Active set size when the iteration started.
    pub q: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepResult {
    pub scale: Scale,
    pub rep: usize,
    /// Seed of the draw that was kept.
    pub seed: u64,
    /// Type 1 draws dropped because the solver found them infeasible.
    pub discarded: u64,
    /// `ok` or a short failure description.
    pub status: String,
    pub adds: usize,
    pub drops: usize,
    pub time_s: f64,
    pub ops: u64,
    pub err_z: f64,
    pub err_u: f64,
    #[serde(skip)]
    pub steps: Vec<StepTiming>,
}

impl RepResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    /// Total time spent in full and in partial (including dual-only) steps.
    pub fn timing_split(&self) -> (f64, f64) {
        self.steps.iter().fold((0.0, 0.0), |(f, p), s| match s.kind {
            StepKind::Full => (f + s.elapsed_s, p),
            StepKind::Partial | StepKind::DualOnly => (f, p + s.elapsed_s),
            _ => (f, p),
        })
    }
}

/// Aggregate over the successful reps of one scale. Errors are maxima and
/// everything else is a mean.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub nx: usize,
    pub ny: usize,
    pub m: usize,
    pub na: usize,
    pub reps: usize,
    pub failures: usize,
    pub discarded: u64,
    pub mean_adds: f64,
    pub mean_drops: f64,
    pub mean_time_s: f64,
    pub mean_ops: f64,
    pub max_err_z: f64,
    pub max_err_u: f64,
    pub mean_full_step_s: f64,
    pub mean_partial_step_s: f64,
}

fn seed_for(base: u64, scale_idx: usize, rep: usize, redraw: u64) -> u64 {
    base.wrapping_add((scale_idx as u64) << 40)
        .wrapping_add((rep as u64) << 20)
        .wrapping_add(redraw)
}

/// Generates, solves and scores one rep.
pub fn run_rep(kind: Kind, scale: Scale, scale_idx: usize, rep: usize, base_seed: u64) -> RepResult {
    let mut result = RepResult {
        scale,
        rep,
        seed: 0,
        discarded: 0,
        status: String::new(),
        adds: 0,
        drops: 0,
        time_s: 0.0,
        ops: 0,
        err_z: f64::NAN,
        err_u: f64::NAN,
        steps: Vec::new(),
    };
    for redraw in 0..=MAX_REDRAWS {
        let seed = seed_for(base_seed, scale_idx, rep, redraw);
        result.seed = seed;
        let spec = GenSpec {
            kind,
            nx: scale.nx,
            ny: scale.ny,
            m: scale.m,
            na: scale.na,
            seed,
        };
        let inst = match generator::generate(&spec) {
            Ok(inst) => inst,
            Err(e) => {
                result.status = format!("generation failed: {e}");
                return result;
            }
        };
        let out = match solver::solve(&inst.problem, &SolveOptions::default()) {
            Ok(out) => out,
            Err(e) => {
                result.status = format!("solver error: {e}");
                return result;
            }
        };
        result.adds = out.adds;
        result.drops = out.drops;
        result.time_s = out.elapsed_s;
        result.ops = out.ops.weighted_total();
        result.steps = out
            .trace
            .iter()
            .map(|r| StepTiming {
                iter: r.iter,
                kind: r.kind,
                q: r.alpha.len(),
                elapsed_s: r.elapsed_s,
            })
            .collect();
        match &out.termination {
            Termination::Optimal(sp) => {
                let m = inst.problem.m();
                result.err_z = dense::norm2(&dense::sub_vec(&sp.z, &inst.z_star));
                result.err_u = dense::norm2(&dense::sub_vec(&sp.u_full(m), &inst.u_star));
                result.status = "ok".into();
                return result;
            }
            Termination::Infeasible(_) if kind == Kind::Type1 => {
                log::debug!("rep {rep} at {scale}: draw {redraw} infeasible, discarded");
                result.discarded += 1;
            }
            Termination::Infeasible(_) => {
                result.status = "infeasible".into();
                return result;
            }
        }
    }
    result.status = format!("no feasible draw in {} attempts", MAX_REDRAWS + 1);
    result
}

/// Worker count from the argument, then [`JOBS_ENV`], then rayon's default.
pub fn resolve_jobs(jobs: Option<usize>) -> usize {
    jobs.or_else(|| std::env::var(JOBS_ENV).ok()?.parse().ok())
        .filter(|&j| j > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs every rep of every scale. The result is ordered by scale, then rep.
pub fn run_bench(cfg: &BenchConfig) -> Vec<RepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_jobs(cfg.jobs))
        .build()
        .expect("thread pool");
    let jobs: Vec<(usize, Scale, usize)> = cfg
        .scales
        .iter()
        .enumerate()
        .flat_map(|(si, &s)| (0..cfg.reps).map(move |r| (si, s, r)))
        .collect();
    let mut reps: Vec<RepResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, s, r)| run_rep(cfg.kind, s, si, r, cfg.seed))
            .collect()
    });
    if cfg.deterministic {
        for r in &mut reps {
            r.time_s = 0.0;
            for s in &mut r.steps {
                s.elapsed_s = 0.0;
            }
        }
    }
    reps
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// One record per scale, in first-appearance order.
pub fn aggregate(reps: &[RepResult]) -> Vec<BenchRecord> {
    let mut scales: Vec<Scale> = Vec::new();
    for r in reps {
        if !scales.contains(&r.scale) {
            scales.push(r.scale);
        }
    }
    scales
        .into_iter()
        .map(|s| {
            let all: Vec<&RepResult> = reps.iter().filter(|r| r.scale == s).collect();
            let ok: Vec<&RepResult> = all.iter().copied().filter(|r| r.ok()).collect();
            let steps = |want: fn(StepKind) -> bool| {
                mean(ok.iter().flat_map(|r| r.steps.iter()).filter(|t| want(t.kind)).map(|t| t.elapsed_s))
            };
            BenchRecord {
                nx: s.nx,
                ny: s.ny,
                m: s.m,
                na: s.na,
                reps: ok.len(),
                failures: all.len() - ok.len(),
                discarded: all.iter().map(|r| r.discarded).sum(),
                mean_adds: mean(ok.iter().map(|r| r.adds as f64)),
                mean_drops: mean(ok.iter().map(|r| r.drops as f64)),
                mean_time_s: mean(ok.iter().map(|r| r.time_s)),
                mean_ops: mean(ok.iter().map(|r| r.ops as f64)),
                max_err_z: ok.iter().map(|r| r.err_z).fold(0.0, f64::max),
                max_err_u: ok.iter().map(|r| r.err_u).fold(0.0, f64::max),
                mean_full_step_s: steps(|k| k == StepKind::Full),
                mean_partial_step_s: steps(|k| matches!(k, StepKind::Partial | StepKind::DualOnly)),
            }
        })
        .collect()
}

pub fn write_records_csv(records: &[BenchRecord], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RepRow<'a> {
    nx: usize,
    ny: usize,
    m: usize,
    na: usize,
    rep: usize,
    seed: u64,
    discarded: u64,
    status: &'a str,
    adds: usize,
    drops: usize,
    time_s: f64,
    ops: u64,
    err_z: f64,
    err_u: f64,
    full_time_s: f64,
    partial_time_s: f64,
}

/// Per-rep rows, including the deletion counts behind the drop trend.
pub fn write_reps_csv(reps: &[RepResult], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reps {
        let (full, partial) = r.timing_split();
        w.serialize(RepRow {
            nx: r.scale.nx,
            ny: r.scale.ny,
            m: r.scale.m,
            na: r.scale.na,
            rep: r.rep,
            seed: r.seed,
            discarded: r.discarded,
            status: &r.status,
            adds: r.adds,
            drops: r.drops,
            time_s: r.time_s,
            ops: r.ops,
            err_z: r.err_z,
            err_u: r.err_u,
            full_time_s: full,
            partial_time_s: partial,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StepRow {
    nx: usize,
    ny: usize,
    m: usize,
    na: usize,
    rep: usize,
    iter: usize,
    step_kind: &'static str,
    q: usize,
    elapsed_s: f64,
}

/// Per-iteration timings of every rep, for the full versus partial plot.
pub fn write_steps_csv(reps: &[RepResult], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reps {
        for s in &r.steps {
            if matches!(s.kind, StepKind::Stop | StepKind::Infeasible) {
                continue;
            }
            w.serialize(StepRow {
                nx: r.scale.nx,
                ny: r.scale.ny,
                m: r.scale.m,
                na: r.scale.na,
                rep: r.rep,
                iter: s.iter,
                step_kind: s.kind.as_str(),
                q: s.q,
                elapsed_s: s.elapsed_s,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
