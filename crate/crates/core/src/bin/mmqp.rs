//! `mmqp`: command-line front end.
//!
//! Exit codes: 0 optimal (or accepted), 1 rejected by `verify`,
//! 2 infeasible, 3 iteration/drop limit or numerical failure, 4 input error.
//! Constraint indices on the command line and in every output are 1-based.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use minimax_qp::bench::{self, BenchConfig, Scale};
use minimax_qp::fixtures;
use minimax_qp::generator::{self, GenSpec, Kind};
use minimax_qp::portfolio::{self, AttackConfig, Method};
use minimax_qp::problem::{MinimaxQP, ProblemFile};
use minimax_qp::solver::trace::{format_table, write_trace_csv, write_trace_json};
use minimax_qp::solver::{self, SelectionRule, SolveError, SolveOptions, SolveOutcome, Termination};
use minimax_qp::verify;

const EXIT_OK: u8 = 0;
const EXIT_REJECTED: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "mmqp", version, about = "Dual active-set solver for minimax quadratic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    MostViolated,
    FirstIndex,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl From<GenKind> for Kind {
    fn from(k: GenKind) -> Kind {
        match k {
            GenKind::One => Kind::Type1,
            GenKind::Two => Kind::Type2,
        }
    }
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Problem JSON file, or a built-in fixture name prefixed with `@`
    /// (`@example1`, `@example2`, `@example2-single`, `@infeasible`).
    problem: String,
    #[arg(long, value_enum, default_value = "most-violated")]
    rule: Rule,
    /// Entering order to replay, e.g. `4,5,2,3`; the rule takes over after it.
    #[arg(long, value_delimiter = ',')]
    force_sequence: Option<Vec<usize>>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Drops allowed per entering constraint beyond the active set size.
    #[arg(long)]
    extra_drops: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem and print the outcome as JSON.
    Solve {
        #[command(flatten)]
        args: SolveArgs,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the verbose iteration trace as JSON.
        #[arg(long)]
        trace_json: Option<PathBuf>,
    },
    /// Print the solution path as a table.
    Trace {
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Generate a random instance with a planted solution.
    Generate {
        #[arg(long = "type", value_enum)]
        kind: GenKind,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        na: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a candidate S-pair. The candidate is the planted solution stored
    /// in the file, or the solver's result with `--solve`.
    Verify {
        problem: String,
        #[arg(long)]
        solve: bool,
    },
    /// Print a built-in fixture as a problem file.
    Fixture {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(fixtures::NAMES))]
        name: String,
    },
    /// List every S-pair by enumerating active sets (m <= 16).
    Enumerate { problem: String },
    /// Benchmark the solver on planted instances and write CSV.
    Bench {
        #[arg(long = "type", value_enum, default_value = "2")]
        kind: GenKind,
        /// Scale `nx,ny,m,na`; repeat for several.
        #[arg(long = "scale", required = true)]
        scales: Vec<String>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (default from MMQP_JOBS, then all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Zero all timings so the output is byte-stable.
        #[arg(long)]
        deterministic: bool,
        /// Per-scale records (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Per-rep rows.
        #[arg(long)]
        reps_out: Option<PathBuf>,
        /// Per-iteration timings.
        #[arg(long)]
        steps_out: Option<PathBuf>,
    },
    /// Run the portfolio attacks over a grid of liquidity parameters.
    Attack {
        #[arg(long, requires = "volumes")]
        prices: Option<PathBuf>,
        #[arg(long, requires = "prices")]
        volumes: Option<PathBuf>,
        /// Use a synthetic market `n,days,seed` instead of CSV files.
        #[arg(long, conflicts_with = "prices")]
        synthetic: Option<String>,
        /// `start:step:end` or a comma-separated list.
        #[arg(long, default_value = "0:2:12")]
        b_grid: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        no_long_k: usize,
        #[arg(long, value_delimiter = ',', default_value = "minimax,random,no-long")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic market as price and volume CSVs.
    SynthMarket {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 60)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        volumes: PathBuf,
    },
}

/// Error tagged with the exit code it maps to.
struct Failure(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(EXIT_INPUT, e.into())
    }
}

type CmdResult = Result<u8, Failure>;

fn load_file(spec: &str) -> anyhow::Result<ProblemFile> {
    if let Some(name) = spec.strip_prefix('@') {
        let p = fixtures::by_name(name)
            .ok_or_else(|| anyhow!("unknown fixture {name:?}; known: {}", fixtures::NAMES.join(", ")))?;
        return Ok(p.to_file());
    }
    ProblemFile::read(spec).with_context(|| format!("reading {spec}"))
}

fn load(spec: &str) -> anyhow::Result<MinimaxQP> {
    Ok(MinimaxQP::from_file(&load_file(spec)?)?)
}

fn options(args: &SolveArgs, record: bool) -> anyhow::Result<SolveOptions> {
    let rule = match (&args.force_sequence, args.rule) {
        (Some(seq), _) => {
            if seq.contains(&0) {
                bail!("--force-sequence indices are 1-based");
            }
            SelectionRule::Sequence(seq.iter().map(|i| i - 1).collect())
        }
        (None, Rule::MostViolated) => SelectionRule::MostViolated,
        (None, Rule::FirstIndex) => SelectionRule::FirstIndex,
    };
    Ok(SolveOptions {
        rule,
        max_iterations: args.max_iterations,
        extra_drops: args.extra_drops,
        record_vectors: record,
    })
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

fn solve_error(e: SolveError) -> Failure {
    let code = match e {
        SolveError::InvalidSequence { .. } | SolveError::GammaEmptyNotPositiveDefinite => EXIT_INPUT,
        _ => EXIT_LIMIT,
    };
    Failure(code, e.into())
}

fn outcome_json(p: &MinimaxQP, out: &SolveOutcome) -> serde_json::Value {
    let warnings: Vec<serde_json::Value> = out
        .warnings
        .iter()
        .map(|w| match w {
            solver::SolveWarning::ViolatedOutsideK(v) => {
                json!({"kind": "violated_outside_k", "indices": one_based(v)})
            }
        })
        .collect();
    let common = json!({
        "adds": out.adds,
        "drops": out.drops,
        "iterations": out.trace.len(),
        "ops": out.ops,
        "weighted_ops": out.ops.weighted_total(),
        "elapsed_s": out.elapsed_s,
        "warnings": warnings,
    });
    let mut v = match &out.termination {
        Termination::Optimal(sp) => json!({
            "status": "optimal",
            "z": sp.z,
            "u": sp.u_full(p.m()),
            "alpha": one_based(&sp.alpha),
            "f": sp.f,
        }),
        Termination::Infeasible(w) => json!({
            "status": "infeasible",
            "certificate": {
                "alpha": one_based(&w.alpha),
                "p": w.p + 1,
                "r": w.r,
                "delta": w.delta,
                "z": w.z,
                "f": w.f,
            },
        }),
    };
    v.as_object_mut()
        .unwrap()
        .extend(common.as_object().unwrap().clone());
    v
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn exit_for(t: &Termination) -> u8 {
    match t {
        Termination::Optimal(_) => EXIT_OK,
        Termination::Infeasible(_) => EXIT_INFEASIBLE,
    }
}

fn cmd_solve(args: &SolveArgs, trace: Option<&Path>, trace_json: Option<&Path>) -> CmdResult {
    let p = load(&args.problem)?;
    let opts = options(args, trace_json.is_some())?;
    let out = solver::solve(&p, &opts).map_err(solve_error)?;
    if let Some(path) = trace {
        write_trace_csv(&out.trace, create(path)?)?;
    }
    if let Some(path) = trace_json {
        write_trace_json(&out.trace, create(path)?)?;
    }
    emit(&(serde_json::to_string_pretty(&outcome_json(&p, &out))? + "\n"))?;
    Ok(exit_for(&out.termination))
}

fn cmd_trace(args: &SolveArgs) -> CmdResult {
    let p = load(&args.problem)?;
    let out = solver::solve(&p, &options(args, true)?).map_err(solve_error)?;
    emit(&format_table(&out.trace))?;
    Ok(exit_for(&out.termination))
}

fn cmd_generate(spec: GenSpec, out: Option<&Path>) -> CmdResult {
    let inst = generator::generate(&spec)?;
    let mut w = output(out)?;
    writeln!(w, "{}", inst.to_file().to_json())?;
    w.flush()?;
    log::info!("generated after {} attempt(s)", inst.attempts);
    Ok(EXIT_OK)
}

fn cmd_verify(problem: &str, use_solver: bool) -> CmdResult {
    let pf = load_file(problem)?;
    let p = MinimaxQP::from_file(&pf)?;
    let (z, alpha, u) = if use_solver {
        let out = solver::solve(&p, &SolveOptions::default()).map_err(solve_error)?;
        match out.termination {
            Termination::Optimal(sp) => {
                let u = sp.u_full(p.m());
                (sp.z, sp.alpha, u)
            }
            Termination::Infeasible(_) => {
                eprintln!("solver found an infeasible subproblem; nothing to verify");
                return Ok(EXIT_INFEASIBLE);
            }
        }
    } else {
        let r = pf
            .reference_solution()
            .ok_or_else(|| anyhow!("{problem} has no z_star; pass --solve to verify the solver's result"))?;
        (r.z, r.alpha, r.u)
    };
    let report = verify::verify_spair(&p, &z, &alpha, &u);
    let mut v = serde_json::to_value(&report)?;
    v["alpha"] = json!(one_based(&alpha));
    emit(&(serde_json::to_string_pretty(&v)? + "\n"))?;
    Ok(if report.accepted() { EXIT_OK } else { EXIT_REJECTED })
}

fn cmd_enumerate(problem: &str) -> CmdResult {
    let p = load(problem)?;
    let spairs = verify::enumerate_spairs(&p)?;
    let rows: Vec<_> = spairs
        .iter()
        .map(|s| json!({"alpha": one_based(&s.alpha), "z": s.z, "u": s.u_full(p.m()), "f": s.f}))
        .collect();
    emit(&(serde_json::to_string_pretty(&rows)? + "\n"))?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    kind: GenKind,
    scales: &[String],
    reps: usize,
    seed: u64,
    jobs: Option<usize>,
    deterministic: bool,
    out: Option<&Path>,
    reps_out: Option<&Path>,
    steps_out: Option<&Path>,
) -> CmdResult {
    let scales = scales
        .iter()
        .map(|s| Scale::parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow!(e))?;
    let cfg = BenchConfig {
        kind: kind.into(),
        scales,
        reps,
        seed,
        jobs,
        deterministic,
    };
    let results = bench::run_bench(&cfg);
    for r in results.iter().filter(|r| !r.ok()) {
        log::warn!("rep {} at {}: {}", r.rep, r.scale, r.status);
    }
    bench::write_records_csv(&bench::aggregate(&results), output(out)?)?;
    if let Some(path) = reps_out {
        bench::write_reps_csv(&results, create(path)?)?;
    }
    if let Some(path) = steps_out {
        bench::write_steps_csv(&results, create(path)?)?;
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack(
    prices: Option<&Path>,
    volumes: Option<&Path>,
    synthetic: Option<&str>,
    b_grid: &str,
    cfg: AttackConfig,
    out: Option<&Path>,
) -> CmdResult {
    let md = match (prices, volumes, synthetic) {
        (Some(p), Some(v), _) => portfolio::ingest_market_csv(p, v)?,
        (_, _, Some(s)) => {
            let v: Vec<u64> = s
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad --synthetic {s:?}"))?;
            let [n, days, seed] = v[..] else {
                return Err(anyhow!("--synthetic expects n,days,seed").into());
            };
            portfolio::synthetic_market(n as usize, days as usize, seed)
        }
        _ => return Err(anyhow!("pass --prices and --volumes, or --synthetic n,days,seed").into()),
    };
    let grid = portfolio::parse_grid(b_grid).map_err(|e| anyhow!(e))?;
    let results = portfolio::run_attacks(&md, &grid, &cfg)?;
    portfolio::write_results_csv(&results, output(out)?)?;
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Solve {
            args,
            trace,
            trace_json,
        } => cmd_solve(&args, trace.as_deref(), trace_json.as_deref()),
        Cmd::Trace { args } => cmd_trace(&args),
        Cmd::Generate {
            kind,
            nx,
            ny,
            m,
            na,
            seed,
            out,
        } => cmd_generate(
            GenSpec {
                kind: kind.into(),
                nx,
                ny,
                m,
                na,
                seed,
            },
            out.as_deref(),
        ),
        Cmd::Verify { problem, solve } => cmd_verify(&problem, solve),
        Cmd::Enumerate { problem } => cmd_enumerate(&problem),
        Cmd::Fixture { name } => {
            let p = fixtures::by_name(&name).expect("validated by clap");
            emit(&(p.to_file().to_json() + "\n"))?;
            Ok(EXIT_OK)
        }
        Cmd::Bench {
            kind,
            scales,
            reps,
            seed,
            jobs,
            deterministic,
            out,
            reps_out,
            steps_out,
        } => cmd_bench(
            kind,
            &scales,
            reps,
            seed,
            jobs,
            deterministic,
            out.as_deref(),
            reps_out.as_deref(),
            steps_out.as_deref(),
        ),
        Cmd::Attack {
            prices,
            volumes,
            synthetic,
            b_grid,
            trials,
            no_long_k,
            methods,
            seed,
            out,
        } => {
            let methods = methods
                .iter()
                .map(|m| Method::parse(m).ok_or_else(|| anyhow!("unknown method {m:?}")))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let cfg = AttackConfig {
                methods,
                trials,
                no_long_k,
                seed,
            };
            cmd_attack(
                prices.as_deref(),
                volumes.as_deref(),
                synthetic.as_deref(),
                &b_grid,
                cfg,
                out.as_deref(),
            )
        }
        Cmd::SynthMarket {
            n,
            days,
            seed,
            prices,
            volumes,
        } => {
            let md = portfolio::synthetic_market(n, days, seed);
            portfolio::write_market_csv(&md, &prices, &volumes)?;
            Ok(EXIT_OK)
        }
    }
}

/// Error chain joined with `: `, skipping causes the outer message already
/// quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

/// Prints to stdout, treating a closed pipe as success.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(code)
        }
    }
}
