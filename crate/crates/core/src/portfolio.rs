//! Adversarial attack on a mean-covariance portfolio.
//!
//! The attacker picks `x`, the investor `y`:
//!
//! ```text
//!     min_x max_y  ½ xᵀHx + xᵀWy − ½ yᵀΣy + μᵀy   s.t.  x + y <= 12 − b
//! ```
//!
//! `μ` and `Σ` come from daily arithmetic returns, `W = diag(1/ADV)`, and
//! `H = I`; the three matrices are rescaled to 1-norms `0.1 M`, `M` and
//! `0.2 M` with `M = ‖μ‖₁`. An attack `x` is scored by the investor's best
//! response value `q(x)` relative to `q(0)`.

use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dense::{self, DenseMatrix};
use crate::problem::{MinimaxQP, ProblemError};
use crate::solver::{self, SolveError, SolveOptions, Termination};

/// `1/ADV` is capped here when an asset never trades.
pub const INV_ADV_CAP: f64 = 1e12;
/// Liquidity budget is `BUDGET − b`.
pub const BUDGET: f64 = 12.0;

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("failed to read market data: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse market data: {0}")]
    Parse(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("price of {ticker} on day {day} is not positive")]
    NonPositivePrice { ticker: String, day: usize },
    #[error("negative volume for {ticker} on day {day}")]
    NegativeVolume { ticker: String, day: usize },
    #[error("price and volume files disagree: {0}")]
    Mismatch(String),
    #[error("need at least two trading days, found {0}")]
    TooFewDays(usize),
    #[error("liquidity parameter {0} outside [0, 12]")]
    InvalidB(f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("solver reported an infeasible subproblem at b = {0}")]
    Infeasible(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketData {
    pub tickers: Vec<String>,
    /// `T × n` closing prices.
    pub prices: DenseMatrix,
    /// `T × n` traded volumes.
    pub volumes: DenseMatrix,
}

impl MarketData {
    pub fn new(
        tickers: Vec<String>,
        prices: DenseMatrix,
        volumes: DenseMatrix,
    ) -> Result<Self, PortfolioError> {
        let n = tickers.len();
        if prices.cols() != n || volumes.cols() != n {
            return Err(PortfolioError::Mismatch("asset counts differ".into()));
        }
        if prices.rows() != volumes.rows() {
            return Err(PortfolioError::Mismatch(format!(
                "{} price rows, {} volume rows",
                prices.rows(),
                volumes.rows()
            )));
        }
        if prices.rows() < 2 {
            return Err(PortfolioError::TooFewDays(prices.rows()));
        }
        for t in 0..prices.rows() {
            for i in 0..n {
                if !(prices[(t, i)] > 0.0) {
                    return Err(PortfolioError::NonPositivePrice {
                        ticker: tickers[i].clone(),
                        day: t + 1,
                    });
                }
                if !(volumes[(t, i)] >= 0.0) {
                    return Err(PortfolioError::NegativeVolume {
                        ticker: tickers[i].clone(),
                        day: t + 1,
                    });
                }
            }
        }
        Ok(MarketData {
            tickers,
            prices,
            volumes,
        })
    }

    pub fn days(&self) -> usize {
        self.prices.rows()
    }

    pub fn assets(&self) -> usize {
        self.tickers.len()
    }

    /// `(T − 1) × n` arithmetic returns.
    pub fn returns(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.days() - 1, self.assets(), |t, i| {
            let prev = self.prices[(t, i)];
            (self.prices[(t + 1, i)] - prev) / prev
        })
    }

    /// Average daily volume per asset.
    pub fn adv(&self) -> Vec<f64> {
        let t = self.days() as f64;
        (0..self.assets())
            .map(|i| (0..self.days()).map(|d| self.volumes[(d, i)]).sum::<f64>() / t)
            .collect()
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, DenseMatrix), PortfolioError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PortfolioError::Parse(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| PortfolioError::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let skip = usize::from(header.first().is_some_and(|h| h.eq_ignore_ascii_case("date")));
    let tickers = header[skip..].to_vec();
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| PortfolioError::Parse(e.to_string()))?;
        if rec.len() != header.len() {
            return Err(PortfolioError::RaggedRows {
                row: r + 2,
                expected: header.len(),
                found: rec.len(),
            });
        }
        for cell in rec.iter().skip(skip) {
            let v: f64 = cell.parse().map_err(|_| {
                PortfolioError::Parse(format!("row {}: bad number {cell:?}", r + 2))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let m = DenseMatrix::from_row_major(rows, tickers.len(), data)
        .map_err(|e| PortfolioError::Parse(e.to_string()))?;
    Ok((tickers, m))
}

/// Reads price and volume CSVs: a header of tickers (optionally preceded by
/// a `date` column) and one row per trading day.
pub fn ingest_market_csv(
    prices: impl AsRef<Path>,
    volumes: impl AsRef<Path>,
) -> Result<MarketData, PortfolioError> {
    let (tickers, p) = read_table(prices.as_ref())?;
    let (vt, v) = read_table(volumes.as_ref())?;
    if tickers != vt {
        return Err(PortfolioError::Mismatch("ticker headers differ".into()));
    }
    MarketData::new(tickers, p, v)
}

fn write_table(path: &Path, tickers: &[String], m: &DenseMatrix) -> Result<(), PortfolioError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PortfolioError::Parse(e.to_string()))?;
    w.write_record(tickers)
        .map_err(|e| PortfolioError::Parse(e.to_string()))?;
    for t in 0..m.rows() {
        w.write_record(m.row(t).iter().map(|v| format!("{v:?}")))
            .map_err(|e| PortfolioError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the two CSV files read by [`ingest_market_csv`].
pub fn write_market_csv(
    md: &MarketData,
    prices: impl AsRef<Path>,
    volumes: impl AsRef<Path>,
) -> Result<(), PortfolioError> {
    write_table(prices.as_ref(), &md.tickers, &md.prices)?;
    write_table(volumes.as_ref(), &md.tickers, &md.volumes)
}

struct Uniform(ChaCha20Rng);

impl Uniform {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Uniform(rng)
    }

    fn r(&mut self, a: f64, b: f64) -> f64 {
        let unit = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        a + (b - a) * unit
    }
}

/// Synthetic one-factor market: daily returns
/// `μᵢ + βᵢ F_t + σᵢ ε_{t,i}` with uniform unit-variance shocks, and
/// volumes scattered around a per-asset level between `1e5` and `1e7`.
pub fn synthetic_market(n: usize, days: usize, seed: u64) -> MarketData {
    let mut g = Uniform::new(seed, 0);
    let root12 = 12f64.sqrt();
    let drift: Vec<f64> = (0..n).map(|_| g.r(-0.001, 0.003)).collect();
    let beta: Vec<f64> = (0..n).map(|_| g.r(0.5, 1.5)).collect();
    let idio: Vec<f64> = (0..n).map(|_| g.r(0.01, 0.03)).collect();
    let level: Vec<f64> = (0..n).map(|_| 10f64.powf(g.r(5.0, 7.0))).collect();
    let mut prices = DenseMatrix::zeros(days, n);
    let mut volumes = DenseMatrix::zeros(days, n);
    for i in 0..n {
        prices[(0, i)] = g.r(20.0, 200.0);
    }
    for t in 0..days {
        let factor = 0.01 * (g.r(0.0, 1.0) - 0.5) * root12;
        for i in 0..n {
            if t > 0 {
                let shock = (g.r(0.0, 1.0) - 0.5) * root12;
                let ret = drift[i] + beta[i] * factor + idio[i] * shock;
                prices[(t, i)] = prices[(t - 1, i)] * (1.0 + ret);
            }
            volumes[(t, i)] = (level[i] * g.r(0.5, 1.5)).round();
        }
    }
    let tickers = (0..n).map(|i| format!("A{:02}", i + 1)).collect();
    MarketData::new(tickers, prices, volumes).expect("synthetic data is valid")
}

#[derive(Clone, Debug)]
pub struct AttackModel {
    pub b: f64,
    pub mu: Vec<f64>,
    /// Scaled and regularized covariance.
    pub sigma: DenseMatrix,
    /// Diagonal of the scaled `W`.
    pub w: Vec<f64>,
    /// `H = h_scale I` after scaling.
    pub h_scale: f64,
    /// `‖μ‖₁`.
    pub m_mu: f64,
    /// Shift added to the unscaled covariance diagonal.
    pub regularization: f64,
    /// Assets whose `1/ADV` was capped.
    pub clamped_assets: Vec<usize>,
}

impl AttackModel {
    /// `BUDGET − b`.
    pub fn budget(&self) -> f64 {
        BUDGET - self.b
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// 1-norms of `H`, `W`, `Σ` after scaling.
    pub fn norms(&self) -> (f64, f64, f64) {
        (self.h_scale, dense::norm_inf(&self.w), self.sigma.norm_1())
    }

    /// `f(x, y)`.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let sy = self.sigma.matvec(y);
        let mut f = 0.5 * self.h_scale * dense::dot(x, x) - 0.5 * dense::dot(y, &sy)
            + dense::dot(&self.mu, y);
        for i in 0..self.n() {
            f += x[i] * self.w[i] * y[i];
        }
        f
    }
}

/// Scaled model for liquidity parameter `b` without the solver instance.
pub fn attack_model(md: &MarketData, b: f64) -> Result<AttackModel, PortfolioError> {
    if !(0.0..=BUDGET).contains(&b) {
        return Err(PortfolioError::InvalidB(b));
    }
    let n = md.assets();
    let ret = md.returns();
    let periods = ret.rows() as f64;
    let mu: Vec<f64> = (0..n)
        .map(|i| (0..ret.rows()).map(|t| ret[(t, i)]).sum::<f64>() / periods)
        .collect();
    let mut sigma = DenseMatrix::from_fn(n, n, |i, j| {
        (0..ret.rows())
            .map(|t| (ret[(t, i)] - mu[i]) * (ret[(t, j)] - mu[j]))
            .sum::<f64>()
            / periods
    });
    sigma.symmetrize();

    let m_mu: f64 = mu.iter().map(|v| v.abs()).sum();
    let mut clamped = Vec::new();
    let inv_adv: Vec<f64> = md
        .adv()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a > 0.0 && 1.0 / a <= INV_ADV_CAP {
                1.0 / a
            } else {
                log::warn!("asset {} has no traded volume; 1/ADV capped at {INV_ADV_CAP:e}", md.tickers[i]);
                clamped.push(i);
                INV_ADV_CAP
            }
        })
        .collect();

    // A shift makes the smallest eigenvalue at least 2e-10 of the norm, so
    // −Σ passes the negative definiteness test after rescaling.
    let norm = sigma.norm_1().max(f64::MIN_POSITIVE);
    let (vals, _) = dense::symmetric_eigen(&sigma);
    let floor = 2e-10 * norm;
    let regularization = (floor - vals.first().copied().unwrap_or(0.0)).max(0.0);
    for i in 0..n {
        sigma[(i, i)] += regularization;
    }

    let sigma = sigma.scale(0.2 * m_mu / sigma.norm_1());
    let w_norm = inv_adv.iter().copied().fold(0.0, f64::max);
    let w: Vec<f64> = inv_adv.iter().map(|v| v * m_mu / w_norm).collect();
    Ok(AttackModel {
        b,
        mu,
        sigma,
        w,
        h_scale: 0.1 * m_mu,
        m_mu,
        regularization,
        clamped_assets: clamped,
    })
}

/// The minimax instance of `model`: `G11 = H`, `G12 = W`, `G22 = −Σ`,
/// `c = (0, μ)`, `A = B = I`, `h = −(12 − b)`.
pub fn attack_problem(model: &AttackModel) -> Result<MinimaxQP, PortfolioError> {
    let n = model.n();
    Ok(MinimaxQP::new(
        DenseMatrix::identity(n).scale(model.h_scale),
        DenseMatrix::from_diagonal(&model.w),
        model.sigma.scale(-1.0),
        vec![0.0; n],
        model.mu.clone(),
        DenseMatrix::identity(n),
        DenseMatrix::identity(n),
        vec![-model.budget(); n],
    )?)
}

pub fn build_attack_problem(
    md: &MarketData,
    b: f64,
) -> Result<(AttackModel, MinimaxQP), PortfolioError> {
    let model = attack_model(md, b)?;
    let p = attack_problem(&model)?;
    Ok((model, p))
}

/// Investor's best response to `x`.
#[derive(Clone, Debug)]
pub struct BestResponse {
    pub q: f64,
    pub y: Vec<f64>,
    pub active_count: usize,
}

/// `q(x) = max_y f(x, y)` subject to `y <= (12 − b) − x`, solved as a
/// maximization-only instance.
pub fn best_response(model: &AttackModel, x: &[f64]) -> Result<BestResponse, PortfolioError> {
    let n = model.n();
    let c: Vec<f64> = (0..n).map(|i| model.mu[i] + model.w[i] * x[i]).collect();
    let h: Vec<f64> = x.iter().map(|xi| xi - model.budget()).collect();
    let p = MinimaxQP::new(
        DenseMatrix::zeros(0, 0),
        DenseMatrix::zeros(0, n),
        model.sigma.scale(-1.0),
        Vec::new(),
        c,
        DenseMatrix::zeros(n, 0),
        DenseMatrix::identity(n),
        h,
    )?;
    let out = solver::solve(&p, &SolveOptions::default())?;
    match out.termination {
        Termination::Optimal(sp) => Ok(BestResponse {
            q: model.objective(x, &sp.z),
            active_count: sp.alpha.len(),
            y: sp.z,
        }),
        Termination::Infeasible(_) => Err(PortfolioError::Infeasible(model.b)),
    }
}

/// `max(0, (q_before − q_after) / |q_before|)`.
pub fn relative_reduction(q_before: f64, q_after: f64) -> f64 {
    if q_before == 0.0 {
        return 0.0;
    }
    ((q_before - q_after) / q_before.abs()).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Minimax,
    Random,
    NoLong,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Minimax => "minimax",
            Method::Random => "random",
            Method::NoLong => "no-long",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim() {
            "minimax" => Some(Method::Minimax),
            "random" => Some(Method::Random),
            "no-long" | "nolong" | "no_long" => Some(Method::NoLong),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Number of top-return assets blocked by the no-long attack.
    pub no_long_k: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            methods: vec![Method::Minimax, Method::Random, Method::NoLong],
            trials: 2000,
            no_long_k: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackResult {
    pub b: f64,
    pub method: Method,
    pub q_before: f64,
    pub q_after: f64,
    pub rho: f64,
    /// Active constraints at the minimax solution, or in the investor's
    /// response for the baselines.
    pub active_count: usize,
    #[serde(skip)]
    pub x_att: Vec<f64>,
}

/// Minimax attack: the `x` part of the solver's S-pair.
pub fn minimax_attack(model: &AttackModel) -> Result<(Vec<f64>, usize), PortfolioError> {
    let p = attack_problem(model)?;
    let out = solver::solve(&p, &SolveOptions::default())?;
    match out.termination {
        Termination::Optimal(sp) => Ok((sp.z[..model.n()].to_vec(), sp.alpha.len())),
        Termination::Infeasible(_) => Err(PortfolioError::Infeasible(model.b)),
    }
}

/// `x_i = 12 − b` on the `k` assets with the largest mean return (lowest
/// index on ties), zero elsewhere.
pub fn no_long_attack(model: &AttackModel, k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..model.n()).collect();
    order.sort_by(|&a, &b| model.mu[b].total_cmp(&model.mu[a]).then(a.cmp(&b)));
    let mut x = vec![0.0; model.n()];
    for &i in order.iter().take(k) {
        x[i] = model.budget();
    }
    x
}

/// Uniform draw on `[b − 12, 12 − b]ⁿ` for trial `trial`.
pub fn random_attack(model: &AttackModel, seed: u64, trial: u64) -> Vec<f64> {
    let mut g = Uniform::new(seed, trial + 1);
    let s = model.budget();
    (0..model.n()).map(|_| g.r(-s, s)).collect()
}

fn run_one(model: &AttackModel, method: Method, cfg: &AttackConfig, q_before: f64) -> Result<AttackResult, PortfolioError> {
    let (x_att, q_after, active_count) = match method {
        Method::Minimax => match minimax_attack(model) {
            Ok((x, count)) => {
                let br = best_response(model, &x)?;
                (x, br.q, count)
            }
            Err(PortfolioError::Infeasible(b)) => {
                log::warn!("minimax attack at b = {b} hit an infeasible subproblem; reporting the zero attack");
                (vec![0.0; model.n()], q_before, 0)
            }
            Err(e) => return Err(e),
        },
        Method::NoLong => {
            let x = no_long_attack(model, cfg.no_long_k);
            let br = best_response(model, &x)?;
            (x, br.q, br.active_count)
        }
        Method::Random => {
            let seed = cfg.seed ^ model.b.to_bits();
            let results: Result<Vec<_>, PortfolioError> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|t| {
                    let x = random_attack(model, seed, t);
                    best_response(model, &x).map(|br| (t, x, br))
                })
                .collect();
            let best = results?
                .into_iter()
                .min_by(|a, b| a.2.q.total_cmp(&b.2.q).then(a.0.cmp(&b.0)));
            match best {
                Some((_, x, br)) => (x, br.q, br.active_count),
                None => (vec![0.0; model.n()], q_before, 0),
            }
        }
    };
    Ok(AttackResult {
        b: model.b,
        method,
        q_before,
        q_after,
        rho: relative_reduction(q_before, q_after),
        active_count,
        x_att,
    })
}

/// Every method at every `b`, in grid order then method order.
pub fn run_attacks(
    md: &MarketData,
    b_grid: &[f64],
    cfg: &AttackConfig,
) -> Result<Vec<AttackResult>, PortfolioError> {
    let per_b: Result<Vec<Vec<AttackResult>>, PortfolioError> = b_grid
        .par_iter()
        .map(|&b| {
            let model = attack_model(md, b)?;
            let q_before = best_response(&model, &vec![0.0; model.n()])?.q;
            cfg.methods
                .iter()
                .map(|&m| run_one(&model, m, cfg, q_before))
                .collect()
        })
        .collect();
    Ok(per_b?.into_iter().flatten().collect())
}

pub fn write_results_csv(results: &[AttackResult], out: impl std::io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["b", "method", "q_before", "q_after", "rho", "active_count"])?;
    for r in results {
        w.write_record([
            format!("{:?}", r.b),
            r.method.as_str().to_string(),
            format!("{:?}", r.q_before),
            format!("{:?}", r.q_after),
            format!("{:?}", r.rho),
            r.active_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `start:step:end` (inclusive end) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let nums: Result<Vec<f64>, _> = parts.iter().map(|s| s.trim().parse::<f64>()).collect();
        let nums = nums.map_err(|e| format!("bad grid {spec:?}: {e}"))?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || end < start {
            return Err(format!("bad grid {spec:?}: need step > 0 and end >= start"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad grid value {s:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(prices: &[f64]) -> MarketData {
        let t = prices.len();
        MarketData::new(
            vec!["X".into()],
            DenseMatrix::from_row_major(t, 1, prices.to_vec()).unwrap(),
            DenseMatrix::from_row_major(t, 1, vec![1000.0; t]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn two_day_return() {
        let md = toy(&[100.0, 110.0]);
        assert!((md.returns()[(0, 0)] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]);
        let v = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]);
        assert!(matches!(
            MarketData::new(vec!["X".into()], p, v.clone()),
            Err(PortfolioError::NonPositivePrice { day: 2, .. })
        ));
        let p = DenseMatrix::from_rows(&[vec![1.0]]);
        assert!(matches!(
            MarketData::new(vec!["X".into()], p, DenseMatrix::from_rows(&[vec![1.0]])),
            Err(PortfolioError::TooFewDays(1))
        ));
    }

    #[test]
    fn scaled_norms_hit_targets() {
        let md = synthetic_market(8, 30, 3);
        let model = attack_model(&md, 4.0).unwrap();
        let (h, w, s) = model.norms();
        let m = model.m_mu;
        assert!((h - 0.1 * m).abs() <= 1e-12 * m);
        assert!((w - m).abs() <= 1e-12 * m);
        assert!((s - 0.2 * m).abs() <= 1e-12 * m);
    }

    #[test]
    fn attack_problem_is_valid_for_short_history() {
        // Fewer days than assets leaves the covariance singular.
        let md = synthetic_market(10, 5, 1);
        let (model, p) = build_attack_problem(&md, 6.0).unwrap();
        assert!(model.regularization > 0.0);
        assert!(dense::is_negative_definite(p.g22()));
    }

    #[test]
    fn interior_best_response_matches_closed_form() {
        let md = synthetic_market(5, 40, 9);
        let model = attack_model(&md, 0.0).unwrap();
        let br = best_response(&model, &[0.0; 5]).unwrap();
        assert_eq!(br.active_count, 0);
        // y = Σ⁻¹ μ and q = ½ μᵀ Σ⁻¹ μ.
        let lu = dense::LuFactor::new(&model.sigma).unwrap();
        let y = lu.solve(&model.mu);
        for (a, b) in br.y.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        assert!((br.q - 0.5 * dense::dot(&model.mu, &y)).abs() <= 1e-9 * br.q.abs());
    }

    #[test]
    fn huge_attack_forces_every_constraint() {
        let md = synthetic_market(4, 30, 2);
        let model = attack_model(&md, 2.0).unwrap();
        let x = vec![1e6; 4];
        let br = best_response(&model, &x).unwrap();
        assert_eq!(br.active_count, 4);
        for (yi, xi) in br.y.iter().zip(&x) {
            assert!((yi - (model.budget() - xi)).abs() < 1e-6);
        }
    }

    #[test]
    fn single_asset_binding_response_matches_hand_solution() {
        // max_y −½σy² + (μ + w x)y  s.t.  y <= β − x.
        let md = toy(&[100.0, 101.0, 100.5, 102.0, 101.0]);
        let model = attack_model(&md, 11.999).unwrap();
        let (s, w, mu) = (model.sigma[(0, 0)], model.w[0], model.mu[0]);
        let x = 0.5;
        let beta = model.budget() - x;
        let y_free = (mu + w * x) / s;
        let y = y_free.min(beta);
        let br = best_response(&model, &[x]).unwrap();
        assert!((br.y[0] - y).abs() < 1e-9 * (1.0 + y.abs()));
        assert_eq!(br.active_count, usize::from(y_free > beta));
    }

    #[test]
    fn zero_volume_is_clamped() {
        let mut md = synthetic_market(3, 10, 4);
        for t in 0..10 {
            md.volumes[(t, 1)] = 0.0;
        }
        let model = attack_model(&md, 0.0).unwrap();
        assert_eq!(model.clamped_assets, vec![1]);
        assert!((model.w[1] - model.m_mu).abs() <= 1e-12 * model.m_mu);
    }

    #[test]
    fn rho_is_clamped_at_zero() {
        assert_eq!(relative_reduction(1.0, 2.0), 0.0);
        assert!((relative_reduction(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(relative_reduction(0.0, -1.0), 0.0);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:2:12").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(parse_grid("1, 3.5").unwrap(), vec![1.0, 3.5]);
        assert!(parse_grid("0:-1:3").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let md = synthetic_market(3, 12, 5);
        let dir = tempfile::tempdir().unwrap();
        let (pp, vp) = (dir.path().join("p.csv"), dir.path().join("v.csv"));
        write_market_csv(&md, &pp, &vp).unwrap();
        let back = ingest_market_csv(&pp, &vp).unwrap();
        assert_eq!(back, md);
    }

    #[test]
    fn ragged_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (pp, vp) = (dir.path().join("p.csv"), dir.path().join("v.csv"));
        std::fs::write(&pp, "A,B\n1,2\n3\n").unwrap();
        std::fs::write(&vp, "A,B\n1,2\n3,4\n").unwrap();
        assert!(matches!(
            ingest_market_csv(&pp, &vp),
            Err(PortfolioError::RaggedRows { row: 3, .. })
        ));
    }
}
