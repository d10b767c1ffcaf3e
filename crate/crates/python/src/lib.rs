//! Python bindings for the minimax QP solver.
//!
//! Matrices are lists of rows; constraint indices are 0-based. Result
//! records come back as plain dicts and lists.

use minimax_qp::generator::{self, GenSpec, Kind};
use minimax_qp::portfolio::{self, AttackConfig, MarketData, Method};
use minimax_qp::solver::{self, SelectionRule, SolveOptions, Termination};
use minimax_qp::{verify, DenseMatrix, MinimaxQP};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix(rows: Vec<Vec<f64>>, cols: usize) -> PyResult<DenseMatrix> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(value_err(format!("row {i} has {} entries, expected {cols}", r.len())));
    }
    Ok(DenseMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// A validated minimax QP instance.
#[pyclass(name = "Problem", module = "minimax_qp", frozen)]
struct PyProblem {
    inner: MinimaxQP,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (g11, g12, g22, cx, cy, a, b, h))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        g11: Vec<Vec<f64>>,
        g12: Vec<Vec<f64>>,
        g22: Vec<Vec<f64>>,
        cx: Vec<f64>,
        cy: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        h: Vec<f64>,
    ) -> PyResult<Self> {
        let (nx, ny) = (cx.len(), cy.len());
        let inner = MinimaxQP::new(
            matrix(g11, nx)?,
            matrix(g12, ny)?,
            matrix(g22, ny)?,
            cx,
            cy,
            matrix(a, nx)?,
            matrix(b, ny)?,
            h,
        )
        .map_err(value_err)?;
        Ok(PyProblem { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MinimaxQP::from_json(text)
            .map(|inner| PyProblem { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        MinimaxQP::load(path)
            .map(|inner| PyProblem { inner })
            .map_err(value_err)
    }

    /// Built-in fixture: `example1`, `example2`, `example2-single` or `infeasible`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        minimax_qp::fixtures::by_name(name)
            .map(|inner| PyProblem { inner })
            .ok_or_else(|| value_err(format!("unknown fixture {name:?}")))
    }

    fn to_json(&self) -> String {
        self.inner.to_file().to_json()
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn g(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.g())
    }

    #[getter]
    fn d(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.d())
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c().to_vec()
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h().to_vec()
    }

    /// Indices `i` with `nᵢᵀG⁻¹nᵢ < 0`.
    #[getter]
    fn k(&self) -> Vec<usize> {
        self.inner.constraint_set().k.clone()
    }

    fn objective(&self, z: Vec<f64>) -> PyResult<f64> {
        self.check_len(&z)?;
        Ok(self.inner.evaluate(&z).f)
    }

    fn constraint_values(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(&z)?;
        Ok(self.inner.constraint_values(&z))
    }

    /// Whether `D G⁻¹ Dᵀ` is negative semidefinite.
    fn assumption2<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let r = self.inner.check_assumption2();
        let d = PyDict::new(py);
        d.set_item("holds", r.holds)?;
        d.set_item("max_eigenvalue", r.max_eigenvalue)?;
        d.set_item("tolerance", r.tolerance)?;
        d.set_item("certificate", r.certificate)?;
        Ok(d.into_any())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(nx={}, ny={}, m={})",
            self.inner.nx(),
            self.inner.ny(),
            self.inner.m()
        )
    }
}

impl PyProblem {
    fn check_len(&self, z: &[f64]) -> PyResult<()> {
        if z.len() != self.inner.n() {
            return Err(value_err(format!("z has {} entries, expected {}", z.len(), self.inner.n())));
        }
        Ok(())
    }
}

/// Runs the dual method. Returns a dict with `status` (`optimal` or
/// `infeasible`), the point, active set and multipliers or the
/// infeasibility certificate, counters, warnings and, on request, the
/// iteration trace.
#[pyfunction]
#[pyo3(signature = (problem, rule = "most-violated", force_sequence = None, max_iterations = None, trace = false))]
fn solve<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    rule: &str,
    force_sequence: Option<Vec<usize>>,
    max_iterations: Option<usize>,
    trace: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let rule = match (force_sequence, rule) {
        (Some(seq), _) => SelectionRule::Sequence(seq),
        (None, "most-violated") => SelectionRule::MostViolated,
        (None, "first-index") => SelectionRule::FirstIndex,
        (None, other) => return Err(value_err(format!("unknown rule {other:?}"))),
    };
    let opts = SolveOptions {
        rule,
        max_iterations,
        record_vectors: trace,
        ..Default::default()
    };
    let p = &problem.inner;
    let out = py
        .detach(|| solver::solve(p, &opts))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    match &out.termination {
        Termination::Optimal(sp) => {
            d.set_item("status", "optimal")?;
            d.set_item("z", sp.z.clone())?;
            d.set_item("alpha", sp.sorted_alpha())?;
            d.set_item("u", sp.u_full(p.m()))?;
            d.set_item("f", sp.f)?;
        }
        Termination::Infeasible(w) => {
            d.set_item("status", "infeasible")?;
            d.set_item("certificate", to_py(py, w)?)?;
        }
    }
    d.set_item("adds", out.adds)?;
    d.set_item("drops", out.drops)?;
    d.set_item("iterations", out.trace.len())?;
    d.set_item("ops", to_py(py, &out.ops)?)?;
    d.set_item("weighted_ops", out.ops.weighted_total())?;
    d.set_item("elapsed_s", out.elapsed_s)?;
    d.set_item("warnings", to_py(py, &out.warnings)?)?;
    if trace {
        d.set_item("trace", to_py(py, &out.trace)?)?;
    }
    Ok(d.into_any())
}

/// Random instance with a planted local minimax point. Returns
/// `(problem, z_star, u_star, active_set)`.
#[pyfunction]
#[pyo3(signature = (kind, nx, ny, m, na, seed = 0))]
fn generate(
    kind: u8,
    nx: usize,
    ny: usize,
    m: usize,
    na: usize,
    seed: u64,
) -> PyResult<(PyProblem, Vec<f64>, Vec<f64>, Vec<usize>)> {
    let kind = match kind {
        1 => Kind::Type1,
        2 => Kind::Type2,
        k => return Err(value_err(format!("kind must be 1 or 2, got {k}"))),
    };
    let spec = GenSpec {
        kind,
        nx,
        ny,
        m,
        na,
        seed,
    };
    let pi = generator::generate(&spec).map_err(value_err)?;
    Ok((
        PyProblem { inner: pi.problem },
        pi.z_star,
        pi.u_star,
        pi.active_set,
    ))
}

/// Checks the optimality conditions of `(z, alpha, u)`; `u` has one entry
/// per constraint.
#[pyfunction]
fn verify_spair<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    z: Vec<f64>,
    alpha: Vec<usize>,
    u: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = &problem.inner;
    problem.check_len(&z)?;
    if u.len() != p.m() || alpha.iter().any(|&i| i >= p.m()) {
        return Err(value_err("u must have m entries and alpha indices below m"));
    }
    let report = verify::verify_spair(p, &z, &alpha, &u);
    let d = to_py(py, &report)?;
    d.set_item("accepted", report.accepted())?;
    Ok(d)
}

/// Every S-pair of a small instance, by enumeration of active sets.
#[pyfunction]
fn enumerate_spairs<'py>(py: Python<'py>, problem: &PyProblem) -> PyResult<Bound<'py, PyAny>> {
    let all = verify::enumerate_spairs(&problem.inner).map_err(value_err)?;
    to_py(py, &all)
}

/// Market data held in memory.
#[pyclass(name = "Market", module = "minimax_qp", frozen)]
struct PyMarket {
    inner: MarketData,
}

#[pymethods]
impl PyMarket {
    #[staticmethod]
    fn from_csv(prices: &str, volumes: &str) -> PyResult<Self> {
        portfolio::ingest_market_csv(prices, volumes)
            .map(|inner| PyMarket { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, days, seed = 0))]
    fn synthetic(n: usize, days: usize, seed: u64) -> Self {
        PyMarket {
            inner: portfolio::synthetic_market(n, days, seed),
        }
    }

    #[getter]
    fn tickers(&self) -> Vec<String> {
        self.inner.tickers.clone()
    }

    #[getter]
    fn days(&self) -> usize {
        self.inner.days()
    }

    #[getter]
    fn assets(&self) -> usize {
        self.inner.assets()
    }

    /// The attacker's minimax QP at liquidity intensity `b`.
    fn attack_problem(&self, b: f64) -> PyResult<PyProblem> {
        let model = portfolio::attack_model(&self.inner, b).map_err(value_err)?;
        portfolio::attack_problem(&model)
            .map(|inner| PyProblem { inner })
            .map_err(value_err)
    }

    /// Attack results for each `b` and method, as a list of dicts.
    #[pyo3(signature = (b_grid, methods = None, trials = 200, no_long_k = 20, seed = 0))]
    fn attack<'py>(
        &self,
        py: Python<'py>,
        b_grid: Vec<f64>,
        methods: Option<Vec<String>>,
        trials: usize,
        no_long_k: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let methods = match methods {
            None => AttackConfig::default().methods,
            Some(ms) => ms
                .iter()
                .map(|m| Method::parse(m).ok_or_else(|| value_err(format!("unknown method {m:?}"))))
                .collect::<PyResult<_>>()?,
        };
        let cfg = AttackConfig {
            methods,
            trials,
            no_long_k,
            seed,
        };
        let md = &self.inner;
        let results = py
            .detach(|| portfolio::run_attacks(md, &b_grid, &cfg))
            .map_err(runtime_err)?;
        let out = to_py(py, &results)?;
        for (item, r) in out.try_iter()?.zip(&results) {
            item?.set_item("x_att", r.x_att.clone())?;
        }
        Ok(out)
    }
}

#[pymodule]
#[pyo3(name = "minimax_qp")]
fn minimax_qp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyMarket>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_spair, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_spairs, m)?)?;
    m.add("FIXTURES", minimax_qp::fixtures::NAMES.to_vec())?;
    Ok(())
}
