use std::path::PathBuf;

use nalgebra::DVector;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use esgt::bench::{self, ScenarioConfig};
use esgt::diagnostics::{Reference, RoundMetrics, REFERENCE_TOL};
use esgt::{dither, estimator, graph, problem};

fn py_err(e: esgt::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(values: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(values)
}

/// Connected communication graph with Metropolis weights.
#[pyclass(name = "Graph", module = "esgt_py", frozen)]
struct PyGraph {
    inner: graph::WeightedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n_agents: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = graph::WeightedGraph::from_edges(n_agents, &edges).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn erdos_renyi(n_agents: usize, edge_prob: f64, seed: u64) -> PyResult<Self> {
        let inner = graph::erdos_renyi_connected(n_agents, edge_prob, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = graph::WeightedGraph::from_adjacency_text(text).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_adjacency_text()
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    /// Weight matrix as a list of rows.
    fn weights(&self) -> Vec<Vec<f64>> {
        let w = self.inner.weights();
        (0..w.nrows())
            .map(|i| w.row(i).iter().copied().collect())
            .collect()
    }

    fn second_singular_value(&self) -> f64 {
        self.inner.second_singular_value()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_agents={}, edges={})",
            self.inner.n_agents(),
            self.inner.edges().len()
        )
    }
}

#[pyclass(name = "Dither", module = "esgt_py", frozen)]
struct PyDither {
    inner: dither::DitherConfig,
}

#[pymethods]
impl PyDither {
    #[new]
    #[pyo3(signature = (dim, odd_periods, delta, phi0 = 0.0))]
    fn new(dim: usize, odd_periods: Vec<u64>, delta: f64, phi0: f64) -> PyResult<Self> {
        let inner = dither::design_dither(dim, &odd_periods, phi0, delta).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Periods from the geometric recipe.
    #[staticmethod]
    #[pyo3(signature = (dim, delta, tau0 = 3, tau0i = 2, phi0 = 0.0))]
    fn from_recipe(dim: usize, delta: f64, tau0: u64, tau0i: u64, phi0: f64) -> PyResult<Self> {
        let periods = dither::recipe_periods(dim, tau0, tau0i).map_err(py_err)?;
        Self::new(dim, periods, delta, phi0)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = dither::DitherConfig::from_text(text).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn sample(&self, t: u64) -> Vec<f64> {
        self.inner.sample(t).iter().copied().collect()
    }

    #[getter]
    fn period(&self) -> u64 {
        self.inner.agent_period()
    }

    #[getter]
    fn periods(&self) -> Vec<u64> {
        self.inner.periods().to_vec()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    fn __repr__(&self) -> String {
        self.inner.to_text()
    }
}

#[pyclass(name = "Problem", module = "esgt_py", frozen)]
struct PyProblem {
    inner: problem::Problem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn personalized(n_agents: usize, dim: usize, seed: u64) -> PyResult<Self> {
        let inner = problem::personalized_instance(n_agents, dim, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n_agents, target, seed, sigma = 0.5))]
    fn source_seeking(n_agents: usize, target: Vec<f64>, seed: u64, sigma: f64) -> PyResult<Self> {
        let inner =
            problem::source_seeking_instance(n_agents, &target, sigma, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Rebuilds an instance from its `kind=... key=value` description.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let spec = problem::InstanceSpec::from_text(text).map_err(py_err)?;
        Ok(Self {
            inner: spec.build().map_err(py_err)?,
        })
    }

    fn to_text(&self) -> Option<String> {
        self.inner.spec().map(|s| s.to_text())
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn local_cost(&self, agent: usize, w: Vec<f64>) -> PyResult<f64> {
        self.check(agent, w.len())?;
        Ok(self.inner.cost(agent).eval(&vector(w)))
    }

    fn local_gradient(&self, agent: usize, w: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(agent, w.len())?;
        self.inner
            .cost(agent)
            .gradient(&vector(w))
            .map(|g| g.iter().copied().collect())
            .ok_or_else(|| py_err(esgt::Error::NoAnalyticGradient { index: agent }))
    }

    fn total_cost(&self, w: Vec<f64>) -> PyResult<f64> {
        self.check(0, w.len())?;
        Ok(self.inner.total_cost(&vector(w)))
    }

    /// Centralized minimizer and optimal value.
    #[pyo3(signature = (tol = REFERENCE_TOL))]
    fn solve(&self, tol: f64) -> PyResult<(Vec<f64>, f64)> {
        let r = Reference::solve(&self.inner, tol).map_err(py_err)?;
        Ok((r.w_star.iter().copied().collect(), r.f_star))
    }
}

impl PyProblem {
    fn check(&self, agent: usize, len: usize) -> PyResult<()> {
        if agent >= self.inner.n_agents() {
            return Err(PyValueError::new_err(format!("no agent {agent}")));
        }
        if len != self.inner.dim() {
            return Err(py_err(esgt::Error::DimensionMismatch {
                expected: self.inner.dim(),
                got: len,
            }));
        }
        Ok(())
    }
}

/// One-period extremum-seeking gradient estimate of agent `agent`'s cost.
#[pyfunction]
#[pyo3(signature = (problem, agent, x, dither, t0 = 0))]
fn es_gradient(
    problem: &PyProblem,
    agent: usize,
    x: Vec<f64>,
    dither: &PyDither,
    t0: u64,
) -> PyResult<Vec<f64>> {
    problem.check(agent, x.len())?;
    let est = estimator::es_gradient(problem.inner.cost(agent), &vector(x), &dither.inner, t0)
        .map_err(py_err)?;
    Ok(est.value.iter().copied().collect())
}

fn config_from_kwargs(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<ScenarioConfig> {
    apply_kwargs(ScenarioConfig::default(), kwargs)
}

fn apply_kwargs(
    mut cfg: ScenarioConfig,
    kwargs: Option<&Bound<'_, PyDict>>,
) -> PyResult<ScenarioConfig> {
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            let value = if let Ok(list) = v.extract::<Vec<f64>>() {
                list.iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            } else {
                v.str()?.to_string()
            };
            let value = match value.as_str() {
                "True" => "true".to_string(),
                "False" => "false".to_string(),
                "None" => "auto".to_string(),
                _ => value,
            };
            cfg.set(&key, &value).map_err(py_err)?;
        }
    }
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

fn metrics_dict<'py>(py: Python<'py>, rows: &[RoundMetrics]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("round", rows.iter().map(|m| m.round).collect::<Vec<_>>())?;
    d.set_item(
        "cost_rel_err",
        rows.iter().map(|m| m.cost_rel_err).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "var_rel_err",
        rows.iter().map(|m| m.var_rel_err).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "consensus_err",
        rows.iter().map(|m| m.consensus_err).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "zbar_norm",
        rows.iter().map(|m| m.zbar_norm).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "tracker_err",
        rows.iter().map(|m| m.tracker_err).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Runs one scenario; keyword arguments mirror the CLI flags
/// (`n_agents=10`, `target=[1.0, 2.0]`, ...). Writes the CSV and manifest
/// to `output` and returns the metric columns.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn run_scenario<'py>(
    py: Python<'py>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_from_kwargs(kwargs)?;
    let out = py.detach(|| bench::run_scenario(&cfg)).map_err(py_err)?;
    let d = metrics_dict(py, &out.record.metrics)?;
    d.set_item("manifest", out.manifest_path.display().to_string())?;
    Ok(d)
}

/// Monte Carlo campaign; returns the aggregated columns.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn run_montecarlo<'py>(
    py: Python<'py>,
    kwargs: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_from_kwargs(kwargs)?;
    let out = py.detach(|| bench::run_montecarlo(&cfg)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item(
        "round",
        out.rows.iter().map(|r| r.round).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "cost_rel_err",
        out.rows.iter().map(|r| r.cost_rel_err).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "var_rel_err",
        out.rows.iter().map(|r| r.var_rel_err).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "failed_seeds",
        out.failures.iter().map(|(s, _)| *s).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Floor table `[(gamma, delta, floor)]` plus the fitted `(C1, C2, rms)`.
#[pyfunction]
#[pyo3(signature = (gammas, deltas, **kwargs))]
#[allow(clippy::type_complexity)]
fn sweep(
    py: Python<'_>,
    gammas: Vec<f64>,
    deltas: Vec<f64>,
    kwargs: Option<&Bound<'_, PyDict>>,
) -> PyResult<(Vec<(f64, f64, f64)>, (f64, f64, f64))> {
    let cfg = config_from_kwargs(kwargs)?;
    let (rows, fit) = py
        .detach(|| {
            let rows = bench::sweep(&cfg, &gammas, &deltas)?;
            let fit = bench::fit_ultimate_bound(&rows, cfg.n_agents)?;
            Ok::<_, esgt::Error>((rows, fit))
        })
        .map_err(py_err)?;
    Ok((
        rows.iter().map(|r| (r.gamma, r.delta, r.floor)).collect(),
        (fit.c1, fit.c2, fit.rms_residual),
    ))
}

/// Resolved configuration text: defaults, then the optional key=value
/// file, then keyword arguments.
#[pyfunction]
#[pyo3(signature = (path = None, **kwargs))]
fn scenario_config(path: Option<PathBuf>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let base = match path {
        Some(p) => ScenarioConfig::from_file(&p).map_err(py_err)?,
        None => ScenarioConfig::default(),
    };
    Ok(apply_kwargs(base, kwargs)?.to_text())
}

#[pymodule]
pub fn esgt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("CSV_HEADER", esgt::CSV_HEADER)?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyDither>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(es_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_montecarlo, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_config, m)?)?;
    Ok(())
}
