//! Python bindings. Rationals cross the boundary as `fractions.Fraction`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use maxmin_local::algorithm::{self, SolveOptions, StatsSource};
use maxmin_local::instance::{self as inst, Instance as CoreInstance};
use maxmin_local::oracle::{self, OracleError};
use maxmin_local::rational::{self, Rational};
use maxmin_local::{io, reduction, transform, walks};

fn fraction<'py>(py: Python<'py>, q: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((rational::format(q),))
}

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Instance", module = "pymaxmin")]
struct PyInstance {
    inner: CoreInstance,
}

#[pymethods]
impl PyInstance {
    /// Parses the line-based instance format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = io::parse_instance(text).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// One of `isp`, `prelim`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let inner = io::builtin_instance(name).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n_agents, n_parties, n_resources, max_vi=3, max_vk=2, max_iv=2, max_kv=2, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn random(
        n_agents: usize,
        n_parties: usize,
        n_resources: usize,
        max_vi: usize,
        max_vk: usize,
        max_iv: usize,
        max_kv: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let params = io::GeneratorParams {
            n_agents,
            n_parties,
            n_resources,
            max_vi,
            max_vk,
            max_iv,
            max_kv,
            seed,
        };
        let inner = io::random_instance(&params).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn serialize(&self) -> String {
        io::serialize_instance(&self.inner)
    }

    /// Violations as messages; empty when the instance is valid.
    fn validate(&self) -> Vec<String> {
        inst::validate(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn degree_bounds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let b = inst::degree_bounds(&self.inner).map_err(value_error)?;
        let d = PyDict::new(py);
        d.set_item("delta_iv", b.delta_iv)?;
        d.set_item("delta_kv", b.delta_kv)?;
        d.set_item("delta_vi", b.delta_vi)?;
        d.set_item("delta_vk", b.delta_vk)?;
        Ok(d)
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents().to_vec()
    }

    #[getter]
    fn parties(&self) -> Vec<(String, Vec<String>)> {
        self.inner
            .parties()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    #[getter]
    fn resources(&self) -> Vec<(String, Vec<String>)> {
        self.inner
            .resources()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// `min_k Σ_{v∈V_k} x_v` for a mapping of agent to number.
    fn utility<'py>(
        &self,
        py: Python<'py>,
        x: std::collections::HashMap<String, String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut a = inst::Assignment::new();
        for (agent, v) in x {
            let q = rational::parse(&v).ok_or_else(|| value_error(format!("bad rational `{v}`")))?;
            a.set(agent, q).map_err(value_error)?;
        }
        fraction(py, &inst::utility(&self.inner, &a).map_err(value_error)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(agents={}, parties={}, resources={})",
            self.inner.agents().len(),
            self.inner.parties().len(),
            self.inner.resources().len()
        )
    }
}

fn assignment_dict<'py>(py: Python<'py>, x: &inst::Assignment) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (a, q) in x.iter() {
        d.set_item(a, fraction(py, q)?)?;
    }
    Ok(d)
}

/// Runs the local algorithm. Returns `x`, `omega`, `guarantee`, `delta`
/// and `feasible`.
#[pyfunction]
#[pyo3(signature = (instance, radius=3, rounds=false))]
fn solve<'py>(py: Python<'py>, instance: &PyInstance, radius: u64, rounds: bool) -> PyResult<Bound<'py, PyDict>> {
    let options = SolveOptions {
        stats: if rounds {
            StatsSource::Rounds
        } else {
            StatsSource::Central
        },
        delta: None,
    };
    let trace = algorithm::solve_traced(&instance.inner, radius, &options).map_err(value_error)?;
    let r = &trace.report;
    let d = PyDict::new(py);
    d.set_item("x", assignment_dict(py, &trace.assignment)?)?;
    d.set_item("omega", fraction(py, &r.omega)?)?;
    match &r.guarantee_factor {
        Some(g) => d.set_item("guarantee", fraction(py, g)?)?,
        None => d.set_item("guarantee", py.None())?,
    }
    d.set_item("delta", r.delta)?;
    d.set_item("feasible", r.feasible)?;
    Ok(d)
}

/// Exact optimum. Returns `omega_star`, `witness` and `iterations`.
#[pyfunction]
#[pyo3(name = "oracle", signature = (instance, cap=oracle::DEFAULT_AGENT_CAP))]
fn oracle_py<'py>(py: Python<'py>, instance: &PyInstance, cap: usize) -> PyResult<Bound<'py, PyDict>> {
    let result = oracle::optimum_with_cap(&instance.inner, cap).map_err(|e| match e {
        OracleError::CapExceeded { .. } | OracleError::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_error(e),
    })?;
    let d = PyDict::new(py);
    d.set_item("omega_star", fraction(py, &result.omega_star)?)?;
    d.set_item("witness", assignment_dict(py, &result.witness)?)?;
    d.set_item("iterations", result.iterations)?;
    Ok(d)
}

/// `Δ/2 + Δ/(2(R−1))`, or `None` for `R = 1`.
#[pyfunction]
fn guarantee<'py>(py: Python<'py>, delta: usize, radius: u64) -> PyResult<Option<Bound<'py, PyAny>>> {
    if radius < 2 {
        return Ok(None);
    }
    let g = algorithm::guarantee(delta, radius).map_err(value_error)?;
    fraction(py, &g).map(Some)
}

/// Per-vertex walk statistics as `id -> dict`.
#[pyfunction]
fn walk_stats<'py>(py: Python<'py>, instance: &PyInstance, radius: u64) -> PyResult<Bound<'py, PyDict>> {
    let map = reduction::split_constraints(&instance.inner).map_err(value_error)?;
    let (_, graph) = transform::transform(&map.reduced).map_err(value_error)?;
    let stats = walks::compute_stats(&graph, radius).map_err(value_error)?;
    let d = PyDict::new(py);
    for (id, s) in &stats {
        let e = PyDict::new(py);
        e.set_item("akk_le_r", s.akk_le_r)?;
        e.set_item("aik_le_r", s.aik_le_r)?;
        e.set_item("bik", s.bik)?;
        e.set_item("bkk", s.bkk)?;
        e.set_item("bi", s.bi)?;
        e.set_item("bk", s.bk)?;
        d.set_item(id, e)?;
    }
    Ok(d)
}

#[pymodule]
fn pymaxmin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_py, m)?)?;
    m.add_function(wrap_pyfunction!(guarantee, m)?)?;
    m.add_function(wrap_pyfunction!(walk_stats, m)?)?;
    Ok(())
}
