//! Python bindings. Solutions come back as plain dicts and lists, in the same
//! shape as the CLI's JSON output.

use mia_core::broadcast::{solve_min_delay_broadcast_with, BroadcastOptions, DEFAULT_BROADCAST_CAP};
use mia_core::energy::{solve_min_energy_with, LinearNetwork};
use mia_core::experiment::{run_cdf as core_run_cdf, CdfConfig, MAX_BATCH_RELAYS};
use mia_core::heuristics;
use mia_core::line::{self, CapacityLaw, LineConfig};
use mia_core::lp::{exhaustive_broadcast as core_exhaustive_broadcast, exhaustive_unicast as core_exhaustive_unicast};
use mia_core::network::{gen_random_topology, TopologyGenConfig};
use mia_core::replay;
use mia_core::unicast::{self, SearchOptions, DEFAULT_SUBSET_CAP};
use mia_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

create_exception!(
    miaroute,
    InfeasibleError,
    PyRuntimeError,
    "No schedule can deliver the packet."
);
create_exception!(
    miaroute,
    BudgetError,
    PyRuntimeError,
    "Instance exceeds the search budget cap."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(m) => PyValueError::new_err(m),
        Error::Infeasible(m) => InfeasibleError::new_err(m),
        e @ Error::NotDecoded(_) => InfeasibleError::new_err(e.to_string()),
        e @ Error::BudgetExceeded { .. } => BudgetError::new_err(e.to_string()),
        e @ Error::Io(_) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// Capacity matrix plus packet size. Node 0 is the source and the last node
/// the destination.
#[pyclass(name = "Topology", frozen)]
struct PyTopology {
    inner: mia_core::Topology,
}

#[pymethods]
impl PyTopology {
    #[new]
    #[pyo3(signature = (capacity, i_max = 1.0))]
    fn new(capacity: Vec<Vec<f64>>, i_max: f64) -> PyResult<Self> {
        mia_core::Topology::new(capacity, i_max)
            .map(|inner| PyTopology { inner })
            .map_err(to_py)
    }

    /// Seeded random placement in the 10 x 10 area with Rayleigh fading.
    #[staticmethod]
    #[pyo3(signature = (n_relays, seed, alpha = 3.0, i_max = 1.0))]
    fn random(n_relays: usize, seed: u64, alpha: f64, i_max: f64) -> PyResult<Self> {
        gen_random_topology(&TopologyGenConfig {
            n_relays,
            seed,
            alpha,
            i_max,
            ..Default::default()
        })
        .map(|inner| PyTopology { inner })
        .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        mia_core::Topology::from_json(text)
            .map(|inner| PyTopology { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn n_relays(&self) -> usize {
        self.inner.n_relays()
    }

    #[getter]
    fn i_max(&self) -> f64 {
        self.inner.i_max()
    }

    fn capacity(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.node_count();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("node index out of range for {n} nodes")));
        }
        Ok(self.inner.capacity(i, j))
    }

    fn capacity_matrix(&self) -> Vec<Vec<f64>> {
        self.inner.capacity_matrix().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Topology(n_relays={}, i_max={})",
            self.inner.n_relays(),
            self.inner.i_max()
        )
    }
}

fn search(prune: bool, parallel: bool, budget_cap: usize) -> SearchOptions {
    SearchOptions {
        prune,
        parallel,
        budget_cap,
    }
}

#[pyfunction]
#[pyo3(signature = (topo, prune = true, parallel = true, budget_cap = DEFAULT_SUBSET_CAP))]
fn solve_min_delay<'py>(
    py: Python<'py>,
    topo: &PyTopology,
    prune: bool,
    parallel: bool,
    budget_cap: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (sol, _) = py
        .detach(|| unicast::solve_min_delay_with(&topo.inner, &search(prune, parallel, budget_cap)))
        .map_err(to_py)?;
    json_to_py(py, &sol.to_json_value(Some("optimal")))
}

#[pyfunction]
fn greedy_schedule<'py>(py: Python<'py>, topo: &PyTopology, relay_set: Vec<usize>) -> PyResult<Bound<'py, PyAny>> {
    let sol = unicast::greedy_solution(&topo.inner, &relay_set).map_err(to_py)?;
    json_to_py(py, &sol.to_json_value(Some("greedy")))
}

#[pyfunction]
fn heuristic1<'py>(py: Python<'py>, topo: &PyTopology) -> PyResult<Bound<'py, PyAny>> {
    let sol = heuristics::heuristic1(&topo.inner).map_err(to_py)?;
    json_to_py(py, &sol.to_json_value(Some("h1")))
}

#[pyfunction]
fn heuristic2<'py>(py: Python<'py>, topo: &PyTopology) -> PyResult<Bound<'py, PyAny>> {
    let sol = heuristics::heuristic2(&topo.inner).map_err(to_py)?;
    json_to_py(py, &sol.to_json_value(Some("h2")))
}

#[pyfunction]
fn shortest_path<'py>(py: Python<'py>, topo: &PyTopology) -> PyResult<Bound<'py, PyAny>> {
    let sp = unicast::traditional_shortest_path(&topo.inner).map_err(to_py)?;
    json_to_py(py, &sp.to_json_value(&topo.inner))
}

/// Minimum energy under `delay <= d_max`, reading the capacity matrix as
/// link gains with `C = gamma * gain * P`.
#[pyfunction]
#[pyo3(signature = (topo, d_max, gamma = 1.0, budget_cap = DEFAULT_SUBSET_CAP))]
fn solve_min_energy<'py>(
    py: Python<'py>,
    topo: &PyTopology,
    d_max: f64,
    gamma: f64,
    budget_cap: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let net = LinearNetwork::from_topology(&topo.inner, gamma).map_err(to_py)?;
    let (sol, _) = py
        .detach(|| solve_min_energy_with(&net, d_max, &search(true, true, budget_cap)))
        .map_err(to_py)?;
    json_to_py(py, &sol.to_json_value())
}

#[pyfunction]
#[pyo3(signature = (topo, prune = true, budget_cap = DEFAULT_BROADCAST_CAP))]
fn solve_min_delay_broadcast<'py>(
    py: Python<'py>,
    topo: &PyTopology,
    prune: bool,
    budget_cap: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = BroadcastOptions { prune, budget_cap };
    let (sol, stats) = py
        .detach(|| solve_min_delay_broadcast_with(&topo.inner, &opts))
        .map_err(to_py)?;
    let mut v = sol.to_json_value();
    v["leaves"] = stats.leaves.into();
    json_to_py(py, &v)
}

/// `(delay, ordering, lp_runs)` from the per-ordering LP enumeration.
#[pyfunction]
#[pyo3(signature = (topo, budget_cap = 6))]
fn exhaustive_unicast(py: Python<'_>, topo: &PyTopology, budget_cap: usize) -> PyResult<(f64, Vec<usize>, u64)> {
    let r = py
        .detach(|| core_exhaustive_unicast(&topo.inner, budget_cap))
        .map_err(to_py)?;
    Ok((r.delay, r.ordering, r.lp_runs))
}

#[pyfunction]
#[pyo3(signature = (topo, budget_cap = 6))]
fn exhaustive_broadcast(py: Python<'_>, topo: &PyTopology, budget_cap: usize) -> PyResult<(f64, Vec<usize>, u64)> {
    let r = py
        .detach(|| core_exhaustive_broadcast(&topo.inner, budget_cap))
        .map_err(to_py)?;
    Ok((r.delay, r.ordering, r.lp_runs))
}

/// Replays `stages` (a list of dicts with `tx`, `dur`, `decoder`) and returns
/// the largest decode-time error; raises `ValueError` if the schedule is invalid.
#[pyfunction]
#[pyo3(signature = (topo, stages, broadcast = false))]
fn replay_schedule(topo: &PyTopology, stages: &Bound<'_, PyList>, broadcast: bool) -> PyResult<f64> {
    let mut parsed = Vec::with_capacity(stages.len());
    for item in stages.iter() {
        let get = |k: &str| -> PyResult<Bound<'_, PyAny>> {
            item.get_item(k)
                .map_err(|_| PyValueError::new_err(format!("stage is missing `{k}`")))
        };
        parsed.push(unicast::Stage {
            transmitter: get("tx")?.extract()?,
            duration: get("dur")?.extract()?,
            decoder: get("decoder")?.extract()?,
        });
    }
    let report = if broadcast {
        replay::replay_broadcast(&topo.inner, &parsed)
    } else {
        replay::replay_unicast(&topo.inner, &mia_core::Schedule::from_stages(parsed))
    };
    report.map(|r| r.max_error).map_err(to_py)
}

/// Equally spaced line with `C(d) = theta / d^alpha`.
#[pyfunction]
#[pyo3(signature = (n, theta = 1.0, alpha = 2.0, i_max = 1.0, truncation_radius = None))]
fn solve_line<'py>(
    py: Python<'py>,
    n: usize,
    theta: f64,
    alpha: f64,
    i_max: f64,
    truncation_radius: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = LineConfig::equally_spaced(n, CapacityLaw::PowerLaw { theta, alpha }, i_max);
    cfg.truncation_radius = truncation_radius;
    let sol = line::solve_line(&cfg).map_err(to_py)?;
    json_to_py(py, &sol.to_json_value(Some("line")))
}

#[pyfunction]
#[pyo3(signature = (n, theta = 1.0, i_max = 1.0, truncation = None))]
fn line_delay_recursion(n: usize, theta: f64, i_max: f64, truncation: Option<usize>) -> PyResult<Vec<f64>> {
    line::line_delay_recursion(n, theta, i_max, truncation).map_err(to_py)
}

/// `(mia_delay, traditional_delay, ratio, bound)` for `n` relays.
#[pyfunction]
#[pyo3(signature = (n, theta = 1.0, i_max = 1.0, truncation = Some(3)))]
fn delay_ratio(n: usize, theta: f64, i_max: f64, truncation: Option<usize>) -> PyResult<(f64, f64, f64, f64)> {
    let r = line::delay_ratio_with(n, theta, i_max, truncation).map_err(to_py)?;
    Ok((r.mia_delay, r.traditional_delay, r.ratio, r.bound))
}

/// Random-topology batch; one dict per seed with the CSV's columns.
#[pyfunction]
#[pyo3(signature = (n = 20, instances = 100, seed0 = 0, alpha = 3.0, i_max = 1.0, parallel = true))]
fn run_cdf<'py>(
    py: Python<'py>,
    n: usize,
    instances: usize,
    seed0: u64,
    alpha: f64,
    i_max: f64,
    parallel: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = CdfConfig {
        n_relays: n,
        instances,
        seed0,
        alpha,
        i_max,
        parallel,
        budget_cap: MAX_BATCH_RELAYS,
    };
    let rows = py.detach(|| core_run_cdf(&cfg)).map_err(to_py)?;
    let v = serde_json::to_value(rows).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

#[pymodule]
fn miaroute(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_function(wrap_pyfunction!(solve_min_delay, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic1, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic2, m)?)?;
    m.add_function(wrap_pyfunction!(shortest_path, m)?)?;
    m.add_function(wrap_pyfunction!(solve_min_energy, m)?)?;
    m.add_function(wrap_pyfunction!(solve_min_delay_broadcast, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_unicast, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_broadcast, m)?)?;
    m.add_function(wrap_pyfunction!(replay_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(solve_line, m)?)?;
    m.add_function(wrap_pyfunction!(line_delay_recursion, m)?)?;
    m.add_function(wrap_pyfunction!(delay_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(run_cdf, m)?)?;
    Ok(())
}
