//! Python bindings: networks, models, calibration, batch simulation and
//! scenarios.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use epinet::analyze::{self, ReportOptions, DEFAULT_OUTBREAK_THRESHOLD};
use epinet::calibrate::{self, Basis, TargetPolicy, FINAL_SIZE_TOL};
use epinet::engine::{self, BatchResult, Horizon, InitialState, SimulationConfig, StateSampler};
use epinet::epimodel::{self, ModelSchema};
use epinet::harness::{self, RunOptions};
use epinet::netgen::{self, Network, SPECTRAL_TOL};

fn to_py(e: epinet::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for epinet::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_basis(basis: &str) -> PyResult<Basis> {
    basis.parse().py_err()
}

#[pyclass(name = "Network", module = "pyepinet", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyNetwork {
    inner: Arc<Network>,
}

impl PyNetwork {
    fn wrap(net: Network) -> Self {
        PyNetwork { inner: Arc::new(net) }
    }

    fn layer_name(&self, layer: Option<&str>) -> String {
        layer
            .map(str::to_string)
            .unwrap_or_else(|| self.inner.layers()[0].name().to_string())
    }
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self::wrap(netgen::load_network(path).py_err()?))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self::wrap(netgen::parse_edge_list(text).py_err()?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        netgen::save_network(&self.inner, path).py_err()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn layer_names(&self) -> Vec<String> {
        self.inner.layer_names().map(str::to_string).collect()
    }

    #[pyo3(signature = (layer=None))]
    fn edges(&self, layer: Option<&str>) -> PyResult<Vec<(usize, usize, f64)>> {
        let l = self.inner.layer(&self.layer_name(layer)).py_err()?;
        Ok(l.edges().iter().map(|e| (e.u, e.v, e.weight)).collect())
    }

    #[pyo3(signature = (layer=None))]
    fn n_edges(&self, layer: Option<&str>) -> PyResult<usize> {
        Ok(self.inner.layer(&self.layer_name(layer)).py_err()?.n_edges())
    }

    #[pyo3(signature = (layer=None))]
    fn degrees(&self, layer: Option<&str>) -> PyResult<Vec<usize>> {
        let l = self.inner.layer(&self.layer_name(layer)).py_err()?;
        Ok((0..self.inner.n_nodes()).map(|v| l.degree(v)).collect())
    }

    #[pyo3(signature = (layer=None))]
    fn mean_degree(&self, layer: Option<&str>) -> PyResult<f64> {
        self.inner.mean_degree(&self.layer_name(layer)).py_err()
    }

    #[pyo3(signature = (layer=None, tol=SPECTRAL_TOL))]
    fn spectral_radius(&self, layer: Option<&str>, tol: f64) -> PyResult<f64> {
        netgen::spectral_radius(&self.inner, &self.layer_name(layer), tol).py_err()
    }

    fn __repr__(&self) -> String {
        let edges: Vec<String> = self
            .inner
            .layers()
            .iter()
            .map(|l| format!("{}={}", l.name(), l.n_edges()))
            .collect();
        format!("Network(n_nodes={}, edges: {})", self.inner.n_nodes(), edges.join(", "))
    }
}

#[pyfunction]
fn generate_complete(n: usize) -> PyResult<PyNetwork> {
    Ok(PyNetwork::wrap(netgen::generate_complete(n).py_err()?))
}

#[pyfunction]
fn generate_er(n: usize, mean_degree: f64, seed: u64) -> PyResult<PyNetwork> {
    Ok(PyNetwork::wrap(netgen::generate_er(n, mean_degree, seed).py_err()?))
}

#[pyfunction]
fn generate_ba(n: usize, m: usize, seed: u64) -> PyResult<PyNetwork> {
    Ok(PyNetwork::wrap(netgen::generate_ba(n, m, seed).py_err()?))
}

#[pyfunction]
fn generate_configuration(degrees: Vec<usize>, seed: u64) -> PyResult<PyNetwork> {
    Ok(PyNetwork::wrap(netgen::generate_configuration(&degrees, seed).py_err()?))
}

#[pyfunction]
#[pyo3(signature = (n, activity_rate, edges_per_activation, horizon_steps, seed, step_length=1.0))]
fn aggregate_temporal(
    n: usize,
    activity_rate: f64,
    edges_per_activation: usize,
    horizon_steps: usize,
    seed: u64,
    step_length: f64,
) -> PyResult<PyNetwork> {
    let spec = netgen::TemporalNetworkSpec::new(n, activity_rate, edges_per_activation, step_length, horizon_steps)
        .py_err()?;
    Ok(PyNetwork::wrap(netgen::aggregate_temporal(&spec, seed).py_err()?))
}

#[pyfunction]
fn build_multiplex(name_a: &str, a: &PyNetwork, name_b: &str, b: &PyNetwork) -> PyResult<PyNetwork> {
    let n = a.inner.n_nodes();
    Ok(PyNetwork::wrap(
        netgen::build_multiplex((name_a, &a.inner), (name_b, &b.inner), n).py_err()?,
    ))
}

#[pyclass(name = "ModelSchema", module = "pyepinet", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: ModelSchema,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: ModelSchema::from_json(text).py_err()?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn compartments(&self) -> Vec<String> {
        self.inner.compartments.clone()
    }

    #[staticmethod]
    #[pyo3(signature = (beta, gamma, layer="contact"))]
    fn sir(beta: f64, gamma: f64, layer: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: epimodel::builtin_sir(beta, gamma, layer).py_err()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (beta, sigma, gamma, layer="contact"))]
    fn seir(beta: f64, sigma: f64, gamma: f64, layer: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: epimodel::builtin_seir(beta, sigma, gamma, layer).py_err()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (beta, delta, layer="contact"))]
    fn sis(beta: f64, delta: f64, layer: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: epimodel::builtin_sis(beta, delta, layer).py_err()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (beta, gamma, layer="contact"))]
    fn sirv(beta: f64, gamma: f64, layer: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: epimodel::builtin_sirv(beta, gamma, layer).py_err()?,
        })
    }

    #[staticmethod]
    fn bivirus(beta1: f64, delta1: f64, layer1: &str, beta2: f64, delta2: f64, layer2: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: epimodel::builtin_bivirus(beta1, delta1, layer1, beta2, delta2, layer2).py_err()?,
        })
    }

    fn validate(&self, net: &PyNetwork) -> PyResult<()> {
        epimodel::validate_schema(&self.inner, &net.inner).py_err()
    }

    fn __repr__(&self) -> String {
        format!("ModelSchema(compartments={:?})", self.inner.compartments)
    }
}

#[pyfunction]
#[pyo3(signature = (r0, gamma, net, layer=None, basis="mean-degree"))]
fn per_contact_rate<'py>(
    py: Python<'py>,
    r0: f64,
    gamma: f64,
    net: &PyNetwork,
    layer: Option<&str>,
    basis: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let report = calibrate::per_contact_rate(r0, gamma, &net.inner, &net.layer_name(layer), parse_basis(basis)?)
        .py_err()?;
    json_to_py(py, &serde_json::to_string(&report).expect("report serializes"))
}

#[pyfunction]
#[pyo3(signature = (r0, tol=FINAL_SIZE_TOL))]
fn final_size_fraction(r0: f64, tol: f64) -> f64 {
    calibrate::final_size_fraction(r0, tol)
}

#[pyfunction]
fn epidemic_threshold(gamma: f64, lambda_max: f64) -> PyResult<f64> {
    calibrate::epidemic_threshold(gamma, lambda_max).py_err()
}

#[pyfunction]
fn activity_driven_threshold(gamma: f64, m: usize, a_mean: f64, a2_mean: f64) -> PyResult<f64> {
    calibrate::activity_driven_threshold(gamma, m, a_mean, a2_mean).py_err()
}

#[pyfunction]
fn activation_probability(alpha: f64, dt: f64) -> f64 {
    calibrate::activation_probability(alpha, dt)
}

#[pyfunction]
fn herd_immunity_random(r0: f64) -> f64 {
    calibrate::herd_immunity_random(r0)
}

#[pyfunction]
#[pyo3(signature = (net, vaccinated, beta, gamma, layer=None))]
fn residual_reproduction(net: &PyNetwork, vaccinated: Vec<usize>, beta: f64, gamma: f64, layer: Option<&str>) -> PyResult<f64> {
    calibrate::residual_reproduction(&net.inner, &net.layer_name(layer), &vaccinated, beta, gamma).py_err()
}

fn parse_policy(policy: &str, k: Option<usize>) -> PyResult<TargetPolicy> {
    match (policy, k) {
        ("top-degree", None) => Ok(TargetPolicy::TopDegree),
        ("degree-equals", Some(k)) => Ok(TargetPolicy::DegreeEquals { k }),
        _ => Err(PyValueError::new_err(
            "policy must be 'top-degree' or 'degree-equals' with k",
        )),
    }
}

#[pyfunction]
#[pyo3(signature = (net, beta, gamma, policy="top-degree", k=None, layer=None))]
fn targeted_vaccination_count(
    net: &PyNetwork,
    beta: f64,
    gamma: f64,
    policy: &str,
    k: Option<usize>,
    layer: Option<&str>,
) -> PyResult<usize> {
    let policy = parse_policy(policy, k)?;
    calibrate::targeted_vaccination_count(&net.inner, &net.layer_name(layer), beta, gamma, policy).py_err()
}

#[pyclass(name = "BatchResult", module = "pyepinet", frozen, skip_from_py_object)]
pub struct PyBatch {
    inner: BatchResult,
}

#[pymethods]
impl PyBatch {
    #[getter]
    fn compartments(&self) -> Vec<String> {
        self.inner.compartments.clone()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid.clone()
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    #[getter]
    fn n_realizations(&self) -> usize {
        self.inner.n_realizations()
    }

    fn final_sizes(&self) -> Vec<usize> {
        self.inner.final_sizes()
    }

    /// Per-grid-time compartment counts of one realization.
    fn grid_counts(&self, realization: usize) -> PyResult<Vec<Vec<usize>>> {
        self.inner
            .trajectories
            .get(realization)
            .map(|t| t.grid_counts.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no realization {realization}")))
    }

    /// `(time, node, from, to)` tuples, or `None` when not recorded.
    fn events(&self, realization: usize) -> PyResult<Option<Vec<(f64, usize, String, String)>>> {
        let t = self
            .inner
            .trajectories
            .get(realization)
            .ok_or_else(|| PyValueError::new_err(format!("no realization {realization}")))?;
        let c = &self.inner.compartments;
        Ok(t.events
            .as_ref()
            .map(|ev| ev.iter().map(|e| (e.time, e.node, c[e.from].clone(), c[e.to].clone())).collect()))
    }

    /// Mean and population standard deviation per grid time and compartment.
    fn aggregate(&self) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let s = self.inner.aggregate().py_err()?;
        Ok((s.mean, s.std))
    }

    #[pyo3(signature = (peak_compartment="I", outbreak_threshold=DEFAULT_OUTBREAK_THRESHOLD, analytic_final_size=None, regime_epsilon=None))]
    fn metrics<'py>(
        &self,
        py: Python<'py>,
        peak_compartment: &str,
        outbreak_threshold: f64,
        analytic_final_size: Option<f64>,
        regime_epsilon: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let series = self.inner.aggregate().py_err()?;
        let opts = ReportOptions {
            peak_compartment: peak_compartment.to_string(),
            outbreak_threshold,
            analytic_final_size,
            regime_epsilon,
        };
        let report = analyze::MetricsReport::from_batch(&self.inner, &series, &opts).py_err()?;
        json_to_py(py, &report.to_json())
    }

    fn trajectories_csv(&self) -> String {
        analyze::write_trajectories_csv(&self.inner)
    }
}

/// Continuous-time batch: `seeds` nodes (random, or the top-degree hubs)
/// start in `seed_compartment`, redrawn per realization.
#[pyfunction]
#[pyo3(signature = (net, model, t_max, realizations, base_seed=0, seeds=1, seed_compartment="I", hubs=false, grid=None, record_events=false, layer=None))]
#[allow(clippy::too_many_arguments)]
fn run_batch(
    py: Python<'_>,
    net: &PyNetwork,
    model: &PyModel,
    t_max: f64,
    realizations: usize,
    base_seed: u64,
    seeds: usize,
    seed_compartment: &str,
    hubs: bool,
    grid: Option<Vec<f64>>,
    record_events: bool,
    layer: Option<&str>,
) -> PyResult<PyBatch> {
    let grid = grid.unwrap_or_else(|| (0..=100).map(|i| t_max * i as f64 / 100.0).collect());
    let n = net.inner.n_nodes();
    let m = model.inner.clone();
    let comp = seed_compartment.to_string();
    let initial = if hubs {
        let state = engine::seed_hubs(&net.inner, &net.layer_name(layer), &m, &comp, seeds).py_err()?;
        InitialState::Fixed(state)
    } else {
        let sampler: StateSampler = Arc::new(move |rng| engine::seed_random(n, &m, &comp, seeds, rng));
        InitialState::Sampled(sampler)
    };
    let cfg = SimulationConfig {
        initial,
        horizon: Horizon::Time(t_max),
        n_realizations: realizations,
        base_seed,
        sample_grid: grid,
        record_events,
    };
    let (net, model) = (Arc::clone(&net.inner), model.inner.clone());
    let batch = py.detach(move || engine::run_batch(&net, &model, &cfg)).py_err()?;
    Ok(PyBatch { inner: batch })
}

#[pyfunction]
fn bundled_scenarios() -> Vec<&'static str> {
    harness::bundled_scenarios().iter().map(|b| b.name).collect()
}

/// Runs a scenario file or bundled scenario; returns one dict per
/// sub-scenario with `name`, `parameters` and `metrics`.
#[pyfunction]
#[pyo3(signature = (scenario, out=None, seed=None, realizations=None, sub=None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    realizations: Option<usize>,
    sub: Option<String>,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let file = if std::path::Path::new(scenario).exists() {
        harness::load_scenario(scenario).py_err()?
    } else {
        harness::bundled_scenario(scenario).py_err()?
    };
    let opts = RunOptions {
        out,
        seed,
        realizations,
        only: sub,
    };
    let outcome = py.detach(|| harness::run_scenario(&file, &opts)).py_err()?;
    outcome
        .sub_scenarios
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("name", &s.name)?;
            d.set_item("parameters", json_to_py(py, &serde_json::to_string(&s.parameters).expect("serializes"))?)?;
            d.set_item("metrics", json_to_py(py, &s.report.to_json())?)?;
            Ok(d.into_any())
        })
        .collect()
}

#[pymodule]
fn pyepinet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyBatch>()?;
    m.add_function(wrap_pyfunction!(generate_complete, m)?)?;
    m.add_function(wrap_pyfunction!(generate_er, m)?)?;
    m.add_function(wrap_pyfunction!(generate_ba, m)?)?;
    m.add_function(wrap_pyfunction!(generate_configuration, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_temporal, m)?)?;
    m.add_function(wrap_pyfunction!(build_multiplex, m)?)?;
    m.add_function(wrap_pyfunction!(per_contact_rate, m)?)?;
    m.add_function(wrap_pyfunction!(final_size_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(epidemic_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(activity_driven_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(activation_probability, m)?)?;
    m.add_function(wrap_pyfunction!(herd_immunity_random, m)?)?;
    m.add_function(wrap_pyfunction!(residual_reproduction, m)?)?;
    m.add_function(wrap_pyfunction!(targeted_vaccination_count, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
