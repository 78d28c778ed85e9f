//! Python bindings: distributions, the optimisation problem, single runs and
//! batch studies.

use bailout_core::contagion::run;
use bailout_core::distribution::{build_zipf_copula, empirical_counts, DistributionSpec, JointDistribution};
use bailout_core::experiments::{compare_policies, run_study as core_run_study, PolicySpec, StudyConfig};
use bailout_core::network::NodePopulation;
use bailout_core::optimizer::{asymptotic_prediction, solve_op, OpSolution};
use bailout_core::rng::run_stream;
use bailout_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Validation(_) | Error::Domain(_) | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn policy_spec(name: &str) -> PyResult<PolicySpec> {
    Ok(match name {
        "none" => PolicySpec::None,
        "complete" => PolicySpec::Complete,
        "optimal" => PolicySpec::Optimal,
        "alternative" => PolicySpec::Alternative { lo: 8, hi: 10 },
        other => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
    })
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Joint law of (in-degree, out-degree, equity).
#[pyclass(frozen, module = "bailout")]
struct Distribution {
    inner: JointDistribution,
}

#[pymethods]
impl Distribution {
    /// Equal degrees on 1..=max_deg with Zipf marginals joined by a Gaussian copula.
    #[staticmethod]
    #[pyo3(signature = (xi=0.5, a1=0.8, a2=0.7, rho=0.9, max_deg=10))]
    fn zipf_copula(xi: f64, a1: f64, a2: f64, rho: f64, max_deg: u32) -> PyResult<Self> {
        Ok(Self { inner: build_zipf_copula(xi, a1, a2, rho, max_deg).map_err(to_py)? })
    }

    /// From `(i, j, c, mass)` tuples.
    #[staticmethod]
    fn explicit(entries: Vec<(u32, u32, u32, f64)>) -> PyResult<Self> {
        let inner = JointDistribution::from_entries(entries.into_iter().map(|(i, j, c, m)| ((i, j, c), m)))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// From the JSON accepted by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: DistributionSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: spec.build().map_err(to_py)? })
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn initial_default_mass(&self) -> f64 {
        self.inner.initial_default_mass()
    }

    fn entries(&self) -> Vec<(u32, u32, u32, f64)> {
        self.inner.entries().iter().map(|(&(i, j, c), &m)| (i, j, c, m)).collect()
    }

    /// Empirical law of the `n`-node network built from this one.
    fn empirical(&self, n: u64) -> PyResult<Self> {
        let counts = empirical_counts(&self.inner, n).map_err(to_py)?;
        Ok(Self { inner: JointDistribution::from_counts(&counts).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Distribution(classes={}, lambda={})", self.inner.entries().len(), self.inner.lambda())
    }
}

/// Optimal threshold policy for one law and cost.
#[pyclass(frozen, module = "bailout")]
struct Solution {
    inner: OpSolution,
    dist: JointDistribution,
}

#[pymethods]
impl Solution {
    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    #[getter]
    fn v(&self) -> f64 {
        self.inner.v.value
    }

    #[getter]
    fn z(&self) -> f64 {
        self.inner.z
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.cost
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn interventions(&self) -> f64 {
        self.inner.it_value
    }

    #[getter]
    fn defaults(&self) -> f64 {
        self.inner.jtilde_value
    }

    #[getter]
    fn stable(&self) -> bool {
        self.inner.stable
    }

    #[getter]
    fn residuals(&self) -> (f64, f64) {
        (self.inner.residuals[0], self.inner.residuals[1])
    }

    /// Start fraction per `(i, j, c)`; classes never helped are omitted.
    fn thresholds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sched = self.inner.schedule(&self.dist);
        let out = PyDict::new(py);
        for b in self.dist.blocks() {
            for c in 1..=b.i {
                if let Some(x) = sched.start_fraction(b.i, b.j, c) {
                    out.set_item((b.i, b.j, c), x)?;
                }
            }
        }
        Ok(out)
    }

    /// Limits of `(D/n, IT/n, T/m)`; raises if the stopping point is unstable.
    fn prediction(&self) -> PyResult<(f64, f64, f64)> {
        let p = asymptotic_prediction(&self.inner).map_err(to_py)?;
        Ok((p.defaults, p.interventions, p.time))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("solutions serialise")
    }

    fn __repr__(&self) -> String {
        format!("Solution(y={}, v={}, objective={})", self.inner.y, self.inner.v.value, self.inner.objective)
    }
}

#[pyfunction]
fn solve(dist: &Distribution, cost: f64) -> PyResult<Solution> {
    let inner = solve_op(&dist.inner, cost).map_err(to_py)?;
    Ok(Solution { inner, dist: dist.inner.clone() })
}

/// Large-network limits of `policy` as a `(D/n, IT/n, T/m)` tuple.
#[pyfunction]
#[pyo3(signature = (dist, policy, cost=0.5))]
fn limits(dist: &Distribution, policy: &str, cost: f64) -> PyResult<(f64, f64, f64)> {
    let p = policy_spec(policy)?.theory(&dist.inner, cost).map_err(to_py)?;
    Ok((p.defaults, p.interventions, p.time))
}

/// One cascade on the `n`-node network built from `dist`.
#[pyfunction]
#[pyo3(signature = (dist, n, policy="optimal", cost=0.5, seed=0))]
fn simulate<'py>(
    py: Python<'py>,
    dist: &Distribution,
    n: u64,
    policy: &str,
    cost: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let counts = empirical_counts(&dist.inner, n).map_err(to_py)?;
    let pn = JointDistribution::from_counts(&counts).map_err(to_py)?;
    let pop = NodePopulation::instantiate(&counts).map_err(to_py)?;
    let (rule, _) = policy_spec(policy)?.instantiate(&pn, cost).map_err(to_py)?;
    let out = py.detach(|| run(&pop, &rule, &mut run_stream(seed, 0, 0)));
    let d = PyDict::new(py);
    d.set_item("n", out.n)?;
    d.set_item("m", out.m)?;
    d.set_item("steps", out.steps)?;
    d.set_item("defaults", out.defaults)?;
    d.set_item("initial_defaults", out.initial_defaults)?;
    d.set_item("interventions", out.interventions)?;
    Ok(d)
}

/// Runs a study from its JSON configuration and returns the summary CSV.
#[pyfunction]
fn run_study(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: StudyConfig = serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let res = py.detach(|| core_run_study(&cfg)).map_err(to_py)?;
    Ok(res.to_csv())
}

/// Compares the configured policies; returns one dict per policy.
#[pyfunction]
#[pyo3(signature = (config, simulate=false))]
fn compare<'py>(py: Python<'py>, config: &str, simulate: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg: StudyConfig = serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = py.detach(|| compare_policies(&cfg, simulate)).map_err(to_py)?;
    json_to_py(py, &serde_json::to_string(&report.rows).expect("rows serialise"))
}

/// JSON of the reference study configuration.
#[pyfunction]
fn reference_config() -> String {
    serde_json::to_string_pretty(&StudyConfig::reference()).expect("config serialises")
}

#[pymodule]
fn bailout(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Distribution>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(limits, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(reference_config, m)?)?;
    Ok(())
}
