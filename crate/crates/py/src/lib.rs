//! Python bindings for `divrate`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use divrate::compare;
use divrate::estim::{run_estimator, EstimatorKind, EstimatorSettings};
use divrate::io;
use divrate::model::{ModelSpec, RateFunction, SampleSet, Scheme, Trigger};
use divrate::sim::{simulate_tree, RngStream, RootSpec, DEFAULT_CELL_CAP};
use divrate::solver;

create_exception!(divrate_py, DivrateError, PyException);

fn err(e: divrate::Error) -> PyErr {
    DivrateError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = divrate::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Division rate as a function of its trigger variable.
#[pyclass(name = "Rate", module = "divrate_py", skip_from_py_object)]
#[derive(Clone)]
struct PyRate(RateFunction);

#[pymethods]
impl PyRate {
    #[staticmethod]
    fn constant(value: f64) -> PyResult<Self> {
        RateFunction::constant(value).map(PyRate).map_err(err)
    }

    /// `coeff * x ** exponent`
    #[staticmethod]
    fn power(coeff: f64, exponent: f64) -> PyResult<Self> {
        RateFunction::power(coeff, exponent).map(PyRate).map_err(err)
    }

    /// Piecewise linear, constant beyond both ends.
    #[staticmethod]
    fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        RateFunction::tabulated(grid, values, divrate::model::Tail::ConstantLast)
            .map(PyRate)
            .map_err(err)
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn eval(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.iter().map(|&x| self.0.eval(x)).collect()
    }
}

/// Cells observed under one scheme.
#[pyclass(name = "Sample", module = "divrate_py", skip_from_py_object)]
#[derive(Clone)]
struct PySample(SampleSet);

#[pymethods]
impl PySample {
    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        io::ingest_lineage_csv(&path).map(PySample).map_err(err)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        io::write_lineage_csv(&self.0, &path).map_err(err)
    }

    #[getter]
    fn scheme(&self) -> String {
        self.0.scheme.tag()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn lifetimes(&self) -> Vec<f64> {
        self.0.lifetimes()
    }

    fn birth_sizes(&self) -> Vec<f64> {
        self.0.birth_sizes()
    }

    fn division_sizes(&self) -> Vec<f64> {
        self.0.division_sizes()
    }

    fn increments(&self) -> Vec<f64> {
        self.0.increments()
    }

    fn snapshot_ages(&self) -> Vec<f64> {
        self.0.ages_at_snapshot()
    }

    fn snapshot_sizes(&self) -> Vec<f64> {
        self.0.sizes_at_snapshot()
    }

    /// Pearson coefficients for AD/SB, AD/SD, AD/ID, SB/SD, SB/ID, SD/ID.
    fn correlations(&self) -> PyResult<Vec<Option<f64>>> {
        compare::correlation_table(&self.0).map(|r| r.0.to_vec()).map_err(err)
    }
}

/// Simulate one tree of a timer (`age`), sizer (`size`) or adder (`increment`) model with
/// exponential growth and equal mitosis, observed under a scheme such as `U1(100)`.
#[pyfunction]
#[pyo3(signature = (trigger, rate, growth_rate, scheme, seed, root_size = 1.0, warm_start = 20))]
fn simulate(
    trigger: &str,
    rate: &PyRate,
    growth_rate: f64,
    scheme: &str,
    seed: u64,
    root_size: f64,
    warm_start: usize,
) -> PyResult<PySample> {
    let trigger: Trigger = parse(trigger)?;
    let spec = ModelSpec::new(
        trigger,
        rate.0.clone(),
        divrate::model::GrowthLaw::exponential(growth_rate).map_err(err)?,
        divrate::model::FragmentationKernel::EqualMitosis,
    )
    .map_err(err)?;
    let scheme = Scheme::parse_tag(scheme).map_err(err)?;
    let mut rng = RngStream::new(seed, 0);
    simulate_tree(&spec, scheme, &RootSpec::warm(root_size, warm_start), &mut rng, DEFAULT_CELL_CAP)
        .map(PySample)
        .map_err(err)
}

/// Malthus parameter of the age model with `k` daughters per division.
#[pyfunction]
#[pyo3(signature = (rate, k = 2))]
fn malthus(rate: &PyRate, k: u8) -> PyResult<f64> {
    solver::renewal_lambda(&rate.0, k).map_err(err)
}

/// `(lambda, ages, N, phi)` of the age model.
#[pyfunction]
#[pyo3(signature = (rate, k = 2))]
fn renewal_eigen(rate: &PyRate, k: u8) -> PyResult<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let e = solver::renewal_eigen(&rate.0, k).map_err(err)?;
    Ok((e.lambda, e.direct.x, e.direct.values, e.adjoint))
}

/// `(lambda, sizes, N, phi)` of the sizer with exponential growth and equal mitosis.
#[pyfunction]
#[pyo3(signature = (rate, growth_rate, k = 2, x_min = 1.0 / 64.0, x_max = 64.0, per_doubling = 32))]
fn size_eigen(
    rate: &PyRate,
    growth_rate: f64,
    k: u8,
    x_min: f64,
    x_max: f64,
    per_doubling: usize,
) -> PyResult<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let spec = ModelSpec::size(rate.0.clone(), growth_rate).map_err(err)?;
    let problem = solver::GrowthFragProblem::from_spec(&spec, k).map_err(err)?;
    let grid = solver::SolverGrid::geometric(x_min, x_max, per_doubling).map_err(err)?;
    let e = solver::gf_eigen(&problem, &grid).map_err(err)?;
    Ok((e.lambda, e.direct.x, e.direct.values, e.adjoint))
}

/// Run a named estimator; returns `(grid, estimate, flags)`.
///
/// `settings` is a JSON object with the fields of the `[estimate.settings]` config table.
#[pyfunction]
#[pyo3(signature = (estimator, sample, settings = None))]
fn estimate(estimator: &str, sample: &PySample, settings: Option<&str>) -> PyResult<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let kind: EstimatorKind = parse(estimator)?;
    let settings: EstimatorSettings = match settings {
        Some(s) => serde_json::from_str(s).map_err(|e| DivrateError::new_err(e.to_string()))?,
        None => EstimatorSettings::default(),
    };
    let r = run_estimator(kind, &sample.0, &settings).map_err(err)?;
    Ok((r.grid().to_vec(), r.values().to_vec(), r.flags.clone()))
}

/// Rank candidate models on a sample; returns the names in ranked order and the JSON report.
#[pyfunction]
#[pyo3(signature = (sample, candidates = vec!["timer".to_string(), "sizer".to_string(), "adder".to_string()], seed = 0))]
fn rank_models(sample: &PySample, candidates: Vec<String>, seed: u64) -> PyResult<(Vec<String>, String)> {
    let triggers = candidates.iter().map(|c| parse::<Trigger>(c)).collect::<PyResult<Vec<_>>>()?;
    let opts = compare::CompareOptions {
        seed,
        ..Default::default()
    };
    let report = compare::rank_models(&sample.0, &triggers, &opts).map_err(err)?;
    let names = report.ranking.iter().map(|t| compare::model_name(*t).to_string()).collect();
    let json = serde_json::to_string(&report).map_err(|e| DivrateError::new_err(e.to_string()))?;
    Ok((names, json))
}

/// W1 distance between two samples.
#[pyfunction]
fn wasserstein1(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    compare::sample_distance(&a, &b, compare::Metric::Wasserstein1).map_err(err)
}

#[pymodule]
fn divrate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DivrateError", m.py().get_type::<DivrateError>())?;
    m.add_class::<PyRate>()?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(malthus, m)?)?;
    m.add_function(wrap_pyfunction!(renewal_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(size_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(rank_models, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    Ok(())
}
