use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twosite_core::bounds::{self, InequalityId};
use twosite_core::diagrammatics as diag;
use twosite_core::effective;
use twosite_core::ensemble::{self, InitialState};
use twosite_core::model::{build_h0, make_initial_state, sample_interaction};
use twosite_core::propagator::{self, DuhamelGrid};
use twosite_core::{Error, Site, C64};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::SizeLimit { .. } | Error::EmptyBand { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn site(label: u8) -> PyResult<Site> {
    Site::from_index(label).map_err(py_err)
}

#[pyclass(name = "SpectrumConfig", module = "twosite", from_py_object)]
#[derive(Clone)]
struct PySpectrumConfig {
    inner: twosite_core::SpectrumConfig,
}

#[pymethods]
impl PySpectrumConfig {
    #[new]
    #[pyo3(signature = (n_levels, coupling, edge_cutoff = twosite_core::model::DEFAULT_EDGE_CUTOFF, seed = 0))]
    fn new(n_levels: usize, coupling: f64, edge_cutoff: f64, seed: u64) -> PyResult<Self> {
        let inner = twosite_core::SpectrumConfig::new(n_levels, coupling, edge_cutoff, seed).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_levels(&self) -> usize {
        self.inner.n_levels
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling
    }

    #[getter]
    fn edge_cutoff(&self) -> f64 {
        self.inner.edge_cutoff
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn energies(&self) -> Vec<f64> {
        self.inner.energies()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SpectrumConfig(n_levels={}, coupling={}, edge_cutoff={}, seed={})",
            c.n_levels, c.coupling, c.edge_cutoff, c.seed
        )
    }
}

#[pyclass(name = "RateFit", module = "twosite", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyRateFit {
    rate: f64,
    intercept: f64,
    r_squared: f64,
    points: usize,
    rate_stderr: f64,
}

impl From<ensemble::RateFit> for PyRateFit {
    fn from(f: ensemble::RateFit) -> Self {
        Self {
            rate: f.rate,
            intercept: f.intercept,
            r_squared: f.r_squared,
            points: f.points,
            rate_stderr: f.rate_stderr,
        }
    }
}

#[pymethods]
impl PyRateFit {
    fn __repr__(&self) -> String {
        format!("RateFit(rate={}, rate_stderr={}, r_squared={})", self.rate, self.rate_stderr, self.r_squared)
    }
}

/// Ensemble-mean relaxation trace.
#[pyclass(name = "EnsembleResult", module = "twosite", frozen)]
struct PyEnsembleResult {
    stats: ensemble::EnsembleStats,
}

#[pymethods]
impl PyEnsembleResult {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.stats.trace_mean.times.clone()
    }

    #[getter]
    fn scaled_times(&self) -> Vec<f64> {
        self.stats.trace_mean.scaled_times.clone()
    }

    #[getter]
    fn p1_mean(&self) -> Vec<f64> {
        self.stats.trace_mean.p1.clone()
    }

    #[getter]
    fn p2_mean(&self) -> Vec<f64> {
        self.stats.trace_mean.p2.clone()
    }

    #[getter]
    fn p1_stderr(&self) -> Vec<f64> {
        self.stats.trace_stderr.p1.clone()
    }

    #[getter]
    fn p2_stderr(&self) -> Vec<f64> {
        self.stats.trace_stderr.p2.clone()
    }

    #[getter]
    fn norm_mean(&self) -> Vec<f64> {
        self.stats.trace_mean.norm.clone()
    }

    #[getter]
    fn samples(&self) -> usize {
        self.stats.n_samples
    }

    #[getter]
    fn member_seeds(&self) -> Vec<u64> {
        self.stats.member_seeds.clone()
    }

    #[pyo3(signature = (window = ensemble::DEFAULT_FIT_WINDOW))]
    fn fit_rate(&self, window: (f64, f64)) -> PyResult<PyRateFit> {
        ensemble::fit_rate(&self.stats, window).map(Into::into).map_err(py_err)
    }
}

/// Ensemble average over `samples` draws on a grid of scaled times `T`.
#[pyfunction]
#[pyo3(signature = (config, scaled_times, samples, master_seed, band = (0.3, 0.7), site_label = 1))]
fn run_ensemble(
    py: Python<'_>,
    config: PySpectrumConfig,
    scaled_times: Vec<f64>,
    samples: usize,
    master_seed: u64,
    band: (f64, f64),
    site_label: u8,
) -> PyResult<PyEnsembleResult> {
    let initial = InitialState {
        site: site(site_label)?,
        band,
    };
    let stats = py
        .detach(|| ensemble::run_scaled_ensemble(&config.inner, initial, &scaled_times, samples, master_seed))
        .map_err(py_err)?;
    Ok(PyEnsembleResult { stats })
}

#[pyfunction]
fn scaled_time_grid(t_max: f64, step: f64) -> PyResult<Vec<f64>> {
    ensemble::scaled_time_grid(t_max, step).map_err(py_err)
}

/// Distance of the Duhamel partial sums of order `0..=max_order` from the exact state.
#[pyfunction]
#[pyo3(signature = (config, t, max_order, band = (0.3, 0.7)))]
fn remainder_norms(py: Python<'_>, config: PySpectrumConfig, t: f64, max_order: usize, band: (f64, f64)) -> PyResult<Vec<f64>> {
    let c = config.inner;
    py.detach(|| {
        let h0 = build_h0(&c)?;
        let v = sample_interaction(&c, c.seed);
        let psi0 = make_initial_state(&c, Site::One, band)?;
        propagator::remainder_norms(max_order, t, &h0, &v, c.coupling, &psi0, DuhamelGrid::default())
    })
    .map_err(py_err)
}

#[pyfunction]
fn count_by_class<'py>(py: Python<'py>, n: usize, m: usize) -> PyResult<Bound<'py, PyDict>> {
    let c = diag::count_by_class(n, m).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("simple", c.simple)?;
    d.set_item("nested", c.nested)?;
    d.set_item("crossing", c.crossing)?;
    d.set_item("noncrossing", c.noncrossing())?;
    d.set_item("total", c.total())?;
    Ok(d)
}

/// Class name and `kappa` of a pairing given as 1-based factor pairs.
#[pyfunction]
fn classify(n: usize, m: usize, pairs: Vec<(usize, usize)>) -> PyResult<(String, usize)> {
    let p = diag::Pairing::new(n, m, pairs).map_err(py_err)?;
    let name = match p.classify() {
        diag::GraphClass::Simple => "simple",
        diag::GraphClass::Nested => "nested",
        diag::GraphClass::Crossing => "crossing",
    };
    Ok((name.to_string(), p.kappa()))
}

#[pyfunction]
fn catalan(k: u64) -> u64 {
    diag::catalan(k)
}

#[pyfunction]
fn matching_count(k: u64) -> u64 {
    diag::matching_count(k)
}

#[pyfunction]
fn moment_from_pairings(k: usize, n_levels: usize) -> PyResult<f64> {
    diag::moment_from_pairings(k, n_levels).map_err(py_err)
}

/// `(mean, stderr)` of `Tr V^2k` over `samples` draws.
#[pyfunction]
fn moment_monte_carlo(py: Python<'_>, k: usize, n_levels: usize, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let mc = py
        .detach(|| diag::moment_monte_carlo(k, n_levels, samples, seed))
        .map_err(py_err)?;
    Ok((mc.mean, mc.stderr))
}

#[pyfunction]
fn theta_reg(alpha: f64, eta: f64) -> PyResult<C64> {
    effective::theta_reg(alpha, eta).map_err(py_err)
}

#[pyfunction]
fn theta(omega: f64) -> PyResult<C64> {
    effective::theta(omega).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (t, p0, rate = effective::DEFAULT_DECAY_RATE))]
fn closed_form(t: f64, p0: (f64, f64), rate: f64) -> PyResult<(f64, f64)> {
    effective::closed_form(t, p0, rate).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (t, p0, nbar_max = effective::DEFAULT_NBAR_MAX))]
fn poisson_resum(t: f64, p0: (f64, f64), nbar_max: usize) -> PyResult<(f64, f64)> {
    effective::poisson_resum(t, p0, nbar_max).map_err(py_err)
}

/// `(p1, p2)` lists of the rate equation on `grid`.
#[pyfunction]
#[pyo3(signature = (grid, p0, coeff, max_step = 1e-3))]
fn rate_ode(grid: Vec<f64>, p0: (f64, f64), coeff: f64, max_step: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let r = effective::rate_ode(&grid, p0, coeff, max_step).map_err(py_err)?;
    Ok((r.p1, r.p2))
}

fn inequality(name: &str) -> PyResult<InequalityId> {
    InequalityId::ALL
        .into_iter()
        .find(|id| id.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let names: Vec<&str> = InequalityId::ALL.iter().map(|id| id.name()).collect();
            PyValueError::new_err(format!("unknown inequality {name:?}; expected one of {names:?}"))
        })
}

#[pyfunction]
fn inequality_names() -> Vec<&'static str> {
    InequalityId::ALL.iter().map(|id| id.name()).collect()
}

/// Randomized sweep of one inequality; returns the report as a dict.
#[pyfunction]
fn verify_bound<'py>(py: Python<'py>, name: &str, samples: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let id = inequality(name)?;
    let r = py.detach(|| bounds::sweep(id, samples, seed)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("inequality_id", r.inequality_id.name())?;
    d.set_item("samples", r.samples)?;
    d.set_item("constant", r.constant)?;
    d.set_item("max_ratio", r.max_ratio)?;
    d.set_item("violations", r.violations)?;
    d.set_item("passed", r.passed())?;
    Ok(d)
}

#[pymodule]
fn twosite(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DEFAULT_DECAY_RATE", effective::DEFAULT_DECAY_RATE)?;
    m.add_class::<PySpectrumConfig>()?;
    m.add_class::<PyRateFit>()?;
    m.add_class::<PyEnsembleResult>()?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_time_grid, m)?)?;
    m.add_function(wrap_pyfunction!(remainder_norms, m)?)?;
    m.add_function(wrap_pyfunction!(count_by_class, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(catalan, m)?)?;
    m.add_function(wrap_pyfunction!(matching_count, m)?)?;
    m.add_function(wrap_pyfunction!(moment_from_pairings, m)?)?;
    m.add_function(wrap_pyfunction!(moment_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(theta_reg, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_resum, m)?)?;
    m.add_function(wrap_pyfunction!(rate_ode, m)?)?;
    m.add_function(wrap_pyfunction!(inequality_names, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bound, m)?)?;
    Ok(())
}
