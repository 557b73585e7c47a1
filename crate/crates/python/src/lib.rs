//! Python bindings: configs, simulation, fitting, reduction and the constants chain.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use recoil_core::constants::{self, DeterminationsFile, QedSeries};
use recoil_core::montecarlo;
use recoil_core::quantity::{concise, Quantity};
use recoil_core::reduction::{self, SetEntry, SpectrumSet};
use recoil_core::registry::{ConstantsRegistry, RbMass};
use recoil_core::sim;
use recoil_core::stats;
use recoil_core::systematics::{self, BeamGeometry, ErrorBudget};
use recoil_core::{fit, FringeFit, InterferometerConfig, WorldTruth};

create_exception!(recoil, RecoilError, PyValueError);

fn err(e: recoil_core::Error) -> PyErr {
    RecoilError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    RecoilError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_bound_py_any(py)?,
            (None, Some(f)) => f.into_bound_py_any(py)?,
            _ => n.to_string().into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(value_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

/// Any serialisable value as nested Python dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    value_to_py(py, &serde_json::to_value(v).map_err(json_err)?)
}

#[pyclass(name = "Quantity", module = "recoil", from_py_object)]
#[derive(Clone)]
pub struct PyQuantity(Quantity);

#[pymethods]
impl PyQuantity {
    #[new]
    #[pyo3(signature = (value, sigma = 0.0, unit = "1"))]
    fn new(value: f64, sigma: f64, unit: &str) -> PyResult<Self> {
        Ok(PyQuantity(Quantity::new(value, sigma, unit.parse().map_err(err)?).map_err(err)?))
    }

    #[getter]
    fn value(&self) -> f64 {
        self.0.value
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn unit(&self) -> String {
        self.0.unit.to_string()
    }

    fn relative_sigma(&self) -> f64 {
        self.0.relative_sigma()
    }

    fn __add__(&self, o: &PyQuantity) -> PyResult<Self> {
        Ok(PyQuantity(self.0.add(&o.0).map_err(err)?))
    }

    fn __sub__(&self, o: &PyQuantity) -> PyResult<Self> {
        Ok(PyQuantity(self.0.sub(&o.0).map_err(err)?))
    }

    fn __mul__(&self, o: &PyQuantity) -> PyResult<Self> {
        Ok(PyQuantity(self.0.mul(&o.0).map_err(err)?))
    }

    fn __truediv__(&self, o: &PyQuantity) -> PyResult<Self> {
        Ok(PyQuantity(self.0.div(&o.0).map_err(err)?))
    }

    /// `value(uncertainty)` with two digits in the uncertainty.
    #[pyo3(signature = (digits = 2))]
    fn concise(&self, digits: i32) -> String {
        concise(self.0.value, self.0.sigma, digits)
    }

    fn __repr__(&self) -> String {
        format!("Quantity({}, {}, '{}')", self.0.value, self.0.sigma, self.0.unit)
    }
}

#[pyclass(name = "InterferometerConfig", module = "recoil", from_py_object)]
#[derive(Clone)]
pub struct PyConfig(InterferometerConfig);

#[pymethods]
impl PyConfig {
    /// The bundled default configuration.
    #[new]
    fn new() -> Self {
        PyConfig(InterferometerConfig::default_config())
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let c: InterferometerConfig = serde_json::from_str(s).map_err(json_err)?;
        c.validate().map_err(err)?;
        Ok(PyConfig(c))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(json_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    /// The four sign configurations of a set, in (N, Raman) order ++, +−, −+, −−.
    fn four_spectrum_set(&self) -> Vec<PyConfig> {
        self.0.four_spectrum_set().into_iter().map(PyConfig).collect()
    }

    fn with_signs(&self, sign_n: i8, raman_direction: i8) -> Self {
        PyConfig(self.0.with_signs(sign_n, raman_direction))
    }

    #[getter]
    fn n_bloch(&self) -> i64 {
        self.0.n_bloch
    }

    #[getter]
    fn raman_direction(&self) -> i8 {
        self.0.raman_direction
    }

    #[getter]
    fn fringe_period(&self) -> f64 {
        self.0.fringe_period()
    }

    #[getter]
    fn points_per_spectrum(&self) -> usize {
        self.0.points_per_spectrum
    }
}

#[pyclass(name = "WorldTruth", module = "recoil", from_py_object)]
#[derive(Clone)]
pub struct PyWorld(WorldTruth);

#[pymethods]
impl PyWorld {
    /// The bundled default world; keyword arguments override single fields.
    #[new]
    #[pyo3(signature = (h_over_m_true = None, g = None, bias_direction_independent = None, bias_sel_meas_asymmetry = None, noise_amplitude = None, rng_seed = None))]
    fn new(
        h_over_m_true: Option<f64>,
        g: Option<f64>,
        bias_direction_independent: Option<f64>,
        bias_sel_meas_asymmetry: Option<f64>,
        noise_amplitude: Option<f64>,
        rng_seed: Option<u64>,
    ) -> PyResult<Self> {
        let d = WorldTruth::default_world();
        let w = WorldTruth {
            h_over_m_true: h_over_m_true.unwrap_or(d.h_over_m_true),
            g: g.unwrap_or(d.g),
            bias_direction_independent: bias_direction_independent.unwrap_or(d.bias_direction_independent),
            bias_sel_meas_asymmetry: bias_sel_meas_asymmetry.unwrap_or(d.bias_sel_meas_asymmetry),
            noise_amplitude: noise_amplitude.unwrap_or(d.noise_amplitude),
            rng_seed: rng_seed.unwrap_or(d.rng_seed),
        };
        w.validate().map_err(err)?;
        Ok(PyWorld(w))
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    #[getter]
    fn h_over_m_true(&self) -> f64 {
        self.0.h_over_m_true
    }

    #[getter]
    fn noise_amplitude(&self) -> f64 {
        self.0.noise_amplitude
    }

    #[getter]
    fn rng_seed(&self) -> u64 {
        self.0.rng_seed
    }
}

#[pyclass(name = "Spectrum", module = "recoil", from_py_object)]
#[derive(Clone)]
pub struct PySpectrum(sim::Spectrum);

#[pymethods]
impl PySpectrum {
    #[new]
    fn new(deltas: Vec<f64>, ratios: Vec<f64>, config: &PyConfig) -> PyResult<Self> {
        if deltas.len() != ratios.len() {
            return Err(RecoilError::new_err("deltas and ratios differ in length"));
        }
        let points = deltas.into_iter().zip(ratios).map(|(delta_hz, ratio)| sim::SpectrumPoint { delta_hz, ratio }).collect();
        let s = sim::Spectrum { points, config: config.0.clone(), meta: Default::default() };
        s.validate().map_err(err)?;
        Ok(PySpectrum(s))
    }

    #[staticmethod]
    fn read(csv_path: &str, sidecar_path: &str) -> PyResult<Self> {
        Ok(PySpectrum(sim::Spectrum::read(csv_path.as_ref(), sidecar_path.as_ref()).map_err(err)?))
    }

    fn write(&self, csv_path: &str, sidecar_path: &str) -> PyResult<()> {
        self.0.write(csv_path.as_ref(), sidecar_path.as_ref()).map_err(err)
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.0.deltas()
    }

    #[getter]
    fn ratios(&self) -> Vec<f64> {
        self.0.ratios()
    }

    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig(self.0.config.clone())
    }

    #[getter]
    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.meta)
    }

    fn __len__(&self) -> usize {
        self.0.points.len()
    }
}

#[pyclass(name = "FringeFit", module = "recoil", from_py_object)]
#[derive(Clone)]
pub struct PyFit(FringeFit);

#[pymethods]
impl PyFit {
    #[staticmethod]
    fn from_center(center_hz: f64, sigma_hz: f64, config: &PyConfig) -> Self {
        PyFit(FringeFit::from_center(center_hz, sigma_hz, &config.0))
    }

    #[getter]
    fn center(&self) -> PyQuantity {
        PyQuantity(self.0.center.clone())
    }

    #[getter]
    fn contrast(&self) -> f64 {
        self.0.contrast
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.0.offset
    }

    #[getter]
    fn residual_rms(&self) -> f64 {
        self.0.residual_rms
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }
}

#[pyfunction]
fn true_center(world: &PyWorld, config: &PyConfig) -> PyResult<f64> {
    sim::true_center(&world.0, &config.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (world, config, span = None))]
fn simulate_spectrum(world: &PyWorld, config: &PyConfig, span: Option<f64>) -> PyResult<PySpectrum> {
    let span = span.unwrap_or(config.0.scan_span_hz);
    Ok(PySpectrum(sim::simulate_spectrum(&world.0, &config.0, span).map_err(err)?))
}

#[pyfunction]
fn initial_guess(spectrum: &PySpectrum) -> PyResult<f64> {
    fit::initial_guess(&spectrum.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (spectrum, initial_guess = None))]
fn fit_central_fringe(py: Python<'_>, spectrum: &PySpectrum, initial_guess: Option<f64>) -> PyResult<PyFit> {
    let s = spectrum.0.clone();
    let f = py.detach(move || fit::fit_central_fringe(&s, initial_guess)).map_err(err)?;
    Ok(PyFit(f))
}

fn build_set(entries: Vec<(PyConfig, PyFit)>) -> PyResult<SpectrumSet> {
    let entries = entries.into_iter().map(|(c, f)| SetEntry { config: c.0, fit: f.0 }).collect();
    SpectrumSet::new("python", "", entries).map_err(err)
}

/// h/m (m² s⁻¹) from four (config, fit) pairs.
#[pyfunction]
fn reduce_set(entries: Vec<(PyConfig, PyFit)>) -> PyResult<PyQuantity> {
    Ok(PyQuantity(reduction::reduce_set(&build_set(entries)?).map_err(err)?.h_over_m))
}

#[pyfunction]
fn cancellation_report<'py>(py: Python<'py>, entries: Vec<(PyConfig, PyFit)>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &reduction::cancellation_report(&build_set(entries)?).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (world, config, master_seed, index = 0))]
fn simulate_determination(py: Python<'_>, world: &PyWorld, config: &PyConfig, master_seed: u64, index: u64) -> PyResult<PyQuantity> {
    let (w, c) = (world.0.clone(), config.0.clone());
    let q = py.detach(move || montecarlo::simulate_determination(&w, &c, master_seed, index)).map_err(err)?;
    Ok(PyQuantity(q))
}

/// Coverage summary of `runs` simulated determinations.
#[pyfunction]
fn determination_coverage<'py>(py: Python<'py>, world: &PyWorld, config: &PyConfig, master_seed: u64, runs: u64) -> PyResult<Bound<'py, PyAny>> {
    let (w, c) = (world.0.clone(), config.0.clone());
    let (_, summary) = py.detach(move || montecarlo::determination_coverage(&w, &c, master_seed, runs));
    let d = to_py(py, &summary)?;
    d.set_item("ratio", summary.ratio())?;
    Ok(d)
}

fn registry(path: Option<&str>, rb_mass: &str) -> PyResult<ConstantsRegistry> {
    let choice: RbMass = rb_mass.parse().map_err(err)?;
    match path {
        Some(p) => ConstantsRegistry::load(p.as_ref(), choice).map_err(err),
        None => ConstantsRegistry::from_json_str(recoil_core::registry::DEFAULT_REGISTRY_JSON, choice).map_err(err),
    }
}

/// 1/α from h/m_Rb; `ar` defaults to the registry's Rb-87 relative mass.
#[pyfunction]
#[pyo3(signature = (h_over_m, ar = None, registry_path = None, rb_mass = "mean"))]
fn alpha_from_h_over_m(h_over_m: &PyQuantity, ar: Option<&PyQuantity>, registry_path: Option<&str>, rb_mass: &str) -> PyResult<PyQuantity> {
    let reg = registry(registry_path, rb_mass)?;
    let ar = ar.map(|a| a.0.clone()).unwrap_or_else(|| reg.ar_rb.clone());
    Ok(PyQuantity(constants::alpha_from_h_over_m(&h_over_m.0, &ar, &reg).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (alpha_inv, registry_path = None))]
fn h_over_mu_from_alpha(alpha_inv: &PyQuantity, registry_path: Option<&str>) -> PyResult<PyQuantity> {
    let reg = registry(registry_path, "mean")?;
    Ok(PyQuantity(constants::h_over_mu_from_alpha(&alpha_inv.0, &reg).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (h_over_mu, registry_path = None))]
fn na_h(h_over_mu: &PyQuantity, registry_path: Option<&str>) -> PyResult<PyQuantity> {
    let reg = registry(registry_path, "mean")?;
    Ok(PyQuantity(constants::na_h(&h_over_mu.0, &reg).map_err(err)?))
}

fn qed(path: Option<&str>) -> PyResult<QedSeries> {
    match path {
        Some(p) => QedSeries::load(p.as_ref()).map_err(err),
        None => Ok(QedSeries::default_series()),
    }
}

#[pyfunction]
#[pyo3(signature = (alpha_inv, qed_path = None))]
fn a_e_theory(alpha_inv: &PyQuantity, qed_path: Option<&str>) -> PyResult<PyQuantity> {
    Ok(PyQuantity(constants::a_e_theory(&alpha_inv.0, &qed(qed_path)?).map_err(err)?))
}

/// a_e(Exp) − a_e(Theory) with its uncertainty split.
#[pyfunction]
#[pyo3(signature = (alpha_inv, qed_path = None))]
fn compare_a_e<'py>(py: Python<'py>, alpha_inv: &PyQuantity, qed_path: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &constants::compare_a_e(&alpha_inv.0, &qed(qed_path)?).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (determinations_path = None))]
fn compare_determinations<'py>(py: Python<'py>, determinations_path: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let file = match determinations_path {
        Some(p) => DeterminationsFile::load(p.as_ref()).map_err(err)?,
        None => DeterminationsFile::default_file(),
    };
    to_py(py, &constants::compare_determinations(&file.determinations).map_err(err)?)
}

/// Gaussian-beam effective wave-vector; `waist = inf` for a plane wave.
#[pyfunction]
#[pyo3(signature = (k, waist, cloud_radius, curvature_radius = None))]
fn k_effective(k: f64, waist: f64, cloud_radius: f64, curvature_radius: Option<f64>) -> PyResult<f64> {
    systematics::k_effective(&BeamGeometry { k, waist, cloud_radius, curvature_radius }).map_err(err)
}

fn budget(path: Option<&str>) -> PyResult<ErrorBudget> {
    match path {
        Some(p) => ErrorBudget::load(p.as_ref()).map_err(err),
        None => Ok(ErrorBudget::default_budget()),
    }
}

#[pyfunction]
#[pyo3(signature = (budget_path = None))]
fn budget_table(budget_path: Option<&str>) -> PyResult<String> {
    budget(budget_path)?.to_table().map_err(err)
}

#[pyfunction]
#[pyo3(signature = (budget_path = None))]
fn budget_summary<'py>(py: Python<'py>, budget_path: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &budget(budget_path)?.summary().map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (raw_alpha_inv, budget_path = None))]
fn apply_budget(raw_alpha_inv: &PyQuantity, budget_path: Option<&str>) -> PyResult<PyQuantity> {
    Ok(PyQuantity(systematics::apply_budget(&raw_alpha_inv.0, &budget(budget_path)?).map_err(err)?))
}

/// Weighted mean, χ²/(n−1) and autocorrelation of a series of quantities.
#[pyfunction]
fn series_stats<'py>(py: Python<'py>, values: Vec<PyQuantity>, max_lag: usize) -> PyResult<Bound<'py, PyAny>> {
    let qs: Vec<Quantity> = values.into_iter().map(|q| q.0).collect();
    to_py(py, &stats::series_stats(&qs, max_lag).map_err(err)?)
}

#[pymodule]
pub fn recoil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RecoilError", m.py().get_type::<RecoilError>())?;
    m.add_class::<PyQuantity>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyWorld>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(true_center, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(initial_guess, m)?)?;
    m.add_function(wrap_pyfunction!(fit_central_fringe, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_set, m)?)?;
    m.add_function(wrap_pyfunction!(cancellation_report, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_determination, m)?)?;
    m.add_function(wrap_pyfunction!(determination_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_from_h_over_m, m)?)?;
    m.add_function(wrap_pyfunction!(h_over_mu_from_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(na_h, m)?)?;
    m.add_function(wrap_pyfunction!(a_e_theory, m)?)?;
    m.add_function(wrap_pyfunction!(compare_a_e, m)?)?;
    m.add_function(wrap_pyfunction!(compare_determinations, m)?)?;
    m.add_function(wrap_pyfunction!(k_effective, m)?)?;
    m.add_function(wrap_pyfunction!(budget_table, m)?)?;
    m.add_function(wrap_pyfunction!(budget_summary, m)?)?;
    m.add_function(wrap_pyfunction!(apply_budget, m)?)?;
    m.add_function(wrap_pyfunction!(series_stats, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
