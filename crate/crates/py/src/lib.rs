//! Python bindings: array geometry, antenna selection, channels, channel
//! transfer, SNR-loss analysis, hardware economics and the experiment runner.

use std::path::PathBuf;

use asymx_core::array::{self, SelectionKind};
use asymx_core::channel;
use asymx_core::econ::{self, ArchitectureKind, HardwareProfile};
use asymx_core::harness::{self, seed::LANE_SELECTION, Experiment, ExperimentConfig, SeedStream};
use asymx_core::transfer::{self, TransferAlgorithm};
use asymx_core::{downlink, uplink, CVector, Complex64};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: asymx_core::Error) -> PyErr {
    use asymx_core::Error as E;
    match e {
        E::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        E::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

fn to_vec(v: &CVector) -> Vec<Complex64> {
    v.iter().copied().collect()
}

#[pyclass(name = "ArrayGeometry", frozen, from_py_object)]
#[derive(Clone)]
struct PyGeometry(channel::ArrayGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (num_elements, spacing = 0.5))]
    fn new(num_elements: usize, spacing: f64) -> PyResult<Self> {
        channel::ArrayGeometry::new(num_elements, spacing).map(Self).map_err(to_py)
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.0.num_elements()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn __repr__(&self) -> String {
        format!("ArrayGeometry(num_elements={}, spacing={})", self.0.num_elements(), self.0.spacing())
    }
}

#[pyclass(name = "AntennaSelection", frozen, from_py_object)]
#[derive(Clone)]
struct PySelection(array::AntennaSelection);

#[pymethods]
impl PySelection {
    /// Builds a selection of `kind` (random|successive|comb); random draws are
    /// reproducible from `seed`.
    #[new]
    #[pyo3(signature = (kind, m, n, pinned = false, seed = 0))]
    fn new(kind: &str, m: usize, n: usize, pinned: bool, seed: u64) -> PyResult<Self> {
        let kind: SelectionKind = parse(kind)?;
        let mut rng = SeedStream::new(seed).rng(0, LANE_SELECTION);
        array::select(kind, m, n, pinned, &mut rng).map(Self).map_err(to_py)
    }

    /// Explicit 1-based element indices.
    #[staticmethod]
    fn from_indices(indices: Vec<usize>, total: usize) -> PyResult<Self> {
        array::AntennaSelection::new(indices, total, SelectionKind::Random).map(Self).map_err(to_py)
    }

    #[getter]
    fn indices(&self) -> Vec<usize> {
        self.0.indices().to_vec()
    }

    #[getter]
    fn total(&self) -> usize {
        self.0.total()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().as_str()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("AntennaSelection(kind={}, n={}, m={})", self.0.kind(), self.0.len(), self.0.total())
    }
}

#[pyclass(name = "PathSet", frozen, from_py_object)]
#[derive(Clone)]
struct PyPathSet(channel::PathSet);

#[pymethods]
impl PyPathSet {
    /// Paths from complex gains and angles in radians.
    #[new]
    fn new(gains: Vec<Complex64>, angles: Vec<f64>) -> PyResult<Self> {
        channel::PathSet::new(gains, angles).map(Self).map_err(to_py)
    }

    /// Paths from complex gains and spatial frequencies `sin(θ)`.
    #[staticmethod]
    fn from_spatial(gains: Vec<Complex64>, spatial_freqs: Vec<f64>) -> PyResult<Self> {
        channel::PathSet::from_spatial(gains, &spatial_freqs).map(Self).map_err(to_py)
    }

    #[getter]
    fn gains(&self) -> Vec<Complex64> {
        self.0.gains().to_vec()
    }

    #[getter]
    fn angles(&self) -> Vec<f64> {
        self.0.angles().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.count()
    }
}

#[pyfunction]
fn steering_downlink(geometry: &PyGeometry, w: f64) -> PyResult<Vec<Complex64>> {
    channel::steering_downlink(&geometry.0, w).map(|v| to_vec(&v)).map_err(to_py)
}

#[pyfunction]
fn steering_uplink(selection: &PySelection, geometry: &PyGeometry, w: f64) -> PyResult<Vec<Complex64>> {
    channel::steering_uplink(&selection.0, &geometry.0, w).map(|v| to_vec(&v)).map_err(to_py)
}

#[pyfunction]
fn uplink_channel(paths: &PyPathSet, selection: &PySelection, geometry: &PyGeometry) -> PyResult<Vec<Complex64>> {
    channel::uplink_channel(&paths.0, &selection.0, &geometry.0).map(|v| to_vec(&v)).map_err(to_py)
}

#[pyfunction]
fn downlink_channel(paths: &PyPathSet, geometry: &PyGeometry) -> Vec<Complex64> {
    to_vec(&channel::downlink_channel(&paths.0, &geometry.0))
}

#[pyfunction]
#[pyo3(signature = (selection, geometry, grid = None))]
fn array_factor(selection: &PySelection, geometry: &PyGeometry, grid: Option<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = grid.unwrap_or_else(|| array::beam_grid(array::BEAM_GRID_POINTS));
    let af = array::array_factor(&selection.0, &geometry.0, &grid).map_err(to_py)?;
    Ok((grid, af))
}

fn loss_inputs(theta1: f64, theta2: f64, composite: f64, phi1: f64, phi2: f64, n: usize, spacing: f64) -> PyResult<uplink::SnrLossInputs> {
    uplink::SnrLossInputs::new(theta1, theta2, composite, phi1, phi2, n, spacing).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theta1, theta2, composite_theta, phi1, phi2, n, spacing = 0.5))]
fn snr_loss_closed_form(theta1: f64, theta2: f64, composite_theta: f64, phi1: f64, phi2: f64, n: usize, spacing: f64) -> PyResult<f64> {
    Ok(uplink::snr_loss_closed_form(&loss_inputs(theta1, theta2, composite_theta, phi1, phi2, n, spacing)?))
}

#[pyfunction]
#[pyo3(signature = (theta1, theta2, composite_theta, phi1, phi2, n, spacing = 0.5))]
fn snr_loss_numeric(theta1: f64, theta2: f64, composite_theta: f64, phi1: f64, phi2: f64, n: usize, spacing: f64) -> PyResult<f64> {
    uplink::snr_loss_numeric(&loss_inputs(theta1, theta2, composite_theta, phi1, phi2, n, spacing)?).map_err(to_py)
}

#[pyfunction]
fn composite_angle(theta1: f64, theta2: f64, phi1: f64, phi2: f64, selection: &PySelection, geometry: &PyGeometry) -> PyResult<f64> {
    uplink::composite_angle(theta1, theta2, phi1, phi2, &selection.0, &geometry.0).map_err(to_py)
}

#[pyclass(name = "TransferResult", frozen, skip_from_py_object)]
struct PyTransferResult(transfer::TransferResult);

#[pymethods]
impl PyTransferResult {
    #[getter]
    fn channel(&self) -> Vec<Complex64> {
        to_vec(&self.0.channel)
    }

    #[getter]
    fn gains(&self) -> Vec<Complex64> {
        self.0.gains.clone()
    }

    #[getter]
    fn spatial_freqs(&self) -> Vec<f64> {
        self.0.spatial_freqs.clone()
    }

    #[getter]
    fn threshold_met(&self) -> bool {
        self.0.threshold_met
    }

    #[getter]
    fn residual_trace(&self) -> Vec<f64> {
        self.0.residual_trace.clone()
    }

    fn __repr__(&self) -> String {
        format!("TransferResult(paths={}, threshold_met={})", self.0.num_paths(), self.0.threshold_met)
    }
}

/// Recovers the `M`-element downlink channel from an `N`-element uplink
/// estimate with the `dft` or `mnomp` algorithm.
#[pyfunction]
#[pyo3(signature = (algorithm, h_s, selection, geometry, threshold, oversampling = None, max_paths = 10, newton_steps = 2, cyclic_rounds = 2))]
#[allow(clippy::too_many_arguments)]
fn channel_transfer(
    algorithm: &str,
    h_s: Vec<Complex64>,
    selection: &PySelection,
    geometry: &PyGeometry,
    threshold: f64,
    oversampling: Option<usize>,
    max_paths: usize,
    newton_steps: usize,
    cyclic_rounds: usize,
) -> PyResult<PyTransferResult> {
    let alg: TransferAlgorithm = parse(algorithm)?;
    let mut cfg = transfer::TransferConfig::new(alg, threshold);
    cfg.oversampling = oversampling.unwrap_or(alg.default_oversampling());
    cfg.max_paths = max_paths;
    cfg.newton_steps = newton_steps;
    cfg.cyclic_rounds = cyclic_rounds;
    let h = CVector::from_vec(h_s);
    transfer::transfer(alg, &h, &selection.0, &geometry.0, &cfg).map(PyTransferResult).map_err(to_py)
}

#[pyfunction]
fn default_threshold(n: usize, rho_tau: f64) -> PyResult<f64> {
    transfer::default_threshold(n, rho_tau).map_err(to_py)
}

#[pyfunction]
fn nmse(estimate: Vec<Complex64>, truth: Vec<Complex64>) -> PyResult<f64> {
    downlink::nmse(&CVector::from_vec(estimate), &CVector::from_vec(truth)).map_err(to_py)
}

fn architecture(kind: &str, m: usize, n: usize) -> PyResult<econ::Architecture> {
    let kind: ArchitectureKind = parse(kind)?;
    econ::Architecture::new(kind, m, n).map_err(to_py)
}

/// Hardware cost in USD of `ADBN`, `DBM`, `HBFN` or `HBSN` with the reference profile.
#[pyfunction]
fn cost(kind: &str, m: usize, n: usize) -> PyResult<f64> {
    Ok(econ::cost(&architecture(kind, m, n)?, &HardwareProfile::reference()))
}

/// Average power in W with the reference profile.
#[pyfunction]
#[pyo3(signature = (kind, m, n, epsilon = 1.0 / 3.0))]
fn power(kind: &str, m: usize, n: usize, epsilon: f64) -> PyResult<f64> {
    econ::power(&architecture(kind, m, n)?, &HardwareProfile::reference(), epsilon).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (se_up, se_down, p_bs, epsilon = 1.0 / 3.0, bandwidth_hz = 500e6))]
fn energy_efficiency(se_up: f64, se_down: f64, p_bs: f64, epsilon: f64, bandwidth_hz: f64) -> PyResult<f64> {
    econ::energy_efficiency(se_up, se_down, epsilon, p_bs, bandwidth_hz).map_err(to_py)
}

/// Runs a CLI experiment from a config file and returns its CSV text.
#[pyfunction]
#[pyo3(signature = (experiment, config, seed = None, trials = None))]
fn run_experiment(py: Python<'_>, experiment: &str, config: PathBuf, seed: Option<u64>, trials: Option<usize>) -> PyResult<String> {
    let exp: Experiment = parse(experiment)?;
    let mut cfg = ExperimentConfig::from_file(&config).map_err(to_py)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    py.detach(|| harness::run(exp, &cfg)).map(|r| r.table.to_csv()).map_err(to_py)
}

#[pymodule]
fn asymx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PySelection>()?;
    m.add_class::<PyPathSet>()?;
    m.add_class::<PyTransferResult>()?;
    m.add_function(wrap_pyfunction!(steering_downlink, m)?)?;
    m.add_function(wrap_pyfunction!(steering_uplink, m)?)?;
    m.add_function(wrap_pyfunction!(uplink_channel, m)?)?;
    m.add_function(wrap_pyfunction!(downlink_channel, m)?)?;
    m.add_function(wrap_pyfunction!(array_factor, m)?)?;
    m.add_function(wrap_pyfunction!(snr_loss_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(snr_loss_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(composite_angle, m)?)?;
    m.add_function(wrap_pyfunction!(channel_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(default_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(nmse, m)?)?;
    m.add_function(wrap_pyfunction!(cost, m)?)?;
    m.add_function(wrap_pyfunction!(power, m)?)?;
    m.add_function(wrap_pyfunction!(energy_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
