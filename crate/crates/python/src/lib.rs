//! Python bindings. Compound results (layouts, scenes, adaptation runs) cross
//! the boundary as JSON text in the same format the command-line tool writes.

use cogspace::adapt::{
    closed_loop_adapt as adapt, AdaptError, CalibrationProtocol, SimulatedParticipant,
};
use cogspace::eeg::{self, BandPowerConfig, FrequencyBand, PowerSpectrum, SignalError};
use cogspace::layout::{self, LayoutError};
use cogspace::model::{self, ModelError, ObservationSet};
use cogspace::space::{self, SpaceError};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn layout_error(e: LayoutError) -> PyErr {
    match e {
        LayoutError::GenerationFailed { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => value_error(e),
    }
}

fn band(low: f64, high: f64) -> PyResult<FrequencyBand> {
    FrequencyBand::new(low, high).map_err(|e: SignalError| value_error(e))
}

/// Welch PSD of one channel; returns `(frequencies, density)`.
#[pyfunction]
#[pyo3(signature = (samples, sampling_rate, segment_length, overlap = 0.5))]
fn welch_psd(
    samples: Vec<f64>,
    sampling_rate: f64,
    segment_length: usize,
    overlap: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s =
        eeg::welch_psd(&samples, sampling_rate, segment_length, overlap).map_err(value_error)?;
    Ok((s.frequencies, s.density))
}

/// Rectangle-rule power of a spectrum over `[low, high]` Hz.
#[pyfunction]
#[pyo3(signature = (frequencies, density, low = 13.0, high = 30.0))]
fn band_power(frequencies: Vec<f64>, density: Vec<f64>, low: f64, high: f64) -> PyResult<f64> {
    if frequencies.len() != density.len() || frequencies.len() < 2 {
        return Err(value_error(
            "frequencies and density need equal length of at least 2",
        ));
    }
    let spectrum = PowerSpectrum {
        frequencies,
        density,
    };
    eeg::band_power(&spectrum, &band(low, high)?).map_err(value_error)
}

/// Per-window band power of a session given as CSV text.
#[pyfunction]
#[pyo3(signature = (session_csv, low = 13.0, high = 30.0, window = 2.0, overlap = 0.5))]
fn beta_power_series(
    session_csv: &str,
    low: f64,
    high: f64,
    window: f64,
    overlap: f64,
) -> PyResult<Vec<f64>> {
    let session = eeg::ingest_session(session_csv.as_bytes()).map_err(value_error)?;
    let config = BandPowerConfig {
        window_seconds: window,
        overlap_fraction: overlap,
        band: band(low, high)?,
        ..BandPowerConfig::default()
    };
    eeg::beta_power_series(&session, &config).map_err(value_error)
}

#[pyfunction]
fn zscore(values: Vec<f64>) -> PyResult<Vec<f64>> {
    eeg::zscore_normalize(&values).map_err(value_error)
}

/// Fitted cubic `y = b0 + b1 x + b2 x² + b3 x³` over intensity `x ∈ [0, 100]`.
#[pyclass(name = "LoadModel", frozen)]
struct PyLoadModel(model::LoadModel);

#[pymethods]
impl PyLoadModel {
    #[staticmethod]
    fn from_coefficients(beta: [f64; 4]) -> Self {
        Self(model::LoadModel::from_coefficients(beta))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(value_error)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("model serializes")
    }

    #[getter]
    fn coefficients(&self) -> [f64; 4] {
        self.0.coefficients()
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.0.r_squared
    }

    #[getter]
    fn rmse(&self) -> f64 {
        self.0.rmse
    }

    #[getter]
    fn inflection(&self) -> Option<f64> {
        self.0.inflection.map(|i| i.x)
    }

    fn predict(&self, x: f64) -> f64 {
        self.0.predict(x)
    }

    /// Maximizer of the curve: dict with `cli_star`, `x_star`, `y_star`, `kind`.
    fn optimal_cli<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let best = model::optimal_cli(&self.0);
        let d = PyDict::new(py);
        d.set_item("cli_star", best.cli_star)?;
        d.set_item("x_star", best.optimum.x_star)?;
        d.set_item("y_star", best.optimum.y_star)?;
        let kind = serde_json::to_value(best.optimum.kind).expect("kind serializes");
        d.set_item("kind", kind.as_str())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let [b0, b1, b2, b3] = self.0.coefficients();
        format!(
            "LoadModel(beta=[{b0}, {b1}, {b2}, {b3}], r_squared={})",
            self.0.r_squared
        )
    }
}

#[pyfunction]
fn fit_cubic(points: Vec<(f64, f64)>) -> PyResult<PyLoadModel> {
    let obs = ObservationSet::new(points).map_err(|e: ModelError| value_error(e))?;
    model::fit_cubic(&obs).map(PyLoadModel).map_err(value_error)
}

/// Remapped spatial parameters for a Cognitive Load Index.
#[pyfunction]
#[pyo3(signature = (cli, floor_area = 100))]
fn spatial_config<'py>(py: Python<'py>, cli: f64, floor_area: u32) -> PyResult<Bound<'py, PyDict>> {
    let c =
        space::spatial_config_from_cli(cli, floor_area).map_err(|e: SpaceError| value_error(e))?;
    let d = PyDict::new(py);
    d.set_item("cli", c.cli)?;
    d.set_item("ceiling_height_m", c.ceiling_height_m)?;
    d.set_item("window_count", c.window_count)?;
    d.set_item("partition_count", c.partition_count)?;
    d.set_item("furniture_area_m2", c.furniture_area_m2)?;
    d.set_item("floor_area_m2", c.floor_area_m2)?;
    Ok(d)
}

/// Layout JSON for a Cognitive Load Index.
#[pyfunction]
#[pyo3(signature = (cli, seed = 0, floor_area = 100))]
fn generate_layout(cli: f64, seed: u64, floor_area: u32) -> PyResult<String> {
    let config = space::spatial_config_from_cli(cli, floor_area).map_err(value_error)?;
    let l = layout::generate_layout(&config, seed).map_err(layout_error)?;
    Ok(String::from_utf8(layout::serialize_layout(&l)).expect("JSON is UTF-8"))
}

/// Rule violations of a layout as `(rule, detail)` pairs; empty when valid.
#[pyfunction]
fn validate_layout(layout_json: &str) -> PyResult<Vec<(String, String)>> {
    let l = layout::deserialize_layout(layout_json.as_bytes()).map_err(layout_error)?;
    Ok(layout::validate_layout(&l)
        .violations
        .into_iter()
        .map(|v| {
            let rule = serde_json::to_value(v.rule).expect("rule serializes");
            (rule.as_str().unwrap_or_default().to_string(), v.detail)
        })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (floor_area = 100))]
fn extremum_scenes(floor_area: u32) -> PyResult<String> {
    let scenes = space::extremum_scenes(floor_area).map_err(value_error)?;
    Ok(serde_json::to_string_pretty(&scenes).expect("scenes serialize"))
}

/// Coefficients of the reference participant with its optimum at 62.3.
#[pyfunction]
fn planted_beta() -> [f64; 4] {
    SimulatedParticipant::planted(0.0, 0).true_beta
}

/// Full closed loop for one simulated participant; returns the result as JSON.
#[pyfunction]
#[pyo3(signature = (true_beta, noise_sigma, seed, rounds = 2, encoding_s = 300.0, pre_adaptation_s = 180.0))]
fn closed_loop_adapt(
    py: Python<'_>,
    true_beta: [f64; 4],
    noise_sigma: f64,
    seed: u64,
    rounds: usize,
    encoding_s: f64,
    pre_adaptation_s: f64,
) -> PyResult<String> {
    let participant = SimulatedParticipant {
        true_beta,
        noise_sigma,
        seed,
    };
    let protocol = CalibrationProtocol {
        encoding_s,
        pre_adaptation_s,
        ..CalibrationProtocol::default()
    };
    let result = py
        .detach(|| adapt(&participant, &protocol, rounds))
        .map_err(|e| match e {
            AdaptError::Layout(e) => layout_error(e),
            e => value_error(e),
        })?;
    Ok(serde_json::to_string_pretty(&result).expect("result serializes"))
}

#[pymodule]
fn _cogspace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLoadModel>()?;
    m.add_function(wrap_pyfunction!(welch_psd, m)?)?;
    m.add_function(wrap_pyfunction!(band_power, m)?)?;
    m.add_function(wrap_pyfunction!(beta_power_series, m)?)?;
    m.add_function(wrap_pyfunction!(zscore, m)?)?;
    m.add_function(wrap_pyfunction!(fit_cubic, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_config, m)?)?;
    m.add_function(wrap_pyfunction!(generate_layout, m)?)?;
    m.add_function(wrap_pyfunction!(validate_layout, m)?)?;
    m.add_function(wrap_pyfunction!(extremum_scenes, m)?)?;
    m.add_function(wrap_pyfunction!(planted_beta, m)?)?;
    m.add_function(wrap_pyfunction!(closed_loop_adapt, m)?)?;
    Ok(())
}
