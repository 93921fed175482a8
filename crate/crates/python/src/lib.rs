//! Python bindings for the actuator toolkit.
//!
//! Exposes scenario construction, force sweeps, equilibrium analysis, offset
//! optimization, transient simulation and curve fitting. Build with
//! `cargo build -p deabias-py --release` and import the produced cdylib as
//! `deabias_py` (see python/smoke_test.py).

use deabias::bias::CLASSIFY_TOLERANCE;
use deabias::{
    build_scenario, classify_bias, default_paper_scenario, scenario_to_config, PaperVariant,
    Prepared, VoltageSchedule,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: deabias::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An immutable, solver-ready actuator scenario.
#[pyclass(name = "Scenario")]
struct PyScenario {
    prepared: Prepared,
}

#[pymethods]
impl PyScenario {
    /// Parse a key-value config document.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let scenario = build_scenario(text).map_err(err)?;
        Ok(Self {
            prepared: scenario.prepare(),
        })
    }

    /// Reference scenario: "mre15", "mre30", "mre40" or a bias mass in grams.
    #[staticmethod]
    fn default(variant: &str) -> PyResult<Self> {
        let v = match variant.to_ascii_lowercase().as_str() {
            "mre15" => PaperVariant::Mre15,
            "mre30" => PaperVariant::Mre30,
            "mre40" => PaperVariant::Mre40,
            other => {
                let grams: f64 = other
                    .trim_end_matches('g')
                    .parse()
                    .map_err(|_| PyValueError::new_err(format!("unknown variant `{variant}`")))?;
                PaperVariant::MassGrams(grams)
            }
        };
        let scenario = default_paper_scenario(v).map_err(err)?;
        Ok(Self {
            prepared: scenario.prepare(),
        })
    }

    /// Serialize back to config text (round-trips exactly).
    fn to_config(&self) -> String {
        scenario_to_config(&self.prepared.scenario)
    }

    /// Same scenario with a different magnet offset (meters).
    fn with_offset(&self, offset_m: f64) -> Self {
        Self {
            prepared: self.prepared.with_offset(offset_m),
        }
    }

    #[getter]
    fn bias_kind(&self) -> String {
        self.prepared.scenario.bias.kind_name().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(bias={}, moving_mass={:.4} g)",
            self.prepared.scenario.bias.kind_name(),
            self.prepared.scenario.moving_mass * 1e3
        )
    }
}

/// Bias force (N) at displacement d (m).
#[pyfunction]
fn bias_force(scenario: &PyScenario, d_m: f64) -> PyResult<f64> {
    scenario.prepared.bias().force(d_m).map_err(err)
}

/// Membrane restoring force (N) at deflection d (m) and voltage V.
#[pyfunction]
fn membrane_force(scenario: &PyScenario, d_m: f64, voltage_v: f64) -> PyResult<f64> {
    deabias::membrane_force(&scenario.prepared.scenario.membrane, d_m, voltage_v).map_err(err)
}

/// Magnet force sweep `[(gap_m, force_N), ...]` on the scenario's magnetic bias.
#[pyfunction]
#[pyo3(signature = (scenario, gaps_m=None))]
fn force_sweep(scenario: &PyScenario, gaps_m: Option<Vec<f64>>) -> PyResult<Vec<(f64, f64)>> {
    use deabias::bias::BiasSpec;
    let model = match &scenario.prepared.scenario.bias {
        BiasSpec::PmMre { magnet, disc, scale, .. } => deabias::magnetics::ForceModel::PmMre {
            magnet: magnet.clone(),
            disc: disc.clone(),
            scale: *scale,
        },
        BiasSpec::PmPm { magnet_a, magnet_b, .. } => deabias::magnetics::ForceModel::PmPm {
            magnet_a: magnet_a.clone(),
            magnet_b: magnet_b.clone(),
        },
        _ => return Err(PyValueError::new_err("force_sweep needs a magnetic bias")),
    };
    let gaps = gaps_m.unwrap_or_else(deabias::magnetics::default_gap_grid);
    let curve = deabias::force_sweep(&model, &gaps).map_err(err)?;
    Ok(curve.points().to_vec())
}

/// All equilibria at one voltage: dict with roots, stability and pull-in flag.
#[pyfunction]
fn find_equilibria<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    voltage_v: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report = deabias::find_equilibria(&scenario.prepared, voltage_v).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("voltage", report.voltage)?;
    out.set_item(
        "roots",
        report
            .roots
            .iter()
            .map(|r| (r.deflection, r.stable))
            .collect::<Vec<_>>(),
    )?;
    out.set_item("pull_in", report.pull_in)?;
    Ok(out)
}

/// Working range between V = 0 and v_on.
#[pyfunction]
fn working_range<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    v_on: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = deabias::working_range(&scenario.prepared, v_on).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("d_off", r.d_off)?;
    out.set_item("d_on", r.d_on)?;
    out.set_item("w_m", r.w_m)?;
    out.set_item("v_on", r.v_on)?;
    out.set_item("bias_class", r.bias_class.to_string())?;
    Ok(out)
}

/// Stable-branch sweep over an ascending voltage grid starting at 0.
#[pyfunction]
fn steady_state(scenario: &PyScenario, voltages: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, String)>> {
    let pts = deabias::steady_state_sweep(&scenario.prepared, &voltages).map_err(err)?;
    Ok(pts
        .into_iter()
        .map(|p| (p.voltage, p.deflection, p.bias_force, p.flag.to_string()))
        .collect())
}

/// Offset maximizing the working range; returns (offset_m, report dict).
#[pyfunction]
fn optimize_offset<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    v_on: f64,
    lo_m: f64,
    hi_m: f64,
) -> PyResult<(f64, Bound<'py, PyDict>)> {
    let (offset, r) = deabias::optimize_offset(&scenario.prepared, v_on, (lo_m, hi_m)).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("d_off", r.d_off)?;
    out.set_item("d_on", r.d_on)?;
    out.set_item("w_m", r.w_m)?;
    out.set_item("bias_class", r.bias_class.to_string())?;
    Ok((offset, out))
}

/// RK4 transient; schedule is [(t_s, level_V), ...]. Returns dict of columns.
#[pyfunction]
#[pyo3(signature = (scenario, schedule, dt_s, duration_s=None))]
fn simulate<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    schedule: Vec<(f64, f64)>,
    dt_s: f64,
    duration_s: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let last = schedule.last().map(|p| p.0).unwrap_or(0.0);
    let duration = duration_s.unwrap_or(last + 1.0);
    let sched = VoltageSchedule::new(schedule, duration).map_err(err)?;
    let result = deabias::simulate(&scenario.prepared, &sched, dt_s, duration).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item(
        "t",
        result.samples.iter().map(|s| s.time).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "u",
        result
            .samples
            .iter()
            .map(|s| s.source_level)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "v",
        result
            .samples
            .iter()
            .map(|s| s.membrane_voltage)
            .collect::<Vec<_>>(),
    )?;
    out.set_item(
        "d",
        result
            .samples
            .iter()
            .map(|s| s.deflection)
            .collect::<Vec<_>>(),
    )?;
    out.set_item("pull_in_at", result.pull_in_at)?;
    Ok(out)
}

/// The built-in 300 s / 14-change staircase schedule.
#[pyfunction]
fn paper_schedule() -> Vec<(f64, f64)> {
    deabias::paper_schedule().points().to_vec()
}

/// Classify the bias slope over [lo_m, hi_m] (defaults to the admissible range).
#[pyfunction]
#[pyo3(signature = (scenario, lo_m=0.0, hi_m=None))]
fn classify(scenario: &PyScenario, lo_m: f64, hi_m: Option<f64>) -> PyResult<String> {
    let hi = hi_m.unwrap_or_else(|| scenario.prepared.bias().admissible_max());
    let class = classify_bias(scenario.prepared.bias(), (lo_m, hi), CLASSIFY_TOLERANCE).map_err(err)?;
    Ok(class.to_string())
}

/// Fit a exp(-b gap) + c to points [(gap_m, force_N), ...].
#[pyfunction]
fn fit_exponential<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let curve = deabias::ForceCurve::new(points, deabias::magnetics::CurveSource::Measurement)
        .map_err(err)?;
    let fit = deabias::fit_exponential(&curve).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("amplitude", fit.amplitude)?;
    out.set_item("decay_rate", fit.decay_rate)?;
    out.set_item("floor", fit.floor)?;
    out.set_item("rms_residual", fit.rms_residual)?;
    out.set_item("iterations", fit.iterations)?;
    out.set_item("converged", fit.converged)?;
    Ok(out)
}

#[pymodule]
fn deabias_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(bias_force, m)?)?;
    m.add_function(wrap_pyfunction!(membrane_force, m)?)?;
    m.add_function(wrap_pyfunction!(force_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(working_range, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_offset, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(paper_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    Ok(())
}
