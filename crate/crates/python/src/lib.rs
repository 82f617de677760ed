//! Python module `optoradar`.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use nalgebra::{Matrix4, Matrix6};
use num_complex::Complex64;
use optoradar::channels::{apply_channel as apply, ChannelSpec, Slot};
use optoradar::config::ConfigFile;
use optoradar::entanglement::{verdict as two_mode_verdict, TwoModeCM};
use optoradar::output::{write_csv, Table as CoreTable};
use optoradar::pipeline::{evaluate_point, PointResult as CorePoint};
use optoradar::presets::{self, PRESETS};
use optoradar::sweep::{run_sweep, Stage, FIXED_COLUMNS};
use optoradar::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows6(m: &Matrix6<f64>) -> Vec<Vec<f64>> {
    (0..6).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn rows4(m: &Matrix4<f64>) -> Vec<Vec<f64>> {
    (0..4).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix4(rows: Vec<Vec<f64>>) -> PyResult<TwoModeCM> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("expected a 4x4 matrix"));
    }
    Ok(TwoModeCM::from_matrix(&Matrix4::from_fn(|i, j| rows[i][j])))
}

/// Experiment configuration, read from TOML or taken from a preset.
#[pyclass(name = "Config", module = "optoradar", from_py_object)]
#[derive(Clone)]
struct Config {
    inner: ConfigFile,
}

#[pymethods]
impl Config {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ConfigFile::parse(text)
            .map(|inner| Config { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ConfigFile::load(&path)
            .map(|inner| Config { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        presets::find(name)
            .map(|p| Config { inner: p.config() })
            .map_err(py_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    /// Number of grid points; raises `ValueError` for an invalid experiment.
    fn validate(&self) -> PyResult<usize> {
        self.inner
            .experiment()
            .map(|e| e.spec.points().len())
            .map_err(py_err)
    }

    /// Run the sweep. The GIL is released while points are evaluated.
    #[pyo3(signature = (jobs = None))]
    fn run(&self, py: Python<'_>, jobs: Option<usize>) -> PyResult<Table> {
        let spec = self.inner.experiment().map_err(py_err)?.spec;
        let rows = py.detach(|| run_sweep(&spec, jobs)).map_err(py_err)?;
        Ok(Table {
            inner: CoreTable {
                primary: spec.primary.var,
                secondary: spec.secondary.as_ref().map(|s| s.var),
                rows,
            },
        })
    }

    /// Evaluate one point of the base profile, optionally at a given
    /// `delta_eg` in units of `omega_ref`.
    #[pyo3(signature = (delta_eg = None))]
    fn evaluate(&self, delta_eg: Option<f64>) -> PyResult<Point> {
        let mut c = self.inner.clone();
        if delta_eg.is_some() {
            c.couplings.delta_eg = delta_eg;
        }
        let profile = c.profile();
        profile.validate().map_err(py_err)?;
        evaluate_point(&profile)
            .map(|inner| Point { inner })
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Config(\n{})", self.inner.to_toml())
    }
}

/// Result rows of a sweep, with the CSV column layout.
#[pyclass(name = "Table", module = "optoradar")]
struct Table {
    inner: CoreTable,
}

#[pymethods]
impl Table {
    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.header()
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }

    /// Values of a numeric column, `None` where absent.
    fn column(&self, name: &str) -> PyResult<Vec<Option<f64>>> {
        let rows = &self.inner.rows;
        let header = self.inner.header();
        if name == header[0] {
            return Ok(rows.iter().map(|r| Some(r.primary)).collect());
        }
        if self.inner.secondary.is_some() && name == header[1] {
            return Ok(rows.iter().map(|r| r.secondary).collect());
        }
        match name {
            "abs_a_s" => return Ok(rows.iter().map(|r| r.abs_a_s).collect()),
            "abs_c_s" => return Ok(rows.iter().map(|r| r.abs_c_s).collect()),
            _ => {}
        }
        for stage in Stage::ALL {
            if name == format!("two_eta_{}", stage.name()) {
                return Ok(rows.iter().map(|r| r.two_eta(stage)).collect());
            }
            if name == format!("log_neg_{}", stage.name()) {
                return Ok(rows.iter().map(|r| r.log_negativity(stage)).collect());
            }
        }
        let hint = if FIXED_COLUMNS.contains(&name) {
            " (not numeric)"
        } else {
            ""
        };
        Err(PyKeyError::new_err(format!(
            "no numeric column `{name}`{hint}"
        )))
    }

    #[getter]
    fn status(&self) -> Vec<&'static str> {
        self.inner.rows.iter().map(|r| r.status.as_str()).collect()
    }

    #[getter]
    fn stable(&self) -> Vec<Option<bool>> {
        self.inner.rows.iter().map(|r| r.stable).collect()
    }

    #[getter]
    fn failed(&self) -> usize {
        self.inner
            .rows
            .iter()
            .filter(|r| r.status.is_failure())
            .count()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_csv(&self.inner, &mut buf).map_err(py_err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// A single evaluated operating point.
#[pyclass(name = "Point", module = "optoradar")]
struct Point {
    inner: CorePoint,
}

#[pymethods]
impl Point {
    #[getter]
    fn a_s(&self) -> Complex64 {
        self.inner.fixed_point.state.a_s
    }

    #[getter]
    fn c_s(&self) -> Complex64 {
        self.inner.fixed_point.state.c_s
    }

    #[getter]
    fn branch(&self) -> &'static str {
        self.inner.fixed_point.branch.as_str()
    }

    #[getter]
    fn stable(&self) -> bool {
        self.inner.stability.stable
    }

    #[getter]
    fn spectral_abscissa(&self) -> f64 {
        self.inner.stability.abscissa
    }

    #[getter]
    fn drift(&self) -> Vec<Vec<f64>> {
        rows6(&self.inner.drift.0)
    }

    #[getter]
    fn diffusion(&self) -> Vec<f64> {
        self.inner.diffusion.0.iter().copied().collect()
    }

    #[getter]
    fn covariance(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.covariance.as_ref().map(|v| rows6(&v.0))
    }

    /// `2 eta` per stage (`c_w`, `c_a`, `c_t`, `c_b`) where available.
    #[getter]
    fn two_eta(&self) -> HashMap<&'static str, f64> {
        self.stages(|v| v.two_eta)
    }

    #[getter]
    fn log_negativity(&self) -> HashMap<&'static str, f64> {
        self.stages(|v| v.log_negativity)
    }

    #[getter]
    fn error(&self) -> Option<String> {
        self.inner.verdict_error.as_ref().map(|e| e.to_string())
    }
}

impl Point {
    fn stages(
        &self,
        f: impl Fn(&optoradar::entanglement::EntanglementVerdict) -> f64,
    ) -> HashMap<&'static str, f64> {
        let mut out = HashMap::new();
        if let Some(s) = &self.inner.verdicts {
            out.insert(Stage::CW.name(), f(&s.c_w));
            if let Some(path) = &s.path {
                for (stage, v) in [Stage::CA, Stage::CT, Stage::CB].into_iter().zip(path) {
                    out.insert(stage.name(), f(v));
                }
            }
        }
        out
    }
}

/// `(name, description)` of every built-in preset.
#[pyfunction]
fn list_presets() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.name, p.description)).collect()
}

/// Covariance matrix of a two-mode squeezed vacuum.
#[pyfunction]
fn two_mode_squeezed(r: f64) -> Vec<Vec<f64>> {
    rows4(&TwoModeCM::two_mode_squeezed(r).assemble())
}

/// `(2 eta, E_N)` of a two-mode covariance matrix.
#[pyfunction]
fn verdict(cm: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let v = two_mode_verdict(&matrix4(cm)?).map_err(py_err)?;
    Ok((v.two_eta, v.log_negativity))
}

/// Thermal loss channel of transmissivity `tau` and bath occupation `n_env`
/// acting on the `first` or `second` mode.
#[pyfunction]
#[pyo3(signature = (cm, tau, n_env, mode = "second"))]
fn apply_channel(cm: Vec<Vec<f64>>, tau: f64, n_env: f64, mode: &str) -> PyResult<Vec<Vec<f64>>> {
    let slot = match mode {
        "first" => Slot::First,
        "second" => Slot::Second,
        m => {
            return Err(PyValueError::new_err(format!(
                "mode must be first or second, not `{m}`"
            )))
        }
    };
    let ch = ChannelSpec::new(tau, n_env).map_err(py_err)?;
    Ok(rows4(&apply(&matrix4(cm)?, slot, &ch).assemble()))
}

#[pymodule]
#[pyo3(name = "optoradar")]
fn optoradar_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<Table>()?;
    m.add_class::<Point>()?;
    m.add_function(wrap_pyfunction!(list_presets, m)?)?;
    m.add_function(wrap_pyfunction!(two_mode_squeezed, m)?)?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(apply_channel, m)?)?;
    Ok(())
}
