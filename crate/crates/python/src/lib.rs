//! Python bindings: `import tpro_py`.

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::f64::consts::PI;

use tpro::adiabatic::{area_first_max, biexciton_population_adiabatic, two_photon_area};
use tpro::config::{ConfigError, RunConfig};
use tpro::dynamics::Sampling;
use tpro::sweeps::{self, Axis, AxisName, Observable, SweepResult, SweepSpec};
use tpro::units::{ev_to_rad_per_ps, rad_per_ps_to_ev, rad_per_ps_to_mev};

fn numeric(e: tpro::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn config_err(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Drude permittivity of the metal; energies in eV.
#[pyclass(module = "tpro_py", from_py_object)]
#[derive(Clone, Copy)]
pub struct DrudeModel {
    inner: tpro::materials::DrudeModel,
}

#[pymethods]
impl DrudeModel {
    #[new]
    #[pyo3(signature = (eps_inf=None, plasma_energy=None, damping_energy=None))]
    fn new(eps_inf: Option<f64>, plasma_energy: Option<f64>, damping_energy: Option<f64>) -> PyResult<Self> {
        let gold = tpro::materials::DrudeModel::gold();
        let inner = tpro::materials::DrudeModel::new(
            eps_inf.unwrap_or(gold.eps_inf),
            plasma_energy.unwrap_or(gold.plasma_energy),
            damping_energy.unwrap_or(gold.damping_energy),
        )
        .map_err(numeric)?;
        Ok(Self { inner })
    }

    #[getter]
    fn eps_inf(&self) -> f64 {
        self.inner.eps_inf
    }

    #[getter]
    fn plasma_energy(&self) -> f64 {
        self.inner.plasma_energy
    }

    #[getter]
    fn damping_energy(&self) -> f64 {
        self.inner.damping_energy
    }

    /// Complex permittivity at photon energy `hbar_omega_ev`.
    fn permittivity(&self, hbar_omega_ev: f64) -> PyResult<C64> {
        tpro::materials::metal_permittivity(&self.inner, ev_to_rad_per_ps(hbar_omega_ev)).map_err(numeric)
    }

    /// Dipole plasmon resonance in eV, bracketed by `[lo_ev, hi_ev]`.
    #[pyo3(signature = (eps_b=2.16, lo_ev=1.5, hi_ev=3.5))]
    fn lsp_resonance(&self, eps_b: f64, lo_ev: f64, hi_ev: f64) -> PyResult<f64> {
        tpro::materials::find_lsp_resonance(
            &self.inner,
            eps_b,
            ev_to_rad_per_ps(lo_ev),
            ev_to_rad_per_ps(hi_ev),
        )
        .map(rad_per_ps_to_ev)
        .map_err(numeric)
    }

    fn __repr__(&self) -> String {
        format!(
            "DrudeModel(eps_inf={}, plasma_energy={}, damping_energy={})",
            self.inner.eps_inf, self.inner.plasma_energy, self.inner.damping_energy
        )
    }
}

/// Multipole polarizability of order `n` in SI units (m^(2n+1)).
#[pyfunction]
#[pyo3(signature = (r_nm, eps_m, eps_b, n=1))]
fn polarizability(r_nm: f64, eps_m: C64, eps_b: f64, n: u32) -> PyResult<C64> {
    tpro::materials::multipole_polarizability(n, r_nm, eps_m, eps_b)
        .map(|a| a.value())
        .map_err(numeric)
}

/// A full run configuration with the paper defaults.
#[pyclass(module = "tpro_py", from_py_object)]
#[derive(Clone)]
pub struct Config {
    inner: RunConfig,
}

impl Config {
    fn edit(&mut self, f: impl FnOnce(&mut RunConfig)) -> PyResult<()> {
        let mut next = self.inner.clone();
        f(&mut next);
        next.normalize();
        next.validate().map_err(config_err)?;
        self.inner = next;
        Ok(())
    }
}

fn sweep_dict<'py>(py: Python<'py>, r: &SweepResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("x", r.x_values.clone())?;
    d.set_item("y", r.y_values.clone())?;
    for obs in Observable::ALL {
        let grid: Vec<Vec<f64>> = (0..r.y_values.len()).map(|j| r.column(j, obs)).collect();
        d.set_item(obs.as_str(), grid)?;
    }
    d.set_item("failures", r.failures())?;
    d.set_item("csv", r.to_csv(&[]))?;
    Ok(d)
}

fn axis(name: AxisName, range: (f64, f64, usize)) -> Axis {
    Axis::linear(name, range.0, range.1, range.2)
}

#[pymethods]
impl Config {
    /// Parse a TOML document; the empty string gives the defaults.
    #[new]
    #[pyo3(signature = (toml=""))]
    fn new(toml: &str) -> PyResult<Self> {
        RunConfig::from_toml_str(toml)
            .map(|inner| Self { inner })
            .map_err(config_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn area_pi(&self) -> f64 {
        self.inner.pulse.area_pi
    }

    #[setter]
    fn set_area_pi(&mut self, v: f64) -> PyResult<()> {
        self.edit(|c| c.pulse.area_pi = v)
    }

    #[getter]
    fn t0_ps(&self) -> f64 {
        self.inner.pulse.t0_ps
    }

    #[setter]
    fn set_t0_ps(&mut self, v: f64) -> PyResult<()> {
        self.edit(|c| c.pulse.t0_ps = v)
    }

    #[getter]
    fn td_ps(&self) -> f64 {
        self.inner.pulse.td_ps
    }

    #[setter]
    fn set_td_ps(&mut self, v: f64) -> PyResult<()> {
        self.edit(|c| c.pulse.td_ps = v)
    }

    #[getter]
    fn isolated(&self) -> bool {
        self.inner.isolated
    }

    #[setter]
    fn set_isolated(&mut self, v: bool) -> PyResult<()> {
        self.edit(|c| c.isolated = v)
    }

    #[getter]
    fn d_nm(&self) -> Option<f64> {
        self.inner.geometry.as_ref().map(|g| g.distance_nm)
    }

    #[setter]
    fn set_d_nm(&mut self, v: f64) -> PyResult<()> {
        if self.inner.isolated {
            return Err(PyValueError::new_err("isolated configuration has no distance"));
        }
        self.edit(|c| {
            if let Some(g) = c.geometry.as_mut() {
                g.distance_nm = v;
            }
        })
    }

    /// Effective dielectric, enhancement and feedback constants.
    fn hybrid_info<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.scenario();
        let fb = s.feedback().map_err(numeric)?;
        let d = PyDict::new(py);
        d.set_item("carrier_ev", rad_per_ps_to_ev(s.carrier_frequency()))?;
        d.set_item("eps_s_eff", fb.eps_s_eff)?;
        d.set_item("enhancement", fb.enhancement)?;
        d.set_item("terms", fb.terms)?;
        for (name, g) in [("g1", fb.g1), ("g2", fb.g2), ("g3", fb.g3)] {
            d.set_item(name, g)?;
            d.set_item(
                format!("{name}_mev"),
                C64::new(rad_per_ps_to_mev(g.re), rad_per_ps_to_mev(g.im)),
            )?;
        }
        Ok(d)
    }

    /// Time series from the ground state; every accepted step unless
    /// `sample_interval_ps` is given.
    #[pyo3(signature = (sample_interval_ps=None))]
    fn run<'py>(&self, py: Python<'py>, sample_interval_ps: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let sampling = match sample_interval_ps {
            Some(dt) => Sampling::Interval(dt),
            None => self.inner.sampling(),
        };
        let traj = py
            .detach(|| self.inner.scenario().run(sampling))
            .map_err(numeric)?;
        let d = PyDict::new(py);
        d.set_item("t_ps", traj.times.clone())?;
        let col =
            |f: fn(&tpro::dynamics::DensityMatrix) -> f64| traj.states.iter().map(f).collect::<Vec<_>>();
        let ccol =
            |f: fn(&tpro::dynamics::DensityMatrix) -> C64| traj.states.iter().map(f).collect::<Vec<_>>();
        d.set_item("rho11", col(|s| s.rho11))?;
        d.set_item("rho22", col(|s| s.rho22))?;
        d.set_item("rho33", col(|s| s.rho33))?;
        d.set_item("rho21", ccol(|s| s.rho21))?;
        d.set_item("rho32", ccol(|s| s.rho32))?;
        d.set_item("rho31", ccol(|s| s.rho31))?;
        Ok(d)
    }

    /// Populations at readout and their maxima over the trajectory.
    fn observe<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let o = py.detach(|| self.inner.scenario().observe()).map_err(numeric)?;
        let d = PyDict::new(py);
        for obs in Observable::ALL {
            d.set_item(obs.as_str(), obs.of(&o))?;
        }
        Ok(d)
    }

    /// Incident area (units of π) that the adiabatic theory maps to A2 = π,
    /// times `correction`.
    #[pyo3(signature = (correction=tpro::adiabatic::FIRST_MAX_CORRECTION))]
    fn adiabatic_first_max(&self, correction: f64) -> PyResult<f64> {
        let inputs = self
            .inner
            .scenario()
            .adiabatic_inputs(correction)
            .map_err(numeric)?;
        Ok(area_first_max(&inputs) / PI)
    }

    /// sin²(A2/2) of the adiabatic theory at the configured area.
    fn adiabatic_population(&self) -> PyResult<f64> {
        let inputs = self.inner.scenario().adiabatic_inputs(1.0).map_err(numeric)?;
        Ok(biexciton_population_adiabatic(two_photon_area(&inputs)))
    }

    /// Scan over areas (units of π); returns the area-scan CSV columns.
    #[pyo3(signature = (areas_pi, workers=None))]
    fn area_scan<'py>(
        &self,
        py: Python<'py>,
        areas_pi: Vec<f64>,
        workers: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let scenario = self.inner.scenario();
        let areas: Vec<f64> = areas_pi.iter().map(|a| a * PI).collect();
        let records = py
            .detach(|| sweeps::area_scan(&areas, &scenario, workers))
            .map_err(numeric)?;
        let d = PyDict::new(py);
        d.set_item("area_pi", areas_pi)?;
        for obs in Observable::ALL {
            let v: Vec<f64> = records
                .iter()
                .map(|r| r.outcome.as_ref().map_or(f64::NAN, |o| obs.of(o)))
                .collect();
            d.set_item(obs.as_str(), v)?;
        }
        d.set_item(
            "a2_rad",
            records.iter().map(|r| r.two_photon_area).collect::<Vec<_>>(),
        )?;
        d.set_item(
            "rho33_adiabatic",
            records.iter().map(|r| r.rho33_adiabatic).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    /// Area (π) × width (ps) grid; ranges are `(lo, hi, n)`.
    #[pyo3(signature = (area_range, t0_range, workers=None))]
    fn sweep_area_duration<'py>(
        &self,
        py: Python<'py>,
        area_range: (f64, f64, usize),
        t0_range: (f64, f64, usize),
        workers: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = SweepSpec::new(
            axis(AxisName::AreaPi, area_range),
            axis(AxisName::T0Ps, t0_range),
            self.inner.scenario(),
        );
        let r = py
            .detach(|| sweeps::sweep_area_duration(&spec, workers))
            .map_err(numeric)?;
        sweep_dict(py, &r)
    }

    /// Area (π) × distance (nm) grid; ranges are `(lo, hi, n)`.
    #[pyo3(signature = (area_range, d_range, workers=None))]
    fn sweep_area_distance<'py>(
        &self,
        py: Python<'py>,
        area_range: (f64, f64, usize),
        d_range: (f64, f64, usize),
        workers: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = SweepSpec::new(
            axis(AxisName::AreaPi, area_range),
            axis(AxisName::DNm, d_range),
            self.inner.scenario(),
        );
        let r = py
            .detach(|| sweeps::sweep_area_distance(&spec, workers))
            .map_err(numeric)?;
        sweep_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(area_pi={}, t0_ps={}, td_ps={}, isolated={}, d_nm={:?})",
            self.inner.pulse.area_pi,
            self.inner.pulse.t0_ps,
            self.inner.pulse.td_ps,
            self.inner.isolated,
            self.d_nm()
        )
    }
}

/// Number of maxima with prominence at least `min_prominence`.
#[pyfunction]
#[pyo3(signature = (ys, min_prominence=0.05))]
fn count_maxima(ys: Vec<f64>, min_prominence: f64) -> usize {
    sweeps::count_maxima(&ys, min_prominence)
}

/// Abscissa of the first prominent maximum, or None.
#[pyfunction]
#[pyo3(signature = (xs, ys, min_prominence=0.05))]
fn first_maximum(xs: Vec<f64>, ys: Vec<f64>, min_prominence: f64) -> PyResult<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err("xs and ys differ in length"));
    }
    Ok(sweeps::first_maximum(&xs, &ys, min_prominence))
}

#[pymodule]
fn tpro_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DrudeModel>()?;
    m.add_class::<Config>()?;
    m.add_function(wrap_pyfunction!(polarizability, m)?)?;
    m.add_function(wrap_pyfunction!(count_maxima, m)?)?;
    m.add_function(wrap_pyfunction!(first_maximum, m)?)?;
    m.add("HBAR_MEV_PS", tpro::units::HBAR_MEV_PS)?;
    Ok(())
}
