//! Run configuration: a TOML document with `[materials]`, `[sqd]`,
//! `[geometry]`, `[pulse]`, `[integrator]` and `[output]` sections plus a
//! top-level `isolated` flag. Every key is optional and defaults to the
//! CdSe/ZnSe dot next to a 12 nm gold sphere at 18 nm center distance.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;
use thiserror::Error;

use crate::dynamics::{Sampling, StepControl};
use crate::hybrid::{HybridGeometry, SqdParams, DEFAULT_N_MAX};
use crate::materials::DrudeModel;
use crate::pulse::{CarrierMode, PulseParams, WINDOW_HALF_WIDTHS};
use crate::scenario::Scenario;
use crate::units::{ev_to_rad_per_ps, mev_to_rad_per_ps};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    MissingFile(String),
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("`{key}` out of range: {message}")]
    OutOfRange { key: String, message: String },
    #[error("conflicting settings: {0}")]
    Conflict(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::MissingFile(_) => 10,
            ConfigError::Syntax(_) => 11,
            ConfigError::UnknownKey(_) => 12,
            ConfigError::InvalidValue { .. } => 13,
            ConfigError::OutOfRange { .. } => 14,
            ConfigError::Conflict(_) => 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialsSection {
    pub eps_inf: f64,
    pub plasma_energy_ev: f64,
    pub damping_energy_ev: f64,
    pub eps_b: f64,
}

impl Default for MaterialsSection {
    fn default() -> Self {
        let gold = DrudeModel::gold();
        Self {
            eps_inf: gold.eps_inf,
            plasma_energy_ev: gold.plasma_energy,
            damping_energy_ev: gold.damping_energy,
            eps_b: 2.16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqdSection {
    pub omega2_ev: f64,
    pub biexciton_binding_mev: f64,
    pub gamma21: f64,
    pub gamma32: f64,
    pub mu21: f64,
    pub mu32: f64,
    pub eps_s: f64,
}

impl Default for SqdSection {
    fn default() -> Self {
        Self {
            omega2_ev: 2.36,
            biexciton_binding_mev: 20.0,
            gamma21: 1.0 / 220.0,
            gamma32: 1.0 / 120.0,
            mu21: 0.6,
            mu32: 0.8,
            eps_s: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub radius_nm: f64,
    pub distance_nm: f64,
    pub n_max: i64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            radius_nm: 12.0,
            distance_nm: 18.0,
            n_max: DEFAULT_N_MAX as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    /// Pulse area in units of π.
    pub area_pi: f64,
    pub t0_ps: f64,
    pub td_ps: f64,
    /// `two_photon_resonance` or `explicit`.
    pub carrier: String,
    /// Carrier photon energy, used when `carrier = "explicit"`.
    pub carrier_ev: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        let p = PulseParams::default();
        Self {
            area_pi: p.area / PI,
            t0_ps: p.width,
            td_ps: p.delay,
            carrier: "two_photon_resonance".into(),
            carrier_ev: 2.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    /// `adaptive` or `rk4`.
    pub mode: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_ps: f64,
    /// Readout at `t_d + readout_widths * t0`.
    pub readout_widths: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let StepControl::Adaptive { rel_tol, abs_tol } = StepControl::default() else {
            unreachable!("adaptive default")
        };
        Self {
            mode: "adaptive".into(),
            rel_tol,
            abs_tol,
            dt_ps: 1e-3,
            readout_widths: WINDOW_HALF_WIDTHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Keep every n-th step of time series.
    pub stride: i64,
    /// Uniform time-series sampling in ps; 0 selects `stride`.
    pub sample_interval_ps: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: ".".into(),
            stride: 1,
            sample_interval_ps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub isolated: bool,
    pub materials: MaterialsSection,
    pub sqd: SqdSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    pub pulse: PulseSection,
    pub integrator: IntegratorSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            isolated: false,
            materials: MaterialsSection::default(),
            sqd: SqdSection::default(),
            geometry: Some(GeometrySection::default()),
            pulse: PulseSection::default(),
            integrator: IntegratorSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Float,
    Int,
    Bool,
    Str,
}

const SCHEMA: &[(&str, &[(&str, Kind)])] = &[
    (
        "materials",
        &[
            ("eps_inf", Kind::Float),
            ("plasma_energy_ev", Kind::Float),
            ("damping_energy_ev", Kind::Float),
            ("eps_b", Kind::Float),
        ],
    ),
    (
        "sqd",
        &[
            ("omega2_ev", Kind::Float),
            ("biexciton_binding_mev", Kind::Float),
            ("gamma21", Kind::Float),
            ("gamma32", Kind::Float),
            ("mu21", Kind::Float),
            ("mu32", Kind::Float),
            ("eps_s", Kind::Float),
        ],
    ),
    (
        "geometry",
        &[
            ("radius_nm", Kind::Float),
            ("distance_nm", Kind::Float),
            ("n_max", Kind::Int),
        ],
    ),
    (
        "pulse",
        &[
            ("area_pi", Kind::Float),
            ("t0_ps", Kind::Float),
            ("td_ps", Kind::Float),
            ("carrier", Kind::Str),
            ("carrier_ev", Kind::Float),
        ],
    ),
    (
        "integrator",
        &[
            ("mode", Kind::Str),
            ("rel_tol", Kind::Float),
            ("abs_tol", Kind::Float),
            ("dt_ps", Kind::Float),
            ("readout_widths", Kind::Float),
        ],
    ),
    (
        "output",
        &[
            ("dir", Kind::Str),
            ("stride", Kind::Int),
            ("sample_interval_ps", Kind::Float),
        ],
    ),
];

fn check_kind(key: &str, value: &toml::Value, kind: Kind) -> Result<(), ConfigError> {
    let ok = match kind {
        Kind::Float => value.is_float() || value.is_integer(),
        Kind::Int => value.is_integer(),
        Kind::Bool => value.is_bool(),
        Kind::Str => value.is_str(),
    };
    if ok {
        Ok(())
    } else {
        let expected = match kind {
            Kind::Float => "a number",
            Kind::Int => "an integer",
            Kind::Bool => "a boolean",
            Kind::Str => "a string",
        };
        Err(ConfigError::InvalidValue {
            key: key.into(),
            message: format!("expected {expected}, got {}", value.type_str()),
        })
    }
}

fn check_schema(table: &toml::Table) -> Result<(), ConfigError> {
    for (key, value) in table {
        if key == "isolated" {
            check_kind(key, value, Kind::Bool)?;
            continue;
        }
        let Some((_, fields)) = SCHEMA.iter().find(|(name, _)| name == key) else {
            return Err(ConfigError::UnknownKey(key.clone()));
        };
        let Some(section) = value.as_table() else {
            return Err(ConfigError::InvalidValue {
                key: key.clone(),
                message: "expected a section".into(),
            });
        };
        for (field, v) in section {
            let path = format!("{key}.{field}");
            let Some((_, kind)) = fields.iter().find(|(f, _)| f == field) else {
                return Err(ConfigError::UnknownKey(path));
            };
            check_kind(&path, v, *kind)?;
        }
    }
    Ok(())
}

fn range(key: &str, ok: bool, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            key: key.into(),
            message: message.into(),
        })
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        check_schema(&table)?;
        let isolated = table
            .get("isolated")
            .and_then(toml::Value::as_bool)
            .unwrap_or(false);
        if isolated && table.contains_key("geometry") {
            return Err(ConfigError::Conflict(
                "`isolated = true` cannot be combined with a [geometry] section".into(),
            ));
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::InvalidValue {
                key: "<document>".into(),
                message: e.message().to_string(),
            })?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::MissingFile(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Geometry present exactly when the dot is not isolated.
    pub fn normalize(&mut self) {
        if self.isolated {
            self.geometry = None;
        } else if self.geometry.is_none() {
            self.geometry = Some(GeometrySection::default());
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialized form, ignoring `output.dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        hex::encode(Sha256::digest(c.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.isolated == self.geometry.is_some() {
            return Err(ConfigError::Conflict(
                "exactly one of `isolated = true` or a [geometry] section must apply".into(),
            ));
        }
        let m = &self.materials;
        range("materials.eps_inf", m.eps_inf >= 1.0, "must be >= 1")?;
        range(
            "materials.plasma_energy_ev",
            m.plasma_energy_ev > 0.0,
            "must be > 0",
        )?;
        range(
            "materials.damping_energy_ev",
            m.damping_energy_ev >= 0.0,
            "must be >= 0",
        )?;
        range("materials.eps_b", m.eps_b > 0.0, "must be > 0")?;

        let s = &self.sqd;
        for (key, v) in [
            ("sqd.omega2_ev", s.omega2_ev),
            ("sqd.biexciton_binding_mev", s.biexciton_binding_mev),
            ("sqd.gamma21", s.gamma21),
            ("sqd.gamma32", s.gamma32),
            ("sqd.mu21", s.mu21),
            ("sqd.mu32", s.mu32),
            ("sqd.eps_s", s.eps_s),
        ] {
            range(key, v > 0.0, format!("must be > 0, got {v}"))?;
        }
        range(
            "sqd.biexciton_binding_mev",
            s.biexciton_binding_mev < 2e3 * s.omega2_ev,
            "must be below twice the exciton energy",
        )?;

        if let Some(g) = &self.geometry {
            range("geometry.radius_nm", g.radius_nm > 0.0, "must be > 0")?;
            range(
                "geometry.distance_nm",
                g.distance_nm > g.radius_nm,
                "must exceed radius_nm",
            )?;
            range("geometry.n_max", g.n_max >= 1, "must be >= 1")?;
        }

        let p = &self.pulse;
        range("pulse.area_pi", p.area_pi >= 0.0, "must be >= 0")?;
        range("pulse.t0_ps", p.t0_ps > 0.0, "must be > 0")?;
        range("pulse.td_ps", p.td_ps.is_finite(), "must be finite")?;
        match p.carrier.as_str() {
            "two_photon_resonance" => {}
            "explicit" => range("pulse.carrier_ev", p.carrier_ev > 0.0, "must be > 0")?,
            other => {
                return Err(ConfigError::InvalidValue {
                    key: "pulse.carrier".into(),
                    message: format!("expected `two_photon_resonance` or `explicit`, got `{other}`"),
                })
            }
        }

        let i = &self.integrator;
        match i.mode.as_str() {
            "adaptive" => {
                range("integrator.rel_tol", i.rel_tol > 0.0, "must be > 0")?;
                range("integrator.abs_tol", i.abs_tol > 0.0, "must be > 0")?;
            }
            "rk4" => range("integrator.dt_ps", i.dt_ps > 0.0, "must be > 0")?,
            other => {
                return Err(ConfigError::InvalidValue {
                    key: "integrator.mode".into(),
                    message: format!("expected `adaptive` or `rk4`, got `{other}`"),
                })
            }
        }
        range("integrator.readout_widths", i.readout_widths > 0.0, "must be > 0")?;

        let o = &self.output;
        range("output.stride", o.stride >= 1, "must be >= 1")?;
        range(
            "output.sample_interval_ps",
            o.sample_interval_ps >= 0.0,
            "must be >= 0",
        )?;
        Ok(())
    }

    pub fn step_control(&self) -> StepControl {
        let i = &self.integrator;
        match i.mode.as_str() {
            "rk4" => StepControl::FixedRk4 { dt: i.dt_ps },
            _ => StepControl::Adaptive {
                rel_tol: i.rel_tol,
                abs_tol: i.abs_tol,
            },
        }
    }

    pub fn sampling(&self) -> Sampling {
        if self.output.sample_interval_ps > 0.0 {
            Sampling::Interval(self.output.sample_interval_ps)
        } else {
            Sampling::EveryStep(self.output.stride.max(1) as usize)
        }
    }

    pub fn scenario(&self) -> Scenario {
        let m = &self.materials;
        let s = &self.sqd;
        let p = &self.pulse;
        let carrier = match p.carrier.as_str() {
            "explicit" => CarrierMode::Explicit(ev_to_rad_per_ps(p.carrier_ev)),
            _ => CarrierMode::TwoPhotonResonance,
        };
        Scenario {
            metal: DrudeModel {
                eps_inf: m.eps_inf,
                plasma_energy: m.plasma_energy_ev,
                damping_energy: m.damping_energy_ev,
            },
            eps_b: m.eps_b,
            sqd: SqdParams {
                omega2: ev_to_rad_per_ps(s.omega2_ev),
                biexciton_binding: mev_to_rad_per_ps(s.biexciton_binding_mev),
                gamma21: s.gamma21,
                gamma32: s.gamma32,
                mu21: s.mu21,
                mu32: s.mu32,
                eps_s: s.eps_s,
            },
            geometry: self.geometry.as_ref().map(|g| HybridGeometry {
                mnp_radius_nm: g.radius_nm,
                center_distance_nm: g.distance_nm,
            }),
            n_max: self.geometry.as_ref().map_or(DEFAULT_N_MAX, |g| g.n_max as usize),
            pulse: PulseParams {
                area: p.area_pi * PI,
                delay: p.td_ps,
                width: p.t0_ps,
                carrier,
            },
            step: self.step_control(),
            readout_widths: self.integrator.readout_widths,
        }
    }
}
