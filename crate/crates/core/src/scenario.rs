//! A complete physical setup: metal, host, dot, optional nanoparticle geometry,
//! pulse and integrator choice.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adiabatic::AdiabaticInputs;
use crate::dynamics::{
    integrate, integrate_observed, DensityMatrix, DriveContext, IntegratorControl, Sampling, StepControl,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::hybrid::{
    effective_dielectric, feedback_parameters, FeedbackParams, HybridGeometry, SqdParams, DEFAULT_N_MAX,
};
use crate::materials::DrudeModel;
use crate::pulse::{PulseParams, WINDOW_HALF_WIDTHS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub metal: DrudeModel,
    pub eps_b: f64,
    pub sqd: SqdParams,
    /// `None` for an isolated dot.
    pub geometry: Option<HybridGeometry>,
    pub n_max: usize,
    pub pulse: PulseParams,
    pub step: StepControl,
    /// Readout at `t_d + readout_widths * t0`; the run starts at `t_d - 6 t0`.
    pub readout_widths: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            metal: DrudeModel::gold(),
            eps_b: 2.16,
            sqd: SqdParams::cdse_znse(),
            geometry: Some(HybridGeometry::default()),
            n_max: DEFAULT_N_MAX,
            pulse: PulseParams::default(),
            step: StepControl::default(),
            readout_widths: WINDOW_HALF_WIDTHS,
        }
    }
}

/// Populations at the readout time and their maxima over the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub rho33_readout: f64,
    pub rho22_readout: f64,
    pub rho33_max: f64,
    pub rho22_max: f64,
}

impl Scenario {
    pub fn isolated() -> Self {
        Self {
            geometry: None,
            ..Self::default()
        }
    }

    pub fn is_hybrid(&self) -> bool {
        self.geometry.is_some()
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.pulse.carrier_frequency(&self.sqd)
    }

    pub fn eps_s_eff(&self) -> Result<f64> {
        effective_dielectric(self.sqd.eps_s, self.eps_b)
    }

    pub fn feedback(&self) -> Result<FeedbackParams> {
        match &self.geometry {
            Some(geom) => feedback_parameters(
                geom,
                &self.sqd,
                &self.metal,
                self.eps_b,
                self.carrier_frequency(),
                self.n_max,
            ),
            None => Ok(FeedbackParams::isolated(self.eps_s_eff()?)),
        }
    }

    pub fn context(&self) -> Result<DriveContext> {
        self.metal.validate()?;
        self.sqd.validate()?;
        self.pulse.validate()?;
        Ok(DriveContext::new(self.sqd, self.pulse, self.feedback()?))
    }

    pub fn span(&self) -> (f64, f64) {
        let p = &self.pulse;
        (
            p.delay - WINDOW_HALF_WIDTHS * p.width,
            p.delay + self.readout_widths * p.width,
        )
    }

    pub fn control(&self, sampling: Sampling) -> IntegratorControl {
        IntegratorControl {
            step: self.step,
            sampling,
        }
    }

    /// Integrate from the ground state and keep the sampled trajectory.
    pub fn run(&self, sampling: Sampling) -> Result<Trajectory> {
        if !(self.readout_widths > 0.0) {
            return Err(Error::Domain("readout_widths must be > 0".into()));
        }
        let ctx = self.context()?;
        integrate(
            &DensityMatrix::ground(),
            &ctx,
            self.span(),
            &self.control(sampling),
        )
    }

    /// Integrate from the ground state keeping only the observables.
    pub fn observe(&self) -> Result<Observables> {
        if !(self.readout_widths > 0.0) {
            return Err(Error::Domain("readout_widths must be > 0".into()));
        }
        let ctx = self.context()?;
        let (mut max33, mut max22) = (0.0_f64, 0.0_f64);
        let last = integrate_observed(
            &DensityMatrix::ground(),
            &ctx,
            self.span(),
            &self.control(Sampling::EveryStep(1)),
            |_, s, _| {
                max33 = max33.max(s.rho33);
                max22 = max22.max(s.rho22);
            },
        )?;
        Ok(Observables {
            rho33_readout: last.rho33,
            rho22_readout: last.rho22,
            rho33_max: max33,
            rho22_max: max22,
        })
    }

    /// Inputs of the perturbative adiabatic theory for this setup.
    pub fn adiabatic_inputs(&self, correction_prefactor: f64) -> Result<AdiabaticInputs> {
        let fb = self.feedback()?;
        let inputs = AdiabaticInputs {
            area: self.pulse.area,
            t0: self.pulse.width,
            mu_ratio: self.sqd.mu_ratio(),
            delta_b: self.sqd.biexciton_binding,
            eps_s_eff: fb.eps_s_eff,
            enhancement_mag: fb.enhancement.norm(),
            correction_prefactor,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// SHA-256 over the canonical serialized form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
