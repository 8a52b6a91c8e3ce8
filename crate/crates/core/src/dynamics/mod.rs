//! Density-matrix equations of motion for the three-level dot in the frame
//! rotating at the carrier frequency, with Rabi amplitudes renormalized by the
//! nanoparticle (enhancement plus self-action feedback).

mod integrate;

pub use integrate::{
    integrate, integrate_observed, IntegratorControl, Sampling, StepControl, Trajectory, POSITIVITY_TOL,
    TRACE_TOL,
};

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::hybrid::{FeedbackParams, SqdParams};
use crate::pulse::{rabi_amplitude_external, PulseParams};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Populations and the three upper-triangle coherences of a 3×3 density
/// matrix (ρ12 = ρ21* and so on are implied).
///
/// Also used for time derivatives, hence the vector-space operators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DensityMatrix {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho21: C64,
    pub rho32: C64,
    pub rho31: C64,
}

impl DensityMatrix {
    pub fn ground() -> Self {
        Self {
            rho11: 1.0,
            ..Self::default()
        }
    }

    pub fn biexciton() -> Self {
        Self {
            rho33: 1.0,
            ..Self::default()
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33
    }

    /// Z21 = ρ22 - ρ11.
    pub fn z21(&self) -> f64 {
        self.rho22 - self.rho11
    }

    /// Z32 = ρ33 - ρ22.
    pub fn z32(&self) -> f64 {
        self.rho33 - self.rho22
    }

    /// Full Hermitian matrix, row/column index k ↔ level k+1.
    pub fn to_matrix(&self) -> Matrix3<C64> {
        let re = |x: f64| C64::new(x, 0.0);
        Matrix3::new(
            re(self.rho11),
            self.rho21.conj(),
            self.rho31.conj(),
            self.rho21,
            re(self.rho22),
            self.rho32.conj(),
            self.rho31,
            self.rho32,
            re(self.rho33),
        )
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let ev = self.to_matrix().symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Unit trace within `trace_tol` and minimum eigenvalue above `-psd_tol`.
    pub fn check(&self, trace_tol: f64, psd_tol: f64) -> std::result::Result<(), String> {
        let values = [
            self.rho11,
            self.rho22,
            self.rho33,
            self.rho21.re,
            self.rho21.im,
            self.rho32.re,
            self.rho32.im,
            self.rho31.re,
            self.rho31.im,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite element".into());
        }
        let dev = (self.trace() - 1.0).abs();
        if dev >= trace_tol {
            return Err(format!("|Tr rho - 1| = {dev:.3e}"));
        }
        let lambda = self.min_eigenvalue();
        if lambda <= -psd_tol {
            return Err(format!("min eigenvalue {lambda:.3e}"));
        }
        Ok(())
    }

    /// Largest absolute difference over all real components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        d.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn to_array(self) -> [f64; 9] {
        [
            self.rho11,
            self.rho22,
            self.rho33,
            self.rho21.re,
            self.rho21.im,
            self.rho32.re,
            self.rho32.im,
            self.rho31.re,
            self.rho31.im,
        ]
    }

    pub(crate) fn from_array(a: [f64; 9]) -> Self {
        Self {
            rho11: a[0],
            rho22: a[1],
            rho33: a[2],
            rho21: C64::new(a[3], a[4]),
            rho32: C64::new(a[5], a[6]),
            rho31: C64::new(a[7], a[8]),
        }
    }
}

impl Add for DensityMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            rho11: self.rho11 + o.rho11,
            rho22: self.rho22 + o.rho22,
            rho33: self.rho33 + o.rho33,
            rho21: self.rho21 + o.rho21,
            rho32: self.rho32 + o.rho32,
            rho31: self.rho31 + o.rho31,
        }
    }
}

impl Sub for DensityMatrix {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for DensityMatrix {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            rho11: self.rho11 * s,
            rho22: self.rho22 * s,
            rho33: self.rho33 * s,
            rho21: self.rho21 * s,
            rho32: self.rho32 * s,
            rho31: self.rho31 * s,
        }
    }
}

/// Rotating-frame detunings in rad/ps. `delta32 = delta31 - delta21` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detunings {
    pub delta21: f64,
    pub delta31: f64,
    pub delta32: f64,
}

impl Detunings {
    pub fn new(delta21: f64, delta31: f64) -> Self {
        Self {
            delta21,
            delta31,
            delta32: delta31 - delta21,
        }
    }

    /// Δ21 = ω2 - ω0, Δ31 = ω3 - 2ω0.
    pub fn from_carrier(sqd: &SqdParams, omega0: f64) -> Self {
        Self::new(sqd.omega2 - omega0, sqd.omega3() - 2.0 * omega0)
    }
}

/// Everything the equations of motion need besides the state. Immutable and
/// shareable between integrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveContext {
    pub detunings: Detunings,
    pub sqd: SqdParams,
    pub pulse: PulseParams,
    pub feedback: FeedbackParams,
}

impl DriveContext {
    pub fn new(sqd: SqdParams, pulse: PulseParams, feedback: FeedbackParams) -> Self {
        let detunings = Detunings::from_carrier(&sqd, pulse.carrier_frequency(&sqd));
        Self {
            detunings,
            sqd,
            pulse,
            feedback,
        }
    }

    /// Renormalized external amplitudes (Ω̃21, Ω̃32) at time `t`.
    pub fn external_amplitudes(&self, t: f64) -> (C64, C64) {
        let ext21 = self.feedback.field_prefactor() * rabi_amplitude_external(&self.pulse, t);
        (ext21, ext21 * self.sqd.mu_ratio())
    }

    /// Largest rate in the problem, used to seed step sizes.
    pub fn fastest_rate(&self) -> f64 {
        let fb = &self.feedback;
        let drive = self.pulse.peak() * fb.field_prefactor().norm() * self.sqd.mu_ratio().max(1.0);
        [
            self.detunings.delta21.abs(),
            self.detunings.delta31.abs(),
            self.detunings.delta32.abs(),
            drive,
            fb.g1.norm(),
            fb.g2.norm(),
            fb.g3.norm(),
            1.0 / self.pulse.width,
            self.sqd.gamma21 + self.sqd.gamma32,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Ω21 = Ω̃21 + G1 ρ21 + G3 ρ32 and Ω32 = Ω̃32 + G3 ρ21 + G2 ρ32.
pub fn total_rabi_amplitudes(
    state: &DensityMatrix,
    ext21: C64,
    ext32: C64,
    fb: &FeedbackParams,
) -> (C64, C64) {
    (
        ext21 + fb.g1 * state.rho21 + fb.g3 * state.rho32,
        ext32 + fb.g3 * state.rho21 + fb.g2 * state.rho32,
    )
}

/// Time derivative of the density matrix.
pub fn rhs(state: &DensityMatrix, t: f64, ctx: &DriveContext) -> DensityMatrix {
    let (ext21, ext32) = ctx.external_amplitudes(t);
    let (o21, o32) = total_rabi_amplitudes(state, ext21, ext32, &ctx.feedback);
    let DensityMatrix {
        rho22,
        rho33,
        rho21,
        rho32,
        rho31,
        ..
    } = *state;
    let (g21, g32) = (ctx.sqd.gamma21, ctx.sqd.gamma32);
    let d = &ctx.detunings;
    let (z21, z32) = (state.z21(), state.z32());

    // i(a - a*) = -2 Im a
    let flow21 = -2.0 * (o21.conj() * rho21).im;
    let flow32 = -2.0 * (o32.conj() * rho32).im;

    DensityMatrix {
        rho11: g21 * rho22 + flow21,
        rho22: -g21 * rho22 + g32 * rho33 - flow21 + flow32,
        rho33: -g32 * rho33 - flow32,
        rho21: -(I * d.delta21 + 0.5 * g21) * rho21 + I * (o32.conj() * rho31 - o21 * z21),
        rho32: -(I * d.delta32 + 0.5 * (g32 + g21)) * rho32 - I * (o21.conj() * rho31 + o32 * z32),
        rho31: -(I * d.delta31 + 0.5 * g32) * rho31 + I * (o32 * rho21 - o21 * rho32),
    }
}

/// Same derivative with the feedback substituted into the coherence equations,
/// exposing the population-dependent frequency and damping renormalization.
/// Algebraically identical to [`rhs`].
pub fn rhs_self_action_form(state: &DensityMatrix, t: f64, ctx: &DriveContext) -> DensityMatrix {
    let mut out = rhs(state, t, ctx);
    let (ext21, ext32) = ctx.external_amplitudes(t);
    let rates = effective_rates_report(state, ctx);
    let fb = &ctx.feedback;
    let DensityMatrix {
        rho21, rho32, rho31, ..
    } = *state;
    let (z21, z32) = (state.z21(), state.z32());

    out.rho21 = -(I * rates.eff_detuning21 + rates.eff_rate21) * rho21
        + I * (ext32.conj() * rho31 - ext21 * z21)
        + I * ((fb.g3.conj() * rho21.conj() + fb.g2.conj() * rho32.conj()) * rho31 - fb.g3 * rho32 * z21);
    out.rho32 = -(I * rates.eff_detuning32 + rates.eff_rate32) * rho32
        - I * (ext21.conj() * rho31 + ext32 * z32)
        - I * ((fb.g1.conj() * rho21.conj() + fb.g3.conj() * rho32.conj()) * rho31 + fb.g3 * rho21 * z32);
    out
}

/// Population-dependent effective detunings (rad/ps) and coherence damping
/// rates (1/ps) produced by the self-action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub eff_detuning21: f64,
    pub eff_detuning32: f64,
    pub eff_rate21: f64,
    pub eff_rate32: f64,
}

pub fn effective_rates_report(state: &DensityMatrix, ctx: &DriveContext) -> EffectiveRates {
    let fb = &ctx.feedback;
    let (z21, z32) = (state.z21(), state.z32());
    let (g21, g32) = (ctx.sqd.gamma21, ctx.sqd.gamma32);
    EffectiveRates {
        eff_detuning21: ctx.detunings.delta21 + fb.g1.re * z21,
        eff_detuning32: ctx.detunings.delta32 + fb.g2.re * z32,
        eff_rate21: 0.5 * g21 - fb.g1.im * z21,
        eff_rate32: 0.5 * (g21 + g32) - fb.g2.im * z32,
    }
}

/// Validate an initial state against the integration invariants.
pub fn validate_state(state: &DensityMatrix, t: f64) -> Result<()> {
    state
        .check(TRACE_TOL, POSITIVITY_TOL)
        .map_err(|detail| Error::InvariantViolation { t, detail })
}
