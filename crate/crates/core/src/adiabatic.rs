//! Perturbative adiabatic theory of the two-photon Rabi oscillation: the
//! effective two-photon amplitude and area, the sin² population law and the
//! incident area that first inverts the dot.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Empirical prefactor multiplying the first-inversion area when drawing
/// overlay curves, fitted to full numerical solutions of this model family.
/// Never used when checking the bare theory.
pub const FIRST_MAX_CORRECTION: f64 = 0.62;

/// Peak Rabi amplitude, as a fraction of ΔB/2, above which the perturbative
/// treatment is flagged.
pub const PERTURBATIVE_WARN_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticInputs {
    /// Incident pulse area A (rad).
    pub area: f64,
    /// Pulse width t0 (ps).
    pub t0: f64,
    /// μ32 / μ21.
    pub mu_ratio: f64,
    /// ΔB (rad/ps).
    pub delta_b: f64,
    pub eps_s_eff: f64,
    /// |1 + α/(2πd³)|, 1 for an isolated dot.
    pub enhancement_mag: f64,
    pub correction_prefactor: f64,
}

impl AdiabaticInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t0", self.t0),
            ("mu_ratio", self.mu_ratio),
            ("delta_b", self.delta_b),
            ("eps_s_eff", self.eps_s_eff),
            ("enhancement_mag", self.enhancement_mag),
        ] {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.area >= 0.0) {
            return Err(Error::Domain(format!("area must be >= 0, got {}", self.area)));
        }
        if !(self.correction_prefactor > 0.0 && self.correction_prefactor <= 1.0) {
            return Err(Error::Domain(format!(
                "correction_prefactor must lie in (0, 1], got {}",
                self.correction_prefactor
            )));
        }
        Ok(())
    }

    /// Peak incident amplitude, including enhancement, exceeds half of ΔB/2.
    pub fn perturbative_warning(&self) -> bool {
        let peak = self.enhancement_mag * self.area / (PI.sqrt() * self.t0);
        peak > PERTURBATIVE_WARN_FRACTION * 0.5 * self.delta_b
    }

    fn field_scale(&self) -> f64 {
        self.enhancement_mag / self.eps_s_eff
    }
}

/// Ω2(t) = (2/ΔB)(μ32/μ21)[|enh| Ω0(t) / εs']².
pub fn two_photon_rabi_amplitude(omega0_envelope: f64, inputs: &AdiabaticInputs) -> f64 {
    let scaled = inputs.field_scale() * omega0_envelope;
    2.0 / inputs.delta_b * inputs.mu_ratio * scaled * scaled
}

/// A2 = √(2/π)(μ32/μ21)(|enh| A / εs')² / (ΔB t0).
pub fn two_photon_area(inputs: &AdiabaticInputs) -> f64 {
    let scaled = inputs.field_scale() * inputs.area;
    (2.0 / PI).sqrt() * inputs.mu_ratio * scaled * scaled / (inputs.delta_b * inputs.t0)
}

/// sin²(A2 / 2).
pub fn biexciton_population_adiabatic(a2: f64) -> f64 {
    let s = (0.5 * a2).sin();
    s * s
}

/// Incident area at which A2 = π, scaled by `correction_prefactor`:
/// `c εs' |enh|⁻¹ (π √(π/2) (μ21/μ32) ΔB t0)^½`.
pub fn area_first_max(inputs: &AdiabaticInputs) -> f64 {
    let inner = PI * (PI / 2.0).sqrt() / inputs.mu_ratio * inputs.delta_b * inputs.t0;
    inputs.correction_prefactor * inputs.eps_s_eff / inputs.enhancement_mag * inner.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mev_to_rad_per_ps;
    use approx::assert_relative_eq;

    fn isolated(area: f64, t0_units: f64) -> AdiabaticInputs {
        let delta_b = mev_to_rad_per_ps(20.0);
        AdiabaticInputs {
            area,
            t0: t0_units / delta_b,
            mu_ratio: 4.0 / 3.0,
            delta_b,
            eps_s_eff: 10.32 / 6.48,
            enhancement_mag: 1.0,
            correction_prefactor: 1.0,
        }
    }

    #[test]
    fn amplitude_is_quadratic() {
        let inp = isolated(PI, 20.0);
        assert_eq!(two_photon_rabi_amplitude(0.0, &inp), 0.0);
        let a = two_photon_rabi_amplitude(1.3, &inp);
        let b = two_photon_rabi_amplitude(2.6, &inp);
        assert_relative_eq!(b, 4.0 * a, max_relative = 1e-14);
        let db = inp.delta_b;
        let expected = 2.0 / db * (4.0 / 3.0) * (0.1 * db / 1.592_592_592_6).powi(2);
        assert_relative_eq!(
            two_photon_rabi_amplitude(0.1 * db, &inp),
            expected,
            max_relative = 1e-10
        );
    }

    #[test]
    fn area_is_integral_of_amplitude() {
        // Trapezoid oracle over the Gaussian envelope.
        let inp = isolated(9.0 * PI, 20.0);
        let peak = inp.area / (PI.sqrt() * inp.t0);
        let n = 20_000;
        let (lo, hi) = (-8.0 * inp.t0, 8.0 * inp.t0);
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..=n)
            .map(|k| {
                let t = lo + h * k as f64;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * two_photon_rabi_amplitude(peak * (-(t / inp.t0).powi(2)).exp(), &inp)
            })
            .sum::<f64>()
            * h;
        assert_relative_eq!(total, two_photon_area(&inp), max_relative = 1e-10);
    }

    #[test]
    fn sin_squared_law() {
        assert_eq!(biexciton_population_adiabatic(0.0), 0.0);
        assert_relative_eq!(biexciton_population_adiabatic(PI), 1.0, max_relative = 1e-15);
        assert!(biexciton_population_adiabatic(2.0 * PI) < 1e-30);
    }

    #[test]
    fn zero_area_gives_zero() {
        assert_eq!(two_photon_area(&isolated(0.0, 20.0)), 0.0);
    }

    #[test]
    fn first_max_round_trip() {
        for t0 in [1.0, 8.0, 20.0, 50.0, 900.0] {
            let mut inp = isolated(0.0, t0);
            inp.area = area_first_max(&inp);
            assert_relative_eq!(two_photon_area(&inp), PI, max_relative = 1e-12);
        }
    }

    #[test]
    fn hybrid_area_ratio_is_enhancement() {
        let iso = isolated(0.0, 20.0);
        let hyb = AdiabaticInputs {
            enhancement_mag: 2.2,
            ..iso
        };
        assert_relative_eq!(
            area_first_max(&iso) / area_first_max(&hyb),
            2.2,
            max_relative = 1e-14
        );
        let unit = AdiabaticInputs {
            enhancement_mag: 1.0,
            ..hyb
        };
        assert_eq!(area_first_max(&unit), area_first_max(&iso));
    }

    #[test]
    fn first_max_grows_as_sqrt_t0() {
        let a = area_first_max(&isolated(0.0, 10.0));
        let b = area_first_max(&isolated(0.0, 40.0));
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn monotone_in_t0_and_binding() {
        let mut last = 0.0;
        for k in 1..50 {
            let v = area_first_max(&isolated(0.0, k as f64));
            assert!(v > last);
            last = v;
        }
        let base = isolated(0.0, 20.0);
        let wider = AdiabaticInputs {
            delta_b: 2.0 * base.delta_b,
            ..base
        };
        assert!(area_first_max(&wider) > area_first_max(&base));
    }

    #[test]
    fn correction_prefactor_scales_linearly() {
        let bare = isolated(0.0, 20.0);
        let fitted = AdiabaticInputs {
            correction_prefactor: FIRST_MAX_CORRECTION,
            ..bare
        };
        assert_relative_eq!(
            area_first_max(&fitted),
            0.62 * area_first_max(&bare),
            max_relative = 1e-15
        );
    }

    #[test]
    fn validation_and_warning() {
        let mut inp = isolated(9.0 * PI, 20.0);
        assert!(inp.validate().is_ok());
        // Peak 0.8 ΔB is well beyond the perturbative range.
        assert!(inp.perturbative_warning());
        inp.area = 0.5;
        assert!(!inp.perturbative_warning());
        inp.correction_prefactor = 1.5;
        assert!(inp.validate().is_err());
    }
}
