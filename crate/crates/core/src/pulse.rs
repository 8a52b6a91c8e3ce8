//! Gaussian driving pulse in Rabi-amplitude form.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hybrid::SqdParams;

/// Half-width of the default simulation window, in units of t0.
pub const WINDOW_HALF_WIDTHS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CarrierMode {
    /// ω0 = ω3 / 2.
    TwoPhotonResonance,
    /// Explicit carrier frequency in rad/ps.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Pulse area A in radians.
    pub area: f64,
    /// Delay t_d of the pulse maximum, ps.
    pub delay: f64,
    /// Width t0, ps.
    pub width: f64,
    pub carrier: CarrierMode,
}

impl PulseParams {
    pub fn new(area: f64, delay: f64, width: f64) -> Result<Self> {
        let p = Self {
            area,
            delay,
            width,
            carrier: CarrierMode::TwoPhotonResonance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(Error::Domain(format!("t0 must be > 0, got {}", self.width)));
        }
        if !(self.area >= 0.0) {
            return Err(Error::Domain(format!("area must be >= 0, got {}", self.area)));
        }
        if let CarrierMode::Explicit(w) = self.carrier {
            if !(w > 0.0) {
                return Err(Error::Domain(format!("carrier frequency must be > 0, got {w}")));
            }
        }
        Ok(())
    }

    /// Carrier frequency ω0 in rad/ps.
    pub fn carrier_frequency(&self, sqd: &SqdParams) -> f64 {
        match self.carrier {
            CarrierMode::TwoPhotonResonance => 0.5 * sqd.omega3(),
            CarrierMode::Explicit(w) => w,
        }
    }

    pub fn peak(&self) -> f64 {
        self.area / (PI.sqrt() * self.width)
    }

    /// Default window `[t_d - 6 t0, t_d + 6 t0]`.
    pub fn window(&self) -> (f64, f64) {
        let half = WINDOW_HALF_WIDTHS * self.width;
        (self.delay - half, self.delay + half)
    }
}

impl Default for PulseParams {
    fn default() -> Self {
        let width = 20.0 / SqdParams::cdse_znse().biexciton_binding;
        Self {
            area: 9.0 * PI,
            delay: 2.0,
            width,
            carrier: CarrierMode::TwoPhotonResonance,
        }
    }
}

/// External Rabi amplitude Ω0(t) = A / (√π t0) · exp(-((t - t_d)/t0)²) for the
/// 1–2 transition; the 2–3 amplitude is this times μ32/μ21.
pub fn rabi_amplitude_external(p: &PulseParams, t: f64) -> f64 {
    let x = (t - p.delay) / p.width;
    p.peak() * (-x * x).exp()
}

/// Full width at half maximum of the Gaussian envelope, 2√(ln 2) t0.
pub fn pulse_fwhm(t0: f64) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("t0 must be > 0, got {t0}")));
    }
    Ok(2.0 * std::f64::consts::LN_2.sqrt() * t0)
}

/// Pulse area by adaptive Simpson quadrature over `[t_lo, t_hi]`, which must
/// cover at least `t_d ± 6 t0`.
pub fn numeric_area(p: &PulseParams, t_lo: f64, t_hi: f64) -> Result<f64> {
    let (w_lo, w_hi) = p.window();
    if t_lo > w_lo || t_hi < w_hi {
        return Err(Error::Precondition(format!(
            "integration window [{t_lo}, {t_hi}] does not cover [{w_lo}, {w_hi}]"
        )));
    }
    let f = |t: f64| rabi_amplitude_external(p, t);
    let tol = 1e-12 * p.area.max(f64::MIN_POSITIVE);
    // Split at the peak so the first Simpson panels resolve the Gaussian.
    let mid = p.delay.clamp(t_lo, t_hi);
    Ok(adaptive_simpson(&f, t_lo, mid, tol, 60) + adaptive_simpson(&f, mid, t_hi, tol, 60))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
