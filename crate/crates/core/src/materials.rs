//! Metal dielectric response and quasi-static multipole polarizabilities of a
//! metal nanosphere.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{ev_to_rad_per_ps, rad_per_ps_to_ev, NM};

/// Relative floor on |eps_m + (n+1)/n eps_b| below which a polarizability is
/// reported as singular.
pub const SINGULARITY_FLOOR: f64 = 1e-9;

/// Bisection stopping width for the plasmon resonance search, in eV.
pub const RESONANCE_TOL_EV: f64 = 1e-6;

/// Drude dielectric function `eps_inf - wp^2 / (w^2 + i gamma w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeModel {
    pub eps_inf: f64,
    /// ħω_p in eV.
    pub plasma_energy: f64,
    /// ħγ_p in eV.
    pub damping_energy: f64,
}

impl DrudeModel {
    pub fn new(eps_inf: f64, plasma_energy: f64, damping_energy: f64) -> Result<Self> {
        let model = Self {
            eps_inf,
            plasma_energy,
            damping_energy,
        };
        model.validate()?;
        Ok(model)
    }

    /// Gold parameters placing the dipole resonance in silica near 2.34 eV,
    /// with damping large enough to absorb the interband losses of real gold
    /// around that energy.
    pub fn gold() -> Self {
        Self {
            eps_inf: 9.84,
            plasma_energy: 8.93,
            damping_energy: 0.40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.plasma_energy > 0.0) {
            return Err(Error::Domain(format!(
                "plasma_energy must be > 0, got {}",
                self.plasma_energy
            )));
        }
        if !(self.damping_energy >= 0.0) {
            return Err(Error::Domain(format!(
                "damping_energy must be >= 0, got {}",
                self.damping_energy
            )));
        }
        if !(self.eps_inf >= 1.0) {
            return Err(Error::Domain(format!(
                "eps_inf must be >= 1, got {}",
                self.eps_inf
            )));
        }
        Ok(())
    }

    pub fn plasma_frequency(&self) -> f64 {
        ev_to_rad_per_ps(self.plasma_energy)
    }

    pub fn damping_rate(&self) -> f64 {
        ev_to_rad_per_ps(self.damping_energy)
    }

    /// Unchecked evaluation, valid for either sign of `omega`.
    pub(crate) fn eval(&self, omega: f64) -> C64 {
        let wp = self.plasma_frequency();
        let gp = self.damping_rate();
        C64::new(self.eps_inf, 0.0) - wp * wp / C64::new(omega * omega, gp * omega)
    }
}

impl Default for DrudeModel {
    fn default() -> Self {
        Self::gold()
    }
}

/// Complex permittivity of the metal at angular frequency `omega` (rad/ps).
pub fn metal_permittivity(model: &DrudeModel, omega: f64) -> Result<C64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be > 0, got {omega}")));
    }
    Ok(model.eval(omega))
}

/// A multipole polarizability `4π r^(2n+1) (eps_m - eps_b) / (eps_m + (n+1)/n eps_b)`.
///
/// The radius and the dimensionless shape factor are kept separately so that
/// high orders can be evaluated relative to a length scale without underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarizability {
    order: u32,
    radius_nm: f64,
    factor: C64,
}

impl Polarizability {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn radius_nm(&self) -> f64 {
        self.radius_nm
    }

    /// `(eps_m - eps_b) / (eps_m + (n+1)/n eps_b)`.
    pub fn factor(&self) -> C64 {
        self.factor
    }

    /// Value in SI units, m^(2n+1). Underflows to zero for large orders.
    pub fn value(&self) -> C64 {
        let r = self.radius_nm * NM;
        4.0 * PI * r.powi(2 * self.order as i32 + 1) * self.factor
    }

    /// Value divided by `length_nm^(2n+1)`; dimensionless and finite at any order.
    pub fn relative_to(&self, length_nm: f64) -> C64 {
        let ratio = self.radius_nm / length_nm;
        4.0 * PI * ratio.powi(2 * self.order as i32 + 1) * self.factor
    }
}

/// Dipole polarizability of a sphere of radius `r_nm`.
pub fn dipole_polarizability(r_nm: f64, eps_m: C64, eps_b: f64) -> Result<Polarizability> {
    multipole_polarizability(1, r_nm, eps_m, eps_b)
}

/// Polarizability of multipole order `n` (n = 1 is the dipole).
pub fn multipole_polarizability(n: u32, r_nm: f64, eps_m: C64, eps_b: f64) -> Result<Polarizability> {
    if n < 1 {
        return Err(Error::Domain("multipole order must be >= 1".into()));
    }
    if !(r_nm > 0.0) {
        return Err(Error::Domain(format!("radius must be > 0, got {r_nm}")));
    }
    if !(eps_b > 0.0) {
        return Err(Error::Domain(format!("eps_b must be > 0, got {eps_b}")));
    }
    let ratio = (n as f64 + 1.0) / n as f64;
    let denominator = eps_m + ratio * eps_b;
    if denominator.norm() < SINGULARITY_FLOOR * eps_b {
        return Err(Error::Singularity {
            ratio,
            magnitude: denominator.norm(),
        });
    }
    Ok(Polarizability {
        order: n,
        radius_nm: r_nm,
        factor: (eps_m - eps_b) / denominator,
    })
}

/// Dipole plasmon resonance: the root of `Re[eps_m(ω) + 2 eps_b]` in
/// `[omega_lo, omega_hi]` (rad/ps), located by bisection.
pub fn find_lsp_resonance(model: &DrudeModel, eps_b: f64, omega_lo: f64, omega_hi: f64) -> Result<f64> {
    if !(omega_lo > 0.0 && omega_hi > omega_lo) {
        return Err(Error::Domain(format!("invalid bracket [{omega_lo}, {omega_hi}]")));
    }
    let g = |w: f64| model.eval(w).re + 2.0 * eps_b;
    let not_found = || Error::ResonanceNotFound {
        lo_ev: rad_per_ps_to_ev(omega_lo),
        hi_ev: rad_per_ps_to_ev(omega_hi),
    };
    let (mut lo, mut hi) = (omega_lo, omega_hi);
    let (mut g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(not_found());
    }
    let tol = ev_to_rad_per_ps(RESONANCE_TOL_EV);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Frequency minimising `Re α(ω)` on a uniform grid of `samples` points in
/// `[omega_lo, omega_hi]`, refined by a parabola through the best three points.
///
/// Reported alongside [`find_lsp_resonance`]; for a lossy metal the two differ.
pub fn re_alpha_argmin(
    model: &DrudeModel,
    eps_b: f64,
    omega_lo: f64,
    omega_hi: f64,
    samples: usize,
) -> Result<f64> {
    if samples < 3 || !(omega_lo > 0.0 && omega_hi > omega_lo) {
        return Err(Error::Domain("need >= 3 samples on a positive bracket".into()));
    }
    let step = (omega_hi - omega_lo) / (samples - 1) as f64;
    let re_factor = |w: f64| {
        let e = model.eval(w);
        ((e - eps_b) / (e + 2.0 * eps_b)).re
    };
    let values: Vec<f64> = (0..samples)
        .map(|k| re_factor(omega_lo + step * k as f64))
        .collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let w_best = omega_lo + step * best as f64;
    if best == 0 || best == samples - 1 {
        return Ok(w_best);
    }
    let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature <= 0.0 {
        return Ok(w_best);
    }
    Ok(w_best + 0.5 * step * (a - c) / curvature)
}

/// One row of the `materials` spectrum output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub hbar_omega_ev: f64,
    pub eps: C64,
    pub alpha_m3: C64,
}

pub fn spectrum(
    model: &DrudeModel,
    eps_b: f64,
    r_nm: f64,
    ev_lo: f64,
    ev_hi: f64,
    samples: usize,
) -> Result<Vec<SpectrumPoint>> {
    if samples < 2 || !(ev_hi > ev_lo) {
        return Err(Error::Domain(
            "spectrum needs >= 2 samples and ev_hi > ev_lo".into(),
        ));
    }
    (0..samples)
        .map(|k| {
            let e = ev_lo + (ev_hi - ev_lo) * k as f64 / (samples - 1) as f64;
            let eps = metal_permittivity(model, ev_to_rad_per_ps(e))?;
            let alpha = dipole_polarizability(r_nm, eps, eps_b)?;
            Ok(SpectrumPoint {
                hbar_omega_ev: e,
                eps,
                alpha_m3: alpha.value(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EPS_B: f64 = 2.16;

    #[test]
    fn lossless_zero_crossing_at_screened_plasma_frequency() {
        let m = DrudeModel::new(9.84, 9.01, 0.0).unwrap();
        let w = m.plasma_frequency() / m.eps_inf.sqrt();
        let e = metal_permittivity(&m, w).unwrap();
        assert!(e.re.abs() < 1e-12 && e.im == 0.0, "{e}");
    }

    #[test]
    fn high_frequency_asymptote() {
        let m = DrudeModel::gold();
        let e = metal_permittivity(&m, 1e9).unwrap();
        assert_relative_eq!(e.re, m.eps_inf, max_relative = 1e-9);
        assert!(e.im.abs() < 1e-9);
    }

    #[test]
    fn non_positive_frequency_rejected() {
        let m = DrudeModel::gold();
        assert!(matches!(metal_permittivity(&m, 0.0), Err(Error::Domain(_))));
        assert!(matches!(metal_permittivity(&m, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(DrudeModel::new(9.84, 0.0, 0.1).is_err());
        assert!(DrudeModel::new(9.84, 9.0, -0.1).is_err());
        assert!(DrudeModel::new(0.5, 9.0, 0.1).is_err());
    }

    #[test]
    fn default_gold_root_near_2_34_ev() {
        // Oracle: scan Re eps + 2 eps_b on a 0.1 meV grid and locate the sign change.
        let m = DrudeModel::gold();
        let mut prev = (1.5, m.eval(ev_to_rad_per_ps(1.5)).re + 2.0 * EPS_B);
        let mut root = None;
        for k in 1..=25_000 {
            let e = 1.5 + k as f64 * 1e-4;
            let g = m.eval(ev_to_rad_per_ps(e)).re + 2.0 * EPS_B;
            if g.signum() != prev.1.signum() {
                root = Some(0.5 * (e + prev.0));
                break;
            }
            prev = (e, g);
        }
        let root = root.expect("sign change");
        assert!((root - 2.34).abs() < 0.05, "{root}");
    }

    #[test]
    fn index_matched_polarizability_vanishes() {
        for n in [1, 2, 7] {
            let a = multipole_polarizability(n, 12.0, C64::new(EPS_B, 0.0), EPS_B).unwrap();
            assert_eq!(a.value(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn froehlich_pole_is_singular() {
        let r = dipole_polarizability(12.0, C64::new(-2.0 * EPS_B, 0.0), EPS_B);
        assert!(matches!(r, Err(Error::Singularity { .. })));
    }

    #[test]
    fn dipole_is_order_one_multipole() {
        let eps = metal_permittivity(&DrudeModel::gold(), ev_to_rad_per_ps(2.36)).unwrap();
        let a = dipole_polarizability(12.0, eps, EPS_B).unwrap();
        let b = multipole_polarizability(1, 12.0, eps, EPS_B).unwrap();
        assert_eq!(a, b);
        let r = 12e-9_f64;
        let direct = 4.0 * PI * r.powi(3) * (eps - EPS_B) / (eps + 2.0 * EPS_B);
        assert_relative_eq!(a.value().re, direct.re, max_relative = 1e-14);
        assert_relative_eq!(a.value().im, direct.im, max_relative = 1e-14);
    }

    #[test]
    fn high_order_limit() {
        let eps = metal_permittivity(&DrudeModel::gold(), ev_to_rad_per_ps(2.35)).unwrap();
        let a = multipole_polarizability(50, 12.0, eps, EPS_B).unwrap();
        // Limit: 4π r^(2n+1) (eps_m - eps_b)/(eps_m + eps_b), compared relative to r.
        let limit = 4.0 * PI * (eps - EPS_B) / (eps + EPS_B);
        let rel = (a.relative_to(12.0) - limit).norm() / limit.norm();
        // Difference in the denominator is eps_b / n.
        assert!(rel < 0.05, "{rel}");
        let a500 = multipole_polarizability(500, 12.0, eps, EPS_B).unwrap();
        let rel500 = (a500.relative_to(12.0) - limit).norm() / limit.norm();
        assert!(rel500 < rel / 5.0);
        // r^(2n+1) scaling at fixed order.
        let a2 = multipole_polarizability(50, 6.0, eps, EPS_B).unwrap();
        assert_relative_eq!(
            a.relative_to(1.0).norm() / a2.relative_to(1.0).norm(),
            2f64.powi(101),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lossless_resonance_matches_analytic_root() {
        let m = DrudeModel::new(1.0, 9.01, 0.0).unwrap();
        let expected = m.plasma_frequency() / (1.0 + 2.0 * EPS_B).sqrt();
        let w = find_lsp_resonance(&m, EPS_B, ev_to_rad_per_ps(1.0), ev_to_rad_per_ps(8.0)).unwrap();
        assert!((rad_per_ps_to_ev(w - expected)).abs() < 2e-6);
    }

    #[test]
    fn resonance_missing_from_bracket() {
        let m = DrudeModel::gold();
        let r = find_lsp_resonance(&m, EPS_B, ev_to_rad_per_ps(3.0), ev_to_rad_per_ps(4.0));
        assert!(matches!(r, Err(Error::ResonanceNotFound { .. })));
    }

    #[test]
    fn resonance_redshifts_with_host_permittivity() {
        let m = DrudeModel::gold();
        let (lo, hi) = (ev_to_rad_per_ps(1.0), ev_to_rad_per_ps(4.0));
        let w1 = find_lsp_resonance(&m, EPS_B, lo, hi).unwrap();
        let w2 = find_lsp_resonance(&m, 2.0 * EPS_B, lo, hi).unwrap();
        assert!(w2 < w1);
        // Dense-scan check of monotonic decrease in eps_b.
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let eb = 1.0 + 0.25 * k as f64;
            let w = find_lsp_resonance(&m, eb, lo, hi).unwrap();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn argmin_diagnostic_lies_above_root_for_lossy_metal() {
        let m = DrudeModel::gold();
        let (lo, hi) = (ev_to_rad_per_ps(1.8), ev_to_rad_per_ps(3.0));
        let root = find_lsp_resonance(&m, EPS_B, lo, hi).unwrap();
        let argmin = re_alpha_argmin(&m, EPS_B, lo, hi, 4001).unwrap();
        assert!(argmin > root);
        assert!(rad_per_ps_to_ev(argmin - root) < 0.5);
    }

    #[test]
    fn permittivity_parity() {
        let m = DrudeModel::gold();
        for k in 1..50 {
            let w = 0.5 * k as f64;
            let (p, q) = (m.eval(w), m.eval(-w));
            assert_relative_eq!(p.re, q.re, max_relative = 1e-14);
            assert_relative_eq!(p.im, -q.im, max_relative = 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn passive_metal_has_absorbing_polarizabilities(
            e_ev in 0.5f64..6.0, n in 1u32..60, gamma in 0.01f64..1.0
        ) {
            let m = DrudeModel::new(9.84, 8.93, gamma).unwrap();
            let eps = metal_permittivity(&m, ev_to_rad_per_ps(e_ev)).unwrap();
            proptest::prop_assume!(eps.im > 0.0);
            let a = multipole_polarizability(n, 12.0, eps, EPS_B).unwrap();
            proptest::prop_assert!(a.factor().im > 0.0);
        }
    }
}
