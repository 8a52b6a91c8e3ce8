//! Coupling between the quantum dot and the metal nanosphere: dielectric
//! screening, near-field enhancement of the driving field and the self-action
//! (feedback) constants G1..G3.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::materials::{
    dipole_polarizability, metal_permittivity, multipole_polarizability, DrudeModel, Polarizability,
};
use crate::units::{e_nm_to_si, ev_to_rad_per_ps, mev_to_rad_per_ps, EPSILON_0, HBAR_SI, NM, PS};

pub const DEFAULT_N_MAX: usize = 50;
/// Relative size of a multipole term below which the series is truncated.
pub const SERIES_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridGeometry {
    pub mnp_radius_nm: f64,
    pub center_distance_nm: f64,
}

impl HybridGeometry {
    pub fn new(mnp_radius_nm: f64, center_distance_nm: f64) -> Result<Self> {
        let g = Self {
            mnp_radius_nm,
            center_distance_nm,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mnp_radius_nm > 0.0 && self.center_distance_nm > self.mnp_radius_nm) {
            return Err(Error::Domain(format!(
                "geometry needs d > r > 0 (r = {} nm, d = {} nm)",
                self.mnp_radius_nm, self.center_distance_nm
            )));
        }
        Ok(())
    }
}

impl Default for HybridGeometry {
    fn default() -> Self {
        Self {
            mnp_radius_nm: 12.0,
            center_distance_nm: 18.0,
        }
    }
}

/// Three-level ladder quantum dot. Frequencies in rad/ps, dipoles in e·nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqdParams {
    pub omega2: f64,
    pub biexciton_binding: f64,
    pub gamma21: f64,
    pub gamma32: f64,
    pub mu21: f64,
    pub mu32: f64,
    pub eps_s: f64,
}

impl SqdParams {
    /// CdSe/ZnSe dot: ħω2 = 2.36 eV, ħΔB = 20 meV, γ21 = 1/220 ps⁻¹,
    /// γ32 = 1/120 ps⁻¹, μ21 = 0.6 e·nm, μ32 = 0.8 e·nm, εs = 6.
    pub fn cdse_znse() -> Self {
        Self {
            omega2: ev_to_rad_per_ps(2.36),
            biexciton_binding: mev_to_rad_per_ps(20.0),
            gamma21: 1.0 / 220.0,
            gamma32: 1.0 / 120.0,
            mu21: 0.6,
            mu32: 0.8,
            eps_s: 6.0,
        }
    }

    /// Biexciton transition frequency 2(ω2 - ΔB/2).
    pub fn omega3(&self) -> f64 {
        2.0 * (self.omega2 - 0.5 * self.biexciton_binding)
    }

    pub fn mu_ratio(&self) -> f64 {
        self.mu32 / self.mu21
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega2", self.omega2),
            ("biexciton_binding", self.biexciton_binding),
            ("gamma21", self.gamma21),
            ("gamma32", self.gamma32),
            ("mu21", self.mu21),
            ("mu32", self.mu32),
            ("eps_s", self.eps_s),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for SqdParams {
    fn default() -> Self {
        Self::cdse_znse()
    }
}

/// Feedback constants (rad/ps), field enhancement and effective dielectric
/// constant of the dot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackParams {
    pub g1: C64,
    pub g2: C64,
    pub g3: C64,
    /// `1 + α(ω0) / (2π d³)`.
    pub enhancement: C64,
    pub eps_s_eff: f64,
    /// Multipole terms summed (0 for an isolated dot).
    pub terms: usize,
}

impl FeedbackParams {
    /// No nanoparticle: unit enhancement and no self-action.
    pub fn isolated(eps_s_eff: f64) -> Self {
        Self {
            g1: C64::new(0.0, 0.0),
            g2: C64::new(0.0, 0.0),
            g3: C64::new(0.0, 0.0),
            enhancement: C64::new(1.0, 0.0),
            eps_s_eff,
            terms: 0,
        }
    }

    /// Multiplier taking the bare external Rabi amplitude to the one felt by the dot.
    pub fn field_prefactor(&self) -> C64 {
        self.enhancement / self.eps_s_eff
    }
}

/// `(εs + 2εb) / (3εb)`.
pub fn effective_dielectric(eps_s: f64, eps_b: f64) -> Result<f64> {
    if !(eps_s > 0.0 && eps_b > 0.0) {
        return Err(Error::Domain(format!(
            "eps_s and eps_b must be > 0 (got {eps_s}, {eps_b})"
        )));
    }
    Ok((eps_s + 2.0 * eps_b) / (3.0 * eps_b))
}

/// `1 + α / (2π d³)` for a dipole polarizability and center distance `d_nm`.
pub fn enhancement_factor(alpha: &Polarizability, d_nm: f64) -> Result<C64> {
    if alpha.order() != 1 {
        return Err(Error::Domain(format!(
            "enhancement needs the dipole polarizability, got order {}",
            alpha.order()
        )));
    }
    if !(d_nm > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {d_nm}")));
    }
    Ok(1.0 + alpha.relative_to(d_nm) / (2.0 * PI))
}

/// Dimensionless multipole sum `d³ Σ_{n=1}^{terms} (n+1)² αn / d^(2n+4)` with a
/// fixed number of terms.
pub fn multipole_sum(eps_m: C64, eps_b: f64, geom: &HybridGeometry, terms: usize) -> Result<C64> {
    let mut sum = C64::new(0.0, 0.0);
    for n in 1..=terms {
        sum += multipole_term(n, eps_m, eps_b, geom)?;
    }
    Ok(sum)
}

fn multipole_term(n: usize, eps_m: C64, eps_b: f64, geom: &HybridGeometry) -> Result<C64> {
    let a = multipole_polarizability(n as u32, geom.mnp_radius_nm, eps_m, eps_b)?;
    let w = (n as f64 + 1.0).powi(2);
    Ok(w * a.relative_to(geom.center_distance_nm))
}

/// Feedback constants G1 = μ21² K, G2 = μ32² K, G3 = μ21 μ32 K with the
/// shared kernel `K = Σ (n+1)² αn(ω0) / d^(2n+4) / (16π² ħ ε0 εb εs')`.
///
/// The series stops once a term drops below [`SERIES_REL_TOL`] of the running
/// sum; failing that within `n_max` terms is an error.
pub fn feedback_parameters(
    geom: &HybridGeometry,
    sqd: &SqdParams,
    metal: &DrudeModel,
    eps_b: f64,
    omega0: f64,
    n_max: usize,
) -> Result<FeedbackParams> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be >= 1".into()));
    }
    geom.validate()?;
    sqd.validate()?;
    let eps_s_eff = effective_dielectric(sqd.eps_s, eps_b)?;
    let eps_m = metal_permittivity(metal, omega0)?;
    let alpha = dipole_polarizability(geom.mnp_radius_nm, eps_m, eps_b)?;
    let enhancement = enhancement_factor(&alpha, geom.center_distance_nm)?;

    let mut sum = C64::new(0.0, 0.0);
    let mut partial_sums = Vec::with_capacity(n_max);
    let mut last_relative = f64::INFINITY;
    let mut terms = 0;
    for n in 1..=n_max {
        let term = multipole_term(n, eps_m, eps_b, geom)?;
        sum += term;
        partial_sums.push((sum.re, sum.im));
        terms = n;
        last_relative = term.norm() / sum.norm();
        if last_relative < SERIES_REL_TOL {
            break;
        }
    }
    if !(last_relative < SERIES_REL_TOL) {
        return Err(Error::NotConverged {
            terms,
            last_relative,
            partial_sums,
        });
    }

    let d = geom.center_distance_nm * NM;
    let kernel = sum / d.powi(3) / (16.0 * PI * PI * HBAR_SI * EPSILON_0 * eps_b * eps_s_eff) * PS;
    let (mu21, mu32) = (e_nm_to_si(sqd.mu21), e_nm_to_si(sqd.mu32));
    Ok(FeedbackParams {
        g1: kernel * mu21 * mu21,
        g2: kernel * mu32 * mu32,
        g3: kernel * mu21 * mu32,
        enhancement,
        eps_s_eff,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::rad_per_ps_to_mev;
    use approx::assert_relative_eq;

    fn paper_feedback(d_nm: f64) -> FeedbackParams {
        let sqd = SqdParams::cdse_znse();
        let geom = HybridGeometry::new(12.0, d_nm).unwrap();
        feedback_parameters(&geom, &sqd, &DrudeModel::gold(), 2.16, sqd.omega3() / 2.0, 200).unwrap()
    }

    #[test]
    fn effective_dielectric_values() {
        assert_eq!(effective_dielectric(2.16, 2.16).unwrap(), 1.0);
        assert_relative_eq!(
            effective_dielectric(6.0, 2.16).unwrap(),
            10.32 / 6.48,
            max_relative = 1e-15
        );
        assert!((effective_dielectric(6.0, 1e12).unwrap() - 2.0 / 3.0).abs() < 1e-10);
        assert!(effective_dielectric(0.0, 2.16).is_err());
    }

    #[test]
    fn geometry_requires_separated_particles() {
        assert!(HybridGeometry::new(12.0, 12.0).is_err());
        assert!(HybridGeometry::new(0.0, 5.0).is_err());
        assert!(HybridGeometry::new(12.0, 18.0).is_ok());
    }

    #[test]
    fn enhancement_without_particle_is_unity() {
        let a = dipole_polarizability(12.0, C64::new(2.16, 0.0), 2.16).unwrap();
        assert_eq!(enhancement_factor(&a, 18.0).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn enhancement_scales_as_inverse_cube() {
        let eps = metal_permittivity(&DrudeModel::gold(), ev_to_rad_per_ps(2.35)).unwrap();
        let a = dipole_polarizability(12.0, eps, 2.16).unwrap();
        let near = enhancement_factor(&a, 18.0).unwrap() - 1.0;
        let far = enhancement_factor(&a, 180.0).unwrap() - 1.0;
        assert_relative_eq!(near.norm() / far.norm(), 1000.0, max_relative = 1e-12);
    }

    #[test]
    fn enhancement_rejects_higher_orders() {
        let a = multipole_polarizability(2, 12.0, C64::new(-3.0, 1.0), 2.16).unwrap();
        assert!(enhancement_factor(&a, 18.0).is_err());
    }

    #[test]
    fn paper_hybrid_enhancement_near_2_2() {
        let fb = paper_feedback(18.0);
        assert!((fb.enhancement.norm() - 2.2).abs() < 0.2, "{}", fb.enhancement);
    }

    #[test]
    fn feedback_in_sub_mev_range() {
        let fb = paper_feedback(18.0);
        for g in [fb.g1, fb.g2, fb.g3] {
            let mev = rad_per_ps_to_mev(g.norm());
            assert!((0.05..=1.0).contains(&mev), "{mev}");
        }
    }

    #[test]
    fn feedback_vanishes_far_away() {
        let fb = paper_feedback(1000.0);
        for g in [fb.g1, fb.g2, fb.g3] {
            assert!(g.norm() < 1e-9);
        }
        assert!((fb.enhancement - 1.0).norm() < 1e-5);
    }

    #[test]
    fn shared_kernel() {
        let fb = paper_feedback(18.0);
        let sqd = SqdParams::cdse_znse();
        let k1 = fb.g1 / (sqd.mu21 * sqd.mu21);
        let k2 = fb.g2 / (sqd.mu32 * sqd.mu32);
        let k3 = fb.g3 / (sqd.mu21 * sqd.mu32);
        assert!((k1 - k2).norm() <= 1e-14 * k1.norm());
        assert!((k1 - k3).norm() <= 1e-14 * k1.norm());
    }

    #[test]
    fn feedback_decreases_with_distance() {
        let mut last = [f64::INFINITY; 3];
        for k in 0..40 {
            let fb = paper_feedback(18.0 + 2.0 * k as f64);
            let now = [fb.g1.norm(), fb.g2.norm(), fb.g3.norm()];
            for i in 0..3 {
                assert!(now[i] < last[i]);
            }
            last = now;
        }
    }

    #[test]
    fn truncation_converged() {
        let eps = metal_permittivity(&DrudeModel::gold(), SqdParams::cdse_znse().omega3() / 2.0).unwrap();
        for d in [18.0, 24.0, 36.0] {
            let geom = HybridGeometry::new(12.0, d).unwrap();
            let fb = paper_feedback(d);
            let short = multipole_sum(eps, 2.16, &geom, fb.terms).unwrap();
            let full = multipole_sum(eps, 2.16, &geom, fb.terms + 5).unwrap();
            let rel = (full - short).norm() / full.norm();
            assert!(rel < 1e-10, "d = {d}: terms {} rel {rel:e}", fb.terms);
        }
    }

    #[test]
    fn truncation_failure_reports_partial_sums() {
        let sqd = SqdParams::cdse_znse();
        let geom = HybridGeometry::new(12.0, 18.0).unwrap();
        let err =
            feedback_parameters(&geom, &sqd, &DrudeModel::gold(), 2.16, sqd.omega3() / 2.0, 5).unwrap_err();
        match err {
            Error::NotConverged {
                terms, partial_sums, ..
            } => {
                assert_eq!(terms, 5);
                assert_eq!(partial_sums.len(), 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn product_identity(mu21 in 0.01f64..2.0, mu32 in 0.01f64..2.0, d in 13.0f64..60.0) {
            let sqd = SqdParams { mu21, mu32, ..SqdParams::cdse_znse() };
            let geom = HybridGeometry::new(12.0, d).unwrap();
            let fb = feedback_parameters(&geom, &sqd, &DrudeModel::gold(), 2.16, sqd.omega3() / 2.0, 400).unwrap();
            let lhs = fb.g1 * fb.g2;
            let rhs = fb.g3 * fb.g3;
            proptest::prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
        }
    }
}
