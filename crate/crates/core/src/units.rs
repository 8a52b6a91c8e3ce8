//! Physical constants and unit conversions.
//!
//! Interfaces take energies in eV (or meV where noted), lengths in nm and
//! times in ps. Internally all frequencies are angular frequencies in rad/ps.

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;
/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge in C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

pub const NM: f64 = 1e-9;
pub const PS: f64 = 1e-12;

#[inline]
pub fn ev_to_rad_per_ps(energy_ev: f64) -> f64 {
    energy_ev * 1e3 / HBAR_MEV_PS
}

#[inline]
pub fn rad_per_ps_to_ev(omega: f64) -> f64 {
    omega * HBAR_MEV_PS * 1e-3
}

#[inline]
pub fn mev_to_rad_per_ps(energy_mev: f64) -> f64 {
    energy_mev / HBAR_MEV_PS
}

#[inline]
pub fn rad_per_ps_to_mev(omega: f64) -> f64 {
    omega * HBAR_MEV_PS
}

/// Dipole moment in e·nm to C·m.
#[inline]
pub fn e_nm_to_si(mu: f64) -> f64 {
    mu * ELEMENTARY_CHARGE * NM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biexciton_binding_in_rad_per_ps() {
        // 20 meV is quoted as roughly 30 ps^-1
        let db = mev_to_rad_per_ps(20.0);
        assert!((db - 30.385).abs() < 1e-2, "{db}");
    }

    #[test]
    fn hbar_consistency() {
        let from_si = HBAR_SI / ELEMENTARY_CHARGE / PS * 1e3;
        assert!((from_si - HBAR_MEV_PS).abs() < 1e-9);
        assert!((rad_per_ps_to_ev(ev_to_rad_per_ps(2.36)) - 2.36).abs() < 1e-14);
    }
}
