use crate::error::{Error, Result};

use super::SensorProfile;

/// Physical constants in SI units (plus Boltzmann in eV/K).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s.
    pub h: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Elementary charge, C.
    pub q: f64,
    /// Boltzmann constant, J/K.
    pub k_j: f64,
    /// Boltzmann constant, eV/K.
    pub k_ev: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    h: 6.626e-34,
    c: 2.998e8,
    q: 1.6e-19,
    k_j: 1.38e-23,
    k_ev: 8.617e-5,
};

/// Energy of one photon of wavelength `lambda` (m), in joules: `h c / lambda`.
pub fn photon_energy(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("wavelength must be > 0, got {lambda}")));
    }
    Ok(CONSTANTS.h * CONSTANTS.c / lambda)
}

/// Poisson standard deviation of a count with mean `mu`.
pub fn shot_sigma(mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::Domain(format!("mean count must be >= 0, got {mu}")));
    }
    Ok(mu.sqrt())
}

/// Shot-noise-limited signal-to-noise ratio `mu_e / sqrt(mu_e)`.
pub fn max_snr(mu_e: f64) -> Result<f64> {
    if !(mu_e >= 0.0) {
        return Err(Error::Domain(format!("electron count must be >= 0, got {mu_e}")));
    }
    Ok(mu_e.sqrt())
}

/// Dark current density at `temperature`, anchored so that
/// `dark_density_at(j_ref, t_ref, de, t_ref) == j_ref`.
///
/// `J(T) = j_ref (T/t_ref)^2 exp(de/(k T) - de/(k t_ref))`, `de = E_t - E_G` in eV.
pub fn dark_density_at(j_ref: f64, t_ref: f64, delta_e: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be > 0 K, got {temperature}")));
    }
    if !(t_ref > 0.0) {
        return Err(Error::Domain(format!("reference temperature must be > 0 K, got {t_ref}")));
    }
    let k = CONSTANTS.k_ev;
    let ratio = temperature / t_ref;
    Ok(j_ref * ratio * ratio * (delta_e / (k * temperature) - delta_e / (k * t_ref)).exp())
}

/// Mean dark current density (A/m²) of `profile` at `temperature` kelvin.
pub fn dark_density(profile: &SensorProfile, temperature: f64) -> Result<f64> {
    dark_density_at(profile.dark_density_ref, profile.t_ref, profile.delta_e, temperature)
}

/// Mean dark electrons `J A t / q`.
pub fn dark_electrons(j_d: f64, area: f64, t_int: f64) -> Result<f64> {
    if !(j_d >= 0.0 && area >= 0.0 && t_int >= 0.0) {
        return Err(Error::Domain(format!(
            "dark current arguments must be >= 0 (j_d={j_d}, area={area}, t_int={t_int})"
        )));
    }
    Ok(j_d * area * t_int / CONSTANTS.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn photon_energy_visible() {
        // h c / lambda by hand: 6.626e-34 * 2.998e8 = 1.98647e-25
        assert_relative_eq!(photon_energy(550e-9).unwrap(), 3.61e-19, max_relative = 0.005);
        assert_relative_eq!(photon_energy(450e-9).unwrap(), 4.41e-19, max_relative = 0.005);
        let e = photon_energy(500e-9).unwrap();
        assert_relative_eq!(photon_energy(1000e-9).unwrap(), e / 2.0, max_relative = 1e-15);
        assert!(matches!(photon_energy(0.0), Err(Error::Domain(_))));
        assert!(photon_energy(-1e-9).is_err());
    }

    #[test]
    fn shot_and_snr() {
        assert_eq!(shot_sigma(100.0).unwrap(), 10.0);
        assert_eq!(shot_sigma(0.0).unwrap(), 0.0);
        assert_relative_eq!(shot_sigma(2.0).unwrap(), 1.41421, epsilon = 1e-5);
        assert!(shot_sigma(-1.0).is_err());
        assert_eq!(max_snr(10_000.0).unwrap(), 100.0);
        assert_eq!(max_snr(1.0).unwrap(), 1.0);
        assert_relative_eq!(max_snr(5000.0).unwrap(), 70.71, epsilon = 0.01);
        assert!(max_snr(-0.5).is_err());
    }

    #[test]
    fn dark_density_anchor_and_ratio() {
        assert_eq!(dark_density_at(1e-5, 293.15, -0.6, 293.15).unwrap(), 1e-5);
        // (318.15/293.15)^2 * e^(23.751 - 21.885) = 7.61
        let ratio = dark_density_at(1.0, 293.15, -0.6, 318.15).unwrap();
        assert_relative_eq!(ratio, 7.61, max_relative = 0.01);
        assert!(dark_density_at(1.0, 293.15, -0.6, 0.0).is_err());
    }

    #[test]
    fn dark_density_monotone() {
        let mut prev = 0.0;
        for t in (150..400).step_by(5) {
            let j = dark_density_at(1e-5, 293.15, -0.6, t as f64).unwrap();
            assert!(j > prev);
            prev = j;
        }
    }

    #[test]
    fn dark_electrons_hand_value() {
        let area = 1.12e-6 * 1.12e-6;
        assert_relative_eq!(dark_electrons(1e-5, area, 1.0).unwrap(), 78.4, max_relative = 1e-3);
        assert_eq!(dark_electrons(1e-5, area, 0.0).unwrap(), 0.0);
        let one = dark_electrons(1e-5, area, 1.0).unwrap();
        assert_relative_eq!(dark_electrons(1e-5, area, 2.0).unwrap(), 2.0 * one, max_relative = 1e-15);
        assert!(dark_electrons(-1.0, area, 1.0).is_err());
    }
}
