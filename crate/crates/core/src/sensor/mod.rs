//! Physics-based CMOS sensor simulator.

mod capture;
mod frame;
pub mod io;
mod physics;
mod profile;

pub use capture::{capture, capture_signals, optics_gain, row_profile, PixelSignal};
pub use frame::{FrameMetadata, RawFrame};
pub use physics::{
    dark_density, dark_density_at, dark_electrons, max_snr, photon_energy, shot_sigma,
    PhysicalConstants, CONSTANTS,
};
pub use profile::{generate_profile, BayerPattern, ProfileSpec, SensorProfile};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optics {
    /// Unit gain everywhere.
    Pinhole,
    /// Radial vignetting `g(r) = 1 - alpha * r^2`, `r = 1` at the frame corner.
    Lens { vignetting_alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSettings {
    /// Integration time in seconds.
    pub t_int: f64,
    /// Sensor temperature in kelvin.
    pub temperature: f64,
    pub optics: Optics,
    /// `false` captures a dark frame; the scene is ignored.
    pub shutter_open: bool,
}

impl CaptureSettings {
    pub fn illuminated(t_int: f64, temperature: f64, optics: Optics) -> Self {
        Self { t_int, temperature, optics, shutter_open: true }
    }

    pub fn dark(t_int: f64, temperature: f64) -> Self {
        Self { t_int, temperature, optics: Optics::Pinhole, shutter_open: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_int > 0.0 && self.t_int.is_finite()) {
            return Err(Error::Config(format!("t_int must be > 0, got {}", self.t_int)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be > 0 K, got {}",
                self.temperature
            )));
        }
        if let Optics::Lens { vignetting_alpha } = self.optics {
            if !(0.0..1.0).contains(&vignetting_alpha) {
                return Err(Error::Config(format!(
                    "vignetting_alpha must lie in [0, 1), got {vignetting_alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// Incident, already CFA-filtered photon flux in photons/pixel/second.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneField {
    pub photon_flux: Array2<f64>,
    /// Wavelength in meters for each Bayer offset `(0,0), (0,1), (1,0), (1,1)`.
    pub wavelength_per_channel: [f64; 4],
    pub description: String,
}

impl SceneField {
    pub fn new(photon_flux: Array2<f64>, wavelength_per_channel: [f64; 4]) -> Result<Self> {
        if photon_flux.iter().any(|&f| !(f >= 0.0 && f.is_finite())) {
            return Err(Error::Config("photon flux must be finite and >= 0".into()));
        }
        if wavelength_per_channel.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("wavelengths must be > 0".into()));
        }
        Ok(Self { photon_flux, wavelength_per_channel, description: String::new() })
    }

    /// Uniform illumination of `flux` photons/pixel/second.
    pub fn flat_field(height: usize, width: usize, flux: f64, cfa: BayerPattern) -> Result<Self> {
        let mut scene = Self::new(
            Array2::from_elem((height, width), flux),
            cfa.nominal_wavelengths(),
        )?;
        scene.description = format!("flat field, {flux} photons/pixel/s");
        Ok(scene)
    }

    /// Flux needed for a flat field to reach `fill` of the well in `t_int`
    /// seconds at unit gain.
    pub fn flux_for_fill(profile: &SensorProfile, fill: f64, t_int: f64) -> f64 {
        fill * profile.well_capacity / t_int
    }

    /// Total radiant energy (J) collected by pixel `(i, j)` over `t_int`,
    /// before non-uniformity and optics.
    pub fn pixel_energy(&self, i: usize, j: usize, t_int: f64) -> Result<f64> {
        let lambda = self.wavelength_per_channel[(i % 2) * 2 + (j % 2)];
        Ok(self.photon_flux[[i, j]] * t_int * photon_energy(lambda)?)
    }
}
