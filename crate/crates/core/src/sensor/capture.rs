use ndarray::Array2;
use rand::Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;

use super::physics::{dark_density, dark_electrons, shot_sigma};
use super::{CaptureSettings, FrameMetadata, Optics, RawFrame, SceneField, SensorProfile};
use crate::error::{Error, Result};
use crate::rng::{CounterRng, DrawTag};

/// Per-pixel intermediate quantities of one capture, in photons/electrons.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelSignal {
    pub mu_ph: f64,
    pub sigma_ph: f64,
    pub mu_e: f64,
    pub sigma_e: f64,
    pub n_pe: f64,
    pub n_dark: f64,
    /// Well content after offsets, read noise and clamping to `[0, well]`.
    pub n_well: f64,
}

/// Relative illumination at pixel `(i, j)` of an `h x w` frame.
pub fn optics_gain(optics: Optics, i: usize, j: usize, h: usize, w: usize) -> f64 {
    match optics {
        Optics::Pinhole => 1.0,
        Optics::Lens { vignetting_alpha } => {
            let cy = (h as f64 - 1.0) / 2.0;
            let cx = (w as f64 - 1.0) / 2.0;
            let corner2 = cy * cy + cx * cx;
            if corner2 == 0.0 {
                return 1.0;
            }
            let (dy, dx) = (i as f64 - cy, j as f64 - cx);
            1.0 - vignetting_alpha * (dy * dy + dx * dx) / corner2
        }
    }
}

fn poisson_draw(mean: f64, rng: &mut CounterRng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    // Poisson::new only fails for non-finite or non-positive means.
    rng.sample(Poisson::new(mean).expect("finite positive mean"))
}

struct Simulation<'a> {
    profile: &'a SensorProfile,
    settings: &'a CaptureSettings,
    scene: Option<&'a SceneField>,
    frame_index: u64,
    mean_dark_per_unit: f64,
    read: Option<Normal<f64>>,
}

impl<'a> Simulation<'a> {
    fn new(
        profile: &'a SensorProfile,
        settings: &'a CaptureSettings,
        scene: &'a SceneField,
        frame_index: u64,
    ) -> Result<Self> {
        settings.validate()?;
        let scene = if settings.shutter_open {
            if scene.photon_flux.dim() != (profile.height, profile.width) {
                return Err(Error::Config(format!(
                    "scene is {:?} but the sensor is {}x{}",
                    scene.photon_flux.dim(),
                    profile.height,
                    profile.width
                )));
            }
            Some(scene)
        } else {
            None
        };
        let j_d = dark_density(profile, settings.temperature)?;
        let mean_dark_per_unit = dark_electrons(j_d, profile.detector_area(), settings.t_int)?;
        let read = if profile.read_noise_sigma > 0.0 {
            Some(Normal::new(0.0, profile.read_noise_sigma).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { profile, settings, scene, frame_index, mean_dark_per_unit, read })
    }

    fn pixel(&self, i: usize, j: usize) -> PixelSignal {
        let p = self.profile;
        let seed = p.seed;
        let stream = |tag| CounterRng::new(seed, self.frame_index, i, j, tag);

        let (mu_ph, mu_e, n_pe) = match self.scene {
            Some(scene) => {
                let gain = optics_gain(self.settings.optics, i, j, p.height, p.width);
                let mu_ph = scene.photon_flux[[i, j]] * self.settings.t_int * gain;
                let mu_e = mu_ph * p.pnu_map[[i, j]];
                (mu_ph, mu_e, poisson_draw(mu_e, &mut stream(DrawTag::PhotoElectrons)))
            }
            None => (0.0, 0.0, 0.0),
        };

        let hot = if p.hot_pixel_map[[i, j]] { p.hot_pixel_gain } else { 1.0 };
        let mean_dark = self.mean_dark_per_unit * p.dark_nonuniformity_map[[i, j]] * hot;
        let n_dark = poisson_draw(mean_dark, &mut stream(DrawTag::DarkElectrons));
        let read = self.read.map_or(0.0, |n| stream(DrawTag::ReadNoise).sample(n));
        let n_well = (n_pe + n_dark + p.fpn_offset(i, j) + read).clamp(0.0, p.well_capacity);

        PixelSignal {
            mu_ph,
            sigma_ph: shot_sigma(mu_ph).unwrap_or(0.0),
            mu_e,
            sigma_e: shot_sigma(mu_e).unwrap_or(0.0),
            n_pe,
            n_dark,
            n_well,
        }
    }

    fn metadata(&self) -> FrameMetadata {
        let p = self.profile;
        FrameMetadata {
            sensor_id: p.sensor_id(),
            t_int: self.settings.t_int,
            temperature: self.settings.temperature,
            optics: self.settings.optics,
            shutter_open: self.settings.shutter_open,
            seed: p.seed,
            frame_index: self.frame_index,
            bit_depth: p.bit_depth,
            cfa: p.cfa,
            conversion_gain: p.conversion_gain,
            well_capacity: p.well_capacity,
        }
    }
}

/// Simulates one frame. Output depends only on the arguments; every random
/// draw is keyed on `(profile.seed, frame_index, row, col, purpose)`.
pub fn capture(
    profile: &SensorProfile,
    settings: &CaptureSettings,
    scene: &SceneField,
    frame_index: u64,
) -> Result<RawFrame> {
    let sim = Simulation::new(profile, settings, scene, frame_index)?;
    let (h, w) = (profile.height, profile.width);
    let max_dn = profile.max_dn() as f64;
    let cg = profile.conversion_gain;
    let data: Vec<u16> = (0..h * w)
        .into_par_iter()
        .map(|idx| {
            let s = sim.pixel(idx / w, idx % w);
            (s.n_well / cg).round().clamp(0.0, max_dn) as u16
        })
        .collect();
    let pixels = Array2::from_shape_vec((h, w), data).expect("shape matches length");
    Ok(RawFrame { pixels, metadata: sim.metadata() })
}

/// Same simulation as [`capture`], returning the per-pixel electron budget
/// instead of quantized output.
pub fn capture_signals(
    profile: &SensorProfile,
    settings: &CaptureSettings,
    scene: &SceneField,
    frame_index: u64,
) -> Result<Array2<PixelSignal>> {
    let sim = Simulation::new(profile, settings, scene, frame_index)?;
    let (h, w) = (profile.height, profile.width);
    let data: Vec<PixelSignal> = (0..h * w).into_par_iter().map(|idx| sim.pixel(idx / w, idx % w)).collect();
    Ok(Array2::from_shape_vec((h, w), data).expect("shape matches length"))
}

/// DN values of one row, e.g. for a vignetting comparison plot.
pub fn row_profile(frame: &RawFrame, row: usize) -> Result<Vec<u16>> {
    if row >= frame.height() {
        return Err(Error::Domain(format!("row {row} out of range 0..{}", frame.height())));
    }
    Ok(frame.pixels.row(row).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::{generate_profile, ProfileSpec};

    fn small_profile(spec: ProfileSpec) -> SensorProfile {
        generate_profile(&ProfileSpec { width: 64, height: 64, ..spec }).unwrap()
    }

    #[test]
    fn cold_short_dark_frame_is_black() {
        let p = small_profile(ProfileSpec { read_noise_sigma: 0.0, fpn_fraction: 0.0, ..Default::default() });
        let scene = SceneField::flat_field(64, 64, 1e9, p.cfa).unwrap();
        let f = capture(&p, &CaptureSettings::dark(1e-6, 200.0), &scene, 0).unwrap();
        assert!(f.pixels.iter().all(|&v| v == 0));
    }

    #[test]
    fn bright_flat_field_saturates() {
        let p = small_profile(ProfileSpec::default());
        let flux = 100.0 * p.well_capacity * p.conversion_gain;
        let scene = SceneField::flat_field(64, 64, flux, p.cfa).unwrap();
        let f = capture(&p, &CaptureSettings::illuminated(1.0, 293.15, Optics::Pinhole), &scene, 0).unwrap();
        assert!(f.pixels.iter().all(|&v| v == 4095));
    }

    #[test]
    fn capture_is_deterministic_and_frame_keyed() {
        let p = small_profile(ProfileSpec { seed: 4, ..Default::default() });
        let scene = SceneField::flat_field(64, 64, 2500.0, p.cfa).unwrap();
        let s = CaptureSettings::illuminated(1.0, 293.15, Optics::Pinhole);
        let a = capture(&p, &s, &scene, 3).unwrap();
        let b = capture(&p, &s, &scene, 3).unwrap();
        let c = capture(&p, &s, &scene, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pixels, c.pixels);
        assert_eq!(a.metadata.frame_index, 3);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let p = small_profile(ProfileSpec { seed: 8, ..Default::default() });
        let scene = SceneField::flat_field(64, 64, 2500.0, p.cfa).unwrap();
        let s = CaptureSettings::illuminated(1.0, 310.0, Optics::Lens { vignetting_alpha: 0.2 });
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| capture(&p, &s, &scene, 1).unwrap())
        };
        assert_eq!(run(1), run(7));
    }

    #[test]
    fn scene_dimension_mismatch_is_config_error() {
        let p = small_profile(ProfileSpec::default());
        let scene = SceneField::flat_field(32, 64, 10.0, p.cfa).unwrap();
        let s = CaptureSettings::illuminated(1.0, 293.15, Optics::Pinhole);
        assert!(matches!(capture(&p, &s, &scene, 0), Err(Error::Config(_))));
        // dark frames ignore the scene
        assert!(capture(&p, &CaptureSettings::dark(1.0, 293.15), &scene, 0).is_ok());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let p = small_profile(ProfileSpec::default());
        let scene = SceneField::flat_field(64, 64, 10.0, p.cfa).unwrap();
        for s in [
            CaptureSettings::dark(0.0, 293.15),
            CaptureSettings::dark(1.0, -3.0),
            CaptureSettings::illuminated(1.0, 293.15, Optics::Lens { vignetting_alpha: 1.0 }),
        ] {
            assert!(capture(&p, &s, &scene, 0).is_err());
        }
    }

    #[test]
    fn signal_bookkeeping() {
        let p = small_profile(ProfileSpec { read_noise_sigma: 0.0, fpn_fraction: 0.0, ..Default::default() });
        let scene = SceneField::flat_field(64, 64, 400.0, p.cfa).unwrap();
        let s = CaptureSettings::illuminated(1.0, 250.0, Optics::Pinhole);
        let sig = capture_signals(&p, &s, &scene, 0).unwrap();
        for (idx, px) in sig.indexed_iter() {
            assert_eq!(px.mu_ph, 400.0);
            assert!((px.sigma_ph - 20.0).abs() < 1e-12);
            assert!((px.sigma_e * px.sigma_e - px.mu_e).abs() < 1e-9);
            assert!((px.mu_e - 400.0 * p.pnu_map[idx]).abs() < 1e-9);
            assert_eq!(px.n_well, (px.n_pe + px.n_dark).min(p.well_capacity));
        }
    }

    #[test]
    fn vignetting_gain_shape() {
        let lens = Optics::Lens { vignetting_alpha: 0.3 };
        assert!((optics_gain(lens, 0, 0, 256, 256) - 0.7).abs() < 1e-12);
        assert!((optics_gain(lens, 255, 255, 256, 256) - 0.7).abs() < 1e-12);
        assert!(optics_gain(lens, 128, 128, 256, 256) > 0.9999);
        assert_eq!(optics_gain(Optics::Pinhole, 0, 0, 256, 256), 1.0);
    }

    #[test]
    fn row_profile_bounds() {
        let p = small_profile(ProfileSpec::default());
        let scene = SceneField::flat_field(64, 64, 10.0, p.cfa).unwrap();
        let f = capture(&p, &CaptureSettings::dark(1.0, 293.15), &scene, 0).unwrap();
        assert_eq!(row_profile(&f, 63).unwrap().len(), 64);
        assert!(matches!(row_profile(&f, 64), Err(Error::Domain(_))));
    }
}
