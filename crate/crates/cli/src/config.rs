//! Experiment description consumed by `spnkit simulate` and, for the
//! processing settings, by `spnkit extract`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spnkit::sensor::{generate_profile, io::load_profile};
use spnkit::{
    CaptureSettings, Error, Optics, ProfileSpec, Result, SceneField, SensorProfile, SuppressionConfig,
    WaveletConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSource {
    /// Generate the profile; its seed is replaced by the experiment seed.
    Spec(ProfileSpec),
    /// Load a saved profile verbatim.
    Path(PathBuf),
}

impl Default for ProfileSource {
    fn default() -> Self {
        ProfileSource::Spec(ProfileSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenePlan {
    /// Uniform photon flux, photons/s per pixel.
    Flat { flux: f64 },
    /// Uniform flux chosen so an ideal pixel reaches `fill` of the well.
    FlatFill { fill: f64 },
}

fn open() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapturePlan {
    pub label: String,
    pub count: u64,
    /// Integration time, s.
    pub t_int: f64,
    /// Kelvin.
    pub temperature: f64,
    #[serde(default = "pinhole")]
    pub optics: Optics,
    #[serde(default = "open")]
    pub shutter_open: bool,
    #[serde(default = "no_light")]
    pub scene: ScenePlan,
}

fn pinhole() -> Optics {
    Optics::Pinhole
}

fn no_light() -> ScenePlan {
    ScenePlan::Flat { flux: 0.0 }
}

impl CapturePlan {
    pub fn settings(&self) -> CaptureSettings {
        CaptureSettings {
            t_int: self.t_int,
            temperature: self.temperature,
            optics: self.optics,
            shutter_open: self.shutter_open,
        }
    }

    pub fn scene(&self, profile: &SensorProfile) -> Result<SceneField> {
        let flux = match self.scene {
            ScenePlan::Flat { flux } => flux,
            ScenePlan::FlatFill { fill } => SceneField::flux_for_fill(profile, fill, self.t_int),
        };
        SceneField::flat_field(profile.height, profile.width, flux, profile.cfa)
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("spnkit-run")
}

fn default_suppression() -> Option<SuppressionConfig> {
    Some(SuppressionConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub profile: ProfileSource,
    #[serde(default)]
    pub plans: Vec<CapturePlan>,
    #[serde(default)]
    pub wavelet: WaveletConfig,
    /// Hot-pixel suppression for dark fingerprints; `null` disables it.
    #[serde(default = "default_suppression")]
    pub suppression: Option<SuppressionConfig>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSource::default(),
            plans: Vec::new(),
            wavelet: WaveletConfig::default(),
            suppression: default_suppression(),
            output_dir: default_output(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        // Relative paths inside a config resolve against the config's directory.
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let ProfileSource::Path(p) = &mut cfg.profile {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.wavelet.validate()?;
        if let Some(s) = &self.suppression {
            s.validate()?;
        }
        let mut labels = std::collections::HashSet::new();
        for plan in &self.plans {
            if plan.label.is_empty() || !plan.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(Error::Config(format!("plan label {:?} must be non-empty [A-Za-z0-9._-]", plan.label)));
            }
            if !labels.insert(plan.label.as_str()) {
                return Err(Error::Config(format!("duplicate plan label {:?}", plan.label)));
            }
            plan.settings().validate()?;
            match plan.scene {
                ScenePlan::Flat { flux } if !(flux.is_finite() && flux >= 0.0) => {
                    return Err(Error::Config(format!("plan {:?}: flux must be finite and >= 0", plan.label)));
                }
                ScenePlan::FlatFill { fill } if !(fill.is_finite() && fill >= 0.0) => {
                    return Err(Error::Config(format!("plan {:?}: fill must be finite and >= 0", plan.label)));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn build_profile(&self) -> Result<SensorProfile> {
        match &self.profile {
            ProfileSource::Spec(spec) => generate_profile(&ProfileSpec { seed: self.seed, ..spec.clone() }),
            ProfileSource::Path(path) => {
                let p = load_profile(path)?;
                p.validate()?;
                Ok(p)
            }
        }
    }
}
