//! `spnkit simulate`: frames, sidecars and a checksummed manifest.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spnkit::sensor::capture;
use spnkit::sensor::io::{save_profile, write_frame};
use spnkit::{Error, Result};

use crate::config::ExperimentConfig;

pub const MANIFEST_FORMAT: &str = "spnkit-manifest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub plan: String,
    pub frame_index: u64,
    /// Relative to the output directory.
    pub frame: PathBuf,
    pub sha256: String,
    pub sidecar: PathBuf,
    pub sidecar_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub sensor_id: String,
    pub profile: PathBuf,
    pub profile_sha256: String,
    pub config_sha256: String,
    pub frames: Vec<FrameEntry>,
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn writable_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Runs every capture plan of `cfg`, writing into `cfg.output_dir`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let profile = cfg.build_profile()?;
    let out = &cfg.output_dir;
    let frames_dir = out.join("frames");
    writable_dir(&frames_dir)?;

    let profile_path = out.join("profile.json");
    save_profile(&profile, &profile_path)?;
    let digest = profile.digest()?;

    // The persisted copy writes into its own directory when re-run.
    let persisted = ExperimentConfig { output_dir: PathBuf::from("."), ..cfg.clone() };
    let config_bytes = serde_json::to_vec_pretty(&persisted)?;
    fs::write(out.join("config.json"), &config_bytes)?;

    let mut jobs = Vec::new();
    let mut next_index = 0u64;
    for (p, plan) in cfg.plans.iter().enumerate() {
        for k in 0..plan.count {
            jobs.push((p, next_index + k));
        }
        next_index += plan.count;
    }
    let scenes = cfg.plans.iter().map(|plan| plan.scene(&profile)).collect::<Result<Vec<_>>>()?;

    let frames = jobs
        .par_iter()
        .map(|&(p, index)| {
            let plan = &cfg.plans[p];
            let frame = capture(&profile, &plan.settings(), &scenes[p], index)?;
            let rel = PathBuf::from("frames").join(format!("{}-{index:05}.pgm", plan.label));
            let path = out.join(&rel);
            let side = write_frame(&frame, &path, Some(&digest))?;
            Ok(FrameEntry {
                plan: plan.label.clone(),
                frame_index: index,
                sha256: sha256_file(&path)?,
                sidecar: rel.with_extension("json"),
                sidecar_sha256: sha256_file(&side)?,
                frame: rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    log::info!("wrote {} frames to {}", frames.len(), frames_dir.display());

    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        sensor_id: profile.sensor_id(),
        profile: PathBuf::from("profile.json"),
        profile_sha256: sha256_file(&profile_path)?,
        config_sha256: hex::encode(Sha256::digest(&config_bytes)),
        frames,
    };
    fs::write(out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CapturePlan, ProfileSource, ScenePlan};
    use spnkit::{Optics, ProfileSpec};

    fn config(dir: &Path, counts: [u64; 2]) -> ExperimentConfig {
        let plan = |label: &str, count, shutter_open| CapturePlan {
            label: label.into(),
            count,
            t_int: 0.01,
            temperature: 300.0,
            optics: Optics::Pinhole,
            shutter_open,
            scene: ScenePlan::FlatFill { fill: 0.4 },
        };
        ExperimentConfig {
            profile: ProfileSource::Spec(ProfileSpec { width: 16, height: 16, ..Default::default() }),
            plans: vec![plan("flat", counts[0], true), plan("dark", counts[1], false)],
            output_dir: dir.to_path_buf(),
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn frame_indices_run_across_plans() {
        let dir = tempfile::tempdir().unwrap();
        let m = simulate(&config(dir.path(), [2, 3])).unwrap();
        let idx: Vec<u64> = m.frames.iter().map(|f| f.frame_index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert_eq!(m.frames[2].frame, PathBuf::from("frames/dark-00002.pgm"));
        for f in &m.frames {
            assert_eq!(sha256_file(&dir.path().join(&f.frame)).unwrap(), f.sha256);
        }
    }

    #[test]
    fn empty_plans_give_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = simulate(&config(dir.path(), [0, 0])).unwrap();
        assert!(m.frames.is_empty());
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn persisted_config_reproduces_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let first = simulate(&config(dir.path(), [1, 1])).unwrap();
        let again = tempfile::tempdir().unwrap();
        fs::copy(dir.path().join("config.json"), again.path().join("config.json")).unwrap();
        let cfg = ExperimentConfig::load(&again.path().join("config.json")).unwrap();
        let second = simulate(&cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn unwritable_output_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = simulate(&config(&blocker.join("sub"), [1, 0])).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}
