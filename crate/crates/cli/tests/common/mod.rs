#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub const T_COLD: f64 = 293.15;
pub const T_WARM: f64 = 318.15;

pub fn spnkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spnkit")).args(args).output().expect("spawn spnkit")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path
}

pub fn flat_plan(label: &str, count: u64) -> Value {
    json!({
        "label": label, "count": count, "t_int": 0.01, "temperature": T_COLD,
        "optics": {"kind": "pinhole"}, "shutter_open": true,
        "scene": {"kind": "flat_fill", "fill": 0.5}
    })
}

/// Exposure at which the default sensor's dark current fills half the well at `T_WARM`.
pub fn half_well_dark_t_int(spec: &spnkit::ProfileSpec) -> f64 {
    use spnkit::sensor::{dark_density_at, CONSTANTS};
    let j = dark_density_at(spec.dark_density_ref, spec.t_ref, spec.delta_e, T_WARM).unwrap();
    0.5 * spec.well_capacity * CONSTANTS.q / (j * spec.pixel_pitch * spec.pixel_pitch)
}

pub fn dark_plan(label: &str, count: u64, temperature: f64, t_int: f64) -> Value {
    json!({
        "label": label, "count": count, "t_int": t_int, "temperature": temperature,
        "shutter_open": false
    })
}

pub fn config(size: usize, seed: u64, plans: Vec<Value>) -> Value {
    json!({
        "profile": {"spec": {"width": size, "height": size}},
        "plans": plans,
        "output_dir": "run",
        "seed": seed,
    })
}

/// Frames of one plan, in frame-index order.
pub fn plan_frames(run_dir: &Path, label: &str) -> Vec<PathBuf> {
    let manifest: Value = serde_json::from_slice(&fs::read(run_dir.join("manifest.json")).unwrap()).unwrap();
    manifest["frames"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["plan"] == label)
        .map(|f| run_dir.join(f["frame"].as_str().unwrap()))
        .collect()
}

pub fn extract(kind: &str, frames: &[PathBuf], output: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["extract", "--kind", kind, "-o", p(output)];
    args.extend_from_slice(extra);
    args.extend(frames.iter().map(|f| p(f)));
    spnkit(&args)
}

pub fn report(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}
