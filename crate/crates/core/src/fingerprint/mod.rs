//! Device fingerprints built from noise residues.
//!
//! A fingerprint holds one plane per Bayer offset. Each plane is cleaned of
//! row and column means (linear readout patterns), centered, and scaled to
//! unit L2 norm. PRNU references average residues of illuminated frames;
//! dark fingerprints use shutter-closed frames with hot pixels suppressed
//! before residue extraction.

pub mod container;
mod suppress;

pub use suppress::{suppress_hot_pixels, Replacement, SuppressionConfig};

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayer::split_planes;
use crate::error::{Error, Result};
use crate::residue::{residue_frame, NoiseResidue, WaveletConfig};
use crate::residue::denoise::residue_mosaic;
use crate::sensor::{BayerPattern, Optics, RawFrame};

pub type Planes = [Array2<f64>; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerprintKind {
    Prnu,
    Dark,
}

/// Mean capture conditions of the frames behind a fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSummary {
    pub temperature_k: f64,
    pub t_int: f64,
    pub optics: Option<Optics>,
}

pub const NORMALIZATION_STEPS: [&str; 4] = ["row-mean", "column-mean", "global-mean", "unit-l2"];

/// How a fingerprint was produced; two fingerprints are only comparable when
/// the residue pipeline and geometry agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingRecord {
    pub wavelet: WaveletConfig,
    pub filter: String,
    pub boundary: String,
    pub per_channel_residue: bool,
    pub suppression: Option<SuppressionConfig>,
    pub normalization: Vec<String>,
    pub cfa: BayerPattern,
    /// Mosaic `[height, width]`.
    pub frame_dims: [usize; 2],
    pub capture: Option<CaptureSummary>,
    /// Geometric transforms applied after construction, in order.
    #[serde(default)]
    pub transforms: Vec<String>,
}

impl ProcessingRecord {
    fn new(wavelet: &WaveletConfig, suppression: Option<&SuppressionConfig>, cfa: BayerPattern, dims: (usize, usize)) -> Self {
        Self {
            wavelet: wavelet.clone(),
            filter: "db4".into(),
            boundary: "symmetric-pad+periodic".into(),
            per_channel_residue: true,
            suppression: suppression.cloned(),
            normalization: NORMALIZATION_STEPS.iter().map(|s| s.to_string()).collect(),
            cfa,
            frame_dims: [dims.0, dims.1],
            capture: None,
            transforms: Vec::new(),
        }
    }

    /// Errors naming the first difference that makes the records incomparable.
    pub fn check_compatible(&self, other: &ProcessingRecord) -> Result<()> {
        let mismatch = |what: &str, a: String, b: String| {
            Err(Error::Protocol(format!("{what} differs: {a} vs {b}")))
        };
        if self.frame_dims != other.frame_dims {
            return mismatch("frame dimensions", format!("{:?}", self.frame_dims), format!("{:?}", other.frame_dims));
        }
        if self.cfa != other.cfa {
            return mismatch("CFA pattern", format!("{:?}", self.cfa), format!("{:?}", other.cfa));
        }
        if self.wavelet != other.wavelet {
            return mismatch("wavelet configuration", format!("{:?}", self.wavelet), format!("{:?}", other.wavelet));
        }
        if self.filter != other.filter || self.boundary != other.boundary {
            return mismatch(
                "wavelet filter/boundary",
                format!("{}/{}", self.filter, self.boundary),
                format!("{}/{}", other.filter, other.boundary),
            );
        }
        if self.per_channel_residue != other.per_channel_residue {
            return mismatch("per-channel residue", self.per_channel_residue.to_string(), other.per_channel_residue.to_string());
        }
        if self.normalization != other.normalization {
            return mismatch("normalization", self.normalization.join(","), other.normalization.join(","));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    /// One plane per Bayer offset `(0,0) (0,1) (1,0) (1,1)`; each zero-mean, unit norm.
    pub channels: Planes,
    pub kind: FingerprintKind,
    pub frame_count: usize,
    pub sensor_label: String,
    pub processing: ProcessingRecord,
}

impl Fingerprint {
    /// Builds a fingerprint from raw (unnormalized) planes, applying the full
    /// row/column/global mean removal and unit-norm scaling.
    pub fn from_planes(
        mut channels: Planes,
        kind: FingerprintKind,
        frame_count: usize,
        sensor_label: String,
        processing: ProcessingRecord,
    ) -> Result<Self> {
        let dims = channels[0].dim();
        if channels.iter().any(|c| c.dim() != dims) {
            return Err(Error::Shape("fingerprint channels differ in shape".into()));
        }
        for (p, c) in channels.iter_mut().enumerate() {
            remove_linear_pattern(c);
            unit_normalize(c).map_err(|e| match e {
                Error::Degenerate(m) => Error::Degenerate(format!("channel {p}: {m}")),
                other => other,
            })?;
        }
        Ok(Self { channels, kind, frame_count, sensor_label, processing })
    }

    /// `(rows, cols)` of each channel plane.
    pub fn channel_dims(&self) -> (usize, usize) {
        self.channels[0].dim()
    }

    pub fn channel_names(&self) -> [String; 4] {
        self.processing.cfa.channel_names()
    }

    /// Re-centers and rescales every channel; used after transforms that may
    /// disturb the invariants by rounding.
    pub(crate) fn renormalize(&mut self) -> Result<()> {
        for c in self.channels.iter_mut() {
            unit_normalize(c)?;
        }
        Ok(())
    }
}

fn remove_linear_pattern(plane: &mut Array2<f64>) {
    let row_means = plane.mean_axis(Axis(1)).expect("non-empty plane");
    for (mut row, m) in plane.rows_mut().into_iter().zip(row_means.iter()) {
        row -= *m;
    }
    let col_means = plane.mean_axis(Axis(0)).expect("non-empty plane");
    for mut row in plane.rows_mut() {
        row -= &col_means;
    }
}

/// Subtracts the mean and scales to unit L2 norm.
pub(crate) fn unit_normalize(plane: &mut Array2<f64>) -> Result<()> {
    let scale = plane.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mean = plane.mean().unwrap_or(0.0);
    *plane -= mean;
    let norm = plane.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite() && norm > 1e-10 * scale) {
        return Err(Error::Degenerate("zero-energy fingerprint channel".into()));
    }
    *plane /= norm;
    Ok(())
}

/// `plane[p][i, j] = residue[2i + pi, 2j + pj]` for the four Bayer offsets.
pub fn split_cfa(residue: &NoiseResidue) -> Result<Planes> {
    split_planes(&residue.values)
}

fn add_planes(mut a: Planes, b: &Planes) -> Planes {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Sums per-frame planes over a fixed balanced binary tree on frame indices,
/// so the result does not depend on scheduling.
fn tree_sum<F>(frames: &[RawFrame], leaf: &F) -> Result<Planes>
where
    F: Fn(&RawFrame) -> Result<Planes> + Sync,
{
    match frames.len() {
        0 => unreachable!("caller checks for empty input"),
        1 => leaf(&frames[0]),
        n => {
            let (left, right) = frames.split_at(n / 2);
            let (a, b) = rayon::join(|| tree_sum(left, leaf), || tree_sum(right, leaf));
            Ok(add_planes(a?, &b?))
        }
    }
}

fn check_frames(frames: &[RawFrame], want_open: bool) -> Result<(usize, usize, BayerPattern)> {
    let first = frames.first().ok_or_else(|| Error::Domain("no frames supplied".into()))?;
    let dims = first.pixels.dim();
    for (k, f) in frames.iter().enumerate() {
        if f.pixels.dim() != dims {
            return Err(Error::Domain(format!(
                "frame {k} is {:?} but frame 0 is {dims:?}",
                f.pixels.dim()
            )));
        }
        if f.metadata.shutter_open != want_open {
            let (got, want) = if want_open { ("dark", "illuminated") } else { ("illuminated", "dark") };
            return Err(Error::Config(format!(
                "shutter mismatch: frame {k} is {got} but {want} frames are required"
            )));
        }
        if f.metadata.cfa != first.metadata.cfa {
            return Err(Error::Domain(format!("frame {k} has a different CFA pattern")));
        }
    }
    Ok((dims.0, dims.1, first.metadata.cfa))
}

fn summarize(frames: &[RawFrame]) -> CaptureSummary {
    let n = frames.len() as f64;
    let optics = frames[0].metadata.optics;
    CaptureSummary {
        temperature_k: frames.iter().map(|f| f.metadata.temperature).sum::<f64>() / n,
        t_int: frames.iter().map(|f| f.metadata.t_int).sum::<f64>() / n,
        optics: frames.iter().all(|f| f.metadata.optics == optics).then_some(optics),
    }
}

fn label_of(frames: &[RawFrame]) -> String {
    let id = &frames[0].metadata.sensor_id;
    if frames.iter().all(|f| &f.metadata.sensor_id == id) {
        id.clone()
    } else {
        "mixed".into()
    }
}

/// PRNU reference pattern: mean of the per-frame residues of illuminated
/// frames, split per Bayer channel and normalized.
pub fn prnu_reference(frames: &[RawFrame], wavelet: &WaveletConfig) -> Result<Fingerprint> {
    wavelet.validate()?;
    let (h, w, cfa) = check_frames(frames, true)?;
    let sum = tree_sum(frames, &|f: &RawFrame| split_cfa(&residue_frame(f, wavelet)?))?;
    let inv = 1.0 / frames.len() as f64;
    let mean = sum.map(|p| p * inv);
    let mut processing = ProcessingRecord::new(wavelet, None, cfa, (h, w));
    processing.capture = Some(summarize(frames));
    Fingerprint::from_planes(mean, FingerprintKind::Prnu, frames.len(), label_of(frames), processing)
}

/// Fingerprint excited by dark current alone. With `suppression`, hot pixels
/// of each frame are replaced before residue extraction. A single frame is
/// the canonical input.
pub fn dark_fingerprint(
    frames: &[RawFrame],
    wavelet: &WaveletConfig,
    suppression: Option<&SuppressionConfig>,
) -> Result<Fingerprint> {
    wavelet.validate()?;
    if let Some(s) = suppression {
        s.validate()?;
    }
    let (h, w, cfa) = check_frames(frames, false)?;
    for (k, f) in frames.iter().enumerate() {
        let fill = f.mean_fill();
        if !(0.1..=0.9).contains(&fill) {
            log::warn!("dark frame {k}: mean well fill {:.1}% is outside 10-90%", 100.0 * fill);
        }
    }
    let leaf = |f: &RawFrame| -> Result<Planes> {
        let mut values = f.to_f64();
        if let Some(s) = suppression {
            values = suppress_hot_pixels(&values, s)?.0;
        }
        split_planes(&residue_mosaic(&values, wavelet)?)
    };
    let sum = tree_sum(frames, &leaf)?;
    let inv = 1.0 / frames.len() as f64;
    let mean = sum.map(|p| p * inv);
    let mut processing = ProcessingRecord::new(wavelet, suppression, cfa, (h, w));
    processing.capture = Some(summarize(frames));
    Fingerprint::from_planes(mean, FingerprintKind::Dark, frames.len(), label_of(frames), processing)
}

/// Fingerprints for many frame sets, in input order.
pub fn prnu_references(sets: &[Vec<RawFrame>], wavelet: &WaveletConfig) -> Result<Vec<Fingerprint>> {
    sets.par_iter().map(|s| prnu_reference(s, wavelet)).collect()
}
