//! Fingerprint correlation and the mismatch-control protocol.
//!
//! A probe is compared with a reference at 0°, with the reference rotated by
//! 90°, 180° and 270° (clockwise), and with the reference half-swapped (top
//! and bottom halves of every channel exchanged). The controls estimate the
//! correlation that arises from sensor layout alone.

mod pce;

pub use pce::{cross_correlation, pce, pce_of_surface, PceResult};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;

/// Pearson correlation of two planes of equal shape.
pub fn correlate_planes(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    correlate(std::slice::from_ref(a), std::slice::from_ref(b))
}

/// Pearson correlation of stacked planes: each plane is mean-removed on its
/// own, then all planes are treated as one concatenated vector.
pub fn correlate(a: &[Array2<f64>], b: &[Array2<f64>]) -> Result<f64> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.dim() != y.dim()) {
        return Err(Error::Shape("correlated inputs differ in shape".into()));
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (mx, my) = (x.mean().unwrap_or(0.0), y.mean().unwrap_or(0.0));
        for (&u, &v) in x.iter().zip(y.iter()) {
            let (du, dv) = (u - mx, v - my);
            ab += du * dv;
            aa += du * du;
            bb += dv * dv;
        }
    }
    if !(aa > 0.0 && bb > 0.0) {
        return Err(Error::Degenerate("correlation of a zero-variance input".into()));
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

pub fn correlate_fingerprints(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    correlate(&a.channels, &b.channels)
}

/// Whether rotations move channel planes between Bayer positions the way a
/// physical rotation of the mosaic would.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationMode {
    /// A clockwise quarter turn sends the plane at offset `(pi, pj)` to
    /// offset `(pj, 1 - pi)`: R→G1→B→G2→R for RGGB.
    #[default]
    CfaTracking,
    /// Planes rotate in place and keep their channel slot.
    ChannelFixed,
}

fn rotate_plane_cw(plane: &Array2<f64>) -> Array2<f64> {
    // new[r][c] = old[h-1-c][r]
    plane.t().slice(s![.., ..;-1]).to_owned()
}

fn rotate_slot_cw(p: usize) -> usize {
    let (pi, pj) = (p / 2, p % 2);
    2 * pj + (1 - pi)
}

/// Rotates every channel by `quarter_turns` × 90° clockwise.
pub fn rotate_fingerprint(fp: &Fingerprint, quarter_turns: u8, mode: RotationMode) -> Result<Fingerprint> {
    if quarter_turns > 3 {
        return Err(Error::Domain(format!("quarter_turns must be 0..=3, got {quarter_turns}")));
    }
    let (rows, cols) = fp.channel_dims();
    if quarter_turns % 2 == 1 && rows != cols {
        return Err(Error::Shape(format!(
            "channel planes are {rows}x{cols}; crop a central square before rotating by 90° or 270°"
        )));
    }
    let mut out = fp.clone();
    for _ in 0..quarter_turns {
        let rotated = out.channels.clone().map(|c| rotate_plane_cw(&c));
        out.channels = match mode {
            RotationMode::ChannelFixed => rotated,
            RotationMode::CfaTracking => {
                let mut slots = rotated.clone();
                for (p, plane) in rotated.into_iter().enumerate() {
                    slots[rotate_slot_cw(p)] = plane;
                }
                slots
            }
        };
    }
    if quarter_turns > 0 {
        let tag = match mode {
            RotationMode::CfaTracking => "cfa-tracking",
            RotationMode::ChannelFixed => "channel-fixed",
        };
        out.processing.transforms.push(format!("rotate-cw-{}deg-{tag}", 90 * quarter_turns as u32));
    }
    Ok(out)
}

/// Exchanges the top and bottom halves of every channel plane (the middle
/// row of an odd-height plane stays) and renormalizes.
pub fn half_swap(fp: &Fingerprint) -> Result<Fingerprint> {
    let (rows, _) = fp.channel_dims();
    if rows < 2 {
        return Err(Error::Shape(format!("half swap needs planes with >= 2 rows, got {rows}")));
    }
    let m = rows / 2;
    let mut out = fp.clone();
    for (dst, src) in out.channels.iter_mut().zip(&fp.channels) {
        dst.slice_mut(s![..m, ..]).assign(&src.slice(s![rows - m.., ..]));
        dst.slice_mut(s![rows - m.., ..]).assign(&src.slice(s![..m, ..]));
    }
    out.renormalize()?;
    out.processing.transforms.push("half-swap-rows".into());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Match,
    NoMatch,
}

/// Factor by which the aligned correlation must exceed every control.
pub const CONTROL_DOMINANCE: f64 = 10.0;

impl Decision {
    /// Match iff `rho_0 >= threshold` and `rho_0 >= 10 max |control|`.
    pub fn from_correlations(rho_0: f64, controls: &[f64], threshold: f64) -> Self {
        let worst = controls.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if rho_0 >= threshold && rho_0 >= CONTROL_DOMINANCE * worst {
            Decision::Match
        } else {
            Decision::NoMatch
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCorrelations {
    pub channel: String,
    pub rho_0: f64,
    pub rho_90: f64,
    pub rho_180: f64,
    pub rho_270: f64,
    pub rho_flipped: f64,
    pub pce_0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub reference_label: String,
    pub probe_label: String,
    /// Probe capture temperature, °C.
    pub temperature_c: Option<f64>,
    pub rho_0: f64,
    pub rho_90: f64,
    pub rho_180: f64,
    pub rho_270: f64,
    pub rho_flipped: f64,
    pub per_channel: Vec<ChannelCorrelations>,
    pub pce_0: f64,
    pub decision: Decision,
    pub threshold: f64,
    pub rotation_mode: RotationMode,
    pub protocol_notes: String,
}

impl CorrelationReport {
    pub const CSV_HEADER: &'static str = "temp_c,rho_0,rho_90,rho_180,rho_270";

    /// One row in the column order of [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let temp = self.temperature_c.map(|t| format!("{t:.2}")).unwrap_or_default();
        format!("{temp},{},{},{},{}", self.rho_0, self.rho_90, self.rho_180, self.rho_270)
    }
}

/// Runs the full control protocol of `probe` against `reference`.
pub fn match_report(
    reference: &Fingerprint,
    probe: &Fingerprint,
    threshold: f64,
    mode: RotationMode,
) -> Result<CorrelationReport> {
    reference.processing.check_compatible(&probe.processing)?;
    if reference.channel_dims() != probe.channel_dims() {
        return Err(Error::Protocol(format!(
            "channel dimensions differ: {:?} vs {:?}",
            reference.channel_dims(),
            probe.channel_dims()
        )));
    }
    let rotations = (0..4u8)
        .map(|k| rotate_fingerprint(reference, k, mode))
        .collect::<Result<Vec<_>>>()?;
    let flipped = half_swap(reference)?;

    let mut rho = [0.0; 4];
    for (r, rotated) in rho.iter_mut().zip(&rotations) {
        *r = correlate_fingerprints(rotated, probe)?;
    }
    let rho_flipped = correlate_fingerprints(&flipped, probe)?;

    let names = reference.channel_names();
    let mut per_channel = Vec::with_capacity(4);
    let mut summed: Option<Array2<f64>> = None;
    for c in 0..4 {
        let q = &probe.channels[c];
        let surface = cross_correlation(&reference.channels[c], q)?;
        let pce_c = pce_of_surface(&surface)?.pce;
        summed = Some(match summed {
            None => surface,
            Some(acc) => acc + &surface,
        });
        per_channel.push(ChannelCorrelations {
            channel: names[c].clone(),
            rho_0: correlate_planes(&rotations[0].channels[c], q)?,
            rho_90: correlate_planes(&rotations[1].channels[c], q)?,
            rho_180: correlate_planes(&rotations[2].channels[c], q)?,
            rho_270: correlate_planes(&rotations[3].channels[c], q)?,
            rho_flipped: correlate_planes(&flipped.channels[c], q)?,
            pce_0: pce_c,
        });
    }
    let pce_0 = pce_of_surface(&summed.expect("four channels"))?.pce;

    let decision = Decision::from_correlations(rho[0], &[rho[1], rho[2], rho[3], rho_flipped], threshold);
    let temperature_c = probe.processing.capture.as_ref().map(|c| c.temperature_k - 273.15);
    let protocol_notes = format!(
        "reference {:?} ({} frames) vs probe {:?} ({} frames); rotations clockwise, {}; \
         half swap exchanges top/bottom halves of each channel; match requires rho_0 >= {threshold} \
         and rho_0 >= {CONTROL_DOMINANCE} x every |control|",
        reference.kind,
        reference.frame_count,
        probe.kind,
        probe.frame_count,
        match mode {
            RotationMode::CfaTracking => "channels follow the rotated mosaic",
            RotationMode::ChannelFixed => "channels keep their slots",
        },
    );

    Ok(CorrelationReport {
        reference_label: reference.sensor_label.clone(),
        probe_label: probe.sensor_label.clone(),
        temperature_c,
        rho_0: rho[0],
        rho_90: rho[1],
        rho_180: rho[2],
        rho_270: rho[3],
        rho_flipped,
        per_channel,
        pce_0,
        decision,
        threshold,
        rotation_mode: mode,
        protocol_notes,
    })
}
