//! Fingerprint container and image export.
//!
//! Layout: one line of JSON (the [`ContainerHeader`]) terminated by `\n`,
//! followed by the four channels in header `channel_order`, each row-major
//! little-endian IEEE-754 `f32`, concatenated. Channels are re-centered and
//! rescaled to unit norm in `f64` on load, since `f32` storage perturbs both.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Fingerprint, FingerprintKind, ProcessingRecord};
use crate::error::{Error, Result};
use crate::sensor::io::encode_pgm;

pub const FORMAT_NAME: &str = "spnkit-fingerprint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format: String,
    pub version: u32,
    pub kind: FingerprintKind,
    pub frame_count: usize,
    pub sensor_label: String,
    /// `[rows, cols]` of every channel.
    pub channel_dims: [usize; 2],
    pub channel_order: [String; 4],
    pub encoding: String,
    pub processing: ProcessingRecord,
}

pub fn write_container<W: Write>(fp: &Fingerprint, mut out: W) -> Result<()> {
    let (rows, cols) = fp.channel_dims();
    let header = ContainerHeader {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        kind: fp.kind,
        frame_count: fp.frame_count,
        sensor_label: fp.sensor_label.clone(),
        channel_dims: [rows, cols],
        channel_order: fp.channel_names(),
        encoding: "f32-le-row-major".into(),
        processing: fp.processing.clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(4 * rows * cols * 4);
    for c in &fp.channels {
        for &v in c.iter() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn to_bytes(fp: &Fingerprint) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_container(fp, &mut out)?;
    Ok(out)
}

pub fn read_container<R: BufRead>(mut input: R) -> Result<Fingerprint> {
    let mut line = Vec::new();
    input.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("fingerprint container header is not newline terminated".into()));
    }
    let header: ContainerHeader = serde_json::from_slice(&line)?;
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported container {} v{}",
            header.format, header.version
        )));
    }
    let [rows, cols] = header.channel_dims;
    if rows == 0 || cols == 0 {
        return Err(Error::Format("container has empty channels".into()));
    }
    if header.channel_order != header.processing.cfa.channel_names() {
        return Err(Error::Format(format!(
            "channel order {:?} does not match the CFA",
            header.channel_order
        )));
    }
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let expected = 4 * rows * cols * 4;
    if data.len() != expected {
        return Err(Error::Format(format!("container payload has {} bytes, expected {expected}", data.len())));
    }
    let plane_bytes = rows * cols * 4;
    let channels: [Array2<f64>; 4] = std::array::from_fn(|p| {
        let chunk = &data[p * plane_bytes..(p + 1) * plane_bytes];
        let values = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Array2::from_shape_vec((rows, cols), values).expect("length checked")
    });
    let mut fp = Fingerprint {
        channels,
        kind: header.kind,
        frame_count: header.frame_count,
        sensor_label: header.sensor_label,
        processing: header.processing,
    };
    fp.renormalize()?;
    Ok(fp)
}

/// Renders a plane to 8 bits with a ±3σ linear stretch around its mean.
pub fn stretch_to_u8(plane: &Array2<f64>) -> Array2<u16> {
    let n = plane.len().max(1) as f64;
    let mean = plane.sum() / n;
    let sigma = (plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sigma == 0.0 {
        return Array2::from_elem(plane.dim(), 128);
    }
    plane.mapv(|v| (127.5 + 127.5 * (v - mean) / (3.0 * sigma)).round().clamp(0.0, 255.0) as u16)
}

/// 8-bit PGM of channel `channel` (offset index `0..4`).
pub fn channel_pgm(fp: &Fingerprint, channel: usize) -> Result<Vec<u8>> {
    let plane = fp
        .channels
        .get(channel)
        .ok_or_else(|| Error::Domain(format!("channel index {channel} out of range 0..4")))?;
    Ok(encode_pgm(&stretch_to_u8(plane), 255))
}
