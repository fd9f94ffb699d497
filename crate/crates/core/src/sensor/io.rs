//! Frame and profile persistence.
//!
//! Frames are binary PGM (`P5`); samples are one byte when `maxval < 256`
//! and two big-endian bytes otherwise. Each `name.pgm` has a JSON sidecar
//! `name.json` holding the [`FrameMetadata`]. Profiles are the JSON
//! serialization of [`SensorProfile`], with 2-D maps in ndarray's
//! `{"v":1,"dim":[rows,cols],"data":[...]}` row-major layout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FrameMetadata, RawFrame, SensorProfile};
use crate::error::{Error, Result};

pub fn encode_pgm(pixels: &Array2<u16>, maxval: u16) -> Vec<u8> {
    let (h, w) = pixels.dim();
    let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    if maxval < 256 {
        out.extend(pixels.iter().map(|&v| v.min(maxval) as u8));
    } else {
        for &v in pixels.iter() {
            out.extend_from_slice(&v.min(maxval).to_be_bytes());
        }
    }
    out
}

/// Parses a binary PGM, returning the samples and `maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(Array2<u16>, u16)> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::Format("non-ASCII PGM header".into()))?);
    }
    if fields[0] != "P5" {
        return Err(Error::Format(format!("expected binary PGM magic P5, found {}", fields[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Format(format!("bad PGM {what}: {s}")))
    };
    let (w, h, maxval) = (parse(fields[1], "width")?, parse(fields[2], "height")?, parse(fields[3], "maxval")?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let bps = if maxval < 256 { 1 } else { 2 };
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != w * h * bps {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {}",
            raster.len(),
            w * h * bps
        )));
    }
    let data: Vec<u16> = if bps == 1 {
        raster.iter().map(|&b| b as u16).collect()
    } else {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    let pixels = Array2::from_shape_vec((h, w), data).map_err(|e| Error::Format(e.to_string()))?;
    Ok((pixels, maxval as u16))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub metadata: FrameMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_digest: Option<String>,
}

pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Writes `path` (PGM) and its sidecar; returns the sidecar path.
pub fn write_frame(frame: &RawFrame, path: &Path, profile_digest: Option<&str>) -> Result<PathBuf> {
    fs::write(path, encode_pgm(&frame.pixels, frame.max_dn()))?;
    let sidecar = FrameSidecar { metadata: frame.metadata.clone(), profile_digest: profile_digest.map(str::to_owned) };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(side)
}

pub fn read_frame(path: &Path) -> Result<RawFrame> {
    let (pixels, maxval) = decode_pgm(&fs::read(path)?)?;
    let side = sidecar_path(path);
    let sidecar: FrameSidecar = serde_json::from_slice(&fs::read(&side).map_err(|e| {
        Error::Format(format!("cannot read sidecar {}: {e}", side.display()))
    })?)?;
    let metadata = sidecar.metadata;
    if maxval as u32 > (1u32 << metadata.bit_depth) - 1 {
        return Err(Error::Format(format!(
            "PGM maxval {maxval} exceeds the {}-bit depth in the sidecar",
            metadata.bit_depth
        )));
    }
    Ok(RawFrame { pixels, metadata })
}

pub fn save_profile(profile: &SensorProfile, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_vec(profile)?)?;
    Ok(())
}

pub fn load_profile(path: &Path) -> Result<SensorProfile> {
    let profile: SensorProfile = serde_json::from_slice(&fs::read(path)?)?;
    profile.validate()?;
    Ok(profile)
}

/// `column,dn` rows; with a second series, `column,dn,dn_compare`.
pub fn write_row_csv<W: Write>(mut out: W, series: &[u16], compare: Option<&[u16]>) -> Result<()> {
    match compare {
        None => {
            writeln!(out, "column,dn")?;
            for (c, v) in series.iter().enumerate() {
                writeln!(out, "{c},{v}")?;
            }
        }
        Some(other) => {
            if other.len() != series.len() {
                return Err(Error::Shape(format!(
                    "compared rows differ in length: {} vs {}",
                    series.len(),
                    other.len()
                )));
            }
            writeln!(out, "column,dn,dn_compare")?;
            for (c, (a, b)) in series.iter().zip(other).enumerate() {
                writeln!(out, "{c},{a},{b}")?;
            }
        }
    }
    Ok(())
}
