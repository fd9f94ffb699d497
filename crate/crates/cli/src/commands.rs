use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spnkit::fingerprint::container::{channel_pgm, read_container, write_container};
use spnkit::fingerprint::{dark_fingerprint, prnu_reference};
use spnkit::matcher::match_report;
use spnkit::sensor::io::{read_frame, write_row_csv};
use spnkit::sensor::row_profile;
use spnkit::{
    CorrelationReport, Error, Fingerprint, FingerprintKind, RawFrame, Result, RotationMode, SuppressionConfig,
    WaveletConfig,
};

/// Expands directories to the `.pgm` files they contain, sorted by name.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<Vec<_>>>()?
                .into_iter()
                .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::Domain("no input frames".into()));
    }
    Ok(out)
}

pub fn load_frames(paths: &[PathBuf]) -> Result<Vec<RawFrame>> {
    paths
        .par_iter()
        .map(|p| read_frame(p).map_err(|e| Error::Format(format!("{}: {e}", p.display()))))
        .collect()
}

pub fn extract(
    kind: FingerprintKind,
    frames: &[RawFrame],
    wavelet: &WaveletConfig,
    suppression: Option<&SuppressionConfig>,
) -> Result<Fingerprint> {
    match kind {
        FingerprintKind::Prnu => prnu_reference(frames, wavelet),
        FingerprintKind::Dark => dark_fingerprint(frames, wavelet, suppression),
    }
}

pub fn write_fingerprint(fp: &Fingerprint, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_container(fp, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_fingerprint(path: &Path) -> Result<Fingerprint> {
    let file = File::open(path).map_err(|e| Error::Format(format!("cannot open {}: {e}", path.display())))?;
    read_container(BufReader::new(file))
}

/// One line per channel: name, L2 norm and mean.
pub fn norm_diagnostics(fp: &Fingerprint) -> Vec<String> {
    fp.channel_names()
        .iter()
        .zip(&fp.channels)
        .map(|(name, c)| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            format!("channel {name}: norm {norm:.12} mean {:.3e}", c.mean().unwrap_or(0.0))
        })
        .collect()
}

pub fn compare(
    reference: &Path,
    probe: &Path,
    threshold: f64,
    mode: RotationMode,
) -> Result<CorrelationReport> {
    match_report(&read_fingerprint(reference)?, &read_fingerprint(probe)?, threshold, mode)
}

/// Appends the report as a row, writing the header first if the file is new or empty.
pub fn append_csv(report: &CorrelationReport, path: &Path) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut out = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(out, "{}", CorrelationReport::CSV_HEADER)?;
    }
    writeln!(out, "{}", report.csv_row())?;
    Ok(())
}

pub fn plot_row<W: Write>(frame: &Path, row: usize, compare: Option<&Path>, out: W) -> Result<()> {
    let series = row_profile(&read_frame(frame)?, row)?;
    let other = compare.map(|p| read_frame(p).and_then(|f| row_profile(&f, row))).transpose()?;
    write_row_csv(out, &series, other.as_deref())
}

pub fn export_channel(fp: &Fingerprint, channel: &str) -> Result<Vec<u8>> {
    let idx = fp.processing.cfa.channel_index(channel).ok_or_else(|| {
        Error::Domain(format!(
            "unknown channel {channel:?}; expected one of {} or 0-3",
            fp.channel_names().join(", ")
        ))
    })?;
    channel_pgm(fp, idx)
}
