use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::wavelet::{dwt2, idwt2};
use crate::bayer::{merge_planes, split_planes};
use crate::error::{Error, Result};
use crate::sensor::{FrameMetadata, RawFrame};

/// Parameters of the wavelet Wiener filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletConfig {
    pub levels: usize,
    /// Assumed standard deviation (DN) of the noise to be isolated.
    pub base_sigma: f64,
    /// Odd window sizes for the local variance estimate.
    pub variance_windows: Vec<usize>,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self { levels: 4, base_sigma: 5.0, variance_windows: vec![3, 5, 7, 9] }
    }
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("wavelet levels must be >= 1".into()));
        }
        if !(self.base_sigma > 0.0 && self.base_sigma.is_finite()) {
            return Err(Error::Config(format!("base_sigma must be > 0, got {}", self.base_sigma)));
        }
        if self.variance_windows.is_empty() || self.variance_windows.iter().any(|&w| w < 3 || w % 2 == 0) {
            return Err(Error::Config(format!(
                "variance windows must be odd and >= 3, got {:?}",
                self.variance_windows
            )));
        }
        Ok(())
    }
}

/// High-frequency residue of one image, in signed DN.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseResidue {
    pub values: Array2<f64>,
    pub source: Option<FrameMetadata>,
}

/// Mean of `x^2` over a centered `win x win` window, clipped at the borders.
fn local_energy(band: &Array2<f64>, win: usize) -> Array2<f64> {
    let (h, w) = band.dim();
    // summed-area table with a zero border row/column
    let mut sat = Array2::<f64>::zeros((h + 1, w + 1));
    for i in 0..h {
        let mut row = 0.0;
        for j in 0..w {
            row += band[[i, j]] * band[[i, j]];
            sat[[i + 1, j + 1]] = sat[[i, j + 1]] + row;
        }
    }
    let r = win / 2;
    Array2::from_shape_fn((h, w), |(i, j)| {
        let (i0, i1) = (i.saturating_sub(r), (i + r + 1).min(h));
        let (j0, j1) = (j.saturating_sub(r), (j + r + 1).min(w));
        let sum = sat[[i1, j1]] - sat[[i0, j1]] - sat[[i1, j0]] + sat[[i0, j0]];
        (sum / ((i1 - i0) * (j1 - j0)) as f64).max(0.0)
    })
}

fn wiener_band(band: &mut Array2<f64>, config: &WaveletConfig) {
    let noise_var = config.base_sigma * config.base_sigma;
    let mut min_energy = Array2::from_elem(band.dim(), f64::INFINITY);
    for &win in &config.variance_windows {
        let e = local_energy(band, win);
        min_energy.zip_mut_with(&e, |m, &v| *m = m.min(v));
    }
    band.zip_mut_with(&min_energy, |d, &m| {
        let signal_var = (m - noise_var).max(0.0);
        *d *= signal_var / (signal_var + noise_var);
    });
}

/// Wavelet Wiener denoising: every detail coefficient is attenuated by
/// `s/(s + sigma0^2)`, where `s` is the smallest local signal-variance
/// estimate over the configured windows. The approximation band is kept.
pub fn denoise(image: &Array2<f64>, config: &WaveletConfig) -> Result<Array2<f64>> {
    config.validate()?;
    let mut pyramid = dwt2(image, config.levels)?;
    for level in &mut pyramid.details {
        for band in level.bands_mut() {
            wiener_band(band, config);
        }
    }
    idwt2(&pyramid)
}

/// `image - denoise(image)`.
pub fn residue(image: &Array2<f64>, config: &WaveletConfig) -> Result<NoiseResidue> {
    let smooth = denoise(image, config)?;
    let values = image - &smooth;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("residue contains non-finite values".into()));
    }
    Ok(NoiseResidue { values, source: None })
}

/// Residue of a mosaic frame, computed independently on each Bayer plane and
/// reassembled at full resolution.
pub fn residue_frame(frame: &RawFrame, config: &WaveletConfig) -> Result<NoiseResidue> {
    residue_mosaic(&frame.to_f64(), config).map(|values| NoiseResidue { values, source: Some(frame.metadata.clone()) })
}

pub(crate) fn residue_mosaic(mosaic: &Array2<f64>, config: &WaveletConfig) -> Result<Array2<f64>> {
    let planes = split_planes(mosaic)?;
    let mut out = Vec::with_capacity(4);
    for plane in &planes {
        out.push(residue(plane, config)?.values);
    }
    let out: [Array2<f64>; 4] = out.try_into().expect("four planes");
    merge_planes(&out)
}
