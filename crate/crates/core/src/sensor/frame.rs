use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{BayerPattern, Optics};

/// Capture conditions and sensor identity carried alongside a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub sensor_id: String,
    pub t_int: f64,
    pub temperature: f64,
    pub optics: Optics,
    pub shutter_open: bool,
    pub seed: u64,
    pub frame_index: u64,
    pub bit_depth: u32,
    pub cfa: BayerPattern,
    /// Electrons per DN of the producing sensor.
    pub conversion_gain: f64,
    /// Full well of the producing sensor, electrons.
    pub well_capacity: f64,
}

/// Quantized sensor output in digital numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    pub pixels: Array2<u16>,
    pub metadata: FrameMetadata,
}

impl RawFrame {
    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn max_dn(&self) -> u16 {
        ((1u32 << self.metadata.bit_depth) - 1) as u16
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.pixels.mapv(f64::from)
    }

    /// Mean well fill implied by the DN values, as a fraction of full well.
    pub fn mean_fill(&self) -> f64 {
        let mean_dn = self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len().max(1) as f64;
        mean_dn * self.metadata.conversion_gain / self.metadata.well_capacity
    }
}
