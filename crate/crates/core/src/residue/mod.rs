//! Wavelet noise residue extraction.
pub(crate) mod denoise;
pub mod wavelet;
pub use denoise::{denoise, residue, residue_frame, NoiseResidue, WaveletConfig};
