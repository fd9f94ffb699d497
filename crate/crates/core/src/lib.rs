//! Sensor pattern noise toolkit.
//!
//! `spnkit` simulates CMOS sensor output from an additive physical noise
//! model (photon shot noise, temperature dependent dark current, pixel
//! non-uniformity, shared-pixel fixed pattern noise, read noise and
//! quantization), extracts noise residues with a wavelet Wiener filter, builds
//! normalized per-Bayer-channel fingerprints from illuminated (PRNU) or dark
//! frames, and correlates fingerprints under rotation and half-swap controls.
//!
//! The crate is organised bottom-up:
//!
//! * [`sensor`]: physical constants, sensor profiles and the frame simulator.
//! * [`residue`]: orthogonal 2-D wavelet transform and the residue filter.
//! * [`fingerprint`]: CFA splitting, hot-pixel suppression, fingerprint
//!   construction and the on-disk container.
//! * [`matcher`]: correlation, PCE and the control protocol report.

mod bayer;
pub mod error;
pub mod fingerprint;
pub mod matcher;
pub mod residue;
pub mod rng;
pub mod sensor;

pub use error::{Error, Result};
pub use fingerprint::{Fingerprint, FingerprintKind, SuppressionConfig};
pub use matcher::{CorrelationReport, Decision, RotationMode};
pub use residue::{NoiseResidue, WaveletConfig};
pub use sensor::{
    BayerPattern, CaptureSettings, Optics, ProfileSpec, RawFrame, SceneField, SensorProfile,
};
