use ndarray::Array2;
use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{CounterRng, DrawTag};

/// 2×2 Bayer mosaic, named by the colors at offsets `(0,0) (0,1) (1,0) (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BayerPattern {
    #[default]
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    /// Color letter at Bayer offset index `p = 2*pi + pj`.
    pub fn color(self, p: usize) -> char {
        let colors = match self {
            BayerPattern::Rggb => ['R', 'G', 'G', 'B'],
            BayerPattern::Bggr => ['B', 'G', 'G', 'R'],
            BayerPattern::Grbg => ['G', 'R', 'B', 'G'],
            BayerPattern::Gbrg => ['G', 'B', 'R', 'G'],
        };
        colors[p]
    }

    /// Channel names in offset order; the two greens are `G1` then `G2`.
    pub fn channel_names(self) -> [String; 4] {
        let mut greens = 0;
        std::array::from_fn(|p| match self.color(p) {
            'G' => {
                greens += 1;
                format!("G{greens}")
            }
            c => c.to_string(),
        })
    }

    /// Offset index for a channel name (`R`, `G1`, `G2`, `B`; `G` means `G1`)
    /// or a numeric index `0..4`.
    pub fn channel_index(self, name: &str) -> Option<usize> {
        if let Ok(i) = name.parse::<usize>() {
            return (i < 4).then_some(i);
        }
        let wanted = if name.eq_ignore_ascii_case("g") { "G1".to_string() } else { name.to_ascii_uppercase() };
        self.channel_names().iter().position(|n| *n == wanted)
    }

    /// Representative wavelengths (m) used for photon-energy bookkeeping.
    pub fn nominal_wavelengths(self) -> [f64; 4] {
        std::array::from_fn(|p| match self.color(p) {
            'R' => 600e-9,
            'G' => 530e-9,
            _ => 460e-9,
        })
    }
}

/// Parameters from which a [`SensorProfile`] is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSpec {
    pub label: String,
    pub width: usize,
    pub height: usize,
    /// Pixel pitch in meters; the detector area is its square.
    pub pixel_pitch: f64,
    /// Full well, electrons.
    pub well_capacity: f64,
    pub pnu_sigma: f64,
    pub dark_sigma: f64,
    /// Correlation between the PNU and dark non-uniformity fields.
    pub dark_pnu_coupling: f64,
    /// Mean dark current density at `t_ref`, A/m².
    pub dark_density_ref: f64,
    /// `E_t - E_G` in eV. Must be negative.
    pub delta_e: f64,
    pub t_ref: f64,
    /// Electrons RMS.
    pub read_noise_sigma: f64,
    /// Electrons per DN.
    pub conversion_gain: f64,
    pub bit_depth: u32,
    pub cfa: BayerPattern,
    pub hot_pixel_fraction: f64,
    pub hot_pixel_gain: f64,
    /// Edge of the shared-pixel macroblock, pixels.
    pub fpn_block_size: usize,
    /// Standard deviation of per-block offsets as a fraction of the well.
    pub fpn_fraction: f64,
    pub seed: u64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            label: "sensor".into(),
            width: 256,
            height: 256,
            pixel_pitch: 1.12e-6,
            well_capacity: 5000.0,
            pnu_sigma: 0.02,
            dark_sigma: 0.02,
            dark_pnu_coupling: 0.5,
            dark_density_ref: 1e-5,
            delta_e: -0.6,
            t_ref: 293.15,
            read_noise_sigma: 2.0,
            conversion_gain: 1.2,
            bit_depth: 12,
            cfa: BayerPattern::Rggb,
            hot_pixel_fraction: 0.001,
            hot_pixel_gain: 50.0,
            fpn_block_size: 2,
            fpn_fraction: 0.001,
            seed: 0,
        }
    }
}

impl ProfileSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return cfg(format!("dimensions {}x{} must be non-zero and even", self.width, self.height));
        }
        if self.fpn_block_size == 0
            || !self.width.is_multiple_of(self.fpn_block_size)
            || !self.height.is_multiple_of(self.fpn_block_size)
        {
            return cfg(format!(
                "dimensions {}x{} must be divisible by fpn_block_size {}",
                self.width, self.height, self.fpn_block_size
            ));
        }
        for (name, s) in [("pnu_sigma", self.pnu_sigma), ("dark_sigma", self.dark_sigma)] {
            if !(s > 0.0 && s <= 0.5) {
                return cfg(format!("{name} must lie in (0, 0.5], got {s}"));
            }
        }
        if !(0.0..=1.0).contains(&self.dark_pnu_coupling) {
            return cfg(format!("dark_pnu_coupling must lie in [0, 1], got {}", self.dark_pnu_coupling));
        }
        if !(self.delta_e < 0.0) {
            return cfg(format!("delta_e must be negative, got {}", self.delta_e));
        }
        if !(self.pixel_pitch > 0.0 && self.well_capacity > 0.0 && self.conversion_gain > 0.0 && self.t_ref > 0.0) {
            return cfg("pixel_pitch, well_capacity, conversion_gain and t_ref must be > 0".into());
        }
        if !(self.dark_density_ref >= 0.0 && self.read_noise_sigma >= 0.0 && self.fpn_fraction >= 0.0) {
            return cfg("dark_density_ref, read_noise_sigma and fpn_fraction must be >= 0".into());
        }
        if !(1..=16).contains(&self.bit_depth) {
            return cfg(format!("bit_depth must lie in 1..=16, got {}", self.bit_depth));
        }
        if !(0.0..1.0).contains(&self.hot_pixel_fraction) {
            return cfg(format!("hot_pixel_fraction must lie in [0, 1), got {}", self.hot_pixel_fraction));
        }
        if !(self.hot_pixel_gain > 0.0) {
            return cfg(format!("hot_pixel_gain must be > 0, got {}", self.hot_pixel_gain));
        }
        Ok(())
    }
}

/// Immutable physical description of one simulated device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorProfile {
    pub label: String,
    pub width: usize,
    pub height: usize,
    pub pixel_pitch: f64,
    pub well_capacity: f64,
    /// Multiplicative photo-response factors, mean 1.
    pub pnu_map: Array2<f64>,
    pub dark_density_ref: f64,
    /// Multiplicative dark current factors, mean 1.
    pub dark_nonuniformity_map: Array2<f64>,
    pub dark_pnu_coupling: f64,
    pub delta_e: f64,
    pub t_ref: f64,
    pub read_noise_sigma: f64,
    pub conversion_gain: f64,
    pub bit_depth: u32,
    pub cfa: BayerPattern,
    pub hot_pixel_map: Array2<bool>,
    pub hot_pixel_gain: f64,
    pub fpn_block_size: usize,
    /// Additive offset per macroblock, electrons; shape `(height/b, width/b)`.
    pub fpn_block_offsets: Array2<f64>,
    pub seed: u64,
}

impl SensorProfile {
    pub fn detector_area(&self) -> f64 {
        self.pixel_pitch * self.pixel_pitch
    }

    pub fn max_dn(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    pub fn sensor_id(&self) -> String {
        format!("{}:{:016x}", self.label, self.seed)
    }

    pub fn fpn_offset(&self, i: usize, j: usize) -> f64 {
        self.fpn_block_offsets[[i / self.fpn_block_size, j / self.fpn_block_size]]
    }

    /// Hex SHA-256 of the JSON serialization.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    /// Checks the invariants a deserialized profile must satisfy.
    pub fn validate(&self) -> Result<()> {
        let dims = (self.height, self.width);
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) || self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!("profile dimensions {}x{} must be even", self.width, self.height)));
        }
        for (name, shape) in [
            ("pnu_map", self.pnu_map.dim()),
            ("dark_nonuniformity_map", self.dark_nonuniformity_map.dim()),
            ("hot_pixel_map", self.hot_pixel_map.dim()),
        ] {
            if shape != dims {
                return Err(Error::Config(format!("{name} has shape {shape:?}, expected {dims:?}")));
            }
        }
        if self.fpn_block_size == 0
            || self.fpn_block_offsets.dim() != (self.height / self.fpn_block_size, self.width / self.fpn_block_size)
        {
            return Err(Error::Config("fpn_block_offsets shape does not match fpn_block_size".into()));
        }
        for (name, map) in [("pnu_map", &self.pnu_map), ("dark_nonuniformity_map", &self.dark_nonuniformity_map)] {
            if map.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("{name} must be strictly positive")));
            }
            let mean = map.mean().unwrap_or(0.0);
            if (mean - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!("{name} mean is {mean}, expected 1")));
            }
        }
        if !(self.delta_e < 0.0) {
            return Err(Error::Config("delta_e must be negative".into()));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(Error::Config(format!("bit_depth must lie in 1..=16, got {}", self.bit_depth)));
        }
        Ok(())
    }
}

fn gaussian_field(h: usize, w: usize, seed: u64, tag: DrawTag) -> Array2<f64> {
    Array2::from_shape_fn((h, w), |(i, j)| {
        CounterRng::new(seed, 0, i, j, tag).sample::<f64, _>(StandardNormal)
    })
}

/// `1 + field`, clamped at 0.01 and rescaled to mean exactly 1.
fn unit_mean_factors(mut field: Array2<f64>) -> Array2<f64> {
    field.mapv_inplace(|v| (1.0 + v).max(0.01));
    let mean = field.mean().expect("non-empty field");
    field.mapv_inplace(|v| v / mean);
    field
}

/// Deterministically realizes a sensor from its parameters and seed.
pub fn generate_profile(spec: &ProfileSpec) -> Result<SensorProfile> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let g1 = gaussian_field(h, w, spec.seed, DrawTag::PnuGaussian);
    let g2 = gaussian_field(h, w, spec.seed, DrawTag::DarkGaussian);

    let pnu_map = unit_mean_factors(g1.mapv(|g| spec.pnu_sigma * g));
    let rho = spec.dark_pnu_coupling;
    let indep = (1.0 - rho * rho).max(0.0).sqrt();
    let mut dark = g1.clone();
    dark.zip_mut_with(&g2, |a, &b| *a = spec.dark_sigma * (rho * *a + indep * b));
    let dark_nonuniformity_map = unit_mean_factors(dark);

    let n = h * w;
    let hot_count = (spec.hot_pixel_fraction * n as f64).round() as usize;
    let mut scores: Vec<(u64, usize)> = (0..n)
        .map(|idx| {
            let mut r = CounterRng::new(spec.seed, 0, idx / w, idx % w, DrawTag::HotPixelScore);
            (rand_core::RngCore::next_u64(&mut r), idx)
        })
        .collect();
    scores.sort_unstable();
    let mut hot_pixel_map = Array2::from_elem((h, w), false);
    for &(_, idx) in &scores[..hot_count] {
        hot_pixel_map[[idx / w, idx % w]] = true;
    }

    let b = spec.fpn_block_size;
    let fpn_sigma = spec.fpn_fraction * spec.well_capacity;
    let fpn_block_offsets = if fpn_sigma > 0.0 {
        let normal = Normal::new(0.0, fpn_sigma).map_err(|e| Error::Config(e.to_string()))?;
        Array2::from_shape_fn((h / b, w / b), |(bi, bj)| {
            CounterRng::new(spec.seed, 0, bi, bj, DrawTag::FpnOffset).sample(normal)
        })
    } else {
        Array2::zeros((h / b, w / b))
    };

    Ok(SensorProfile {
        label: spec.label.clone(),
        width: w,
        height: h,
        pixel_pitch: spec.pixel_pitch,
        well_capacity: spec.well_capacity,
        pnu_map,
        dark_density_ref: spec.dark_density_ref,
        dark_nonuniformity_map,
        dark_pnu_coupling: rho,
        delta_e: spec.delta_e,
        t_ref: spec.t_ref,
        read_noise_sigma: spec.read_noise_sigma,
        conversion_gain: spec.conversion_gain,
        bit_depth: spec.bit_depth,
        cfa: spec.cfa,
        hot_pixel_map,
        hot_pixel_gain: spec.hot_pixel_gain,
        fpn_block_size: b,
        fpn_block_offsets,
        seed: spec.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b.iter()) {
            ab += (x - ma) * (y - mb);
            aa += (x - ma) * (x - ma);
            bb += (y - mb) * (y - mb);
        }
        ab / (aa * bb).sqrt()
    }

    #[test]
    fn maps_have_unit_mean_and_are_positive() {
        let p = generate_profile(&ProfileSpec { pnu_sigma: 0.5, dark_sigma: 0.5, seed: 3, ..Default::default() }).unwrap();
        p.validate().unwrap();
        assert!((p.pnu_map.mean().unwrap() - 1.0).abs() < 1e-6);
        assert!((p.dark_nonuniformity_map.mean().unwrap() - 1.0).abs() < 1e-6);
        assert!(p.pnu_map.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn full_coupling_duplicates_pnu() {
        let p = generate_profile(&ProfileSpec { dark_pnu_coupling: 1.0, ..Default::default() }).unwrap();
        assert!(pearson(&p.pnu_map, &p.dark_nonuniformity_map) > 0.999);
    }

    #[test]
    fn zero_coupling_is_uncorrelated() {
        let p = generate_profile(&ProfileSpec { dark_pnu_coupling: 0.0, seed: 11, ..Default::default() }).unwrap();
        let bound = 4.0 / ((p.width * p.height) as f64).sqrt();
        let r = pearson(&p.pnu_map, &p.dark_nonuniformity_map);
        assert!(r.abs() < bound, "{r} vs {bound}");
    }

    #[test]
    fn half_coupling_matches_target() {
        let p = generate_profile(&ProfileSpec { seed: 5, ..Default::default() }).unwrap();
        let r = pearson(&p.pnu_map, &p.dark_nonuniformity_map);
        assert!((r - 0.5).abs() < 0.02, "{r}");
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ProfileSpec { seed: 99, ..Default::default() };
        let a = generate_profile(&spec).unwrap();
        let b = generate_profile(&spec).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        let c = generate_profile(&ProfileSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a.pnu_map, c.pnu_map);
    }

    #[test]
    fn hot_pixel_count_is_exact() {
        let p = generate_profile(&ProfileSpec { hot_pixel_fraction: 0.001, ..Default::default() }).unwrap();
        let count = p.hot_pixel_map.iter().filter(|&&h| h).count();
        assert_eq!(count, (0.001f64 * 65536.0).round() as usize);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            ProfileSpec { width: 255, ..Default::default() },
            ProfileSpec { fpn_block_size: 3, ..Default::default() },
            ProfileSpec { pnu_sigma: 0.0, ..Default::default() },
            ProfileSpec { dark_sigma: 0.6, ..Default::default() },
            ProfileSpec { dark_pnu_coupling: 1.5, ..Default::default() },
            ProfileSpec { delta_e: 0.1, ..Default::default() },
            ProfileSpec { bit_depth: 17, ..Default::default() },
        ];
        for spec in bad {
            assert!(matches!(generate_profile(&spec), Err(Error::Config(_))), "{spec:?}");
        }
    }

    #[test]
    fn channel_names_follow_pattern() {
        assert_eq!(BayerPattern::Rggb.channel_names(), ["R", "G1", "G2", "B"]);
        assert_eq!(BayerPattern::Grbg.channel_names(), ["G1", "R", "B", "G2"]);
        assert_eq!(BayerPattern::Rggb.channel_index("g"), Some(1));
        assert_eq!(BayerPattern::Rggb.channel_index("B"), Some(3));
        assert_eq!(BayerPattern::Rggb.channel_index("2"), Some(2));
        assert_eq!(BayerPattern::Rggb.channel_index("X"), None);
    }
}
