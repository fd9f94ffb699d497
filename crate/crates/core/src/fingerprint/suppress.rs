use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Replacement {
    /// Median of the (up to) eight neighbours, excluding the pixel itself.
    #[default]
    LocalMedian3x3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuppressionConfig {
    /// Robust z-score above which a pixel is treated as hot.
    pub hot_sigma_threshold: f64,
    pub replacement: Replacement,
}

impl Default for SuppressionConfig {
    fn default() -> Self {
        Self { hot_sigma_threshold: 6.0, replacement: Replacement::LocalMedian3x3 }
    }
}

impl SuppressionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hot_sigma_threshold > 0.0) {
            return Err(Error::Config(format!(
                "hot_sigma_threshold must be > 0, got {}",
                self.hot_sigma_threshold
            )));
        }
        Ok(())
    }
}

/// Median of a scratch buffer (reordered in place). Even lengths average the
/// two central values.
pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Replaces pixels above `median + t * 1.4826 * MAD` with the median of their
/// 3×3 neighbourhood. Returns the cleaned array and the mask of replaced
/// pixels.
pub fn suppress_hot_pixels(
    values: &Array2<f64>,
    config: &SuppressionConfig,
) -> Result<(Array2<f64>, Array2<bool>)> {
    config.validate()?;
    let (h, w) = values.dim();
    if h < 3 || w < 3 {
        return Err(Error::Domain(format!("hot pixel suppression needs at least 3x3, got {h}x{w}")));
    }
    let mut scratch: Vec<f64> = values.iter().copied().collect();
    let median = median_in_place(&mut scratch);
    for v in scratch.iter_mut() {
        *v = (*v - median).abs();
    }
    let mad = median_in_place(&mut scratch);
    let threshold = median + config.hot_sigma_threshold * 1.4826 * mad;

    let mask = values.mapv(|v| v > threshold);
    let mut cleaned = values.clone();
    let mut neighbours = Vec::with_capacity(8);
    for ((i, j), _) in mask.indexed_iter().filter(|(_, &hot)| hot) {
        neighbours.clear();
        for ni in i.saturating_sub(1)..=(i + 1).min(h - 1) {
            for nj in j.saturating_sub(1)..=(j + 1).min(w - 1) {
                if (ni, nj) != (i, j) {
                    neighbours.push(values[[ni, nj]]);
                }
            }
        }
        cleaned[[i, j]] = median_in_place(&mut neighbours);
    }
    Ok((cleaned, mask))
}
