//! Separable orthogonal 2-D discrete wavelet transform.
//!
//! The filter is the 8-tap Daubechies wavelet with four vanishing moments
//! (`db4`), applied with periodic extension so the transform is exactly
//! orthogonal. Inputs whose sides are not multiples of `2^levels` are
//! symmetrically padded (half-sample reflection) at the bottom/right edge;
//! the padding is recorded in the pyramid and cropped by [`idwt2`].

use ndarray::{s, Array2};

use crate::error::{Error, Result};

/// Scaling (low-pass) filter of the `db4` wavelet.
pub const DB4_LOW: [f64; 8] = [
    0.230_377_813_308_896_4,
    0.714_846_570_552_915_4,
    0.630_880_767_929_858_7,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_1,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

/// Quadrature-mirror high-pass filter `g[m] = (-1)^m h[L-1-m]`.
pub fn db4_high() -> [f64; 8] {
    std::array::from_fn(|m| if m % 2 == 0 { DB4_LOW[7 - m] } else { -DB4_LOW[7 - m] })
}

/// Detail sub-bands of one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    /// Low-pass along rows, high-pass along columns.
    pub lh: Array2<f64>,
    /// High-pass along rows, low-pass along columns.
    pub hl: Array2<f64>,
    pub hh: Array2<f64>,
}

impl DetailBands {
    pub fn bands(&self) -> [&Array2<f64>; 3] {
        [&self.lh, &self.hl, &self.hh]
    }

    pub fn bands_mut(&mut self) -> [&mut Array2<f64>; 3] {
        [&mut self.lh, &mut self.hl, &mut self.hh]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub approx: Array2<f64>,
    /// Finest level first.
    pub details: Vec<DetailBands>,
    /// Dimensions of the input before padding.
    pub original_dims: (usize, usize),
}

impl WaveletPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Sum of squares of every coefficient.
    pub fn energy(&self) -> f64 {
        let sq = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>();
        sq(&self.approx) + self.detail_energy()
    }

    pub fn detail_energy(&self) -> f64 {
        self.details
            .iter()
            .flat_map(|d| d.bands())
            .map(|a| a.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

fn analyze_1d(x: &[f64], lo: &mut [f64], hi: &mut [f64], high: &[f64; 8]) {
    let n = x.len();
    for k in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for m in 0..8 {
            let v = x[(2 * k + m) % n];
            a += DB4_LOW[m] * v;
            d += high[m] * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
}

fn synthesize_1d(lo: &[f64], hi: &[f64], x: &mut [f64], high: &[f64; 8]) {
    let n = x.len();
    x.fill(0.0);
    for k in 0..n / 2 {
        for m in 0..8 {
            x[(2 * k + m) % n] += DB4_LOW[m] * lo[k] + high[m] * hi[k];
        }
    }
}

/// One level in place on the top-left `h x w` block (Mallat layout).
fn forward_level(buf: &mut Array2<f64>, h: usize, w: usize, high: &[f64; 8]) {
    let mut line = vec![0.0; h.max(w)];
    let mut out = vec![0.0; h.max(w)];
    for i in 0..h {
        for j in 0..w {
            line[j] = buf[[i, j]];
        }
        let (lo, hi) = out[..w].split_at_mut(w / 2);
        analyze_1d(&line[..w], lo, hi, high);
        for j in 0..w {
            buf[[i, j]] = out[j];
        }
    }
    for j in 0..w {
        for i in 0..h {
            line[i] = buf[[i, j]];
        }
        let (lo, hi) = out[..h].split_at_mut(h / 2);
        analyze_1d(&line[..h], lo, hi, high);
        for i in 0..h {
            buf[[i, j]] = out[i];
        }
    }
}

fn inverse_level(buf: &mut Array2<f64>, h: usize, w: usize, high: &[f64; 8]) {
    let mut line = vec![0.0; h.max(w)];
    let mut out = vec![0.0; h.max(w)];
    for j in 0..w {
        for i in 0..h {
            line[i] = buf[[i, j]];
        }
        let (lo, hi) = line[..h].split_at(h / 2);
        synthesize_1d(lo, hi, &mut out[..h], high);
        for i in 0..h {
            buf[[i, j]] = out[i];
        }
    }
    for i in 0..h {
        for j in 0..w {
            line[j] = buf[[i, j]];
        }
        let (lo, hi) = line[..w].split_at(w / 2);
        synthesize_1d(lo, hi, &mut out[..w], high);
        for j in 0..w {
            buf[[i, j]] = out[j];
        }
    }
}

/// Half-sample symmetric index into `0..n` for any `k >= 0`.
fn reflect(k: usize, n: usize) -> usize {
    let period = 2 * n;
    let r = k % period;
    if r < n {
        r
    } else {
        period - 1 - r
    }
}

/// Pads `image` at the bottom/right to multiples of `2^levels`.
pub fn symmetric_pad(image: &Array2<f64>, levels: usize) -> Array2<f64> {
    let (h, w) = image.dim();
    let step = 1usize << levels;
    let (ph, pw) = (h.div_ceil(step) * step, w.div_ceil(step) * step);
    if (ph, pw) == (h, w) {
        return image.clone();
    }
    Array2::from_shape_fn((ph, pw), |(i, j)| image[[reflect(i, h), reflect(j, w)]])
}

/// Decomposes `image` into `levels` levels of detail plus an approximation.
pub fn dwt2(image: &Array2<f64>, levels: usize) -> Result<WaveletPyramid> {
    let (h, w) = image.dim();
    if h == 0 || w == 0 {
        return Err(Error::Domain("cannot transform an empty image".into()));
    }
    if levels == 0 {
        return Err(Error::Domain("at least one decomposition level is required".into()));
    }
    let high = db4_high();
    let mut buf = symmetric_pad(image, levels);
    let (ph, pw) = buf.dim();
    let mut details = Vec::with_capacity(levels);
    for l in 0..levels {
        let (lh_, lw_) = (ph >> l, pw >> l);
        forward_level(&mut buf, lh_, lw_, &high);
        let (hh2, hw2) = (lh_ / 2, lw_ / 2);
        details.push(DetailBands {
            lh: buf.slice(s![hh2..lh_, ..hw2]).to_owned(),
            hl: buf.slice(s![..hh2, hw2..lw_]).to_owned(),
            hh: buf.slice(s![hh2..lh_, hw2..lw_]).to_owned(),
        });
    }
    let approx = buf.slice(s![..ph >> levels, ..pw >> levels]).to_owned();
    Ok(WaveletPyramid { approx, details, original_dims: (h, w) })
}

/// Inverts [`dwt2`], cropping any padding.
pub fn idwt2(pyramid: &WaveletPyramid) -> Result<Array2<f64>> {
    let levels = pyramid.levels();
    if levels == 0 {
        return Err(Error::Domain("pyramid has no levels".into()));
    }
    let (ah, aw) = pyramid.approx.dim();
    let (ph, pw) = (ah << levels, aw << levels);
    let high = db4_high();
    let mut buf = Array2::zeros((ph, pw));
    buf.slice_mut(s![..ah, ..aw]).assign(&pyramid.approx);
    for l in (0..levels).rev() {
        let (lh_, lw_) = (ph >> l, pw >> l);
        let (hh2, hw2) = (lh_ / 2, lw_ / 2);
        let d = &pyramid.details[l];
        if d.hh.dim() != (hh2, hw2) || d.lh.dim() != (hh2, hw2) || d.hl.dim() != (hh2, hw2) {
            return Err(Error::Shape(format!("level {l} bands do not match the approximation size")));
        }
        buf.slice_mut(s![hh2..lh_, ..hw2]).assign(&d.lh);
        buf.slice_mut(s![..hh2, hw2..lw_]).assign(&d.hl);
        buf.slice_mut(s![hh2..lh_, hw2..lw_]).assign(&d.hh);
        inverse_level(&mut buf, lh_, lw_, &high);
    }
    let (h, w) = pyramid.original_dims;
    Ok(buf.slice(s![..h, ..w]).to_owned())
}
