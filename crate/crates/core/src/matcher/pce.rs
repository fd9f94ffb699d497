use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Half-width of the square excluded around the peak (11×11).
const PEAK_EXCLUSION: isize = 5;

/// Peak location and peak-to-correlation-energy of a correlation surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PceResult {
    pub pce: f64,
    /// Circular shift `(rows, cols)` of the peak.
    pub peak: (usize, usize),
    pub peak_value: f64,
}

fn fft2(data: &mut Array2<Complex64>, inverse: bool, planner: &mut FftPlanner<f64>) {
    let (h, w) = data.dim();
    let row_fft = if inverse { planner.plan_fft_inverse(w) } else { planner.plan_fft_forward(w) };
    let col_fft = if inverse { planner.plan_fft_inverse(h) } else { planner.plan_fft_forward(h) };
    for mut row in data.rows_mut() {
        let mut buf: Vec<Complex64> = row.to_vec();
        row_fft.process(&mut buf);
        row.assign(&ndarray::ArrayView1::from(&buf));
    }
    let mut col_buf = vec![Complex64::default(); h];
    for mut col in data.columns_mut() {
        for (b, v) in col_buf.iter_mut().zip(col.iter()) {
            *b = *v;
        }
        col_fft.process(&mut col_buf);
        for (v, b) in col.iter_mut().zip(&col_buf) {
            *v = *b;
        }
    }
}

fn centered_unit(a: &Array2<f64>) -> Result<Array2<f64>> {
    let mean = a.mean().unwrap_or(0.0);
    let c = a.mapv(|v| v - mean);
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("zero-energy input to cross-correlation".into()));
    }
    Ok(c / norm)
}

/// Normalized circular cross-correlation `C[s] = sum_x a[x] b[x + s]` of the
/// mean-removed, unit-norm inputs.
pub fn cross_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("cannot correlate {:?} with {:?}", a.dim(), b.dim())));
    }
    let (a, b) = (centered_unit(a)?, centered_unit(b)?);
    let mut planner = FftPlanner::new();
    let mut fa = a.mapv(|v| Complex64::new(v, 0.0));
    let mut fb = b.mapv(|v| Complex64::new(v, 0.0));
    fft2(&mut fa, false, &mut planner);
    fft2(&mut fb, false, &mut planner);
    fb.zip_mut_with(&fa, |y, x| *y *= x.conj());
    fft2(&mut fb, true, &mut planner);
    let n = a.len() as f64;
    Ok(fb.mapv(|c| c.re / n))
}

/// PCE of a correlation surface: squared peak over the mean squared value
/// outside an 11×11 (circular) neighbourhood of the peak.
pub fn pce_of_surface(surface: &Array2<f64>) -> Result<PceResult> {
    let (h, w) = surface.dim();
    let (peak, &peak_value) = surface
        .indexed_iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Degenerate("empty correlation surface".into()))?;
    let circ = |d: isize, n: usize| {
        let n = n as isize;
        let d = d.rem_euclid(n);
        d.min(n - d)
    };
    let (mut energy, mut count) = (0.0, 0usize);
    for ((i, j), &v) in surface.indexed_iter() {
        let di = circ(i as isize - peak.0 as isize, h);
        let dj = circ(j as isize - peak.1 as isize, w);
        if di > PEAK_EXCLUSION || dj > PEAK_EXCLUSION {
            energy += v * v;
            count += 1;
        }
    }
    if count == 0 || energy == 0.0 {
        return Err(Error::Degenerate("no off-peak correlation energy".into()));
    }
    Ok(PceResult { pce: peak_value * peak_value / (energy / count as f64), peak, peak_value })
}

/// Peak-to-correlation energy between two planes of equal shape.
pub fn pce(reference: &Array2<f64>, probe: &Array2<f64>) -> Result<PceResult> {
    pce_of_surface(&cross_correlation(reference, probe)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, DrawTag};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn field(n: usize, seed: u64) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |(i, j)| CounterRng::new(seed, 9, i, j, DrawTag::ReadNoise).sample(StandardNormal))
    }

    #[test]
    fn self_pce_is_large_at_zero_shift() {
        let a = field(64, 1);
        let r = pce(&a, &a).unwrap();
        assert_eq!(r.peak, (0, 0));
        assert!((r.peak_value - 1.0).abs() < 1e-9);
        assert!(r.pce > 100.0, "{}", r.pce);
    }

    #[test]
    fn circular_shift_moves_peak() {
        let a = field(64, 2);
        let (h, w) = a.dim();
        let b = Array2::from_shape_fn((h, w), |(i, j)| a[[(i + h - 5) % h, (j + w - 7) % w]]);
        let r = pce(&a, &b).unwrap();
        assert_eq!(r.peak, (5, 7));
    }

    #[test]
    fn surface_matches_direct_sum() {
        let a = field(8, 3);
        let b = field(8, 4);
        let s = cross_correlation(&a, &b).unwrap();
        let (a, b) = (centered_unit(&a).unwrap(), centered_unit(&b).unwrap());
        for (si, sj) in [(0usize, 0usize), (3, 5), (7, 1)] {
            let mut direct = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    direct += a[[i, j]] * b[[(i + si) % 8, (j + sj) % 8]];
                }
            }
            assert!((direct - s[[si, sj]]).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let z = Array2::zeros((16, 16));
        assert!(matches!(pce(&z, &field(16, 1)), Err(Error::Degenerate(_))));
        assert!(matches!(pce(&field(8, 1), &field(16, 1)), Err(Error::Shape(_))));
    }
}
