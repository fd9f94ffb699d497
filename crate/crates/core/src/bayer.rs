//! Partitioning of a mosaic into its four Bayer-offset planes.

use ndarray::{s, Array2};

use crate::error::{Error, Result};

/// Bayer offsets `(pi, pj)` in channel order.
pub const OFFSETS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// `plane[p][i, j] = mosaic[2i + pi, 2j + pj]`.
pub fn split_planes<T: Clone>(mosaic: &Array2<T>) -> Result<[Array2<T>; 4]> {
    let (h, w) = mosaic.dim();
    if h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0 {
        return Err(Error::Domain(format!("mosaic {h}x{w} must have even, non-zero sides")));
    }
    Ok(OFFSETS.map(|(pi, pj)| mosaic.slice(s![pi..;2, pj..;2]).to_owned()))
}

/// Inverse of [`split_planes`].
pub fn merge_planes<T: Clone + Default>(planes: &[Array2<T>; 4]) -> Result<Array2<T>> {
    let (h, w) = planes[0].dim();
    if planes.iter().any(|p| p.dim() != (h, w)) {
        return Err(Error::Shape("Bayer planes differ in shape".into()));
    }
    let mut out = Array2::from_elem((2 * h, 2 * w), T::default());
    for (plane, (pi, pj)) in planes.iter().zip(OFFSETS) {
        out.slice_mut(s![pi..;2, pj..;2]).assign(plane);
    }
    Ok(out)
}
