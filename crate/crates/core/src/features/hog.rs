use std::f64::consts::PI;

use crate::data::ImageStore;
use crate::error::{HalError, Result};

pub const HOG_CELLS: usize = 4;
pub const HOG_BINS: usize = 9;
pub const HOG_LEN: usize = HOG_CELLS * HOG_CELLS * HOG_BINS;

/// Histogram of oriented gradients over a single-channel image in row-major
/// order: central differences with clamped borders, a 4x4 cell grid, 9
/// unsigned orientation bins with magnitude votes, then L2 normalization of
/// the whole descriptor.
pub fn hog_prior(pixels: &[f64], height: usize, width: usize) -> Result<Vec<f64>> {
    if height < HOG_CELLS || width < HOG_CELLS {
        return Err(HalError::Shape(format!(
            "image {height}x{width} is smaller than the {HOG_CELLS}x{HOG_CELLS} cell grid"
        )));
    }
    if pixels.len() != height * width {
        return Err(HalError::Shape(format!(
            "{} pixels for a {height}x{width} image",
            pixels.len()
        )));
    }
    let at = |y: usize, x: usize| pixels[y * width + x];
    let bin_width = PI / HOG_BINS as f64;
    let mut hist = vec![0.0; HOG_LEN];
    for y in 0..height {
        let cy = y * HOG_CELLS / height;
        for x in 0..width {
            let gx = at(y, (x + 1).min(width - 1)) - at(y, x.saturating_sub(1));
            let gy = at((y + 1).min(height - 1), x) - at(y.saturating_sub(1), x);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += PI;
            }
            if theta >= PI {
                theta -= PI;
            }
            let bin = ((theta / bin_width) as usize).min(HOG_BINS - 1);
            let cx = x * HOG_CELLS / width;
            hist[(cy * HOG_CELLS + cx) * HOG_BINS + bin] += mag;
        }
    }
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        hist.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(hist)
}

/// HOG of every stored image, computed on the channel-mean luminance.
pub fn hog_priors(store: &ImageStore) -> Result<Vec<Vec<f64>>> {
    let s = store.shape();
    (0..store.len())
        .map(|i| hog_prior(&store.luminance(i), s.height, s.width))
        .collect()
}
