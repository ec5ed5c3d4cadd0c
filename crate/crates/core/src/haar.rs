//! Orthonormal multilevel 2D Haar transform.
//!
//! Each level maps pairs to `(a+b)/sqrt(2)` (average) and `(a-b)/sqrt(2)`
//! (detail) along rows then columns of the current low-pass block, storing
//! averages in the first half. Power-of-two sizes decompose fully; other
//! sizes decompose to the deepest level at which both block dimensions are
//! still even, so a `96x96` input runs 5 levels down to a `3x3` low-pass
//! block and odd sizes pass through unchanged.

use crate::img::GrayImage;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Number of decomposition levels for the given dimensions.
pub fn haar_levels(height: usize, width: usize) -> u32 {
    (height.trailing_zeros()).min(width.trailing_zeros())
}

fn step_rows<const INVERSE: bool>(data: &mut [f64], stride: usize, bh: usize, bw: usize) {
    let half = bw / 2;
    let mut tmp = vec![0.0f64; bw];
    for r in 0..bh {
        let row = &mut data[r * stride..r * stride + bw];
        if INVERSE {
            for i in 0..half {
                let avg = row[i];
                let det = row[half + i];
                tmp[2 * i] = (avg + det) * SQRT_HALF;
                tmp[2 * i + 1] = (avg - det) * SQRT_HALF;
            }
        } else {
            for i in 0..half {
                let a = row[2 * i];
                let b = row[2 * i + 1];
                tmp[i] = (a + b) * SQRT_HALF;
                tmp[half + i] = (a - b) * SQRT_HALF;
            }
        }
        row.copy_from_slice(&tmp);
    }
}

fn step_cols<const INVERSE: bool>(data: &mut [f64], stride: usize, bh: usize, bw: usize) {
    let half = bh / 2;
    let mut tmp = vec![0.0f64; bh];
    for c in 0..bw {
        if INVERSE {
            for i in 0..half {
                let avg = data[i * stride + c];
                let det = data[(half + i) * stride + c];
                tmp[2 * i] = (avg + det) * SQRT_HALF;
                tmp[2 * i + 1] = (avg - det) * SQRT_HALF;
            }
        } else {
            for i in 0..half {
                let a = data[2 * i * stride + c];
                let b = data[(2 * i + 1) * stride + c];
                tmp[i] = (a + b) * SQRT_HALF;
                tmp[half + i] = (a - b) * SQRT_HALF;
            }
        }
        for i in 0..bh {
            data[i * stride + c] = tmp[i];
        }
    }
}

/// Forward multilevel transform. The output has the same dimensions with the
/// deepest low-pass block in the top-left corner.
pub fn haar2(img: &GrayImage) -> GrayImage {
    let (h, w) = img.dims();
    let levels = haar_levels(h, w);
    let mut data = img.pixels().to_vec();
    let (mut bh, mut bw) = (h, w);
    for _ in 0..levels {
        step_rows::<false>(&mut data, w, bh, bw);
        step_cols::<false>(&mut data, w, bh, bw);
        bh /= 2;
        bw /= 2;
    }
    GrayImage::from_fn(h, w, |r, c| data[r * w + c])
}

/// Inverse of [`haar2`]; perfect reconstruction up to rounding.
pub fn ihaar2(coeffs: &GrayImage) -> GrayImage {
    let (h, w) = coeffs.dims();
    let levels = haar_levels(h, w);
    let mut data = coeffs.pixels().to_vec();
    // Replay levels from the deepest block outward.
    let mut sizes = Vec::with_capacity(levels as usize);
    let (mut bh, mut bw) = (h, w);
    for _ in 0..levels {
        sizes.push((bh, bw));
        bh /= 2;
        bw /= 2;
    }
    for &(bh, bw) in sizes.iter().rev() {
        step_cols::<true>(&mut data, w, bh, bw);
        step_rows::<true>(&mut data, w, bh, bw);
    }
    GrayImage::from_fn(h, w, |r, c| data[r * w + c])
}
