//! Image containers and color-space conversion.
//!
//! [`GrayImage`] carries originals, reconstructions, and signed error maps as
//! row-major `f64` grids (top row first). Display images use the nominal range
//! `[0, 1]`; error maps are unbounded and signed. [`ColorImage`] is the output
//! of every colorization, with each channel in `[0, 1]`.

use crate::error::{Error, Result};

/// Real-valued 2D pixel grid, row-major with the top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major pixel data, rejecting empty dimensions,
    /// length mismatches, and non-finite values.
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels for {height}x{width}, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(idx) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite pixel at index {idx}"
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// All-zero image. Panics on empty dimensions.
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::constant(height, width, 0.0)
    }

    /// Constant image. Panics on empty dimensions.
    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        assert!(height >= 1 && width >= 1, "dimensions must be at least 1x1");
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    /// Builds an image by evaluating `f(row, col)`. The values are trusted to
    /// be finite; callers producing arbitrary arithmetic go through
    /// [`GrayImage::new`] or check finiteness themselves.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height >= 1 && width >= 1, "dimensions must be at least 1x1");
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction forbids empty images
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    /// Applies `f` to every pixel.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pixelwise combination of two images of equal dimensions.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::dims("zip_map", self.dims(), other.dims()));
        }
        Ok(Self {
            height: self.height,
            width: self.width,
            pixels: self
                .pixels
                .iter()
                .zip(&other.pixels)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Pixelwise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.pixels {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    /// Largest absolute pixel value.
    pub fn max_abs(&self) -> f64 {
        self.pixels.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|v| v.is_finite())
    }
}

/// RGB image with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    height: usize,
    width: usize,
    pixels: Vec<[f64; 3]>,
}

impl ColorImage {
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Self {
        assert!(height >= 1 && width >= 1, "dimensions must be at least 1x1");
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                let [r1, g, b] = f(r, c);
                pixels.push([clamp01(r1), clamp01(g), clamp01(b)]);
            }
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvPixel {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

impl HsvPixel {
    pub fn new(hue: f64, saturation: f64, value: f64) -> Self {
        Self {
            hue,
            saturation,
            value,
        }
    }
}

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Standard hexcone HSV to RGB conversion. Inputs are clamped to valid
/// ranges (hue wraps modulo 360) so the output channels always land in
/// `[0, 1]`. Zero saturation yields the gray `(value, value, value)`.
pub fn hsv_to_rgb(p: HsvPixel) -> [f64; 3] {
    let s = clamp01(p.saturation);
    let v = clamp01(p.value);
    if s == 0.0 {
        return [v, v, v];
    }
    let hue = p.hue.rem_euclid(360.0);
    let h6 = hue / 60.0;
    let sector = h6.floor() as i32 % 6;
    let f = h6 - h6.floor();
    let p0 = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p0],
        1 => [q, v, p0],
        2 => [p0, v, t],
        3 => [p0, q, v],
        4 => [t, p0, v],
        _ => [v, p0, q],
    }
}

/// Inverse of [`hsv_to_rgb`] for channels in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> HsvPixel {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let range = max - min;
    let value = max;
    if max == 0.0 || range == 0.0 {
        return HsvPixel::new(0.0, 0.0, value);
    }
    let saturation = range / max;
    let mut hue = if max == r {
        (g - b) / range
    } else if max == g {
        (b - r) / range + 2.0
    } else {
        (r - g) / range + 4.0
    } * 60.0;
    if hue < 0.0 {
        hue += 360.0;
    }
    HsvPixel::new(hue, saturation, value)
}

/// Affine map of the pixel range onto `[0, 1]`. Constant images map to the
/// mid-gray 0.5, matching the convention that middling grays mean the
/// absence of error.
pub fn normalize_unit(img: &GrayImage) -> GrayImage {
    let (min, max) = img.min_max();
    let range = max - min;
    if range == 0.0 {
        return GrayImage::constant(img.height(), img.width(), 0.5);
    }
    img.map(|v| (v - min) / range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_saturation_is_gray() {
        for hue in [0.0, 90.0, 213.0, 359.0] {
            let rgb = hsv_to_rgb(HsvPixel::new(hue, 0.0, 0.7));
            assert_eq!(rgb, [0.7, 0.7, 0.7]);
        }
    }

    #[test]
    fn hexcone_corners() {
        assert_eq!(hsv_to_rgb(HsvPixel::new(0.0, 1.0, 1.0)), [1.0, 0.0, 0.0]);
        assert_eq!(hsv_to_rgb(HsvPixel::new(120.0, 1.0, 1.0)), [0.0, 1.0, 0.0]);
        assert_eq!(hsv_to_rgb(HsvPixel::new(240.0, 1.0, 1.0)), [0.0, 0.0, 1.0]);
        assert_eq!(hsv_to_rgb(HsvPixel::new(300.0, 1.0, 1.0)), [1.0, 0.0, 1.0]);
        assert_eq!(hsv_to_rgb(HsvPixel::new(180.0, 1.0, 1.0)), [0.0, 1.0, 1.0]);
    }

    #[test]
    fn hsv_rgb_round_trip() {
        let mut hue = 3.0;
        let mut sat = 0.11;
        let mut val = 0.23;
        for _ in 0..500 {
            // Low-discrepancy sweep over the HSV cube.
            hue = (hue + 137.508) % 360.0;
            sat = (sat + 0.381966) % 1.0;
            val = (val + 0.618034) % 1.0;
            if sat <= 1e-6 || val <= 1e-6 {
                continue;
            }
            let p = HsvPixel::new(hue, sat, val);
            let back = rgb_to_hsv(hsv_to_rgb(p));
            assert!(
                (back.hue - hue).abs() < 1e-6 || (back.hue - hue).abs() > 360.0 - 1e-6,
                "hue {hue} -> {}",
                back.hue
            );
            assert!((back.saturation - sat).abs() < 1e-6);
            assert!((back.value - val).abs() < 1e-6);
        }
    }

    #[test]
    fn normalize_affine() {
        let img = GrayImage::new(1, 3, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(normalize_unit(&img).pixels(), &[0.0, 0.5, 1.0]);
        let img = GrayImage::new(1, 2, vec![-1.0, 1.0]).unwrap();
        assert_eq!(normalize_unit(&img).pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_is_mid_gray() {
        let img = GrayImage::constant(4, 5, 3.7);
        assert!(normalize_unit(&img).pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn normalize_idempotent() {
        let img = GrayImage::new(2, 2, vec![-3.0, 0.25, 7.5, 1.0]).unwrap();
        let once = normalize_unit(&img);
        let twice = normalize_unit(&once);
        for (a, b) in once.pixels().iter().zip(twice.pixels()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(GrayImage::new(0, 4, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn sub_dimension_mismatch() {
        let a = GrayImage::zeros(2, 2);
        let b = GrayImage::zeros(2, 3);
        assert!(matches!(
            a.sub(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
