//! Complex k-space grids and the unitary 2D Fourier transform.
//!
//! K-space is stored in the centered layout: the zero-frequency bin sits at
//! index `(height/2, width/2)`, so "central rows" and "spokes through the
//! center" are literal array statements. Both transforms are scaled by
//! `1/sqrt(height*width)`, making the pair unitary: round trips are exact to
//! floating-point rounding and Parseval holds.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::img::GrayImage;

/// Complex-valued 2D Fourier-domain grid in centered layout.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpace {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

impl KSpace {
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "k-space dimensions must be at least 1x1, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "expected {} k-space bins for {height}x{width}, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1);
        Self {
            height,
            width,
            values: vec![Complex64::new(0.0, 0.0); height * width],
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

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.values[row * self.width + col] = value;
    }

    /// Index of the zero-frequency bin: `(height/2, width/2)`.
    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    /// Sum of squared magnitudes over all bins.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest deviation from Hermitian symmetry about the center bin,
    /// relative to the largest bin magnitude. Zero frequency of a real image
    /// satisfies `K[-u, -v] = conj(K[u, v])`.
    pub fn hermitian_error(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()))
            .max(f64::MIN_POSITIVE);
        let (h, w) = (self.height, self.width);
        let (cr, cc) = self.center();
        let mut worst = 0.0f64;
        for r in 0..h {
            for c in 0..w {
                // Mirror through the center; bins whose mirror falls outside
                // the grid (possible on even sizes at the Nyquist edge) are
                // their own partners only when they map back inside.
                let mr = 2 * cr as isize - r as isize;
                let mc = 2 * cc as isize - c as isize;
                if mr < 0 || mc < 0 || mr >= h as isize || mc >= w as isize {
                    continue;
                }
                let v = self.get(r, c);
                let m = self.get(mr as usize, mc as usize);
                worst = worst.max((v - m.conj()).norm());
            }
        }
        worst / scale
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_rows(buf: &mut [Complex64], width: usize, inverse: bool) {
    PLANNER.with(|p| {
        let fft = {
            let mut planner = p.borrow_mut();
            if inverse {
                planner.plan_fft_inverse(width)
            } else {
                planner.plan_fft_forward(width)
            }
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(width) {
            fft.process_with_scratch(row, &mut scratch);
        }
    });
}

fn transpose(buf: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = buf[r * width + c];
        }
    }
    out
}

/// Unnormalized in-place 2D FFT on a row-major buffer (rows, then columns via
/// transpose). Output layout matches the input (DC at index 0).
fn fft_2d(buf: Vec<Complex64>, height: usize, width: usize, inverse: bool) -> Vec<Complex64> {
    let mut buf = buf;
    fft_rows(&mut buf, width, inverse);
    let mut t = transpose(&buf, height, width);
    fft_rows(&mut t, height, inverse);
    transpose(&t, width, height)
}

/// Cyclic roll: `out[(r + dr) % h][(c + dc) % w] = in[r][c]`.
fn roll(buf: &[Complex64], height: usize, width: usize, dr: usize, dc: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
    for r in 0..height {
        let nr = (r + dr) % height;
        for c in 0..width {
            let nc = (c + dc) % width;
            out[nr * width + nc] = buf[r * width + c];
        }
    }
    out
}

fn fftshift(buf: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    roll(buf, height, width, height / 2, width / 2)
}

fn ifftshift(buf: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    roll(buf, height, width, height - height / 2, width - width / 2)
}

/// Unitary 2D Fourier transform of a real image into centered k-space.
pub fn fft2(img: &GrayImage) -> KSpace {
    let (h, w) = img.dims();
    let buf: Vec<Complex64> = img.pixels().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let spec = fft_2d(buf, h, w, false);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    let shifted = fftshift(&spec, h, w);
    KSpace {
        height: h,
        width: w,
        values: shifted.into_iter().map(|v| v * scale).collect(),
    }
}

/// Unitary inverse transform, returning the real part. The discarded
/// imaginary magnitude is available through [`ifft2_real_with_residual`].
pub fn ifft2_real(k: &KSpace) -> GrayImage {
    ifft2_real_with_residual(k).0
}

/// Unitary inverse transform; returns the real-part image and the largest
/// absolute imaginary component that was discarded.
pub fn ifft2_real_with_residual(k: &KSpace) -> (GrayImage, f64) {
    let (h, w) = k.dims();
    let natural = ifftshift(&k.values, h, w);
    let spec = fft_2d(natural, h, w, true);
    let scale = 1.0 / ((h * w) as f64).sqrt();
    let mut max_imag = 0.0f64;
    let pixels: Vec<f64> = spec
        .into_iter()
        .map(|v| {
            max_imag = max_imag.max((v.im * scale).abs());
            v.re * scale
        })
        .collect();
    let img = GrayImage::from_fn(h, w, |r, c| pixels[r * w + c]);
    (img, max_imag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Brute-force centered unitary DFT, the independent oracle for fft2.
    fn dft2_direct(img: &GrayImage) -> KSpace {
        let (h, w) = img.dims();
        let (cr, cc) = (h / 2, w / 2);
        let mut out = KSpace::zeros(h, w);
        for kr in 0..h {
            for kc in 0..w {
                // Centered bin (kr, kc) holds frequency (kr - cr, kc - cc).
                let fu = kr as f64 - cr as f64;
                let fv = kc as f64 - cc as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..h {
                    for c in 0..w {
                        let phase = -2.0 * PI * (fu * r as f64 / h as f64 + fv * c as f64 / w as f64);
                        acc += img.get(r, c) * Complex64::new(phase.cos(), phase.sin());
                    }
                }
                out.set(kr, kc, acc / (h as f64 * w as f64).sqrt());
            }
        }
        out
    }

    fn pseudo_random_image(h: usize, w: usize, seed: u64) -> GrayImage {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        GrayImage::from_fn(h, w, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
    }

    #[test]
    fn delta_at_center_has_flat_magnitude() {
        let mut img = GrayImage::zeros(8, 8);
        img.set(4, 4, 1.0);
        let k = fft2(&img);
        for v in k.values() {
            assert!((v.norm() - 1.0 / 8.0).abs() < 1e-12, "|bin| = {}", v.norm());
        }
        // Cross-check against the direct DFT.
        let oracle = dft2_direct(&img);
        for (a, b) in k.values().iter().zip(oracle.values()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_image_concentrates_at_center() {
        let c = 0.6;
        let n = 16;
        let img = GrayImage::constant(n, n, c);
        let k = fft2(&img);
        let (cr, cc) = k.center();
        for r in 0..n {
            for col in 0..n {
                let v = k.get(r, col);
                if (r, col) == (cr, cc) {
                    assert!((v.re - c * n as f64).abs() < 1e-10);
                    assert!(v.im.abs() < 1e-10);
                } else {
                    assert!(v.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn matches_direct_dft_on_random_input() {
        for &(h, w) in &[(8usize, 8usize), (6, 10), (7, 5)] {
            let img = pseudo_random_image(h, w, (h * 31 + w) as u64);
            let fast = fft2(&img);
            let oracle = dft2_direct(&img);
            for (a, b) in fast.values().iter().zip(oracle.values()) {
                assert!((a - b).norm() < 1e-9, "{h}x{w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn round_trip_is_unitary() {
        let img = pseudo_random_image(32, 32, 7);
        let (back, max_imag) = ifft2_real_with_residual(&fft2(&img));
        let mut worst = 0.0f64;
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-10, "round trip deviation {worst}");
        assert!(max_imag < 1e-10);
    }

    #[test]
    fn round_trip_odd_dims() {
        let img = pseudo_random_image(15, 9, 3);
        let back = ifft2_real(&fft2(&img));
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let img = pseudo_random_image(64, 64, 11);
        let k = fft2(&img);
        let img_energy: f64 = img.pixels().iter().map(|v| v * v).sum();
        let k_energy = k.norm_sq();
        assert!((img_energy - k_energy).abs() / img_energy < 1e-8);
    }

    #[test]
    fn real_image_kspace_is_hermitian() {
        let img = pseudo_random_image(32, 32, 5);
        let k = fft2(&img);
        assert!(k.hermitian_error() < 1e-10);
    }
}
