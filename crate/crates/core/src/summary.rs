//! Scalar summaries: mild Gaussian denoising of the error estimate followed
//! by the square root of the sum of squares, sweeps over kernel widths, and
//! the flag decision.
//!
//! The blur exists to strip the zero-mean background noise that otherwise
//! dominates the scalar; one pixel of standard deviation is barely visible
//! yet collapses the noise floor while coherent error structure survives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::img::GrayImage;

/// Boundary handling for the separable convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Symmetric reflection at the image edge (`d c b a | a b c d | d c b a`).
    /// Every kernel tap lands on exactly one in-range sample with total
    /// weight one, so a unit-sum kernel preserves the image mean exactly.
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurConfig {
    /// Kernel standard deviation in pixels; 0 disables the blur.
    pub sigma: f64,
    /// Kernel half-width in units of sigma.
    pub truncate: f64,
    pub boundary: Boundary,
}

impl Default for BlurConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            truncate: 4.0,
            boundary: Boundary::Mirror,
        }
    }
}

impl BlurConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "blur sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if self.truncate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "truncate must be positive, got {}",
                self.truncate
            )));
        }
        Ok(())
    }

    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            ..Default::default()
        }
    }
}

/// One row of a sigma sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sigma: f64,
    /// Square root of the sum of squared pixels.
    pub rss: f64,
    /// `rss / sqrt(pixel count)`.
    pub rms: f64,
}

/// The sigma grid used by the reference tables: 0.0 through 4.0 in steps of
/// one half pixel.
pub const DEFAULT_SIGMA_GRID: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// Samples of `exp(-x^2 / (2 sigma^2))` at integer offsets out to
/// `ceil(truncate * sigma)`, renormalized to sum exactly to one. Sigma zero
/// yields the identity kernel `[1]`.
pub fn gaussian_kernel(sigma: f64, truncate: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (truncate * sigma).ceil() as usize;
    let mut kernel: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Reflects an out-of-range index back into `[0, n)` symmetrically at the
/// image edge (period `2n`).
#[inline]
fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let i = i.rem_euclid(2 * n);
    (if i < n { i } else { 2 * n - 1 - i }) as usize
}

fn convolve_rows(img: &GrayImage, kernel: &[f64]) -> GrayImage {
    let (h, w) = img.dims();
    let radius = kernel.len() / 2;
    GrayImage::from_fn(h, w, |r, c| {
        let mut acc = 0.0;
        for (j, &k) in kernel.iter().enumerate() {
            let idx = mirror_index(c as isize + j as isize - radius as isize, w);
            acc += k * img.get(r, idx);
        }
        acc
    })
}

fn transpose(img: &GrayImage) -> GrayImage {
    let (h, w) = img.dims();
    GrayImage::from_fn(w, h, |r, c| img.get(c, r))
}

/// Separable Gaussian convolution (rows then columns) with mirror boundary.
/// Sigma zero returns the input unchanged.
pub fn blur(img: &GrayImage, cfg: &BlurConfig) -> GrayImage {
    debug_assert!(cfg.validate().is_ok());
    if cfg.sigma == 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(cfg.sigma, cfg.truncate);
    let rows = convolve_rows(img, &kernel);
    let cols = convolve_rows(&transpose(&rows), &kernel);
    transpose(&cols)
}

/// Square root of the sum of squared pixels.
pub fn rss(img: &GrayImage) -> f64 {
    img.pixels().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Root-mean-square: `rss / sqrt(N)`.
pub fn rms(img: &GrayImage) -> f64 {
    rss(img) / (img.len() as f64).sqrt()
}

/// Blurs `d` at each sigma and reports the scalar summaries.
pub fn sweep(d: &GrayImage, sigmas: &[f64], template: &BlurConfig) -> Result<Vec<SummaryRow>> {
    if sigmas.is_empty() {
        return Err(Error::InvalidConfig("sigma grid must be nonempty".into()));
    }
    let sqrt_n = (d.len() as f64).sqrt();
    sigmas
        .iter()
        .map(|&sigma| {
            let cfg = BlurConfig { sigma, ..*template };
            cfg.validate()?;
            let value = rss(&blur(d, &cfg));
            Ok(SummaryRow {
                sigma,
                rss: value,
                rms: value / sqrt_n,
            })
        })
        .collect()
}

/// Outcome of the flagging protocol: compute the blurred scalar, then decide
/// whether the scan merits closer inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagDecision {
    pub flagged: bool,
    pub statistic: String,
    pub sigma: f64,
    pub value: f64,
    pub threshold: f64,
    pub message: String,
}

/// Flags when `row.rss` strictly exceeds the threshold. The comparison runs
/// on rss, the statistic the reference tables report.
pub fn flag(row: &SummaryRow, threshold: f64) -> Result<FlagDecision> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "flag threshold must be positive, got {threshold}"
        )));
    }
    let flagged = row.rss > threshold;
    let verdict = if flagged {
        "flagged for inspection"
    } else {
        "within threshold"
    };
    Ok(FlagDecision {
        flagged,
        statistic: "rss".into(),
        sigma: row.sigma,
        value: row.rss,
        threshold,
        message: format!(
            "rss at sigma {} is {} against threshold {}: {verdict}",
            sig3(row.sigma),
            sig3(row.rss),
            sig3(threshold),
        ),
    })
}

/// Three-significant-figure formatting in the style of the reference tables
/// (12.9, 6.25, 0.535).
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0.00".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
