//! Compressed-sensing reconstruction from masked k-space.
//!
//! Solves `min_x ||mask . fft2(x) - y||^2 + 2 lambda ||W x||_1` with ISTA,
//! where `W` is the orthonormal Haar transform (or identity). With the
//! unitary FFT and a boolean mask the measurement operator has norm 1, so
//! any `step <= 1` makes the iteration monotone in the objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{haar2, ihaar2};
use crate::img::GrayImage;
use crate::kspace::{fft2, ifft2_real_with_residual, KSpace};
use crate::sampling::{apply_mask, SamplingMask};

/// Sparsifying basis for the L1 term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Haar,
    Identity,
}

/// ISTA parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    /// Sparsity weight on `2 lambda ||W x||_1`; zero disables shrinkage.
    pub lambda: f64,
    pub iterations: u32,
    /// Gradient step; must stay in `(0, 1]` for the unit-norm system.
    pub step: f64,
    pub transform: Transform,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            lambda: 0.005,
            iterations: 200,
            step: 1.0,
            transform: Transform::Haar,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step must be in (0, 1] for a unit-norm system, got {}",
                self.step
            )));
        }
        Ok(())
    }
}

/// Proximal map of the absolute value: `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Result of a reconstruction run.
#[derive(Debug, Clone)]
pub struct ReconOutput {
    pub image: GrayImage,
    /// Objective `||mask.fft2(x) - y||^2 + 2 lambda ||W x||_1` at the initial
    /// iterate and after each iteration (`iterations + 1` entries).
    pub objective: Vec<f64>,
    /// Largest imaginary magnitude discarded across all inverse transforms.
    pub max_imag_discarded: f64,
}

fn forward(t: Transform, img: &GrayImage) -> GrayImage {
    match t {
        Transform::Haar => haar2(img),
        Transform::Identity => img.clone(),
    }
}

fn inverse(t: Transform, coeffs: &GrayImage) -> GrayImage {
    match t {
        Transform::Haar => ihaar2(coeffs),
        Transform::Identity => coeffs.clone(),
    }
}

/// ISTA from the zero-filled start `x0 = ifft2_real(y)`:
///
/// ```text
/// x <- W^-1 soft( W(x - step * ifft2_real(mask.fft2(x) - y)), step * lambda )
/// ```
///
/// `y` is masked on entry so measurements outside the mask cannot leak in.
/// Aborts with the iteration index if an iterate goes non-finite.
pub fn reconstruct(y: &KSpace, m: &SamplingMask, cfg: &ReconConfig) -> Result<ReconOutput> {
    cfg.validate()?;
    if y.dims() != m.dims() {
        return Err(Error::dims("reconstruct", m.dims(), y.dims()));
    }
    let y = apply_mask(y, m)?;
    let threshold = cfg.step * cfg.lambda;

    let (x0, mut max_imag) = ifft2_real_with_residual(&y);
    let mut x = x0;
    let mut coeffs = forward(cfg.transform, &x);
    let mut objective = Vec::with_capacity(cfg.iterations as usize + 1);

    for iter in 0..=cfg.iterations {
        let kx = apply_mask(&fft2(&x), m)?;
        let resid = KSpace::new(
            kx.height(),
            kx.width(),
            kx.values()
                .iter()
                .zip(y.values())
                .map(|(&a, &b)| a - b)
                .collect(),
        )?;
        let l1: f64 = coeffs.pixels().iter().map(|v| v.abs()).sum();
        objective.push(resid.norm_sq() + 2.0 * cfg.lambda * l1);
        if iter == cfg.iterations {
            break;
        }

        let (grad, imag) = ifft2_real_with_residual(&resid);
        max_imag = max_imag.max(imag);
        let z = x.zip_map(&grad, |xi, gi| xi - cfg.step * gi)?;
        let shrunk = forward(cfg.transform, &z).map(|v| soft_threshold(v, threshold));
        x = inverse(cfg.transform, &shrunk);
        if !x.is_finite() {
            return Err(Error::NonFinite {
                stage: "reconstruct",
                iteration: iter as usize + 1,
            });
        }
        coeffs = shrunk;
    }

    Ok(ReconOutput {
        image: x,
        objective,
        max_imag_discarded: max_imag,
    })
}
