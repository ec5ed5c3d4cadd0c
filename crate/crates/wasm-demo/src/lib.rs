//! Interactive browser demo over the core pipeline.
//!
//! A [`DemoSession`] runs the expensive part once (reconstruction plus a
//! small bootstrap) for a chosen phantom size and sampling pattern; the page
//! then re-renders views and sweeps blur widths interactively. All exported
//! functions are thin wrappers over plain-Rust helpers so the logic stays
//! testable on the host.

use wasm_bindgen::prelude::*;

use bootviz_core::bootstrap::{bootstrap_errors, corrected, true_error, BootstrapConfig};
use bootviz_core::img::GrayImage;
use bootviz_core::kspace::fft2;
use bootviz_core::phantom::shepp_logan;
use bootviz_core::recon::{reconstruct, ReconConfig};
use bootviz_core::sampling::{apply_mask, make_mask, retained_fraction_of, MaskSpec, SamplingMask};
use bootviz_core::summary::{blur, rss, sweep, BlurConfig, DEFAULT_SIGMA_GRID};
use bootviz_core::viz::{
    gray_to_color, grayscale_error, interpolate_colorize, overlay_threshold, saturate_colorize,
    signed_colormap, ErrorScale, OverlayConfig,
};
use bootviz_core::ColorImage;

fn mask_spec_from(kind: &str, retained_fraction: f64, spokes: u32, seed: u32) -> Result<MaskSpec, String> {
    match kind {
        "horizontal" => Ok(MaskSpec::Horizontal {
            retained_fraction,
            center_fraction: (retained_fraction * 0.32).min(0.99 * retained_fraction),
            seed: seed as u64,
        }),
        "radial" => Ok(MaskSpec::Radial { num_spokes: spokes }),
        "full" => Ok(MaskSpec::Full),
        other => Err(format!("unknown mask kind {other:?}")),
    }
}

fn rgba_bytes(img: &ColorImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.pixels().len() * 4);
    for [r, g, b] in img.pixels() {
        out.push((r * 255.0).round() as u8);
        out.push((g * 255.0).round() as u8);
        out.push((b * 255.0).round() as u8);
        out.push(255);
    }
    out
}

struct SessionState {
    original: GrayImage,
    mask: SamplingMask,
    recon: GrayImage,
    estimate: GrayImage,
}

impl SessionState {
    #[allow(clippy::too_many_arguments)]
    fn build(
        size: usize,
        mask_kind: &str,
        retained_fraction: f64,
        spokes: u32,
        seed: u32,
        lambda: f64,
        ista_iterations: u32,
        bootstrap_iterations: u32,
    ) -> Result<Self, String> {
        let spec = mask_spec_from(mask_kind, retained_fraction, spokes, seed)?;
        let original = shepp_logan(size).map_err(|e| e.to_string())?;
        let mask = make_mask(&spec, size, size).map_err(|e| e.to_string())?;
        let y = apply_mask(&fft2(&original), &mask).map_err(|e| e.to_string())?;
        let rcfg = ReconConfig {
            lambda,
            iterations: ista_iterations,
            ..Default::default()
        };
        let recon = reconstruct(&y, &mask, &rcfg).map_err(|e| e.to_string())?.image;
        let bcfg = BootstrapConfig {
            iterations: bootstrap_iterations,
            seed: seed as u64,
            ..Default::default()
        };
        let estimate = bootstrap_errors(&y, &mask, &spec, &rcfg, &bcfg)
            .map_err(|e| e.to_string())?
            .image;
        Ok(Self {
            original,
            mask,
            recon,
            estimate,
        })
    }

    fn render(&self, view: &str, percentile: f64, pre_blur_sigma: f64) -> Result<ColorImage, String> {
        let d = &self.estimate;
        let scale = ErrorScale::from_image(d);
        let img = match view {
            "original" => gray_to_color(&self.original),
            "mask" => gray_to_color(&GrayImage::from_fn(
                self.mask.height(),
                self.mask.width(),
                |r, c| {
                    if self.mask.is_retained(r, c) {
                        1.0
                    } else {
                        0.0
                    }
                },
            )),
            "recon" => gray_to_color(&self.recon),
            "error" => {
                let e = true_error(&self.original, &self.recon).map_err(|e| e.to_string())?;
                gray_to_color(&grayscale_error(&e, &ErrorScale::from_image(&e)))
            }
            "bootstrap" => gray_to_color(&grayscale_error(d, &scale)),
            "corrected" => gray_to_color(&corrected(&self.recon, d).map_err(|e| e.to_string())?),
            "overlay" => overlay_threshold(
                &self.recon,
                d,
                &OverlayConfig {
                    percentile,
                    pre_blur_sigma,
                },
            )
            .map_err(|e| e.to_string())?,
            "saturate" => saturate_colorize(&self.recon, d, &scale).map_err(|e| e.to_string())?,
            "interpolate" => {
                interpolate_colorize(&self.recon, d, &scale).map_err(|e| e.to_string())?
            }
            "signed_error" => {
                let e = true_error(&self.original, &self.recon).map_err(|e| e.to_string())?;
                signed_colormap(&e, &ErrorScale::from_image(&e))
            }
            "signed_bootstrap" => signed_colormap(d, &scale),
            "blurred_bootstrap" => {
                let blurred = blur(d, &BlurConfig::with_sigma(pre_blur_sigma));
                gray_to_color(&grayscale_error(&blurred, &scale))
            }
            other => return Err(format!("unknown view {other:?}")),
        };
        Ok(img)
    }

    fn sweep_json(&self) -> String {
        let rows = sweep(&self.estimate, &DEFAULT_SIGMA_GRID, &BlurConfig::default())
            .expect("default grid is valid");
        serde_json::to_string(&rows).expect("rows serialize")
    }

    fn rss_at(&self, sigma: f64) -> f64 {
        rss(&blur(&self.estimate, &BlurConfig::with_sigma(sigma.max(0.0))))
    }
}

/// One reconstruction-plus-bootstrap run, renderable in many views.
#[wasm_bindgen]
pub struct DemoSession {
    state: SessionState,
}

#[wasm_bindgen]
impl DemoSession {
    /// Runs the pipeline once. `mask_kind` is `horizontal`, `radial`, or
    /// `full`; `retained_fraction` applies to horizontal masks, `spokes` to
    /// radial ones.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        size: usize,
        mask_kind: &str,
        retained_fraction: f64,
        spokes: u32,
        seed: u32,
        lambda: f64,
        ista_iterations: u32,
        bootstrap_iterations: u32,
    ) -> Result<DemoSession, String> {
        let state = SessionState::build(
            size,
            mask_kind,
            retained_fraction,
            spokes,
            seed,
            lambda,
            ista_iterations,
            bootstrap_iterations,
        )?;
        Ok(DemoSession { state })
    }

    pub fn size(&self) -> usize {
        self.state.original.height()
    }

    /// Fraction of k-space bins the mask retains.
    pub fn mask_fraction(&self) -> f64 {
        retained_fraction_of(&self.state.mask)
    }

    /// RGBA bytes (row-major) for the requested view, ready for `ImageData`.
    /// Views: original, mask, recon, error, bootstrap, corrected, overlay,
    /// saturate, interpolate, signed_error, signed_bootstrap,
    /// blurred_bootstrap.
    pub fn render(&self, view: &str, percentile: f64, pre_blur_sigma: f64) -> Result<Vec<u8>, String> {
        Ok(rgba_bytes(&self.state.render(view, percentile, pre_blur_sigma)?))
    }

    /// The default sigma sweep as a JSON array of `{sigma, rss, rms}` rows.
    pub fn sweep_json(&self) -> String {
        self.state.sweep_json()
    }

    /// Root-sum-of-squares of the estimate blurred at `sigma`.
    pub fn rss_at(&self, sigma: f64) -> f64 {
        self.state.rss_at(sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> SessionState {
        SessionState::build(32, "horizontal", 0.4, 0, 7, 0.005, 10, 3).unwrap()
    }

    #[test]
    fn builds_and_renders_every_view() {
        let s = session();
        for view in [
            "original",
            "mask",
            "recon",
            "error",
            "bootstrap",
            "corrected",
            "overlay",
            "saturate",
            "interpolate",
            "signed_error",
            "signed_bootstrap",
            "blurred_bootstrap",
        ] {
            let img = s.render(view, 2.0, 1.0).unwrap();
            assert_eq!(img.dims(), (32, 32), "{view}");
        }
        assert!(s.render("nope", 2.0, 0.0).is_err());
    }

    #[test]
    fn rgba_layout() {
        let s = session();
        let bytes = rgba_bytes(&s.render("original", 2.0, 0.0).unwrap());
        assert_eq!(bytes.len(), 32 * 32 * 4);
        assert!(bytes.chunks_exact(4).all(|px| px[3] == 255));
    }

    #[test]
    fn sweep_json_has_nine_rows() {
        let s = session();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&s.sweep_json()).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(rows[0]["rss"].as_f64().unwrap() >= rows[8]["rss"].as_f64().unwrap());
    }

    #[test]
    fn rss_matches_sweep_endpoint() {
        let s = session();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&s.sweep_json()).unwrap();
        let direct = s.rss_at(0.0);
        assert!((direct - rows[0]["rss"].as_f64().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn radial_and_full_masks_build() {
        SessionState::build(32, "radial", 0.0, 12, 1, 0.005, 5, 2).unwrap();
        SessionState::build(32, "full", 0.0, 0, 1, 0.0, 5, 2).unwrap();
        assert!(SessionState::build(32, "bogus", 0.5, 0, 1, 0.005, 5, 2).is_err());
    }
}
