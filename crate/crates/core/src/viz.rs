//! Error-map rendering: grayscale displays, threshold overlays, value-channel
//! preserving colorizations, and signed red/blue maps.
//!
//! Sign conventions are fixed here and recorded in output sidecars: positive
//! errors map to magenta in the overlay and interpolated colorizations, to
//! red in the saturated colorization and the signed map; negative errors map
//! to cyan, green, and blue respectively. The property all colorizations
//! share is that a zero-error pixel renders as the untouched neutral gray of
//! the base image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::img::{clamp01, hsv_to_rgb, ColorImage, GrayImage, HsvPixel};
use crate::summary::{blur, BlurConfig};

/// Threshold-overlay parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayConfig {
    /// Upper percentile of |d| to overlay, in (0, 100). Convention: 2.0 for
    /// horizontally retained sampling, 1.0 for radially retained.
    pub percentile: f64,
    /// Gaussian blur applied to d before thresholding; 0 disables.
    pub pre_blur_sigma: f64,
}

impl Default for OverlayConfig {
    fn default() -> Self {
        Self {
            percentile: 2.0,
            pre_blur_sigma: 0.0,
        }
    }
}

impl OverlayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::InvalidConfig(format!(
                "overlay percentile must be in (0, 100), got {}",
                self.percentile
            )));
        }
        if self.pre_blur_sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "pre_blur_sigma must be nonnegative, got {}",
                self.pre_blur_sigma
            )));
        }
        Ok(())
    }
}

/// Normalization constant for error maps: the greatest |d| by default, 1 for
/// an identically zero map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorScale {
    pub max_abs: f64,
}

impl ErrorScale {
    /// Per-image scale from the greatest absolute pixel value.
    pub fn from_image(d: &GrayImage) -> Self {
        let m = d.max_abs();
        Self {
            max_abs: if m > 0.0 { m } else { 1.0 },
        }
    }

    /// Shared scale for comparable figures.
    pub fn fixed(max_abs: f64) -> Result<Self> {
        if max_abs.is_nan() || max_abs <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "max_abs must be positive, got {max_abs}"
            )));
        }
        Ok(Self { max_abs })
    }
}

/// Grayscale error display: zero maps to mid-gray 0.5, extremes to black and
/// white: `g = 0.5 + d / (2 max_abs)`, clamped.
pub fn grayscale_error(d: &GrayImage, s: &ErrorScale) -> GrayImage {
    d.map(|v| clamp01(0.5 + v / (2.0 * s.max_abs)))
}

/// Neutral RGB rendering of a grayscale image (channels clamped).
pub fn gray_to_color(g: &GrayImage) -> ColorImage {
    ColorImage::from_fn(g.height(), g.width(), |r, c| {
        let v = clamp01(g.get(r, c));
        [v, v, v]
    })
}

/// Threshold `t` such that at most `ceil(percentile% * N)` values are
/// strictly greater: the `(100 - percentile)`-th percentile of the data.
fn upper_percentile_threshold(values: &[f64], percentile: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite pixels"));
    let n = sorted.len();
    let q = (100.0 - percentile) / 100.0;
    let k = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[k]
}

/// Marks the pixels whose |d| falls in the upper percentile with fully
/// saturated, full-value colors (cyan through blue to magenta as d runs from
/// -max_abs through 0 to +max_abs); every other pixel keeps its gray
/// reconstruction value. Pixels exactly at the threshold are not overlaid,
/// keeping the percentile count bound exact. With `pre_blur_sigma > 0` the
/// error map is Gaussian-blurred before thresholding.
pub fn overlay_threshold(
    recon: &GrayImage,
    d: &GrayImage,
    cfg: &OverlayConfig,
) -> Result<ColorImage> {
    cfg.validate()?;
    if recon.dims() != d.dims() {
        return Err(Error::dims("overlay_threshold", recon.dims(), d.dims()));
    }
    let d = if cfg.pre_blur_sigma > 0.0 {
        blur(
            d,
            &BlurConfig {
                sigma: cfg.pre_blur_sigma,
                ..Default::default()
            },
        )
    } else {
        d.clone()
    };
    let abs: Vec<f64> = d.pixels().iter().map(|v| v.abs()).collect();
    let t = upper_percentile_threshold(&abs, cfg.percentile);
    let scale = ErrorScale::from_image(&d);
    let w = d.width();
    Ok(ColorImage::from_fn(d.height(), w, |r, c| {
        let dv = d.get(r, c);
        if dv.abs() > t {
            let hue = 240.0 + 60.0 * (dv / scale.max_abs);
            hsv_to_rgb(HsvPixel::new(hue, 1.0, 1.0))
        } else {
            let v = clamp01(recon.get(r, c));
            [v, v, v]
        }
    }))
}

/// Saturation encodes |d| / max_abs, hue encodes the sign (red positive,
/// green negative), and the value channel keeps the reconstruction pixel.
pub fn saturate_colorize(
    recon: &GrayImage,
    d: &GrayImage,
    s: &ErrorScale,
) -> Result<ColorImage> {
    if recon.dims() != d.dims() {
        return Err(Error::dims("saturate_colorize", recon.dims(), d.dims()));
    }
    Ok(ColorImage::from_fn(recon.height(), recon.width(), |r, c| {
        let dv = d.get(r, c);
        let value = clamp01(recon.get(r, c));
        if dv == 0.0 {
            return [value, value, value];
        }
        let hue = if dv > 0.0 { 0.0 } else { 120.0 };
        let sat = clamp01(dv.abs() / s.max_abs);
        hsv_to_rgb(HsvPixel::new(hue, sat, value))
    }))
}

/// Linear interpolation across the hue-saturation disk between green
/// (negative extreme) and magenta (positive extreme). The segment passes
/// through the gray center, so zero error leaves the pixel exactly as it was
/// in the reconstruction; the value channel is preserved throughout.
pub fn interpolate_colorize(
    recon: &GrayImage,
    d: &GrayImage,
    s: &ErrorScale,
) -> Result<ColorImage> {
    if recon.dims() != d.dims() {
        return Err(Error::dims("interpolate_colorize", recon.dims(), d.dims()));
    }
    Ok(ColorImage::from_fn(recon.height(), recon.width(), |r, c| {
        let t = (d.get(r, c) / s.max_abs).clamp(-1.0, 1.0);
        let value = clamp01(recon.get(r, c));
        if t == 0.0 {
            return [value, value, value];
        }
        let hue = if t > 0.0 { 300.0 } else { 120.0 };
        hsv_to_rgb(HsvPixel::new(hue, t.abs(), value))
    }))
}

/// Signed map on white: positive errors fade white to red, negative errors
/// fade white to blue.
pub fn signed_colormap(d: &GrayImage, s: &ErrorScale) -> ColorImage {
    ColorImage::from_fn(d.height(), d.width(), |r, c| {
        let t = (d.get(r, c) / s.max_abs).clamp(-1.0, 1.0);
        if t >= 0.0 {
            [1.0, 1.0 - t, 1.0 - t]
        } else {
            [1.0 + t, 1.0 + t, 1.0]
        }
    })
}

/// Composite figure: 1 image passes through, 2 images sit in one row, 3 or 4
/// fill a 2x2 grid row-major, separated by a white gutter. Labels are
/// returned as legend text for a sidecar, never burned into pixels.
pub fn render_panel(
    entries: &[(&str, &ColorImage)],
    gutter: usize,
) -> Result<(ColorImage, String)> {
    if entries.is_empty() || entries.len() > 4 {
        return Err(Error::InvalidConfig(format!(
            "panel takes 1 to 4 images, got {}",
            entries.len()
        )));
    }
    let (h, w) = entries[0].1.dims();
    for (_, img) in entries {
        if img.dims() != (h, w) {
            return Err(Error::dims("render_panel", (h, w), img.dims()));
        }
    }
    let cols = if entries.len() == 1 { 1 } else { 2 };
    let rows = entries.len().div_ceil(cols);
    let total_h = rows * h + (rows - 1) * gutter;
    let total_w = cols * w + (cols - 1) * gutter;
    let mut legend = String::new();
    for (i, (label, _)) in entries.iter().enumerate() {
        legend.push_str(&format!(
            "row {}, col {}: {}\n",
            i / cols + 1,
            i % cols + 1,
            label
        ));
    }
    let composite = ColorImage::from_fn(total_h, total_w, |r, c| {
        let cell_r = r / (h + gutter);
        let cell_c = c / (w + gutter);
        let in_r = r - cell_r * (h + gutter);
        let in_c = c - cell_c * (w + gutter);
        if in_r >= h || in_c >= w {
            return [1.0, 1.0, 1.0]; // gutter
        }
        let idx = cell_r * cols + cell_c;
        match entries.get(idx) {
            Some((_, img)) => img.get(in_r, in_c),
            None => [1.0, 1.0, 1.0], // unused cell of a 3-image panel
        }
    });
    Ok((composite, legend))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::img::rgb_to_hsv;

    fn ramp_error(h: usize, w: usize) -> GrayImage {
        // Signed ramp with distinct magnitudes, max |d| at the last pixel.
        GrayImage::from_fn(h, w, |r, c| {
            let i = (r * w + c) as f64;
            let n = (h * w - 1) as f64;
            (2.0 * i / n - 1.0) * 0.3
        })
    }

    #[test]
    fn grayscale_error_mapping() {
        let d = GrayImage::new(1, 5, vec![-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        let s = ErrorScale::from_image(&d);
        assert_eq!(s.max_abs, 2.0);
        let g = grayscale_error(&d, &s);
        assert_eq!(g.pixels(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grayscale_error_zero_map_is_mid_gray() {
        let d = GrayImage::zeros(4, 4);
        let g = grayscale_error(&d, &ErrorScale::from_image(&d));
        assert!(g.pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn overlay_zero_errors_is_pure_recon() {
        let recon = crate::phantom::shepp_logan(32).unwrap();
        let d = GrayImage::zeros(32, 32);
        let out = overlay_threshold(&recon, &d, &OverlayConfig::default()).unwrap();
        for r in 0..32 {
            for c in 0..32 {
                let v = recon.get(r, c).clamp(0.0, 1.0);
                assert_eq!(out.get(r, c), [v, v, v]);
            }
        }
    }

    #[test]
    fn overlay_count_bound_and_extreme_color() {
        let recon = GrayImage::constant(20, 20, 0.5);
        let d = ramp_error(20, 20);
        let cfg = OverlayConfig {
            percentile: 2.0,
            pre_blur_sigma: 0.0,
        };
        let out = overlay_threshold(&recon, &d, &cfg).unwrap();
        let non_gray: Vec<(usize, usize)> = (0..20)
            .flat_map(|r| (0..20).map(move |c| (r, c)))
            .filter(|&(r, c)| {
                let [x, y, z] = out.get(r, c);
                !(x == y && y == z)
            })
            .collect();
        let cap = (0.02f64 * 400.0).ceil() as usize;
        assert!(non_gray.len() <= cap, "{} > {cap}", non_gray.len());
        assert!(!non_gray.is_empty());
        // The most positive pixel is at +max_abs: magenta.
        let (r, c) = (19, 19);
        assert!(non_gray.contains(&(r, c)));
        let [x, y, z] = out.get(r, c);
        assert!((x - 1.0).abs() < 1e-12 && y.abs() < 1e-12 && (z - 1.0).abs() < 1e-12);
        // The most negative pixel is at -max_abs: cyan.
        let [x, y, z] = out.get(0, 0);
        assert!(x.abs() < 1e-12 && (y - 1.0).abs() < 1e-12 && (z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlay_hue_monotone_in_d() {
        let recon = GrayImage::constant(16, 16, 0.4);
        let d = ramp_error(16, 16);
        let cfg = OverlayConfig {
            percentile: 30.0,
            pre_blur_sigma: 0.0,
        };
        let out = overlay_threshold(&recon, &d, &cfg).unwrap();
        let mut overlaid: Vec<(f64, f64)> = vec![]; // (d, hue)
        for r in 0..16 {
            for c in 0..16 {
                let [x, y, z] = out.get(r, c);
                if !(x == y && y == z) {
                    overlaid.push((d.get(r, c), rgb_to_hsv([x, y, z]).hue));
                }
            }
        }
        overlaid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for pair in overlaid.windows(2) {
            assert!(
                pair[1].1 > pair[0].1,
                "hue must strictly increase with d: {pair:?}"
            );
        }
    }

    #[test]
    fn overlay_pre_blur_spreads_threshold_mass() {
        let recon = GrayImage::constant(33, 33, 0.5);
        let mut d = GrayImage::zeros(33, 33);
        d.set(16, 16, 5.0);
        let plain = overlay_threshold(
            &recon,
            &d,
            &OverlayConfig {
                percentile: 5.0,
                pre_blur_sigma: 0.0,
            },
        )
        .unwrap();
        let blurred = overlay_threshold(
            &recon,
            &d,
            &OverlayConfig {
                percentile: 5.0,
                pre_blur_sigma: 1.0,
            },
        )
        .unwrap();
        let count = |img: &ColorImage| {
            img.pixels()
                .iter()
                .filter(|[x, y, z]| !(x == y && y == z))
                .count()
        };
        assert_eq!(count(&plain), 1, "single spike overlays one pixel");
        assert!(count(&blurred) > 1, "blur spreads the spike");
    }

    #[test]
    fn saturate_endpoints() {
        let recon = GrayImage::new(1, 3, vec![0.6, 1.0, 0.5]).unwrap();
        let d = GrayImage::new(1, 3, vec![0.0, 2.0, -2.0]).unwrap();
        let s = ErrorScale::from_image(&d);
        let out = saturate_colorize(&recon, &d, &s).unwrap();
        assert_eq!(out.get(0, 0), [0.6, 0.6, 0.6]);
        assert_eq!(out.get(0, 1), [1.0, 0.0, 0.0]);
        assert_eq!(out.get(0, 2), [0.0, 0.5, 0.0]);
    }

    #[test]
    fn interpolate_endpoints() {
        let recon = GrayImage::new(1, 3, vec![0.7, 0.9, 0.9]).unwrap();
        let d = GrayImage::new(1, 3, vec![0.0, 1.0, -1.0]).unwrap();
        let s = ErrorScale::from_image(&d);
        let out = interpolate_colorize(&recon, &d, &s).unwrap();
        assert_eq!(out.get(0, 0), [0.7, 0.7, 0.7]);
        assert_eq!(out.get(0, 1), hsv_to_rgb(HsvPixel::new(300.0, 1.0, 0.9)));
        assert_eq!(out.get(0, 2), hsv_to_rgb(HsvPixel::new(120.0, 1.0, 0.9)));
    }

    #[test]
    fn value_channel_preserved() {
        let recon = crate::phantom::shepp_logan(24).unwrap();
        let d = ramp_error(24, 24);
        let s = ErrorScale::from_image(&d);
        for img in [
            saturate_colorize(&recon, &d, &s).unwrap(),
            interpolate_colorize(&recon, &d, &s).unwrap(),
        ] {
            for r in 0..24 {
                for c in 0..24 {
                    let hsv = rgb_to_hsv(img.get(r, c));
                    assert!(
                        (hsv.value - recon.get(r, c).clamp(0.0, 1.0)).abs() < 1e-6,
                        "value drifted at ({r}, {c})"
                    );
                }
            }
        }
    }

    #[test]
    fn signed_map_values() {
        let d = GrayImage::new(1, 5, vec![0.0, 1.0, -1.0, 0.5, -0.5]).unwrap();
        let s = ErrorScale::from_image(&d);
        let out = signed_colormap(&d, &s);
        assert_eq!(out.get(0, 0), [1.0, 1.0, 1.0]);
        assert_eq!(out.get(0, 1), [1.0, 0.0, 0.0]);
        assert_eq!(out.get(0, 2), [0.0, 0.0, 1.0]);
        assert_eq!(out.get(0, 3), [1.0, 0.5, 0.5]);
        assert_eq!(out.get(0, 4), [0.5, 0.5, 1.0]);
    }

    #[test]
    fn signed_map_negation_swaps_red_and_blue() {
        let d = ramp_error(9, 9);
        let s = ErrorScale::from_image(&d);
        let neg = d.map(|v| -v);
        let a = signed_colormap(&d, &s);
        let b = signed_colormap(&neg, &s);
        for r in 0..9 {
            for c in 0..9 {
                let [ar, ag, ab] = a.get(r, c);
                let [br, bg, bb] = b.get(r, c);
                assert_eq!((ar, ag, ab), (bb, bg, br), "at ({r}, {c})");
            }
        }
    }

    #[test]
    fn panel_layouts() {
        let img = gray_to_color(&GrayImage::constant(64, 64, 0.5));
        let (one, _) = render_panel(&[("a", &img)], 8).unwrap();
        assert_eq!(one.dims(), (64, 64));
        let (two, _) = render_panel(&[("a", &img), ("b", &img)], 8).unwrap();
        assert_eq!(two.dims(), (64, 136));
        let (four, legend) = render_panel(
            &[("a", &img), ("b", &img), ("c", &img), ("d", &img)],
            8,
        )
        .unwrap();
        assert_eq!(four.dims(), (136, 136));
        assert!(legend.contains("row 2, col 2: d"));
    }

    #[test]
    fn panel_rejects_mismatch() {
        let a = gray_to_color(&GrayImage::constant(8, 8, 0.0));
        let b = gray_to_color(&GrayImage::constant(8, 9, 0.0));
        assert!(render_panel(&[("a", &a), ("b", &b)], 4).is_err());
        assert!(render_panel(&[], 4).is_err());
    }

    #[test]
    fn zero_error_neutral_in_all_methods() {
        let recon = crate::phantom::shepp_logan(16).unwrap();
        let d = GrayImage::zeros(16, 16);
        let s = ErrorScale::from_image(&d);
        let sat = saturate_colorize(&recon, &d, &s).unwrap();
        let interp = interpolate_colorize(&recon, &d, &s).unwrap();
        let over = overlay_threshold(&recon, &d, &OverlayConfig::default()).unwrap();
        let signed = signed_colormap(&d, &s);
        for r in 0..16 {
            for c in 0..16 {
                let v = recon.get(r, c).clamp(0.0, 1.0);
                assert_eq!(sat.get(r, c), [v, v, v]);
                assert_eq!(interp.get(r, c), [v, v, v]);
                assert_eq!(over.get(r, c), [v, v, v]);
                assert_eq!(signed.get(r, c), [1.0, 1.0, 1.0]);
            }
        }
    }
}
