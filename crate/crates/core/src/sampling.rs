//! K-space retention masks: horizontal line sampling and radial spokes.
//!
//! Horizontal masks keep a deterministic band of rows around the
//! zero-frequency row plus a seeded random selection of the rest; radial
//! masks keep equiangular full lines through the zero-frequency bin,
//! rasterized at half-bin perpendicular distance. Generation is a pure
//! function of the spec and dimensions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::KSpace;
use rustfft::num_complex::Complex64;

/// How a mask retains k-space bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Horizontal,
    Radial,
    Full,
    Custom,
}

impl std::fmt::Display for MaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MaskKind::Horizontal => "horizontal",
            MaskKind::Radial => "radial",
            MaskKind::Full => "full",
            MaskKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Recipe for generating a mask, independent of grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSpec {
    /// Every bin retained.
    Full,
    /// Whole rows: a guaranteed center band plus random rows elsewhere.
    Horizontal {
        /// Fraction of rows retained overall, in `(0, 1]`.
        retained_fraction: f64,
        /// Fraction of rows always kept around the zero-frequency row, in
        /// `[0, 1)`; must not exceed `retained_fraction`.
        center_fraction: f64,
        /// Seed for the random row selection.
        seed: u64,
    },
    /// Equiangular full lines through the zero-frequency bin.
    Radial { num_spokes: u32 },
}

impl MaskSpec {
    pub fn kind(&self) -> MaskKind {
        match self {
            MaskSpec::Full => MaskKind::Full,
            MaskSpec::Horizontal { .. } => MaskKind::Horizontal,
            MaskSpec::Radial { .. } => MaskKind::Radial,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MaskSpec::Full => Ok(()),
            MaskSpec::Horizontal {
                retained_fraction,
                center_fraction,
                ..
            } => {
                if !(retained_fraction > 0.0 && retained_fraction <= 1.0) {
                    return Err(Error::InvalidMask(format!(
                        "retained_fraction must be in (0, 1], got {retained_fraction}"
                    )));
                }
                if !(0.0..1.0).contains(&center_fraction) {
                    return Err(Error::InvalidMask(format!(
                        "center_fraction must be in [0, 1), got {center_fraction}"
                    )));
                }
                if retained_fraction < center_fraction {
                    return Err(Error::InvalidMask(format!(
                        "retained_fraction {retained_fraction} < center_fraction {center_fraction}"
                    )));
                }
                Ok(())
            }
            MaskSpec::Radial { num_spokes } => {
                if num_spokes == 0 {
                    return Err(Error::InvalidMask("num_spokes must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

/// Boolean grid marking retained k-space bins. At least one bin is retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    retained: Vec<bool>,
    kind: MaskKind,
}

impl SamplingMask {
    /// Wraps an explicit retention grid as a custom mask. Rejects all-false
    /// grids and length mismatches.
    pub fn custom(height: usize, width: usize, retained: Vec<bool>) -> Result<Self> {
        Self::with_kind(height, width, retained, MaskKind::Custom)
    }

    pub(crate) fn with_kind(
        height: usize,
        width: usize,
        retained: Vec<bool>,
        kind: MaskKind,
    ) -> Result<Self> {
        if height == 0 || width == 0 || retained.len() != height * width {
            return Err(Error::InvalidMask(format!(
                "grid of {} entries does not match {height}x{width}",
                retained.len()
            )));
        }
        if !retained.iter().any(|&b| b) {
            return Err(Error::InvalidMask("no bins retained".into()));
        }
        Ok(Self {
            height,
            width,
            retained,
            kind,
        })
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

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    #[inline]
    pub fn is_retained(&self, row: usize, col: usize) -> bool {
        self.retained[row * self.width + col]
    }

    pub fn grid(&self) -> &[bool] {
        &self.retained
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|&&b| b).count()
    }

    /// Row indices that are fully retained.
    pub fn retained_rows(&self) -> Vec<usize> {
        (0..self.height)
            .filter(|&r| (0..self.width).all(|c| self.is_retained(r, c)))
            .collect()
    }
}

/// Uniform index in `[0, n)` from a raw 64-bit stream, rejection-sampled so
/// the draw is exactly unbiased.
pub(crate) fn rand_index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Rows of the guaranteed center band: `round(center_fraction * height)`
/// rows (at least one whenever the fraction is positive) centered on the
/// zero-frequency row `height / 2`.
pub(crate) fn center_band(height: usize, center_fraction: f64) -> std::ops::Range<usize> {
    if center_fraction <= 0.0 {
        let mid = height / 2;
        return mid..mid; // empty
    }
    let n = ((center_fraction * height as f64).round() as usize).max(1);
    let n = n.min(height);
    let start = height / 2 - n / 2;
    start..start + n
}

/// Generates a mask from a spec. Dimensions must be at least 8x8.
pub fn make_mask(spec: &MaskSpec, height: usize, width: usize) -> Result<SamplingMask> {
    spec.validate()?;
    if height < 8 || width < 8 {
        return Err(Error::InvalidMask(format!(
            "mask dimensions must be at least 8x8, got {height}x{width}"
        )));
    }
    match *spec {
        MaskSpec::Full => {
            SamplingMask::with_kind(height, width, vec![true; height * width], MaskKind::Full)
        }
        MaskSpec::Horizontal {
            retained_fraction,
            center_fraction,
            seed,
        } => {
            let n_rows = (retained_fraction * height as f64).round() as usize;
            if n_rows == 0 {
                return Err(Error::InvalidMask(format!(
                    "retained_fraction {retained_fraction} keeps zero of {height} rows"
                )));
            }
            let band = center_band(height, center_fraction);
            if band.len() > n_rows {
                return Err(Error::InvalidMask(format!(
                    "center band of {} rows exceeds the {} retained rows",
                    band.len(),
                    n_rows
                )));
            }
            let mut keep = vec![false; height];
            for r in band.clone() {
                keep[r] = true;
            }
            // Remaining rows drawn without replacement via a partial
            // Fisher-Yates shuffle of the non-center rows.
            let mut others: Vec<usize> = (0..height).filter(|r| !band.contains(r)).collect();
            let extra = n_rows - band.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..extra {
                let j = i + rand_index(&mut rng, others.len() - i);
                others.swap(i, j);
                keep[others[i]] = true;
            }
            let retained: Vec<bool> = (0..height * width).map(|i| keep[i / width]).collect();
            SamplingMask::with_kind(height, width, retained, MaskKind::Horizontal)
        }
        MaskSpec::Radial { num_spokes } => {
            let angles: Vec<f64> = (0..num_spokes)
                .map(|k| std::f64::consts::PI * k as f64 / num_spokes as f64)
                .collect();
            rasterize_spokes(height, width, &angles)
        }
    }
}

/// Rasterizes full lines through the zero-frequency bin: a bin is retained
/// when its center lies within half a bin (perpendicular distance) of any
/// spoke line.
pub(crate) fn rasterize_spokes(
    height: usize,
    width: usize,
    angles: &[f64],
) -> Result<SamplingMask> {
    let (cr, cc) = (height / 2, width / 2);
    let mut retained = vec![false; height * width];
    for &theta in angles {
        let (s, c) = theta.sin_cos();
        for r in 0..height {
            let dy = r as f64 - cr as f64;
            for col in 0..width {
                let dx = col as f64 - cc as f64;
                if (dx * s - dy * c).abs() <= 0.5 {
                    retained[r * width + col] = true;
                }
            }
        }
    }
    SamplingMask::with_kind(height, width, retained, MaskKind::Radial)
}

/// Retains bins where the mask is true and zeroes the rest.
pub fn apply_mask(k: &KSpace, m: &SamplingMask) -> Result<KSpace> {
    if k.dims() != m.dims() {
        return Err(Error::dims("apply_mask", m.dims(), k.dims()));
    }
    let values: Vec<Complex64> = k
        .values()
        .iter()
        .zip(m.grid())
        .map(|(&v, &keep)| if keep { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    KSpace::new(k.height(), k.width(), values)
}

/// Fraction of bins retained, `count(true) / total`.
pub fn retained_fraction_of(m: &SamplingMask) -> f64 {
    m.retained_count() as f64 / (m.height() * m.width()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizontal(retained_fraction: f64, center_fraction: f64, seed: u64) -> MaskSpec {
        MaskSpec::Horizontal {
            retained_fraction,
            center_fraction,
            seed,
        }
    }

    #[test]
    fn full_mask_retains_everything() {
        let m = make_mask(&MaskSpec::Full, 32, 32).unwrap();
        assert_eq!(m.retained_count(), 1024);
        assert_eq!(retained_fraction_of(&m), 1.0);
    }

    #[test]
    fn horizontal_fraction_one_keeps_every_row() {
        let m = make_mask(&horizontal(1.0, 0.08, 3), 32, 32).unwrap();
        assert_eq!(m.retained_rows().len(), 32);
    }

    #[test]
    fn horizontal_counts_and_center_band() {
        let m = make_mask(&horizontal(0.25, 0.08, 7), 128, 128).unwrap();
        let rows = m.retained_rows();
        assert_eq!(rows.len(), 32, "0.25 of 128 rows");
        // round(0.08 * 128) = 10 central rows, centered on row 64.
        let band: Vec<usize> = (59..69).collect();
        for r in &band {
            assert!(rows.contains(r), "center row {r} missing");
        }
        // Rows are whole: every row fully true or fully false.
        for r in 0..128 {
            let first = m.is_retained(r, 0);
            for c in 0..128 {
                assert_eq!(m.is_retained(r, c), first);
            }
        }
        // Bit-identical on repeat.
        let again = make_mask(&horizontal(0.25, 0.08, 7), 128, 128).unwrap();
        assert_eq!(m, again);
        // Different seed, different selection (same count).
        let other = make_mask(&horizontal(0.25, 0.08, 8), 128, 128).unwrap();
        assert_eq!(other.retained_rows().len(), 32);
        assert_ne!(m, other);
    }

    #[test]
    fn horizontal_tiny_center_fraction_still_keeps_dc_row() {
        let m = make_mask(&horizontal(0.25, 0.001, 1), 128, 128).unwrap();
        assert!(m.is_retained(64, 0), "zero-frequency row must be retained");
    }

    #[test]
    fn horizontal_zero_rows_rejected() {
        assert!(make_mask(&horizontal(0.001, 0.0, 1), 128, 128).is_err());
    }

    #[test]
    fn radial_zero_spokes_rejected() {
        assert!(make_mask(&MaskSpec::Radial { num_spokes: 0 }, 64, 64).is_err());
    }

    #[test]
    fn radial_matches_brute_force_count() {
        let m = make_mask(&MaskSpec::Radial { num_spokes: 32 }, 128, 128).unwrap();
        // Independent rasterization: count bins within half a bin of any of
        // the 32 lines, written as a direct scan with the point-line
        // distance formula.
        let mut count = 0usize;
        for r in 0..128i64 {
            for c in 0..128i64 {
                let dy = (r - 64) as f64;
                let dx = (c - 64) as f64;
                let hit = (0..32).any(|k| {
                    let theta = std::f64::consts::PI * k as f64 / 32.0;
                    (dx * theta.sin() - dy * theta.cos()).abs() <= 0.5
                });
                if hit {
                    count += 1;
                }
            }
        }
        assert_eq!(m.retained_count(), count);
        let frac = retained_fraction_of(&m);
        assert!(frac > 0.0 && frac < 1.0);
        assert!((frac - count as f64 / 16384.0).abs() < 1e-15);
    }

    #[test]
    fn radial_point_symmetric() {
        let m = make_mask(&MaskSpec::Radial { num_spokes: 17 }, 64, 64).unwrap();
        let (cr, cc) = (32i64, 32i64);
        for r in 0..64i64 {
            for c in 0..64i64 {
                let mr = 2 * cr - r;
                let mc = 2 * cc - c;
                if (0..64).contains(&mr) && (0..64).contains(&mc) {
                    assert_eq!(
                        m.is_retained(r as usize, c as usize),
                        m.is_retained(mr as usize, mc as usize),
                        "asymmetry at ({r}, {c})"
                    );
                }
            }
        }
    }

    #[test]
    fn radial_spokes_hit_center() {
        let m = make_mask(&MaskSpec::Radial { num_spokes: 3 }, 65, 65).unwrap();
        assert!(m.is_retained(32, 32));
    }

    #[test]
    fn apply_full_mask_is_identity() {
        let img = crate::phantom::shepp_logan(16).unwrap();
        let k = crate::kspace::fft2(&img);
        let m = make_mask(&MaskSpec::Full, 16, 16).unwrap();
        let masked = apply_mask(&k, &m).unwrap();
        assert_eq!(k, masked);
    }

    #[test]
    fn apply_single_bin_mask_selects() {
        let img = crate::phantom::shepp_logan(16).unwrap();
        let k = crate::kspace::fft2(&img);
        let mut grid = vec![false; 256];
        grid[5 * 16 + 9] = true;
        let m = SamplingMask::custom(16, 16, grid).unwrap();
        let masked = apply_mask(&k, &m).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                if (r, c) == (5, 9) {
                    assert_eq!(masked.get(r, c), k.get(r, c));
                } else {
                    assert_eq!(masked.get(r, c).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn all_false_mask_rejected() {
        assert!(SamplingMask::custom(4, 4, vec![false; 16]).is_err());
    }

    #[test]
    fn apply_mask_dimension_mismatch() {
        let k = KSpace::zeros(8, 8);
        let m = make_mask(&MaskSpec::Full, 8, 9).unwrap();
        assert!(apply_mask(&k, &m).is_err());
    }

    #[test]
    fn one_row_of_sixteen() {
        let m = make_mask(&horizontal(1.0 / 16.0, 0.01, 0), 16, 16).unwrap();
        assert_eq!(retained_fraction_of(&m), 0.0625);
    }

    #[test]
    fn rand_index_is_unbiased_ish() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 7];
        for _ in 0..70_000 {
            counts[rand_index(&mut rng, 7)] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "count {c}");
        }
    }
}
