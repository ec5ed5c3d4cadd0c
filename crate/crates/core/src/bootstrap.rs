//! Bootstrap error estimation over the measurement process.
//!
//! The estimate re-measures the reconstruction's own k-space under masks
//! resampled from the base sampling pattern, reconstructs each resampled
//! measurement set, and averages the induced shifts:
//!
//! ```text
//! d = (1/B) * sum_b ( r_hat - reconstruct(mask_b . fft2(r_hat), mask_b) )
//! ```
//!
//! The sign convention makes `d` estimate (truth - reconstruction)-like
//! structure, so `corrected = recon - d` moves the reconstruction toward the
//! estimated truth.
//!
//! Every iteration `b` derives its randomness from stream `b` of a ChaCha
//! generator seeded with the configured master seed, and iterations are
//! summed in fixed-size batches in index order, so the result is bit-exact
//! regardless of how many worker threads execute it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::img::GrayImage;
use crate::kspace::{fft2, KSpace};
use crate::recon::{reconstruct, ReconConfig};
use crate::sampling::{
    apply_mask, center_band, make_mask, rand_index, rasterize_spokes, MaskKind, MaskSpec,
    SamplingMask,
};

/// How each bootstrap iteration perturbs the measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleKind {
    /// Resample the sampling pattern only (the default).
    MaskResample,
    /// Additionally flip the sign of the base measurement residual on each
    /// retained bin at random and add it back.
    ResidualResample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub iterations: u32,
    pub seed: u64,
    pub resample_kind: ResampleKind,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            seed: 0,
            resample_kind: ResampleKind::MaskResample,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "bootstrap iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Provenance carried alongside an estimate. The wall-clock field is kept in
/// memory only; serialized sidecars stay byte-identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub iterations: u32,
    pub seed: u64,
    pub fingerprint: String,
    #[serde(skip)]
    pub wall_clock_secs: Option<f64>,
}

/// Signed error-estimate image plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub image: GrayImage,
    pub meta: EstimateMeta,
}

/// Pixelwise `original - recon`.
pub fn true_error(original: &GrayImage, recon: &GrayImage) -> Result<GrayImage> {
    original.sub(recon).map_err(|_| {
        Error::dims("true_error", original.dims(), recon.dims())
    })
}

/// Pixelwise `recon - d`, the estimate subtracted from the reconstruction.
pub fn corrected(recon: &GrayImage, d: &GrayImage) -> Result<GrayImage> {
    recon
        .sub(d)
        .map_err(|_| Error::dims("corrected", recon.dims(), d.dims()))
}

/// Draws a resampled mask from the base spec.
///
/// Horizontal: the center band is kept as-is and the non-center retained
/// rows are drawn with replacement from the base mask's non-center retained
/// rows (duplicates collapse, so the result retains a subset). Radial: spoke
/// angles are drawn with replacement from the base spoke set. Full: the
/// complete grid, unchanged.
pub fn resample_mask(
    base: &MaskSpec,
    height: usize,
    width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SamplingMask> {
    match *base {
        MaskSpec::Full => make_mask(base, height, width),
        MaskSpec::Horizontal {
            center_fraction, ..
        } => {
            let base_mask = make_mask(base, height, width)?;
            let band = center_band(height, center_fraction);
            let noncenter: Vec<usize> = base_mask
                .retained_rows()
                .into_iter()
                .filter(|r| !band.contains(r))
                .collect();
            let mut keep = vec![false; height];
            for r in band {
                keep[r] = true;
            }
            for _ in 0..noncenter.len() {
                keep[noncenter[rand_index(rng, noncenter.len())]] = true;
            }
            let retained: Vec<bool> = (0..height * width).map(|i| keep[i / width]).collect();
            SamplingMask::with_kind(height, width, retained, MaskKind::Horizontal)
        }
        MaskSpec::Radial { num_spokes } => {
            let n = num_spokes as usize;
            let mut chosen = vec![false; n];
            for _ in 0..n {
                chosen[rand_index(rng, n)] = true;
            }
            let angles: Vec<f64> = (0..n)
                .filter(|&k| chosen[k])
                .map(|k| std::f64::consts::PI * k as f64 / n as f64)
                .collect();
            rasterize_spokes(height, width, &angles)
        }
    }
}

/// Stable content hash of the configuration that produced an estimate.
pub fn config_fingerprint(
    dims: (usize, usize),
    base: &MaskSpec,
    rcfg: &ReconConfig,
    bcfg: &BootstrapConfig,
) -> String {
    #[derive(Serialize)]
    struct Fingerprint<'a> {
        height: usize,
        width: usize,
        base: &'a MaskSpec,
        recon: &'a ReconConfig,
        bootstrap: &'a BootstrapConfig,
    }
    let json = serde_json::to_string(&Fingerprint {
        height: dims.0,
        width: dims.1,
        base,
        recon: rcfg,
        bootstrap: bcfg,
    })
    .expect("config serialization cannot fail");
    let digest = Sha256::digest(json.as_bytes());
    format!("sha256:{digest:x}")
}

/// Iterations per reduction batch. Fixed independently of the worker count
/// so the floating-point grouping, and therefore the result, never depends
/// on scheduling.
const BATCH: usize = 8;

/// Sum of `r_hat - r_b` over the given streams, batched in index order.
fn sum_shifts(
    k_hat: &KSpace,
    r_hat: &GrayImage,
    residual: Option<&KSpace>,
    base: &MaskSpec,
    rcfg: &ReconConfig,
    seed: u64,
    streams: std::ops::RangeInclusive<u64>,
) -> Result<GrayImage> {
    let streams: Vec<u64> = streams.collect();
    let batch_result = |chunk: &[u64]| -> Result<GrayImage> {
        let (h, w) = r_hat.dims();
        let mut acc = GrayImage::zeros(h, w);
        for &b in chunk {
            let shift = single_shift(k_hat, r_hat, residual, base, rcfg, seed, b)?;
            for (a, s) in acc.pixels_mut().iter_mut().zip(shift.pixels()) {
                *a += s;
            }
        }
        Ok(acc)
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<Result<GrayImage>> = {
        use rayon::prelude::*;
        streams.par_chunks(BATCH).map(batch_result).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Result<GrayImage>> = streams.chunks(BATCH).map(batch_result).collect();

    let (h, w) = r_hat.dims();
    let mut total = GrayImage::zeros(h, w);
    for partial in partials {
        let partial = partial?;
        for (t, p) in total.pixels_mut().iter_mut().zip(partial.pixels()) {
            *t += p;
        }
    }
    Ok(total)
}

fn single_shift(
    k_hat: &KSpace,
    r_hat: &GrayImage,
    residual: Option<&KSpace>,
    base: &MaskSpec,
    rcfg: &ReconConfig,
    seed: u64,
    stream: u64,
) -> Result<GrayImage> {
    let wrap = |e: Error| Error::BootstrapIteration {
        iteration: stream,
        source: Box::new(e),
    };
    let (h, w) = r_hat.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mask_b = resample_mask(base, h, w, &mut rng).map_err(wrap)?;
    let mut y_b = apply_mask(k_hat, &mask_b).map_err(wrap)?;
    if let Some(resid) = residual {
        for (i, &keep) in mask_b.grid().iter().enumerate() {
            if keep {
                let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
                y_b.values_mut()[i] += resid.values()[i] * sign;
            }
        }
    }
    let r_b = reconstruct(&y_b, &mask_b, rcfg).map_err(wrap)?.image;
    r_hat.sub(&r_b).map_err(wrap)
}

/// Runs the full bootstrap: reconstruct once, then average the shifts the
/// resampled measurement process inflicts on that reconstruction.
///
/// The returned image is the error-estimate `d` used by all visualizations
/// and summaries. Iteration failures are reported with the iteration index.
pub fn bootstrap_errors(
    y: &KSpace,
    m: &SamplingMask,
    base: &MaskSpec,
    rcfg: &ReconConfig,
    bcfg: &BootstrapConfig,
) -> Result<ErrorEstimate> {
    bcfg.validate()?;
    if y.dims() != m.dims() {
        return Err(Error::dims("bootstrap_errors", m.dims(), y.dims()));
    }
    #[cfg(not(target_arch = "wasm32"))]
    let started = std::time::Instant::now();

    let y = apply_mask(y, m)?;
    let r_hat = reconstruct(&y, m, rcfg)?.image;
    let k_hat = fft2(&r_hat);
    let residual = match bcfg.resample_kind {
        ResampleKind::MaskResample => None,
        ResampleKind::ResidualResample => {
            let measured = apply_mask(&k_hat, m)?;
            Some(KSpace::new(
                y.height(),
                y.width(),
                y.values()
                    .iter()
                    .zip(measured.values())
                    .map(|(&a, &b)| a - b)
                    .collect(),
            )?)
        }
    };

    let total = sum_shifts(
        &k_hat,
        &r_hat,
        residual.as_ref(),
        base,
        rcfg,
        bcfg.seed,
        1..=bcfg.iterations as u64,
    )?;
    let image = total.map(|v| v / bcfg.iterations as f64);
    if !image.is_finite() {
        return Err(Error::NonFinite {
            stage: "bootstrap_errors",
            iteration: bcfg.iterations as usize,
        });
    }

    #[cfg(not(target_arch = "wasm32"))]
    let wall_clock_secs = Some(started.elapsed().as_secs_f64());
    #[cfg(target_arch = "wasm32")]
    let wall_clock_secs = None;

    Ok(ErrorEstimate {
        meta: EstimateMeta {
            iterations: bcfg.iterations,
            seed: bcfg.seed,
            fingerprint: config_fingerprint(m.dims(), base, rcfg, bcfg),
            wall_clock_secs,
        },
        image,
    })
}
