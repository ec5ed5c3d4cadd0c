//! Reconstruction of images from undersampled Fourier measurements, bootstrap
//! error estimation over the measurement process, error-map visualization,
//! and scalar error summaries.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`sampling`] builds a k-space retention mask (random horizontal lines
//!    with a guaranteed center band, or equiangular radial spokes) and applies
//!    it to the measurements.
//! 2. [`recon`] solves the L1-regularized least-squares problem with ISTA over
//!    an orthonormal Haar basis, producing a reconstruction from the retained
//!    bins alone.
//! 3. [`bootstrap`] re-measures the reconstruction's own k-space under
//!    resampled masks and averages the induced shifts into a signed
//!    error-estimate image.
//! 4. [`viz`] renders the estimate: grayscale maps centered on mid-gray,
//!    percentile threshold overlays, hue/saturation colorizations that
//!    preserve the reconstruction's value channel, and signed red/blue maps.
//! 5. [`summary`] blurs the estimate with a normalized Gaussian kernel and
//!    reduces it to root-sum-of-squares scalars, including sweeps over kernel
//!    widths and a threshold flag decision.
//!
//! All operations are deterministic given their configuration; randomized
//! stages consume explicit 64-bit seeds.

pub mod bootstrap;
pub mod error;
pub mod haar;
pub mod img;
pub mod io;
pub mod kspace;
pub mod phantom;
pub mod recon;
pub mod sampling;
pub mod summary;
pub mod viz;

pub use error::{Error, Result};
pub use img::{ColorImage, GrayImage, HsvPixel};
pub use kspace::KSpace;
pub use sampling::{MaskSpec, SamplingMask};
