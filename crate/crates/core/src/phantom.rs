//! Shepp-Logan head phantom, the built-in ground truth for desk-scale runs.
//!
//! Uses the standard ellipse geometry with the widely used modified
//! intensities that keep pixel values inside `[0, 1]`.

use crate::error::{Error, Result};
use crate::img::GrayImage;

/// Axis-aligned description of one phantom ellipse on the `[-1, 1]^2` plane.
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    /// Additive intensity inside the ellipse.
    pub intensity: f64,
    /// Semi-axis along x before rotation.
    pub semi_a: f64,
    /// Semi-axis along y before rotation.
    pub semi_b: f64,
    pub center_x: f64,
    pub center_y: f64,
    /// Counterclockwise rotation in degrees.
    pub theta_deg: f64,
}

impl Ellipse {
    /// True when the point `(x, y)` lies inside or on the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta_deg.to_radians().sin_cos();
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        let xr = c * dx + s * dy;
        let yr = -s * dx + c * dy;
        (xr / self.semi_a).powi(2) + (yr / self.semi_b).powi(2) <= 1.0
    }
}

/// The ten Shepp-Logan ellipses with modified intensities.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse { intensity: 1.0, semi_a: 0.69, semi_b: 0.92, center_x: 0.0, center_y: 0.0, theta_deg: 0.0 },
    Ellipse { intensity: -0.8, semi_a: 0.6624, semi_b: 0.874, center_x: 0.0, center_y: -0.0184, theta_deg: 0.0 },
    Ellipse { intensity: -0.2, semi_a: 0.11, semi_b: 0.31, center_x: 0.22, center_y: 0.0, theta_deg: -18.0 },
    Ellipse { intensity: -0.2, semi_a: 0.16, semi_b: 0.41, center_x: -0.22, center_y: 0.0, theta_deg: 18.0 },
    Ellipse { intensity: 0.1, semi_a: 0.21, semi_b: 0.25, center_x: 0.0, center_y: 0.35, theta_deg: 0.0 },
    Ellipse { intensity: 0.1, semi_a: 0.046, semi_b: 0.046, center_x: 0.0, center_y: 0.1, theta_deg: 0.0 },
    Ellipse { intensity: 0.1, semi_a: 0.046, semi_b: 0.046, center_x: 0.0, center_y: -0.1, theta_deg: 0.0 },
    Ellipse { intensity: 0.1, semi_a: 0.046, semi_b: 0.023, center_x: -0.08, center_y: -0.605, theta_deg: 0.0 },
    Ellipse { intensity: 0.1, semi_a: 0.023, semi_b: 0.023, center_x: 0.0, center_y: -0.605, theta_deg: 0.0 },
    Ellipse { intensity: 0.1, semi_a: 0.023, semi_b: 0.046, center_x: 0.06, center_y: -0.605, theta_deg: 0.0 },
];

/// Rasterizes a sum of ellipses on an `n x n` grid. Pixel centers map to
/// `x = (2c + 1 - n)/n`, `y = (n - 2r - 1)/n`, so the grid is symmetric
/// under left-right and top-bottom mirroring.
pub fn rasterize(n: usize, ellipses: &[Ellipse]) -> GrayImage {
    GrayImage::from_fn(n, n, |r, c| {
        let x = (2.0 * c as f64 + 1.0 - n as f64) / n as f64;
        let y = (n as f64 - 2.0 * r as f64 - 1.0) / n as f64;
        ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum()
    })
}

/// The phantom on an `n x n` grid, `n >= 16`, values in `[0, 1]`.
pub fn shepp_logan(n: usize) -> Result<GrayImage> {
    if n < 16 {
        return Err(Error::InvalidConfig(format!(
            "phantom size must be at least 16, got {n}"
        )));
    }
    // Summation order can leave ~1e-17 residue where intensities cancel.
    Ok(rasterize(n, &SHEPP_LOGAN).map(|v| v.clamp(0.0, 1.0)))
}
