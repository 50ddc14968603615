//! Normalized initial states used by scenarios and tests.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, TransverseGrid};

fn check_width(width: f64) -> Result<()> {
    if width > 0.0 && width.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "width", reason: "must be positive and finite" })
    }
}

/// `exp(-|r - c|²/2w²) · exp(i p·r)`, normalized.
pub fn gaussian(grid: &TransverseGrid, center: (f64, f64), width: f64, momentum: (f64, f64)) -> Result<ComplexField2D> {
    check_width(width)?;
    let s = 0.5 / (width * width);
    ComplexField2D::from_fn(grid, |x, y| {
        let (dx, dy) = (x - center.0, y - center.1);
        Complex64::from_polar((-(dx * dx + dy * dy) * s).exp(), momentum.0 * x + momentum.1 * y)
    })
    .normalized()
}

/// `(x ± iy)^|m| · exp(-r²/2w²)`, normalized; the sign follows `m`.
pub fn vortex(grid: &TransverseGrid, m: i32, width: f64) -> Result<ComplexField2D> {
    check_width(width)?;
    let s = 0.5 / (width * width);
    let sign = if m < 0 { -1.0 } else { 1.0 };
    ComplexField2D::from_fn(grid, |x, y| {
        Complex64::new(x, sign * y).powi(m.abs()) * (-(x * x + y * y) * s).exp()
    })
    .normalized()
}

/// Lowest-Landau-level angular-momentum state `(x + iy)^m · exp(-r²/4ℓ²)` with ℓ the magnetic length.
pub fn landau_vortex(grid: &TransverseGrid, m: i32, magnetic_length: f64) -> Result<ComplexField2D> {
    vortex(grid, m, magnetic_length * core::f64::consts::SQRT_2)
}

/// Physicists' Hermite polynomial H_n(x).
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Hermite-Gaussian mode `H_i(x/w) H_j(y/w) exp(-r²/2w²)`, normalized.
pub fn hermite_gaussian(grid: &TransverseGrid, i: u32, j: u32, width: f64) -> Result<ComplexField2D> {
    check_width(width)?;
    ComplexField2D::from_fn(grid, |x, y| {
        let (u, v) = (x / width, y / width);
        Complex64::new(hermite(i, u) * hermite(j, v) * (-(u * u + v * v) / 2.0).exp(), 0.0)
    })
    .normalized()
}

/// Uniform field of unit norm.
pub fn uniform(grid: &TransverseGrid) -> ComplexField2D {
    let a = 1.0 / (grid.extent_x() * grid.extent_y()).sqrt();
    ComplexField2D::from_fn(grid, |_, _| Complex64::new(a, 0.0))
}
