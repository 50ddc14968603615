//! Uniform periodic transverse grid and complex fields living on it.
//!
//! Layout is row-major with `y` contiguous: the value at `(ix, iy)` sits at
//! `ix * ny + iy`. Coordinates are centred, `x_i = (i - nx/2)·dx`, so the box
//! covers `[-extent_x/2, extent_x/2)`. Wavenumbers follow the standard FFT
//! ordering with the Nyquist mode at `-π/dx`; odd-order derivatives drop the
//! Nyquist mode so that `∂` stays exactly anti-Hermitian on the grid.
//!
//! Coordinate multiplication (`x`, `y` in `L_z` and in the vector potential)
//! is not periodic, so operators built from it are only trusted inside the
//! *safety disk* of radius `0.4·min(extent)/2` around the box centre.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft;

/// Fraction of the half-box taken by the safety disk radius.
pub const SAFETY_DISK_FRACTION: f64 = 0.4;
/// Default tolerated norm fraction outside the safety disk.
pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-8;
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug)]
struct GridData {
    nx: usize,
    ny: usize,
    extent_x: f64,
    extent_y: f64,
    dx: f64,
    dy: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_odd: Vec<f64>,
    ky_odd: Vec<f64>,
    fft_x: Fft,
    fft_y: Fft,
}

/// Shared, immutable description of the periodic transverse box.
///
/// Cloning is cheap; the FFT plans and coordinate tables are shared.
#[derive(Debug, Clone)]
pub struct TransverseGrid(Arc<GridData>);

impl PartialEq for TransverseGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.nx == other.0.nx
                && self.0.ny == other.0.ny
                && self.0.extent_x.to_bits() == other.0.extent_x.to_bits()
                && self.0.extent_y.to_bits() == other.0.extent_y.to_bits())
    }
}

fn wavenumbers(n: usize, extent: f64) -> (Vec<f64>, Vec<f64>) {
    let base = TAU / extent;
    let k: Vec<f64> = (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
            base * m
        })
        .collect();
    let mut k_odd = k.clone();
    k_odd[n / 2] = 0.0;
    (k, k_odd)
}

impl TransverseGrid {
    pub fn new(nx: usize, ny: usize, extent_x: f64, extent_y: f64) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() {
            return Err(Error::InvalidGrid("point counts must be powers of two"));
        }
        if nx < MIN_POINTS || ny < MIN_POINTS {
            return Err(Error::InvalidGrid("at least 8 points per axis are required"));
        }
        if !(extent_x > 0.0 && extent_y > 0.0 && extent_x.is_finite() && extent_y.is_finite()) {
            return Err(Error::InvalidGrid("extents must be positive and finite"));
        }
        let dx = extent_x / nx as f64;
        let dy = extent_y / ny as f64;
        let x = (0..nx).map(|i| (i as f64 - (nx / 2) as f64) * dx).collect();
        let y = (0..ny).map(|i| (i as f64 - (ny / 2) as f64) * dy).collect();
        let (kx, kx_odd) = wavenumbers(nx, extent_x);
        let (ky, ky_odd) = wavenumbers(ny, extent_y);
        Ok(Self(Arc::new(GridData {
            nx,
            ny,
            extent_x,
            extent_y,
            dx,
            dy,
            x,
            y,
            kx,
            ky,
            kx_odd,
            ky_odd,
            fft_x: Fft::new(nx),
            fft_y: Fft::new(ny),
        })))
    }

    /// Square grid with `n` points and the same extent on both axes.
    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent, extent)
    }

    pub fn nx(&self) -> usize {
        self.0.nx
    }
    pub fn ny(&self) -> usize {
        self.0.ny
    }
    pub fn len(&self) -> usize {
        self.0.nx * self.0.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn extent_x(&self) -> f64 {
        self.0.extent_x
    }
    pub fn extent_y(&self) -> f64 {
        self.0.extent_y
    }
    pub fn dx(&self) -> f64 {
        self.0.dx
    }
    pub fn dy(&self) -> f64 {
        self.0.dy
    }
    /// Area element `dx·dy`.
    pub fn cell_area(&self) -> f64 {
        self.0.dx * self.0.dy
    }
    pub fn x(&self) -> &[f64] {
        &self.0.x
    }
    pub fn y(&self) -> &[f64] {
        &self.0.y
    }
    pub fn kx(&self) -> &[f64] {
        &self.0.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.0.ky
    }
    /// `k_x` with the Nyquist entry zeroed, used for odd derivatives.
    pub fn kx_odd(&self) -> &[f64] {
        &self.0.kx_odd
    }
    pub fn ky_odd(&self) -> &[f64] {
        &self.0.ky_odd
    }
    pub fn kx_max(&self) -> f64 {
        PI / self.0.dx
    }
    pub fn ky_max(&self) -> f64 {
        PI / self.0.dy
    }
    pub fn safety_radius(&self) -> f64 {
        SAFETY_DISK_FRACTION * self.0.extent_x.min(self.0.extent_y) / 2.0
    }
    /// Largest |x| and |y| present on the grid.
    pub fn coordinate_max(&self) -> (f64, f64) {
        (self.0.extent_x / 2.0, self.0.extent_y / 2.0)
    }
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.0.ny + iy
    }

    /// Applies `mult(k_index, line_index)` along one axis in Fourier space.
    ///
    /// `line_index` is the index along the *other* axis, so multipliers can
    /// depend on the orthogonal coordinate (mixed representation).
    pub fn spectral_axis<F>(&self, data: &mut [Complex64], axis: Axis, mut mult: F)
    where
        F: FnMut(usize, usize) -> Complex64,
    {
        let g = &*self.0;
        match axis {
            Axis::Y => {
                for (ix, row) in data.chunks_exact_mut(g.ny).enumerate() {
                    g.fft_y.forward(row);
                    for (iy, v) in row.iter_mut().enumerate() {
                        *v *= mult(iy, ix);
                    }
                    g.fft_y.inverse(row);
                }
            }
            Axis::X => {
                let mut line = vec![Complex64::zero(); g.nx];
                for iy in 0..g.ny {
                    for (ix, l) in line.iter_mut().enumerate() {
                        *l = data[ix * g.ny + iy];
                    }
                    g.fft_x.forward(&mut line);
                    for (ix, l) in line.iter_mut().enumerate() {
                        *l *= mult(ix, iy);
                    }
                    g.fft_x.inverse(&mut line);
                    for (ix, l) in line.iter().enumerate() {
                        data[ix * g.ny + iy] = *l;
                    }
                }
            }
        }
    }

    /// First and second derivative along `axis` from one forward transform.
    pub fn axis_derivatives(&self, src: &[Complex64], axis: Axis, d1: &mut [Complex64], d2: &mut [Complex64]) {
        let g = &*self.0;
        let (n, fft, k, k_odd) = match axis {
            Axis::X => (g.nx, &g.fft_x, &g.kx, &g.kx_odd),
            Axis::Y => (g.ny, &g.fft_y, &g.ky, &g.ky_odd),
        };
        let mut line = vec![Complex64::zero(); n];
        let mut l1 = vec![Complex64::zero(); n];
        let lines = if axis == Axis::X { g.ny } else { g.nx };
        for li in 0..lines {
            let at = |i: usize| match axis {
                Axis::X => i * g.ny + li,
                Axis::Y => li * g.ny + i,
            };
            for (i, l) in line.iter_mut().enumerate() {
                *l = src[at(i)];
            }
            fft.forward(&mut line);
            for i in 0..n {
                l1[i] = line[i] * Complex64::new(0.0, k_odd[i]);
                line[i] *= -k[i] * k[i];
            }
            fft.inverse(&mut line);
            fft.inverse(&mut l1);
            for i in 0..n {
                d1[at(i)] = l1[i];
                d2[at(i)] = line[i];
            }
        }
    }

    /// In-place 2D transform (forward unnormalized, inverse scaled).
    pub fn transform_2d(&self, data: &mut [Complex64], forward: bool) {
        let g = &*self.0;
        for row in data.chunks_exact_mut(g.ny) {
            if forward {
                g.fft_y.forward(row)
            } else {
                g.fft_y.inverse(row)
            }
        }
        let mut line = vec![Complex64::zero(); g.nx];
        for iy in 0..g.ny {
            for (ix, l) in line.iter_mut().enumerate() {
                *l = data[ix * g.ny + iy];
            }
            if forward {
                g.fft_x.forward(&mut line)
            } else {
                g.fft_x.inverse(&mut line)
            }
            for (ix, l) in line.iter().enumerate() {
                data[ix * g.ny + iy] = *l;
            }
        }
    }
}

/// Complex scalar field sampled on a [`TransverseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    grid: TransverseGrid,
    values: Vec<Complex64>,
}

impl ComplexField2D {
    pub fn new(grid: TransverseGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid("value count does not match the grid"));
        }
        let f = Self { grid, values };
        f.ensure_finite()?;
        Ok(f)
    }

    pub fn zeros(grid: &TransverseGrid) -> Self {
        Self {
            values: vec![Complex64::zero(); grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn<F: FnMut(f64, f64) -> Complex64>(grid: &TransverseGrid, mut f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &x in grid.x() {
            for &y in grid.y() {
                values.push(f(x, y));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Wraps values without the finiteness scan; callers guarantee it.
    pub(crate) fn from_raw(grid: TransverseGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteField)
        }
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Σ|ψ|²·dx·dy.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩ = Σ conj(self)·other·dx·dy.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same_grid(other)?;
        Ok(inner_raw(&self.values, &other.values) * self.grid.cell_area())
    }

    /// Scales to unit norm; fails on a zero field.
    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n;
        for v in &mut self.values {
            *v *= s;
        }
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, a: Complex64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// self += a·other.
    pub fn add_scaled(&mut self, a: Complex64, other: &Self) -> Result<()> {
        self.same_grid(other)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    /// L² distance ‖self − other‖.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_area()).sqrt())
    }

    /// Fraction of the norm outside the safety disk (0 for a zero field).
    pub fn leakage_fraction(&self) -> f64 {
        let r2 = self.grid.safety_radius().powi(2);
        let ny = self.grid.ny();
        let (mut out, mut total) = (0.0, 0.0);
        for (ix, &x) in self.grid.x().iter().enumerate() {
            for (iy, &y) in self.grid.y().iter().enumerate() {
                let p = self.values[ix * ny + iy].norm_sqr();
                total += p;
                if x * x + y * y > r2 {
                    out += p;
                }
            }
        }
        if total > 0.0 {
            out / total
        } else {
            0.0
        }
    }

    pub fn check_leakage(&self, tolerance: f64) -> Result<()> {
        let fraction = self.leakage_fraction();
        if fraction > tolerance {
            Err(Error::EdgeLeakage { fraction, tolerance })
        } else {
            Ok(())
        }
    }

    /// Probability inside the disk of radius `radius` about the box centre.
    pub fn probability_within(&self, radius: f64) -> f64 {
        let r2 = radius * radius;
        let ny = self.grid.ny();
        let (mut inside, mut total) = (0.0, 0.0);
        for (ix, &x) in self.grid.x().iter().enumerate() {
            for (iy, &y) in self.grid.y().iter().enumerate() {
                let p = self.values[ix * ny + iy].norm_sqr();
                total += p;
                if x * x + y * y <= r2 {
                    inside += p;
                }
            }
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    }
}

pub(crate) fn inner_raw(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x4, y4) in ca.zip(cb) {
        for l in 0..4 {
            let (x, y) = (x4[l], y4[l]);
            re[l] += x.re * y.re + x.im * y.im;
            im[l] += x.re * y.im - x.im * y.re;
        }
    }
    for (x, y) in ra.iter().zip(rb) {
        re[0] += x.re * y.re + x.im * y.im;
        im[0] += x.re * y.im - x.im * y.re;
    }
    Complex64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

/// Spectral transverse Laplacian ∇⊥²f.
pub fn laplacian_transverse(f: &ComplexField2D) -> Result<ComplexField2D> {
    f.ensure_finite()?;
    let g = f.grid();
    let mut v = f.values.clone();
    g.transform_2d(&mut v, true);
    let (kx, ky) = (g.kx(), g.ky());
    for (ix, row) in v.chunks_exact_mut(g.ny()).enumerate() {
        for (iy, val) in row.iter_mut().enumerate() {
            *val *= -(kx[ix] * kx[ix] + ky[iy] * ky[iy]);
        }
    }
    g.transform_2d(&mut v, false);
    Ok(ComplexField2D::from_raw(g.clone(), v))
}

/// Spectral first derivative along one axis.
pub fn derivative(f: &ComplexField2D, axis: Axis) -> ComplexField2D {
    let g = f.grid();
    let mut v = f.values.clone();
    let k = match axis {
        Axis::X => g.kx_odd(),
        Axis::Y => g.ky_odd(),
    };
    g.spectral_axis(&mut v, axis, |i, _| Complex64::new(0.0, k[i]));
    ComplexField2D::from_raw(g.clone(), v)
}

/// (L_z/ħ)f = −i(x∂_y − y∂_x)f without the safety-disk check.
pub fn apply_lz_unchecked(f: &ComplexField2D) -> ComplexField2D {
    let g = f.grid();
    let dyf = derivative(f, Axis::Y);
    let dxf = derivative(f, Axis::X);
    let ny = g.ny();
    let mut out = vec![Complex64::zero(); g.len()];
    for (ix, &x) in g.x().iter().enumerate() {
        for (iy, &y) in g.y().iter().enumerate() {
            let i = ix * ny + iy;
            let t = dyf.values[i] * x - dxf.values[i] * y;
            out[i] = Complex64::new(t.im, -t.re);
        }
    }
    ComplexField2D::from_raw(g.clone(), out)
}

/// (L_z/ħ)f, failing with [`Error::EdgeLeakage`] when the field reaches the box edge.
pub fn apply_lz(f: &ComplexField2D) -> Result<ComplexField2D> {
    apply_lz_with_tolerance(f, DEFAULT_LEAKAGE_TOL)
}

pub fn apply_lz_with_tolerance(f: &ComplexField2D, tolerance: f64) -> Result<ComplexField2D> {
    f.ensure_finite()?;
    f.check_leakage(tolerance)?;
    Ok(apply_lz_unchecked(f))
}

/// Observables available through [`expectation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Identity,
    Lz,
    Lz2,
    /// −½∇⊥², i.e. p²/2m in units with ħ = m = 1.
    KineticPerp,
    X,
    Y,
}

/// ⟨f|O|f⟩/⟨f|f⟩.
pub fn expectation(f: &ComplexField2D, op: Observable) -> Result<Complex64> {
    let n2 = f.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    f.ensure_finite()?;
    let area = f.grid().cell_area();
    let value = match op {
        Observable::Identity => Complex64::new(1.0, 0.0),
        Observable::Lz => f.inner(&apply_lz_unchecked(f))? / n2,
        Observable::Lz2 => {
            let l = apply_lz_unchecked(f);
            Complex64::new(l.norm_sqr() / n2, 0.0)
        }
        Observable::KineticPerp => {
            let lap = laplacian_transverse(f)?;
            f.inner(&lap)? * (-0.5 / n2)
        }
        Observable::X | Observable::Y => {
            let g = f.grid();
            let ny = g.ny();
            let mut acc = 0.0;
            for (ix, &x) in g.x().iter().enumerate() {
                for (iy, &y) in g.y().iter().enumerate() {
                    let c = if op == Observable::X { x } else { y };
                    acc += c * f.values[ix * ny + iy].norm_sqr();
                }
            }
            Complex64::new(acc * area / n2, 0.0)
        }
    };
    Ok(value)
}

/// Counter-clockwise rotation about the box centre.
///
/// Angles are reduced to (−π, π]; a half-turn is applied as an exact index
/// reflection and the remainder (|φ| ≤ π/2) by three spectral shears
/// x-shear(−tan φ/2) · y-shear(sin φ) · x-shear(−tan φ/2).
pub fn rotate_field(f: &ComplexField2D, angle: f64) -> Result<ComplexField2D> {
    rotate_field_with_tolerance(f, angle, DEFAULT_LEAKAGE_TOL)
}

pub fn rotate_field_with_tolerance(f: &ComplexField2D, angle: f64, tolerance: f64) -> Result<ComplexField2D> {
    f.ensure_finite()?;
    f.check_leakage(tolerance)?;
    if !angle.is_finite() {
        return Err(Error::InvalidParameter { name: "angle", reason: "must be finite" });
    }
    Ok(rotate_unchecked(f, angle))
}

pub(crate) fn rotate_unchecked(f: &ComplexField2D, angle: f64) -> ComplexField2D {
    let mut phi = wrap_angle(angle);
    let g = f.grid().clone();
    let mut v = f.values.clone();
    if phi.abs() > PI / 2.0 {
        v = half_turn(&g, &v);
        phi -= PI.copysign(phi);
    }
    if phi != 0.0 {
        let alpha = -(phi / 2.0).tan();
        let beta = phi.sin();
        shear(&g, &mut v, Axis::X, alpha);
        shear(&g, &mut v, Axis::Y, beta);
        shear(&g, &mut v, Axis::X, alpha);
    }
    ComplexField2D::from_raw(g, v)
}

/// Maps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}

fn half_turn(g: &TransverseGrid, v: &[Complex64]) -> Vec<Complex64> {
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![Complex64::zero(); v.len()];
    for ix in 0..nx {
        let sx = (nx - ix) % nx;
        for iy in 0..ny {
            let sy = (ny - iy) % ny;
            out[ix * ny + iy] = v[sx * ny + sy];
        }
    }
    out
}

/// Axis::X: f(x, y) → f(x − a·y, y); Axis::Y: f(x, y) → f(x, y − a·x).
fn shear(g: &TransverseGrid, v: &mut [Complex64], axis: Axis, a: f64) {
    match axis {
        Axis::X => {
            let (k, y) = (g.kx_odd(), g.y());
            g.spectral_axis(v, Axis::X, |ik, iy| {
                let p = -k[ik] * a * y[iy];
                Complex64::new(p.cos(), p.sin())
            });
        }
        Axis::Y => {
            let (k, x) = (g.ky_odd(), g.x());
            g.spectral_axis(v, Axis::Y, |ik, ix| {
                let p = -k[ik] * a * x[ix];
                Complex64::new(p.cos(), p.sin())
            });
        }
    }
}

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"SLPF";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER_LEN: usize = 40;

/// Header of the SLPF binary snapshot format (all fields little-endian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub nx: u32,
    pub ny: u32,
    pub extent_x: f64,
    pub extent_y: f64,
    pub time: f64,
}

/// Serializes `f` at simulation time `time`:
/// magic, version, nx, ny, extent_x, extent_y, time, then `nx·ny`
/// `(re, im)` f64 pairs in row-major order.
pub fn encode_snapshot(f: &ComplexField2D, time: f64) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 16 * g.len());
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    out.extend_from_slice(&g.extent_x().to_le_bytes());
    out.extend_from_slice(&g.extent_y().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile { expected: SNAPSHOT_HEADER_LEN, found: bytes.len() });
    }
    if bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < SNAPSHOT_HEADER_LEN {
        return Err(Error::TruncatedFile { expected: SNAPSHOT_HEADER_LEN, found: bytes.len() });
    }
    let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: SNAPSHOT_VERSION });
    }
    Ok(SnapshotHeader {
        version,
        nx: u32_at(8),
        ny: u32_at(12),
        extent_x: f64_at(bytes, 16),
        extent_y: f64_at(bytes, 24),
        time: f64_at(bytes, 32),
    })
}

fn f64_at(bytes: &[u8], o: usize) -> f64 {
    let mut b = [0u8; 8];
    b.copy_from_slice(&bytes[o..o + 8]);
    f64::from_le_bytes(b)
}

/// Parses an SLPF snapshot, returning the field and its time stamp.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(ComplexField2D, f64)> {
    let h = decode_snapshot_header(bytes)?;
    let count = (h.nx as usize)
        .checked_mul(h.ny as usize)
        .ok_or(Error::InvalidGrid("point count overflows"))?;
    let expected = count
        .checked_mul(16)
        .and_then(|p| p.checked_add(SNAPSHOT_HEADER_LEN))
        .ok_or(Error::InvalidGrid("payload size overflows"))?;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingData { extra: bytes.len() - expected });
    }
    let grid = TransverseGrid::new(h.nx as usize, h.ny as usize, h.extent_x, h.extent_y)?;
    let values = bytes[SNAPSHOT_HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok((ComplexField2D::from_raw(grid, values), h.time))
}
