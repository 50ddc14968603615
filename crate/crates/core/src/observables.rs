//! Measurements on fields and trajectories: centroid, cyclotron orbit fit,
//! image rotation angle and norm decay rate.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{rotate_field, wrap_angle, ComplexField2D};
use crate::trajectory::Trajectory;

pub const MIN_ORBIT_SAMPLES: usize = 8;
pub const MIN_DECAY_SAMPLES: usize = 5;
/// Coarse scan resolution of the rotation search.
pub const ROTATION_SCAN_POINTS: usize = 72;
pub const ROTATION_TOL: f64 = 1e-6;
const SYMMETRY_ORDERS: [u32; 5] = [8, 6, 4, 3, 2];

/// Probability-weighted mean position.
pub fn centroid(f: &ComplexField2D) -> Result<(f64, f64)> {
    let g = f.grid();
    let ny = g.ny();
    let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
    for (ix, &x) in g.x().iter().enumerate() {
        for (iy, &y) in g.y().iter().enumerate() {
            let p = f.values()[ix * ny + iy].norm_sqr();
            sx += x * p;
            sy += y * p;
            total += p;
        }
    }
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((sx / total, sy / total))
}

/// Least-squares line `y = slope·x + intercept` with its rms residual.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSamples("a line fit needs two or more points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(LineFit { slope, intercept, rms_residual: (ss / n).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrbitFit {
    pub center: (f64, f64),
    pub radius: f64,
    /// Signed: positive for counterclockwise motion.
    pub angular_frequency: f64,
    /// Rms of the radial misfit.
    pub rms_residual: f64,
    /// Rms of the phase misfit [rad].
    pub phase_residual: f64,
}

impl OrbitFit {
    pub fn period(&self) -> f64 {
        TAU / self.angular_frequency.abs()
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Circle through points: algebraic fit, then geometric Gauss–Newton.
fn fit_circle(pts: &[(f64, f64)]) -> Option<((f64, f64), f64)> {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for &(x, y) in pts {
        let (u, v) = (x - mx, y - my);
        let row = [u, v, 1.0];
        let rhs = -(u * u + v * v);
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
            b[i] += row[i] * rhs;
        }
    }
    let [d, e, f] = solve3(a, b)?;
    let (mut cx, mut cy) = (-d / 2.0, -e / 2.0);
    let r2 = cx * cx + cy * cy - f;
    if !(r2 > 0.0) {
        return None;
    }
    let mut r = r2.sqrt();
    for _ in 0..50 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(x, y) in pts {
            let (u, v) = (x - mx - cx, y - my - cy);
            let dist = (u * u + v * v).sqrt();
            if dist == 0.0 {
                continue;
            }
            let res = dist - r;
            let jac = [-u / dist, -v / dist, -1.0];
            for i in 0..3 {
                for j in 0..3 {
                    jtj[i][j] += jac[i] * jac[j];
                }
                jtr[i] -= jac[i] * res;
            }
        }
        let step = solve3(jtj, jtr)?;
        cx += step[0];
        cy += step[1];
        r += step[2];
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) <= 1e-14 * r.abs().max(1.0) {
            break;
        }
    }
    Some(((cx + mx, cy + my), r.abs()))
}

/// Circle and phase fit of the centroid track.
pub fn fit_cyclotron(traj: &Trajectory) -> Result<OrbitFit> {
    if traj.len() < MIN_ORBIT_SAMPLES {
        return Err(Error::InsufficientSamples("an orbit fit needs at least 8 samples"));
    }
    let pts: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.x, s.y)).collect();
    let span = pts.iter().map(|p| ((p.0 - pts[0].0).powi(2) + (p.1 - pts[0].1).powi(2)).sqrt()).fold(0.0, f64::max);
    let ((cx, cy), radius) = fit_circle(&pts).ok_or(Error::DegenerateOrbit("points are collinear"))?;
    if !radius.is_finite() || radius > 1e3 * span {
        return Err(Error::DegenerateOrbit("track is a straight line"));
    }
    if radius < 2.0 * traj.grid_spacing {
        return Err(Error::DegenerateOrbit("radius below two grid spacings"));
    }
    let mut phase = Vec::with_capacity(pts.len());
    let mut prev = 0.0;
    for (i, &(x, y)) in pts.iter().enumerate() {
        let a = (y - cy).atan2(x - cx);
        let unwrapped = if i == 0 { a } else { prev + wrap_angle(a - prev) };
        phase.push(unwrapped);
        prev = unwrapped;
    }
    if (phase[phase.len() - 1] - phase[0]).abs() < PI {
        return Err(Error::InsufficientSamples("samples span less than half a period"));
    }
    let times = traj.times();
    let line = linear_fit(&times, &phase)?;
    let rms = (pts
        .iter()
        .map(|&(x, y)| (((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - radius).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok(OrbitFit {
        center: (cx, cy),
        radius,
        angular_frequency: line.slope,
        rms_residual: rms,
        phase_residual: line.rms_residual,
    })
}

fn overlap(f_t: &ComplexField2D, f_0: &ComplexField2D, angle: f64, scale: f64) -> Result<f64> {
    let r = rotate_field(f_0, angle)?;
    Ok(f_t.inner(&r)?.norm() * scale)
}

/// Largest n in {2, 3, 4, 6, 8} with f invariant (up to phase) under rotation
/// by 2π/n; 1 if none.
pub fn symmetry_order(f: &ComplexField2D) -> Result<u32> {
    let scale = 1.0 / f.norm_sqr();
    for n in SYMMETRY_ORDERS {
        if overlap(f, f, TAU / n as f64, scale)? > 1.0 - 1e-6 {
            return Ok(n);
        }
    }
    Ok(1)
}

/// Angle φ maximizing |⟨f_t|R(φ)f_0⟩|, searched over one symmetry sector of
/// f_0 and refined by golden section.
pub fn image_rotation_angle(f_t: &ComplexField2D, f_0: &ComplexField2D) -> Result<f64> {
    f_t.same_grid(f_0)?;
    let (nt, n0) = (f_t.norm(), f_0.norm());
    if nt == 0.0 || n0 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let scale = 1.0 / (nt * n0);
    let order = symmetry_order(f_0)?;
    let sector = TAU / order as f64;
    let lo = -sector / 2.0;
    let h = sector / ROTATION_SCAN_POINTS as f64;
    let angles: Vec<f64> = (1..=ROTATION_SCAN_POINTS).map(|j| lo + j as f64 * h).collect();
    let mut values = Vec::with_capacity(angles.len());
    for &a in &angles {
        values.push(overlap(f_t, f_0, a, scale)?);
    }
    let m = values.len();
    let mut maxima: Vec<usize> = (0..m)
        .filter(|&j| values[j] >= values[(j + m - 1) % m] && values[j] >= values[(j + 1) % m])
        .collect();
    maxima.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let best = maxima[0];
    if maxima.len() > 1 && values[maxima[1]] >= 0.99 * values[best] {
        return Err(Error::AmbiguousRotation);
    }

    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (angles[best] - h, angles[best] + h);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = overlap(f_t, f_0, c, scale)?;
    let mut fd = overlap(f_t, f_0, d, scale)?;
    while b - a > ROTATION_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = overlap(f_t, f_0, c, scale)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = overlap(f_t, f_0, d, scale)?;
        }
    }
    let phi = 0.5 * (a + b);
    if overlap(f_t, f_0, phi, scale)? < 0.5 {
        return Err(Error::AmbiguousRotation);
    }
    Ok(wrap_angle(phi))
}

/// Amplitude decay rate κ from norm² ∝ e^{−2κt}.
pub fn norm_decay_rate(traj: &Trajectory) -> Result<f64> {
    if traj.len() < MIN_DECAY_SAMPLES {
        return Err(Error::InsufficientSamples("a decay fit needs at least 5 samples"));
    }
    if traj.samples.iter().any(|s| !(s.norm_sqr > 0.0)) {
        return Err(Error::NonPositiveNorm);
    }
    let ln: Vec<f64> = traj.samples.iter().map(|s| s.norm_sqr.ln()).collect();
    Ok(-0.5 * linear_fit(&traj.times(), &ln)?.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Sample;

    fn traj(points: impl Iterator<Item = (f64, f64, f64)>) -> Trajectory {
        let mut t = Trajectory::new(0.1);
        for (time, x, y) in points {
            t.samples.push(Sample { time, norm_sqr: 1.0, x, y, lz: 0.0, lz2: 0.0, energy: 0.0 });
        }
        t
    }

    #[test]
    fn clockwise_orbit_has_negative_frequency() {
        let t = traj((0..40).map(|i| {
            let s = i as f64 * 0.2;
            (s, 1.0 + 2.0 * s.cos(), -(2.0 * s.sin()))
        }));
        let fit = fit_cyclotron(&t).unwrap();
        assert!((fit.angular_frequency + 1.0).abs() < 1e-10);
        assert!((fit.center.0 - 1.0).abs() < 1e-10 && fit.center.1.abs() < 1e-10);
    }

    #[test]
    fn short_arc_is_rejected() {
        let t = traj((0..10).map(|i| {
            let s = i as f64 * 0.1;
            (s, 3.0 * s.cos(), 3.0 * s.sin())
        }));
        assert!(matches!(fit_cyclotron(&t), Err(Error::InsufficientSamples(_))));
    }
}
