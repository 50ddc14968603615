//! Low-lying spectrum of the Hermitian effective Hamiltonian and Landau-level
//! bookkeeping.
//!
//! The eigensolver is a Chebyshev-filtered subspace iteration (scaled filter of
//! Zhou and Saad) on the matrix-free operator. A block method resolves the
//! exactly degenerate Landau clusters that a single-vector Krylov run cannot.
//! The upper end of the spectrum comes from a short Lanczos run. The start
//! block is drawn from ChaCha8 seeded with [`EigenOptions::seed`], so results
//! are reproducible bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{hermitian_eigen, tridiagonal_eigenvalues};
use crate::effective::{EffectiveModel, HamiltonianKernel};
use crate::error::{Error, Result};
use crate::grid::{inner_raw, ComplexField2D, TransverseGrid};

pub const MAX_EIGENPAIRS: usize = 160;
pub const DEFAULT_CLUSTER_TOL: f64 = 0.1;
/// Minimum fraction of probability inside the safety disk for a bulk state.
pub const BULK_FRACTION: f64 = 0.99;
/// Largest |count − flux| still reported as agreement.
pub const COUNT_SLACK: f64 = 2.0;
const LANCZOS_STEPS: usize = 40;

/// Matrix-free Hermitian operator on a grid.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    kernel: HamiltonianKernel,
}

impl OperatorHandle {
    /// Rejects configurations with a dissipative part.
    pub fn new(grid: &TransverseGrid, model: &EffectiveModel) -> Result<Self> {
        if !model.is_hermitian() || model.kz_decay.re != 0.0 {
            return Err(Error::NonHermitianConfig);
        }
        Ok(Self { kernel: HamiltonianKernel::new(grid, model) })
    }

    pub fn grid(&self) -> &TransverseGrid {
        self.kernel.grid()
    }

    pub fn model(&self) -> &EffectiveModel {
        self.kernel.model()
    }

    pub fn dim(&self) -> usize {
        self.grid().len()
    }

    pub fn apply_raw(&mut self, src: &[Complex64], out: &mut [Complex64]) {
        self.kernel.apply(src, out);
    }

    pub fn apply(&mut self, f: &ComplexField2D) -> Result<ComplexField2D> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        f.ensure_finite()?;
        let mut out = vec![Complex64::zero(); self.dim()];
        self.kernel.apply(f.values(), &mut out);
        ComplexField2D::new(self.grid().clone(), out)
    }

    /// |⟨g|Hf⟩ − ⟨Hg|f⟩|, zero up to rounding for a Hermitian operator.
    pub fn hermiticity_defect(&mut self, f: &ComplexField2D, g: &ComplexField2D) -> Result<f64> {
        let hf = self.apply(f)?;
        let hg = self.apply(g)?;
        Ok((g.inner(&hf)? - hg.inner(f)?).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigenOptions {
    pub seed: u64,
    /// Residual target ‖Hv − λv‖/‖v‖.
    pub tol: f64,
    pub max_iterations: usize,
    /// Extra block vectors beyond `k`; `None` picks max(32, k/3).
    pub guard: Option<usize>,
    pub filter_degree: usize,
    /// Eigenvalues closer than this are treated as one degenerate group.
    pub degeneracy_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { seed: 1, tol: 1e-9, max_iterations: 200, guard: None, filter_degree: 40, degeneracy_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors; may be empty for value-only input.
    pub vectors: Vec<ComplexField2D>,
    pub residuals: Vec<f64>,
    /// First eigenvalue beyond the returned set, if known.
    pub next_value: Option<f64>,
    /// Mass of the operator in model units (ħ = 1).
    pub mass: f64,
    pub iterations: usize,
    pub matvecs: usize,
}

impl Eigenpairs {
    /// Value-only input, as used for clustering synthetic spectra.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        Self { values, vectors: Vec::new(), residuals: vec![0.0; n], next_value: None, mass: 1.0, iterations: 0, matvecs: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let mut uniform = || (rng.next_u64() >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0;
    (0..n).map(|_| Complex64::new(uniform(), uniform())).collect()
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Upper spectral bound from a short Lanczos run: largest Ritz value plus the
/// last off-diagonal.
fn lanczos_upper_bound(op: &mut OperatorHandle, rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = op.dim();
    let steps = LANCZOS_STEPS.min(n);
    let mut v = random_vector(rng, n);
    let s = 1.0 / norm2(&v);
    v.iter_mut().for_each(|z| *z *= s);
    let mut v_prev = vec![Complex64::zero(); n];
    let mut w = vec![Complex64::zero(); n];
    let (mut alpha, mut beta) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    let mut b_prev = 0.0;
    for _ in 0..steps {
        op.apply_raw(&v, &mut w);
        axpy(Complex64::new(-b_prev, 0.0), &v_prev, &mut w);
        let a = inner_raw(&v, &w).re;
        axpy(Complex64::new(-a, 0.0), &v, &mut w);
        let b = norm2(&w);
        alpha.push(a);
        if b <= 1e-14 * a.abs().max(1.0) {
            beta.push(0.0);
            break;
        }
        beta.push(b);
        core::mem::swap(&mut v_prev, &mut v);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / b;
        }
        b_prev = b;
    }
    let m = alpha.len();
    let ritz = tridiagonal_eigenvalues(&alpha, &beta[..m - 1])?;
    Ok(ritz[m - 1] + beta[m - 1].abs())
}

/// Orthonormalizes `block[start..]` against all earlier columns (two passes of
/// classical Gram–Schmidt); collapsed columns are replaced by fresh random ones.
fn cgs2(block: &mut [Vec<Complex64>], start: usize, rng: &mut ChaCha8Rng) {
    for j in start..block.len() {
        let (head, tail) = block.split_at_mut(j);
        let v = &mut tail[0];
        for attempt in 0..4 {
            let before = norm2(v);
            for _ in 0..2 {
                let coeffs: Vec<Complex64> = head.iter().map(|q| inner_raw(q, v)).collect();
                for (q, c) in head.iter().zip(coeffs) {
                    axpy(-c, q, v);
                }
            }
            let after = norm2(v);
            if after > 1e-10 * before && after > 0.0 {
                let s = 1.0 / after;
                v.iter_mut().for_each(|z| *z *= s);
                break;
            }
            *v = random_vector(rng, v.len());
            debug_assert!(attempt < 3, "repeated collapse in orthonormalization");
        }
    }
}

/// Scaled Chebyshev filter damping [a, b] and normalized at `a0`.
fn chebyshev_filter(op: &mut OperatorHandle, x: &mut Vec<Complex64>, degree: usize, a: f64, b: f64, a0: f64, scratch: &mut [Vec<Complex64>; 2]) {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut sigma = e / (a0 - c);
    let tau = 2.0 / sigma;
    let [y, hy] = scratch;
    op.apply_raw(x, hy);
    for i in 0..x.len() {
        y[i] = (hy[i] - x[i] * c) * (sigma / e);
    }
    for _ in 1..degree {
        let sigma_new = 1.0 / (tau - sigma);
        op.apply_raw(y, hy);
        for i in 0..x.len() {
            let ynew = (hy[i] - y[i] * c) * (2.0 * sigma_new / e) - x[i] * (sigma * sigma_new);
            x[i] = y[i];
            y[i] = ynew;
        }
        sigma = sigma_new;
    }
    core::mem::swap(x, y);
}

/// Rayleigh–Ritz on `x[start..]`: rotates the columns to Ritz vectors, returns
/// Ritz values (ascending) and fills `w[start..]` with H times them.
fn rayleigh_ritz(op: &mut OperatorHandle, x: &mut [Vec<Complex64>], w: &mut [Vec<Complex64>], start: usize) -> Result<Vec<f64>> {
    let q = x.len() - start;
    for j in start..x.len() {
        op.apply_raw(&x[j], &mut w[j]);
    }
    let mut g = vec![Complex64::zero(); q * q];
    for i in 0..q {
        for j in i..q {
            g[i * q + j] = inner_raw(&x[start + i], &w[start + j]);
        }
    }
    let eig = hermitian_eigen(&g, q)?;
    rotate_block(&mut x[start..], &eig.vectors, q);
    rotate_block(&mut w[start..], &eig.vectors, q);
    Ok(eig.values)
}

/// `cols ← cols · v` for a q×q row-major matrix `v`, in row blocks.
fn rotate_block(cols: &mut [Vec<Complex64>], v: &[Complex64], q: usize) {
    const BLOCK: usize = 256;
    let n = cols.first().map_or(0, |c| c.len());
    let mut out = vec![vec![Complex64::zero(); n]; q];
    for start in (0..n).step_by(BLOCK) {
        let end = (start + BLOCK).min(n);
        for (j, o) in out.iter_mut().enumerate() {
            let o = &mut o[start..end];
            for (i, c) in cols.iter().enumerate() {
                let a = v[i * q + j];
                if a != Complex64::zero() {
                    axpy(a, &c[start..end], o);
                }
            }
        }
    }
    for (c, o) in cols.iter_mut().zip(out) {
        *c = o;
    }
}

fn residual(w: &[Complex64], x: &[Complex64], lambda: f64) -> f64 {
    w.iter().zip(x).map(|(wi, xi)| (wi - xi * lambda).norm_sqr()).sum::<f64>().sqrt()
}

/// The `k` lowest eigenpairs of `op` (fewer if the last degenerate group
/// would be cut).
pub fn lowest_eigenpairs(op: &mut OperatorHandle, k: usize, options: &EigenOptions) -> Result<Eigenpairs> {
    let n = op.dim();
    if k == 0 || k > MAX_EIGENPAIRS {
        return Err(Error::InvalidParameter { name: "k", reason: "must lie in 1..=160" });
    }
    let p = (k + options.guard.unwrap_or((k / 3).max(32))).min(n);
    if p < k + 1 {
        return Err(Error::InvalidParameter { name: "k", reason: "grid too small for the requested block" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let upper = lanczos_upper_bound(op, &mut rng)?;
    let mut matvecs = LANCZOS_STEPS;

    let mut x: Vec<Vec<Complex64>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();
    cgs2(&mut x, 0, &mut rng);
    let mut w = vec![vec![Complex64::zero(); n]; p];
    let mut values = rayleigh_ritz(op, &mut x, &mut w, 0)?;
    matvecs += p;
    let mut res: Vec<f64> = (0..p).map(|j| residual(&w[j], &x[j], values[j])).collect();
    let mut locked = 0;
    let mut scratch = [vec![Complex64::zero(); n], vec![Complex64::zero(); n]];
    let degree = options.filter_degree.max(2);

    for iteration in 1..=options.max_iterations {
        while locked < k && res[locked] < options.tol {
            locked += 1;
        }
        if locked == k {
            return Ok(finish(op, x, values, res, k, options, iteration - 1, matvecs));
        }
        let a0 = values[0];
        let a = values[p - 1];
        if !(upper > a && a > a0) {
            return Err(Error::NoConvergence { iterations: iteration, residual: res[locked] });
        }
        for xj in x.iter_mut().skip(locked) {
            chebyshev_filter(op, xj, degree, a, upper, a0, &mut scratch);
        }
        matvecs += degree * (p - locked);
        cgs2(&mut x, locked, &mut rng);
        let fresh = rayleigh_ritz(op, &mut x, &mut w, locked)?;
        matvecs += p - locked;
        values[locked..].copy_from_slice(&fresh);
        for j in locked..p {
            res[j] = residual(&w[j], &x[j], values[j]);
        }
        // A newly found state below a locked one reopens the lock.
        if locked > 0 && values[locked] < values[locked - 1] {
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
            x = order.iter().map(|&i| core::mem::take(&mut x[i])).collect();
            w = order.iter().map(|&i| core::mem::take(&mut w[i])).collect();
            values = order.iter().map(|&i| values[i]).collect();
            res = order.iter().map(|&i| res[i]).collect();
            locked = 0;
        }
    }
    let worst = res[..k].iter().cloned().fold(0.0, f64::max);
    Err(Error::NoConvergence { iterations: options.max_iterations, residual: worst })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    op: &OperatorHandle,
    x: Vec<Vec<Complex64>>,
    values: Vec<f64>,
    res: Vec<f64>,
    k: usize,
    options: &EigenOptions,
    iterations: usize,
    matvecs: usize,
) -> Eigenpairs {
    // Never end inside a degenerate group: the first guard value must be
    // separated from the last kept one by more than its own uncertainty.
    let mut kept = k;
    while kept > 0 && values[kept] - values[kept - 1] < options.degeneracy_tol + res[kept] {
        kept -= 1;
    }
    if kept == 0 {
        kept = k;
    }
    let grid = op.grid().clone();
    let scale = 1.0 / grid.cell_area().sqrt();
    let vectors = x
        .into_iter()
        .take(kept)
        .map(|mut v| {
            v.iter_mut().for_each(|z| *z *= scale);
            ComplexField2D::from_raw(grid.clone(), v)
        })
        .collect();
    Eigenpairs {
        next_value: Some(values[kept]),
        values: values[..kept].to_vec(),
        vectors,
        residuals: res[..kept].to_vec(),
        mass: op.model().mass(),
        iterations,
        matvecs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cluster {
    pub center: f64,
    pub count: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Greedy clusters of the bulk states (all states for value-only input).
    pub clusters: Vec<Cluster>,
    pub omega_c: f64,
    pub cluster_tol: f64,
    pub safety_radius: Option<f64>,
    /// B·A/(2πħ) through the safety disk.
    pub flux_count: Option<f64>,
    /// States in the lowest cluster window whose ⟨ρ²⟩ lies inside the safety disk.
    pub lowest_cluster_count: Option<usize>,
    pub agreement: Option<bool>,
    /// Per state, after rotating degenerate groups to diagonalize ρ².
    pub mean_rho_sq: Vec<f64>,
    pub inside_fraction: Vec<f64>,
}

impl SpectrumReport {
    /// Distance between the centers of the first two clusters.
    pub fn first_gap(&self) -> Option<f64> {
        match self.clusters.as_slice() {
            [a, b, ..] => Some(b.center - a.center),
            _ => None,
        }
    }
}

/// Greedy clustering of ascending values: a value opens a new cluster when it
/// lies more than `width` above the first member of the current one.
pub fn cluster_values(values: &[f64], width: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 0..=values.len() {
        if i == values.len() || values[i] - values[start] > width {
            if i > start {
                let members = &values[start..i];
                let center = members.iter().sum::<f64>() / members.len() as f64;
                out.push(Cluster { center, count: members.len(), spread: members[members.len() - 1] - members[0] });
            }
            start = i;
        }
    }
    out
}

fn mean_rho_sq(f: &ComplexField2D) -> f64 {
    let g = f.grid();
    let ny = g.ny();
    let mut s = 0.0;
    let mut total = 0.0;
    for (ix, &x) in g.x().iter().enumerate() {
        for (iy, &y) in g.y().iter().enumerate() {
            let p = f.values()[ix * ny + iy].norm_sqr();
            s += (x * x + y * y) * p;
            total += p;
        }
    }
    s / total
}

/// Rotates each degenerate group so that ρ² is diagonal inside it.
fn localize_groups(vectors: &mut [ComplexField2D], values: &[f64], tol: f64) -> Result<()> {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < tol {
            end += 1;
        }
        let q = end - start;
        if q > 1 {
            let g = vectors[start].grid().clone();
            let ny = g.ny();
            let rho2: Vec<f64> = (0..g.len()).map(|i| {
                let (x, y) = (g.x()[i / ny], g.y()[i % ny]);
                x * x + y * y
            }).collect();
            let mut m = vec![Complex64::zero(); q * q];
            for i in 0..q {
                for j in i..q {
                    let (a, b) = (vectors[start + i].values(), vectors[start + j].values());
                    m[i * q + j] = a.iter().zip(b).zip(&rho2).map(|((u, v), r)| u.conj() * v * r).sum();
                }
            }
            let eig = hermitian_eigen(&m, q)?;
            let mut cols: Vec<Vec<Complex64>> = vectors[start..end].iter().map(|v| v.values().to_vec()).collect();
            rotate_block(&mut cols, &eig.vectors, q);
            for (v, c) in vectors[start..end].iter_mut().zip(cols) {
                v.values_mut().copy_from_slice(&c);
            }
        }
        start = end;
    }
    Ok(())
}

/// Clusters the spectrum in units of |ħω_c| and compares the lowest-level
/// count inside the safety disk with the flux through it.
pub fn landau_analysis(pairs: &Eigenpairs, omega_c: f64, cluster_tol: f64) -> Result<SpectrumReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(cluster_tol >= 0.0) || !omega_c.is_finite() {
        return Err(Error::InvalidParameter { name: "cluster_tol", reason: "must be a non-negative number" });
    }
    let width = cluster_tol * omega_c.abs();
    let mut report = SpectrumReport {
        eigenvalues: pairs.values.clone(),
        residuals: pairs.residuals.clone(),
        clusters: Vec::new(),
        omega_c,
        cluster_tol,
        safety_radius: None,
        flux_count: None,
        lowest_cluster_count: None,
        agreement: None,
        mean_rho_sq: Vec::new(),
        inside_fraction: Vec::new(),
    };
    if pairs.vectors.is_empty() {
        report.clusters = cluster_values(&pairs.values, width);
        return Ok(report);
    }
    if pairs.vectors.len() != pairs.values.len() {
        return Err(Error::InvalidParameter { name: "eigenpairs", reason: "vector and value counts differ" });
    }
    let mut vectors = pairs.vectors.clone();
    localize_groups(&mut vectors, &pairs.values, 1e-6 * omega_c.abs().max(1e-300))?;
    let r_s = vectors[0].grid().safety_radius();
    report.safety_radius = Some(r_s);
    for v in &vectors {
        report.mean_rho_sq.push(mean_rho_sq(v));
        report.inside_fraction.push(v.probability_within(r_s) / v.norm_sqr());
    }
    let bulk: Vec<f64> = pairs
        .values
        .iter()
        .zip(&report.inside_fraction)
        .filter(|(_, &p)| p > BULK_FRACTION)
        .map(|(&v, _)| v)
        .collect();
    report.clusters = cluster_values(&bulk, width);
    let flux = pairs.mass * omega_c.abs() * r_s * r_s / 2.0;
    report.flux_count = Some(flux);
    if let Some(first) = report.clusters.first() {
        let lo = first.center - 0.5 * first.spread - width;
        let hi = first.center - 0.5 * first.spread + width;
        let count = pairs
            .values
            .iter()
            .zip(&report.mean_rho_sq)
            .filter(|(&v, &r2)| v >= lo && v <= hi && r2 <= r_s * r_s)
            .count();
        report.lowest_cluster_count = Some(count);
        report.agreement = Some((count as f64 - flux).abs() <= COUNT_SLACK);
    }
    Ok(report)
}
