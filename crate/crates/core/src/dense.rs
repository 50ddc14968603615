//! Small dense Hermitian eigenproblems (Rayleigh–Ritz projections, Lanczos
//! tridiagonals) solved by cyclic complex Jacobi rotations.
//!
//! Matrices are row-major `n × n`. Eigenvectors come back as the columns of a
//! row-major matrix: component `i` of vector `j` sits at `i * n + j`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Complex64>,
    pub n: usize,
}

impl HermitianEigen {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

/// Diagonalizes the Hermitian matrix `a` (only Hermitian symmetry is assumed;
/// the strictly lower triangle is taken as the conjugate of the upper one).
pub fn hermitian_eigen(a: &[Complex64], n: usize) -> Result<HermitianEigen> {
    if a.len() != n * n {
        return Err(Error::InvalidParameter { name: "matrix", reason: "length is not n²" });
    }
    if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFiniteField);
    }
    let mut m = vec![Complex64::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(a[i * n + i].re, 0.0);
        for j in i + 1..n {
            let v = a[i * n + j];
            m[i * n + j] = v;
            m[j * n + i] = v.conj();
        }
    }
    let mut z = vec![Complex64::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let scale = m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut converged = n < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut z, n, p, q);
            }
        }
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        converged = off <= 1e-15 * scale;
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: sweeps, residual: f64::NAN });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.total_cmp(&m[j * n + j].re));
    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let mut vectors = vec![Complex64::zero(); n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_j] = z[i * n + old_j];
        }
    }
    Ok(HermitianEigen { values, vectors, n })
}

fn rotate(m: &mut [Complex64], z: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let (app, aqq) = (m[p * n + p].re, m[q * n + q].re);
    if b <= 1e-300 || b < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[p * n + q] = Complex64::zero();
        m[q * n + p] = Complex64::zero();
        return;
    }
    let w = apq / b;
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // V = [[c, s], [-s·w̄, c·w̄]] acting on columns p, q.
    let vpp = Complex64::new(c, 0.0);
    let vpq = Complex64::new(s, 0.0);
    let vqp = -w.conj() * s;
    let vqq = w.conj() * c;
    for k in 0..n {
        let (akp, akq) = (m[k * n + p], m[k * n + q]);
        m[k * n + p] = akp * vpp + akq * vqp;
        m[k * n + q] = akp * vpq + akq * vqq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[p * n + k], m[q * n + k]);
        m[p * n + k] = vpp.conj() * apk + vqp.conj() * aqk;
        m[q * n + k] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    m[p * n + q] = Complex64::zero();
    m[q * n + p] = Complex64::zero();
    m[p * n + p].im = 0.0;
    m[q * n + q].im = 0.0;
    for k in 0..n {
        let (zkp, zkq) = (z[k * n + p], z[k * n + q]);
        z[k * n + p] = zkp * vpp + zkq * vqp;
        z[k * n + q] = zkp * vpq + zkq * vqq;
    }
}

/// Eigenvalues of the real symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (`e.len() == d.len() - 1`).
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut a = vec![Complex64::zero(); n * n];
    for i in 0..n {
        a[i * n + i] = Complex64::new(d[i], 0.0);
        if i + 1 < n {
            a[i * n + i + 1] = Complex64::new(e[i], 0.0);
        }
    }
    Ok(hermitian_eigen(&a, n)?.values)
}
