//! Dense complex Hermitian eigensolver (cyclic Jacobi).
//!
//! Each rotation first removes the phase of the pivot `a[p][q]` with the
//! diagonal unitary `diag(1, e^{-i arg a[p][q]})`, after which the 2×2 block is
//! real symmetric and the classic Jacobi rotation annihilates it. Sweeps visit
//! pivots in row-major order, so the result is fully deterministic.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

/// Relative Hermitian tolerance: `max|A - A*| <= 1e-10 * max|A|`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Convergence threshold on the off-diagonal Frobenius mass, relative to `‖A‖_F`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max|A - A*| = {asymmetry:e} exceeds {tolerance:e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Eigenvalues sorted descending, with optional eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Option<CMatrix>,
    pub sweeps: usize,
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Checks shape, finiteness and the Hermitian tolerance.
pub fn check_hermitian(a: &CMatrix) -> Result<(), EigenError> {
    if a.nrows() != a.ncols() {
        return Err(EigenError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let tolerance = HERMITIAN_TOL * max_abs(a);
    let asymmetry = hermitian_defect(a);
    if asymmetry > tolerance {
        return Err(EigenError::NotHermitian { asymmetry, tolerance });
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn jacobi_eigen(a: &CMatrix, want_vectors: bool) -> Result<HermitianEigen, EigenError> {
    check_hermitian(a)?;
    let n = a.nrows();
    // Column-major working copy, symmetrized.
    let mut w = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            w[i + j * n] = if i == j {
                Complex64::new(a[(i, i)].re, 0.0)
            } else {
                (a[(i, j)] + a[(j, i)].conj()) * 0.5
            };
        }
    }
    let mut v = if want_vectors {
        let mut id = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            id[i + i * n] = Complex64::new(1.0, 0.0);
        }
        Some(id)
    } else {
        None
    };

    let frob = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * frob;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_mass(&w, n);
        if off <= target || frob == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(EigenError::NoConvergence { sweeps, off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, v.as_mut(), n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| w[i + i * n].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| CMatrix::from_fn(n, n, |r, c| v[r + order[c] * n]));
    Ok(HermitianEigen { values, vectors, sweeps })
}

fn off_diagonal_mass(w: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += w[i + j * n].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(w: &mut [Complex64], v: Option<&mut Vec<Complex64>>, n: usize, p: usize, q: usize) {
    let apq = w[p + q * n];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = w[p + p * n].re;
    let aqq = w[q + q * n].re;
    // phase = e^{-i arg apq}
    let phase = apq.conj() / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let wqp = -phase * s; // W[q][p]
    let wqq = phase * c; // W[q][q]

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[k + p * n];
        let akq = w[k + q * n];
        let new_kp = akp * c + akq * wqp;
        let new_kq = akp * s + akq * wqq;
        w[k + p * n] = new_kp;
        w[k + q * n] = new_kq;
        w[p + k * n] = new_kp.conj();
        w[q + k * n] = new_kq.conj();
    }
    w[p + p * n] = Complex64::new(app - t * mag, 0.0);
    w[q + q * n] = Complex64::new(aqq + t * mag, 0.0);
    w[p + q * n] = Complex64::new(0.0, 0.0);
    w[q + p * n] = Complex64::new(0.0, 0.0);

    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[k + p * n];
            let vkq = v[k + q * n];
            v[k + p * n] = vkp * c + vkq * wqp;
            v[k + q * n] = vkp * s + vkq * wqq;
        }
    }
}
