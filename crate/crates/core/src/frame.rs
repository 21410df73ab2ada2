//! Finite frames `{φ_λ}` in `C^M` indexed by a discrete domain: frame operator,
//! bounds, canonical dual, ω-weights, the normalized cross-Gram kernel, frame
//! multipliers and the concentration operator on coefficient space.
//!
//! Inner products are linear in the first slot: `⟨f, g⟩ = Σ f[t] conj(g[t])`.
//! The concentration operator is returned as `G·1_Ω·G` with
//! `G[λ, λ'] = ⟨φ^d_{λ'}, φ_λ⟩`, the plain-ℓ² form of `P_φ 1_Ω P_φ`
//! on the ω-weighted sequence space (they are unitarily equivalent).

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::bounds::KernelOnDomain;
use crate::eigen::{jacobi_eigen, CMatrix, EigenError};
use crate::geometry::{DiscreteDomain, GeometryError, Point};
use crate::spectral::{hermitian_eigenvalues, SpectralError, SpectralProfile};

/// `a ≤ FRAME_TOL · b` means the family is not a frame.
pub const FRAME_TOL: f64 = 1e-10;
/// Smallest admissible ω-weight.
pub const OMEGA_MIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("not a frame: lower bound {lower:e}, upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("frame vector at index {0:?} is zero")]
    ZeroVector(Point),
    #[error("expected {expected} vectors of length {dim}, got {got}")]
    Shape { expected: usize, dim: usize, got: usize },
    #[error("ω-weight {value:e} at index {index:?} is not positive")]
    NonPositiveOmega { index: Point, value: f64 },
    #[error("mask point {0:?} is not in the frame's index set")]
    MaskNotSubset(Point),
    #[error("frame needs at least one vector")]
    Empty,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub(crate) fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum()
}

pub(crate) fn norm_sq(f: &[Complex64]) -> f64 {
    f.iter().map(|z| z.norm_sqr()).sum()
}

/// A validated frame with its dual and ω-weights.
#[derive(Debug, Clone)]
pub struct FrameSystem {
    dim: usize,
    index: DiscreteDomain,
    vectors: Vec<Vec<Complex64>>,
    dual: Vec<Vec<Complex64>>,
    operator: CMatrix,
    inv_sqrt: CMatrix,
    bounds: (f64, f64),
    omega: Vec<f64>,
}

/// `Σ_λ φ_λ φ_λ*`.
pub fn frame_operator_of(dim: usize, vectors: &[Vec<Complex64>]) -> CMatrix {
    let mut s = CMatrix::zeros(dim, dim);
    for v in vectors {
        for j in 0..dim {
            let cj = v[j].conj();
            for i in 0..dim {
                s[(i, j)] += v[i] * cj;
            }
        }
    }
    s
}

impl FrameSystem {
    /// `vectors[i]` belongs to `index.points()[i]` (row-major order).
    pub fn new(index: DiscreteDomain, vectors: Vec<Vec<Complex64>>) -> Result<Self, FrameError> {
        if vectors.is_empty() {
            return Err(FrameError::Empty);
        }
        let dim = vectors[0].len();
        if dim == 0 || vectors.len() != index.len() || vectors.iter().any(|v| v.len() != dim) {
            return Err(FrameError::Shape { expected: index.len(), dim, got: vectors.len() });
        }
        if let Some(i) = vectors.iter().position(|v| norm_sq(v) == 0.0) {
            return Err(FrameError::ZeroVector(index.points()[i].clone()));
        }
        let operator = frame_operator_of(dim, &vectors);
        let eig = jacobi_eigen(&operator, true)?;
        let upper = eig.values[0];
        let lower = *eig.values.last().unwrap();
        if !(lower > FRAME_TOL * upper) {
            return Err(FrameError::NotAFrame { lower, upper });
        }
        let v = eig.vectors.expect("requested eigenvectors");
        let d = DVector::from_iterator(dim, eig.values.iter().map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)));
        let inv_sqrt = &v * CMatrix::from_diagonal(&d) * v.adjoint();

        let chol = operator.clone().cholesky().ok_or(FrameError::NotAFrame { lower, upper })?;
        let phi = CMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
        let solved = chol.solve(&phi);
        let dual: Vec<Vec<Complex64>> = (0..vectors.len()).map(|c| solved.column(c).iter().copied().collect()).collect();
        let mut omega = Vec::with_capacity(vectors.len());
        for (i, (d, f)) in dual.iter().zip(&vectors).enumerate() {
            let w = inner(d, f).re;
            if !(w > OMEGA_MIN) {
                return Err(FrameError::NonPositiveOmega { index: index.points()[i].clone(), value: w });
            }
            omega.push(w);
        }
        Ok(FrameSystem { dim, index, vectors, dual, operator, inv_sqrt, bounds: (lower, upper), omega })
    }

    /// Builds from `(index point, vector)` pairs in any order.
    pub fn from_pairs(
        lattice: crate::geometry::LatticeSpec,
        pairs: Vec<(Point, Vec<Complex64>)>,
    ) -> Result<Self, FrameError> {
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let points = pairs.iter().map(|p| p.0.clone()).collect();
        let index = DiscreteDomain::new(lattice, points)?;
        Self::new(index, pairs.into_iter().map(|p| p.1).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn index(&self) -> &DiscreteDomain {
        &self.index
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn dual(&self) -> &[Vec<Complex64>] {
        &self.dual
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn operator(&self) -> &CMatrix {
        &self.operator
    }

    /// `S^{-1/2}`.
    pub fn inverse_sqrt(&self) -> &CMatrix {
        &self.inv_sqrt
    }

    /// `(a, b)`: extreme eigenvalues of `S`.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `Θ = sup ω`.
    pub fn omega_max(&self) -> f64 {
        self.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ϑ = inf ω`.
    pub fn omega_min(&self) -> f64 {
        self.omega.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Θ^8 / (ϑ^7 |Λ|)`.
    pub fn c_phi(&self) -> f64 {
        self.omega_max().powi(8) / (self.omega_min().powi(7) * self.index.mass())
    }

    /// Positions of mask points in the index set.
    pub fn mask_indices(&self, mask: &DiscreteDomain) -> Result<Vec<usize>, FrameError> {
        mask.points()
            .iter()
            .map(|p| self.index.index_of(p).ok_or_else(|| FrameError::MaskNotSubset(p.clone())))
            .collect()
    }

    /// `μ_φ(Ω) = Σ_{λ∈Ω} ω_λ`.
    pub fn mu(&self, mask: &[usize]) -> f64 {
        mask.iter().map(|&i| self.omega[i]).sum()
    }

    /// `G[λ, λ'] = ⟨φ^d_{λ'}, φ_λ⟩`.
    pub fn gram_entry(&self, row: usize, col: usize) -> Complex64 {
        inner(&self.dual[col], &self.vectors[row])
    }

    /// Full `G` (n × n).
    pub fn gram(&self) -> CMatrix {
        let phi = CMatrix::from_fn(self.dim, self.len(), |r, c| self.vectors[c][r]);
        let psi = CMatrix::from_fn(self.dim, self.len(), |r, c| self.dual[c][r]);
        phi.adjoint() * psi
    }
}

/// `Σ_λ φ_λ φ_λ*`.
pub fn frame_operator(frame: &FrameSystem) -> &CMatrix {
    frame.operator()
}

/// `(a, b)`.
pub fn frame_bounds(frame: &FrameSystem) -> (f64, f64) {
    frame.bounds()
}

/// `φ^d_λ = S^{-1} φ_λ`.
pub fn canonical_dual(frame: &FrameSystem) -> &[Vec<Complex64>] {
    frame.dual()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaWeights {
    pub omega: Vec<f64>,
    pub theta_max: f64,
    pub theta_min: f64,
    pub c_phi: f64,
}

pub fn omega_weights(frame: &FrameSystem) -> OmegaWeights {
    OmegaWeights {
        omega: frame.omega.clone(),
        theta_max: frame.omega_max(),
        theta_min: frame.omega_min(),
        c_phi: frame.c_phi(),
    }
}

/// `K[λ, λ'] = ⟨φ^d_{λ'}, φ_λ⟩ / √(ω_λ ω_λ')` with its weights.
#[derive(Debug, Clone)]
pub struct CrossGramKernel {
    pub matrix: CMatrix,
    pub omega: Vec<f64>,
}

impl CrossGramKernel {
    /// Matrix of `P_φ v(λ) = Σ_λ' K(λ,λ') v(λ') ω_λ'`.
    pub fn projection(&self) -> CMatrix {
        let n = self.omega.len();
        CMatrix::from_fn(n, n, |i, j| self.matrix[(i, j)] * self.omega[j])
    }

    /// Frobenius norm of `P² - P` (bounds the operator norm).
    pub fn idempotence_defect(&self) -> f64 {
        let p = self.projection();
        (&p * &p - &p).norm()
    }

    /// Frobenius norm of `D P - P* D` (self-adjointness in the ω-inner product).
    pub fn self_adjointness_defect(&self) -> f64 {
        let p = self.projection();
        let n = self.omega.len();
        let dp = CMatrix::from_fn(n, n, |i, j| p[(i, j)] * self.omega[i]);
        let pd = CMatrix::from_fn(n, n, |i, j| p[(j, i)].conj() * self.omega[j]);
        (dp - pd).norm()
    }

    /// `Σ_λ' |K(λ,λ')|² ω_λ'` per row.
    pub fn row_norms(&self) -> Vec<f64> {
        let n = self.omega.len();
        (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)].norm_sqr() * self.omega[j]).sum()).collect()
    }
}

pub fn cross_gram_kernel(frame: &FrameSystem) -> CrossGramKernel {
    let g = frame.gram();
    let w = &frame.omega;
    let matrix = CMatrix::from_fn(frame.len(), frame.len(), |i, j| g[(i, j)] / (w[i] * w[j]).sqrt());
    CrossGramKernel { matrix, omega: w.clone() }
}

/// `M f = Σ_{λ∈Ω} ⟨f, φ_λ⟩ φ^d_λ` as an `M × M` matrix.
pub fn frame_multiplier(frame: &FrameSystem, mask: &DiscreteDomain) -> Result<CMatrix, FrameError> {
    let idx = frame.mask_indices(mask)?;
    Ok(multiplier_from_indices(frame, &idx))
}

pub fn multiplier_from_indices(frame: &FrameSystem, mask: &[usize]) -> CMatrix {
    let m = frame.dim;
    let mut out = CMatrix::zeros(m, m);
    for &k in mask {
        let (d, v) = (&frame.dual[k], &frame.vectors[k]);
        for j in 0..m {
            let cj = v[j].conj();
            for i in 0..m {
                out[(i, j)] += d[i] * cj;
            }
        }
    }
    out
}

/// Spectrum of `M_{φ,Ω}` via the similar Hermitian `S^{-1/2} A_Ω S^{-1/2}`.
pub fn multiplier_spectrum(frame: &FrameSystem, mask: &[usize]) -> Result<SpectralProfile, FrameError> {
    let a = frame_operator_of(frame.dim, &mask.iter().map(|&i| frame.vectors[i].clone()).collect::<Vec<_>>());
    let h = &frame.inv_sqrt * a * &frame.inv_sqrt;
    let h = hermitize(h);
    Ok(hermitian_eigenvalues(&h)?)
}

/// Averages `H` with `H*` to remove roundoff asymmetry.
pub(crate) fn hermitize(h: CMatrix) -> CMatrix {
    let n = h.nrows();
    CMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5)
}

/// `G 1_Ω G` on coefficient space (n × n).
pub fn concentration_operator(frame: &FrameSystem, mask: &DiscreteDomain) -> Result<CMatrix, FrameError> {
    let idx = frame.mask_indices(mask)?;
    Ok(concentration_from_indices(frame, &idx))
}

pub fn concentration_from_indices(frame: &FrameSystem, mask: &[usize]) -> CMatrix {
    let g = frame.gram();
    let cols = g.select_columns(mask.iter());
    let rows = g.select_rows(mask.iter());
    hermitize(cols * rows)
}

pub fn concentration_spectrum(frame: &FrameSystem, mask: &[usize]) -> Result<SpectralProfile, FrameError> {
    Ok(hermitian_eigenvalues(&concentration_from_indices(frame, mask))?)
}

/// `u(v) = max_{λ-λ'=v} |K(λ,λ')|` keyed by lattice difference (reduced on the torus).
pub fn decay_profile(frame: &FrameSystem) -> BTreeMap<Point, f64> {
    let k = cross_gram_kernel(frame);
    let pts = frame.index.points();
    let reduce = |v: Point| -> Point {
        match frame.index.period() {
            Some(per) => v.iter().zip(per).map(|(x, m)| x.rem_euclid(*m)).collect(),
            None => v,
        }
    };
    let mut out: BTreeMap<Point, f64> = BTreeMap::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let v = reduce(pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect());
            let mag = if i == j { 1.0 } else { k.matrix[(i, j)].norm() };
            let e = out.entry(v).or_insert(0.0);
            *e = e.max(mag);
        }
    }
    out
}

/// Metric measure space on the index set with `|K|²` and masses `ω`.
pub fn kernel_on_domain(frame: &FrameSystem) -> KernelOnDomain {
    let n = frame.len();
    let g = frame.gram();
    let pts = frame.index.points();
    let mut distance = vec![0.0; n * n];
    let mut mag = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            distance[i * n + j] = frame.index.distance(&pts[i], &pts[j]);
            mag[i * n + j] = g[(i, j)].norm_sqr() / (frame.omega[i] * frame.omega[j]);
        }
    }
    KernelOnDomain::new(distance, mag, frame.omega.clone()).expect("frame kernel data is consistent")
}
