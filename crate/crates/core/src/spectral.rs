//! Eigenvalue profiles of Hermitian concentration operators and the
//! functionals evaluated on them: counting functions, plunge counts, the
//! Hankel Schatten quasi-norms `Σ (λ - λ²)^{p/2}` and the functional-calculus
//! deviation inequality.

use thiserror::Error;

use crate::eigen::{jacobi_eigen, CMatrix, EigenError};

/// Eigenvalues within this distance outside `[0, 1]` are treated as roundoff.
pub const CLIP_TOL: f64 = 1e-10;
/// Relative tolerance between the eigenvalue sum and the independent trace.
pub const TRACE_TOL: f64 = 1e-9;
/// Absolute slack on the deviation inequality.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("eigenvalue sum {sum} disagrees with trace {trace}")]
    TraceMismatch { sum: f64, trace: f64 },
    #[error("delta = {0} is outside (0, 1/2)")]
    DeltaOutOfRange(f64),
    #[error("p = {0} is outside (0, 2]")]
    POutOfRange(f64),
    #[error("eigenvalue {0} lies outside [0, 1] beyond roundoff")]
    SpectrumOutOfRange(f64),
}

/// Sorted (descending) real spectrum of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    eigenvalues: Vec<f64>,
    source_trace: f64,
}

impl SpectralProfile {
    /// Builds a profile from raw eigenvalues and the operator's trace,
    /// checking that they agree.
    pub fn new(mut eigenvalues: Vec<f64>, source_trace: f64) -> Result<Self, SpectralError> {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let sum: f64 = eigenvalues.iter().sum();
        let scale = source_trace.abs().max(eigenvalues.iter().map(|x| x.abs()).sum::<f64>()).max(1e-300);
        if (sum - source_trace).abs() > TRACE_TOL * scale {
            return Err(SpectralError::TraceMismatch { sum, trace: source_trace });
        }
        Ok(SpectralProfile { eigenvalues, source_trace })
    }

    /// Profile with the eigenvalue sum as its trace (e.g. when read back from CSV).
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Self {
        let trace = eigenvalues.iter().sum();
        let mut eigenvalues = eigenvalues;
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        SpectralProfile { eigenvalues, source_trace: trace }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn source_trace(&self) -> f64 {
        self.source_trace
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Whether every eigenvalue lies in `[-CLIP_TOL, 1 + CLIP_TOL]`.
    pub fn is_contained_in_unit_interval(&self) -> bool {
        self.eigenvalues.iter().all(|&l| (-CLIP_TOL..=1.0 + CLIP_TOL).contains(&l))
    }

    /// Eigenvalues clipped to `[0, 1]`; excursions larger than roundoff are errors.
    pub fn clipped(&self) -> Result<Vec<f64>, SpectralError> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                if !(-CLIP_TOL..=1.0 + CLIP_TOL).contains(&l) {
                    Err(SpectralError::SpectrumOutOfRange(l))
                } else {
                    Ok(l.clamp(0.0, 1.0))
                }
            })
            .collect()
    }
}

/// All eigenvalues of a Hermitian matrix, sorted descending, with the
/// eigenvalue sum checked against the diagonal trace.
pub fn hermitian_eigenvalues(matrix: &CMatrix) -> Result<SpectralProfile, SpectralError> {
    let eig = jacobi_eigen(matrix, false)?;
    let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
    SpectralProfile::new(eig.values, trace)
}

/// `#{λ : λ > δ}` with strict inequality.
pub fn count_above(profile: &SpectralProfile, delta: f64) -> usize {
    profile.eigenvalues.iter().filter(|&&l| l > delta).count()
}

/// `#{λ : δ < λ < 1 - δ}` for `δ ∈ (0, 1/2)`.
pub fn plunge_count(profile: &SpectralProfile, delta: f64) -> Result<usize, SpectralError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(SpectralError::DeltaOutOfRange(delta));
    }
    Ok(profile.eigenvalues.iter().filter(|&&l| l > delta && l < 1.0 - delta).count())
}

/// Plunge count for any `δ ∈ (0, 1)`, using `min(δ, 1-δ)` as the threshold;
/// zero at `δ = 1/2`.
pub fn symmetric_plunge_count(profile: &SpectralProfile, delta: f64) -> usize {
    let lo = delta.min(1.0 - delta);
    let hi = delta.max(1.0 - delta);
    profile.eigenvalues.iter().filter(|&&l| l > lo && l < hi).count()
}

/// `|count_above(δ) - target|`.
pub fn spectral_deviation(profile: &SpectralProfile, delta: f64, target: f64) -> f64 {
    (count_above(profile, delta) as f64 - target).abs()
}

/// `‖H‖_{S_p}^p = Σ (λ - λ²)^{p/2}` over the clipped spectrum.
pub fn hankel_schatten(profile: &SpectralProfile, p: f64) -> Result<f64, SpectralError> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(SpectralError::POutOfRange(p));
    }
    let clipped = profile.clipped()?;
    Ok(clipped
        .iter()
        .map(|&l| {
            let x = l - l * l;
            if x <= 0.0 {
                0.0
            } else {
                x.powf(p / 2.0)
            }
        })
        .sum())
}

/// `τ = max{1/δ, 1/(1-δ)}`.
pub fn tau(delta: f64) -> f64 {
    (1.0 / delta).max(1.0 / (1.0 - delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|#{λ > δ} - Σλ| <= 2 τ^{p/2} ‖H‖_{S_p}^p`.
pub fn deviation_inequality_check(profile: &SpectralProfile, delta: f64, p: f64) -> Result<DeviationCheck, SpectralError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SpectralError::DeltaOutOfRange(delta));
    }
    let lhs = spectral_deviation(profile, delta, profile.eigenvalue_sum());
    let rhs = 2.0 * tau(delta).powf(p / 2.0) * hankel_schatten(profile, p)?;
    Ok(DeviationCheck { lhs, rhs, holds: lhs <= rhs + INEQUALITY_SLACK })
}
