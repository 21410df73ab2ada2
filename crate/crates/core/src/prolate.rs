//! Discrete Fourier concentration `T = P_I 1_J P_I` on `C^L` for cyclic
//! intervals `I` (frequencies) and `J` (times), and plunge-count studies.
//!
//! `P_I(t, s) = (1/L) Σ_{k∈I} e^{2πik(t-s)/L}` is the periodic Dirichlet kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{log_star, KernelOnDomain};
use crate::eigen::CMatrix;
use crate::exec::Execution;
use crate::spectral::{self, SpectralError, SpectralProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProlateError {
    #[error("interval is empty or longer than L = {0}")]
    EmptyInterval(usize),
    #[error("endpoint {0} outside [0, {1})")]
    EndpointOutOfRange(usize, usize),
    #[error("delta = {0} outside (0, 1/2)")]
    DeltaOutOfRange(f64),
    #[error("ladder mismatch: {0}")]
    Ladder(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `{start, start+1, …, start+len-1} mod L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicInterval {
    pub length: usize,
    pub start: usize,
    pub len: usize,
}

impl CyclicInterval {
    pub fn new(length: usize, start: usize, len: usize) -> Result<Self, ProlateError> {
        if len == 0 || len > length {
            return Err(ProlateError::EmptyInterval(length));
        }
        if start >= length {
            return Err(ProlateError::EndpointOutOfRange(start, length));
        }
        Ok(CyclicInterval { length, start, len })
    }

    /// Inclusive endpoints `k0..=k1`, wrapping when `k1 < k0`.
    pub fn inclusive(length: usize, k0: usize, k1: usize) -> Result<Self, ProlateError> {
        for k in [k0, k1] {
            if k >= length {
                return Err(ProlateError::EndpointOutOfRange(k, length));
            }
        }
        Self::new(length, k0, (k1 + length - k0) % length + 1)
    }

    pub fn full(length: usize) -> Result<Self, ProlateError> {
        Self::new(length, 0, length)
    }

    pub fn contains(&self, k: usize) -> bool {
        (k % self.length + self.length - self.start) % self.length < self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |i| (self.start + i) % self.length)
    }
}

#[derive(Debug, Clone)]
pub struct ProlateInstance {
    pub length: usize,
    pub freq: CyclicInterval,
    pub time: CyclicInterval,
    pub matrix: CMatrix,
}

impl ProlateInstance {
    /// `|I| |J| / L`.
    pub fn expected_trace(&self) -> f64 {
        (self.freq.len * self.time.len) as f64 / self.length as f64
    }

    pub fn spectrum(&self) -> Result<SpectralProfile, ProlateError> {
        Ok(spectral::hermitian_eigenvalues(&self.matrix)?)
    }
}

/// `P_I(d)` for `d = t - s mod L`.
pub fn dirichlet_kernel(length: usize, freq: &CyclicInterval) -> Vec<Complex64> {
    let roots: Vec<Complex64> =
        (0..length).map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / length as f64)).collect();
    let l = Complex64::new(length as f64, 0.0);
    (0..length).map(|d| freq.iter().map(|k| roots[(k * d) % length]).sum::<Complex64>() / l).collect()
}

pub fn projection_matrix(length: usize, freq: &CyclicInterval) -> CMatrix {
    let p = dirichlet_kernel(length, freq);
    CMatrix::from_fn(length, length, |t, s| p[(t + length - s) % length])
}

/// `T = P_I 1_J P_I`.
pub fn prolate_operator(length: usize, freq: CyclicInterval, time: CyclicInterval) -> Result<ProlateInstance, ProlateError> {
    if freq.length != length || time.length != length {
        return Err(ProlateError::EmptyInterval(length));
    }
    let p = dirichlet_kernel(length, &freq);
    let times: Vec<usize> = time.iter().collect();
    let mut matrix = CMatrix::zeros(length, length);
    for s in 0..length {
        for t in 0..length {
            matrix[(t, s)] = times.iter().map(|&u| p[(t + length - u) % length] * p[(u + length - s) % length]).sum();
        }
    }
    Ok(ProlateInstance { length, freq, time, matrix })
}

/// `|P_I(t, s)|²` on `Z_L` with unit masses and cyclic distance; the boundary
/// interaction with mask `J` equals `tr T - tr T²`.
pub fn dirichlet_kernel_on_domain(length: usize, freq: &CyclicInterval) -> KernelOnDomain {
    let p = dirichlet_kernel(length, freq);
    let n = length;
    let mut distance = vec![0.0; n * n];
    let mut mag = vec![0.0; n * n];
    for t in 0..n {
        for s in 0..n {
            let d = (t + n - s) % n;
            distance[t * n + s] = d.min(n - d) as f64;
            mag[t * n + s] = p[d].norm_sqr();
        }
    }
    KernelOnDomain::new(distance, mag, vec![1.0; n]).expect("dirichlet kernel data is consistent")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlungeRow {
    #[serde(rename = "L")]
    pub length: usize,
    pub size_i: usize,
    pub size_j: usize,
    pub trace: f64,
    pub count_half: usize,
    pub plunge: usize,
    pub log_regressor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlungeStudy {
    pub delta: f64,
    pub rows: Vec<PlungeRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    #[serde(skip)]
    pub profiles: Vec<SpectralProfile>,
}

/// Least-squares line through `(x, y)`: `(slope, intercept, R²)`.
/// `R² = 1` when the residual sum of squares vanishes.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let scale = y.iter().map(|b| b * b).sum::<f64>().max(1.0);
    let r2 = if ss_res <= 1e-24 * scale { 1.0 } else if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Some((slope, intercept, r2))
}

/// Pairs `lengths` with `sizes` (a single entry on either side broadcasts);
/// each configuration uses `I = J = {0, …, size-1}`.
pub fn plunge_study(lengths: &[usize], sizes: &[usize], delta: f64, exec: Execution) -> Result<PlungeStudy, ProlateError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(ProlateError::DeltaOutOfRange(delta));
    }
    let configs: Vec<(usize, usize)> = match (lengths.len(), sizes.len()) {
        (0, _) | (_, 0) => return Err(ProlateError::Ladder("empty ladder".into())),
        (a, b) if a == b => lengths.iter().copied().zip(sizes.iter().copied()).collect(),
        (1, _) => sizes.iter().map(|&s| (lengths[0], s)).collect(),
        (_, 1) => lengths.iter().map(|&l| (l, sizes[0])).collect(),
        (a, b) => return Err(ProlateError::Ladder(format!("{a} lengths vs {b} sizes"))),
    };
    let rows: Vec<Result<(PlungeRow, SpectralProfile), ProlateError>> = exec.map(&configs, |&(l, size)| {
        let iv = CyclicInterval::new(l, 0, size)?;
        let inst = prolate_operator(l, iv, iv)?;
        let profile = inst.spectrum()?;
        let trace = profile.source_trace();
        let row = PlungeRow {
            length: l,
            size_i: size,
            size_j: size,
            trace,
            count_half: spectral::count_above(&profile, 0.5),
            plunge: spectral::plunge_count(&profile, delta)?,
            log_regressor: log_star(trace / delta).unwrap_or(1.0),
        };
        Ok((row, profile))
    });
    let (rows, profiles): (Vec<PlungeRow>, Vec<SpectralProfile>) =
        rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    let x: Vec<f64> = rows.iter().map(|r| r.log_regressor).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.plunge as f64).collect();
    let fit = linear_fit(&x, &y);
    Ok(PlungeStudy {
        delta,
        rows,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        r_squared: fit.map(|f| f.2),
        profiles,
    })
}
