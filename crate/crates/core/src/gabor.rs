//! Finite periodic Gabor analysis on `C^L`.
//!
//! `π(x, ξ) f[t] = f[(t - x) mod L] · e^{2πi ξ t / L}`; the Gabor system over
//! the separable lattice `aZ_L × bZ_L` is the frame `{π(na, mb) g}` indexed by
//! `(n, m)` on the torus `Z_{L/a} × Z_{L/b}` with point mass `ab/L`.
//! Time-frequency masks live in ambient coordinates `(x, ξ) ∈ [0, L)²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::bounds::{self, GroupKernel};
use crate::eigen::CMatrix;
use crate::exec::Execution;
use crate::frame::{self, inner, norm_sq, FrameError, FrameSystem};
use crate::geometry::{ContinuousDomain, DiscreteDomain, GeometryError, LatticeSpec, Point};
use crate::spectral::{self, SpectralError, SpectralProfile};

/// Orthonormality and weight-normalization tolerance.
pub const ORTHO_TOL: f64 = 1e-10;
/// Periods summed on each side when periodizing the Gaussian.
pub const GAUSS_PERIODS: i64 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaborError {
    #[error("step {step} does not divide length {length}")]
    BadDivisor { step: usize, length: usize },
    #[error("invalid window: {0}")]
    Window(String),
    #[error("windows are not orthonormal (max defect {0:e})")]
    NotOrthonormal(f64),
    #[error("weights are not normalized (Σ|ν|² = {0})")]
    WeightsNotNormalized(f64),
    #[error("mask point {0:?} lies outside the time-frequency torus")]
    MaskOutOfRange(Point),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl GaborError {
    pub fn is_not_a_frame(&self) -> bool {
        matches!(self, GaborError::Frame(FrameError::NotAFrame { .. }))
    }
}

/// `e^{2πi r / L}` for `r = 0..L`, evaluated from the reduced residue.
fn roots_of_unity(l: usize) -> Vec<Complex64> {
    (0..l).map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / l as f64)).collect()
}

/// `π(x, ξ) f`.
pub fn tf_shift(x: usize, xi: usize, f: &[Complex64]) -> Vec<Complex64> {
    let l = f.len();
    let roots = roots_of_unity(l);
    tf_shift_with(x, xi, f, &roots)
}

fn tf_shift_with(x: usize, xi: usize, f: &[Complex64], roots: &[Complex64]) -> Vec<Complex64> {
    let l = f.len();
    let (x, xi) = (x % l, xi % l);
    (0..l).map(|t| f[(t + l - x) % l] * roots[(xi * t) % l]).collect()
}

/// `V_g f(n, m) = ⟨f, π(n, m) g⟩` as an `L × L` array indexed `[n][m]`.
pub fn stft(g: &[Complex64], f: &[Complex64]) -> Vec<Vec<Complex64>> {
    let l = f.len();
    let roots = roots_of_unity(l);
    (0..l)
        .map(|n| {
            let prod: Vec<Complex64> = (0..l).map(|t| f[t] * g[(t + l - n) % l].conj()).collect();
            (0..l)
                .map(|m| (0..l).map(|t| prod[t] * roots[(m * t) % l].conj()).sum())
                .collect()
        })
        .collect()
}

/// Window families.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowSpec {
    Gauss,
    Boxcar(usize),
    /// Explicit samples (normalized on use).
    Samples(Vec<Complex64>),
}

impl WindowSpec {
    /// Unit-norm window of length `l`.
    pub fn build(&self, l: usize) -> Result<Vec<Complex64>, GaborError> {
        if l == 0 {
            return Err(GaborError::Window("length must be positive".into()));
        }
        let raw: Vec<Complex64> = match self {
            WindowSpec::Gauss => {
                let lf = l as f64;
                (0..l)
                    .map(|t| {
                        let v: f64 = (-GAUSS_PERIODS..=GAUSS_PERIODS)
                            .map(|k| {
                                let u = t as f64 + k as f64 * lf;
                                (-PI * u * u / lf).exp()
                            })
                            .sum();
                        Complex64::new(v, 0.0)
                    })
                    .collect()
            }
            WindowSpec::Boxcar(w) => {
                if *w == 0 || *w > l {
                    return Err(GaborError::Window(format!("boxcar width {w} outside 1..={l}")));
                }
                let start = l - w / 2;
                let mut g = vec![Complex64::new(0.0, 0.0); l];
                for k in 0..*w {
                    g[(start + k) % l] = Complex64::new(1.0, 0.0);
                }
                g
            }
            WindowSpec::Samples(s) => {
                if s.len() != l {
                    return Err(GaborError::Window(format!("expected {l} samples, got {}", s.len())));
                }
                s.clone()
            }
        };
        normalize(raw)
    }
}

pub(crate) fn normalize(g: Vec<Complex64>) -> Result<Vec<Complex64>, GaborError> {
    let n = norm_sq(&g).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(GaborError::Window("window has zero or non-finite norm".into()));
    }
    Ok(g.into_iter().map(|z| z / n).collect())
}

/// Gabor frame `{π(na, mb) g}`.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    length: usize,
    a: usize,
    b: usize,
    window: Vec<Complex64>,
    frame: FrameSystem,
}

/// The index lattice `diag(a, b)` on the torus `Z_{L/a} × Z_{L/b}`, mass `ab/L`.
pub fn tf_lattice_domain(length: usize, a: usize, b: usize, points: Vec<Point>) -> Result<DiscreteDomain, GaborError> {
    check_divisor(length, a)?;
    check_divisor(length, b)?;
    let lattice = LatticeSpec::diagonal(&[a as f64, b as f64])?;
    Ok(DiscreteDomain::new(lattice, points)?
        .with_mass((a * b) as f64 / length as f64)?
        .on_torus(vec![(length / a) as i64, (length / b) as i64])?)
}

fn check_divisor(length: usize, step: usize) -> Result<(), GaborError> {
    if step == 0 || length == 0 || !length.is_multiple_of(step) {
        return Err(GaborError::BadDivisor { step, length });
    }
    Ok(())
}

impl GaborSystem {
    pub fn new(length: usize, a: usize, b: usize, window: &WindowSpec) -> Result<Self, GaborError> {
        let g = window.build(length)?;
        Self::from_window(length, a, b, g)
    }

    /// `window` must already have unit norm (to 1e-12).
    pub fn from_window(length: usize, a: usize, b: usize, window: Vec<Complex64>) -> Result<Self, GaborError> {
        check_divisor(length, a)?;
        check_divisor(length, b)?;
        if window.len() != length {
            return Err(GaborError::Window(format!("expected {length} samples, got {}", window.len())));
        }
        if (norm_sq(&window).sqrt() - 1.0).abs() > 1e-12 {
            return Err(GaborError::Window("window must have unit norm".into()));
        }
        let (na, nb) = (length / a, length / b);
        let points: Vec<Point> = (0..na as i64).flat_map(|n| (0..nb as i64).map(move |m| vec![n, m])).collect();
        let index = tf_lattice_domain(length, a, b, points)?;
        let roots = roots_of_unity(length);
        let vectors = (0..na)
            .flat_map(|n| (0..nb).map(move |m| (n, m)))
            .map(|(n, m)| tf_shift_with(n * a, m * b, &window, &roots))
            .collect();
        let frame = FrameSystem::new(index, vectors)?;
        Ok(GaborSystem { length, a, b, window, frame })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn steps(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// `L / (ab)`.
    pub fn redundancy(&self) -> f64 {
        self.length as f64 / (self.a * self.b) as f64
    }

    pub fn window(&self) -> &[Complex64] {
        &self.window
    }

    pub fn frame(&self) -> &FrameSystem {
        &self.frame
    }

    /// `ab / L`.
    pub fn point_mass(&self) -> f64 {
        (self.a * self.b) as f64 / self.length as f64
    }

    /// Lattice points `(na, mb)` of the system inside `shape` (wrapping on the torus).
    pub fn tf_mask(&self, shape: &ContinuousDomain) -> Result<DiscreteDomain, GaborError> {
        tf_mask(self.length, self.a, self.b, shape)
    }

    /// Translation-invariant cross-Gram kernel on `Z_{L/a} × Z_{L/b}`.
    pub fn group_kernel(&self) -> GroupKernel {
        let f = &self.frame;
        let origin = &f.index().points()[0];
        let w = f.omega()[0];
        let distance = f.index().points().iter().map(|p| f.index().distance(p, origin)).collect();
        let mag = (0..f.len()).map(|x| f.gram_entry(x, 0).norm_sqr() / (w * w)).collect();
        GroupKernel::new(vec![self.length / self.a, self.length / self.b], distance, mag, w)
            .expect("gabor kernel data is consistent")
    }
}

/// Lattice points `(na, mb)` with `(na + iL, mb + jL)` in `shape` for some `i, j ∈ {-1,0,1}`.
pub fn tf_mask(length: usize, a: usize, b: usize, shape: &ContinuousDomain) -> Result<DiscreteDomain, GaborError> {
    check_divisor(length, a)?;
    check_divisor(length, b)?;
    if shape.dim() != 2 {
        return Err(GaborError::Geometry(GeometryError::DimensionMismatch { expected: 2, got: shape.dim() }));
    }
    let l = length as f64;
    let mut points = Vec::new();
    for n in 0..(length / a) {
        for m in 0..(length / b) {
            let (x, y) = ((n * a) as f64, (m * b) as f64);
            let hit = (-1..=1).any(|i| (-1..=1).any(|j| shape.contains(&[x + i as f64 * l, y + j as f64 * l])));
            if hit {
                points.push(vec![n as i64, m as i64]);
            }
        }
    }
    tf_lattice_domain(length, a, b, points)
}

/// `g^d = S^{-1} g`.
pub fn dual_window(system: &GaborSystem) -> &[Complex64] {
    &system.frame.dual()[0]
}

/// `⟨g, g^d⟩`, equal to `ab/L` for a frame.
pub fn wexler_raz(system: &GaborSystem) -> f64 {
    inner(system.window(), dual_window(system)).re
}

pub fn gabor_multiplier(system: &GaborSystem, mask: &DiscreteDomain) -> Result<CMatrix, GaborError> {
    Ok(frame::frame_multiplier(&system.frame, mask)?)
}

/// Spectrum of a Gabor multiplier with its `μ_φ(Ω)`.
#[derive(Debug, Clone)]
pub struct GaborInstance {
    pub mask_size: usize,
    pub mu: f64,
    pub profile: SpectralProfile,
}

pub fn gabor_instance(system: &GaborSystem, mask: &DiscreteDomain) -> Result<GaborInstance, GaborError> {
    let idx = system.frame.mask_indices(mask)?;
    let profile = frame::multiplier_spectrum(&system.frame, &idx)?;
    Ok(GaborInstance { mask_size: idx.len(), mu: system.frame.mu(&idx), profile })
}

/// Mask over the full torus `Z_L × Z_L` (unit steps, mass `1/L`).
pub fn full_torus_mask(length: usize, points: Vec<Point>) -> Result<DiscreteDomain, GaborError> {
    let l = length as i64;
    if let Some(p) = points.iter().find(|p| p.len() != 2 || p.iter().any(|&c| c < 0 || c >= l)) {
        return Err(GaborError::MaskOutOfRange(p.clone()));
    }
    tf_lattice_domain(length, 1, 1, points)
}

fn check_mask_on_torus(length: usize, mask: &DiscreteDomain) -> Result<(), GaborError> {
    let ok = mask.period() == Some(&[length as i64, length as i64][..]) && mask.lattice().dim() == 2;
    if !ok {
        return Err(GaborError::Window("mask must live on the unit-step torus Z_L × Z_L".into()));
    }
    Ok(())
}

/// `(1/L) Σ_{λ∈Ω} (π(λ)g)(π(λ)g)*` for a unit window.
pub fn localization_operator(window: &[Complex64], mask: &DiscreteDomain) -> Result<CMatrix, GaborError> {
    let l = window.len();
    check_mask_on_torus(l, mask)?;
    let roots = roots_of_unity(l);
    let mut out = CMatrix::zeros(l, l);
    for p in mask.points() {
        let v = tf_shift_with(p[0] as usize, p[1] as usize, window, &roots);
        for j in 0..l {
            let cj = v[j].conj();
            for i in 0..l {
                out[(i, j)] += v[i] * cj;
            }
        }
    }
    Ok(out / Complex64::new(l as f64, 0.0))
}

/// `(1/L) Σ_{λ∈Ω} π(λ) ρ π(λ)*` with density matrix `ρ = Σ_n |ν_n|² g_n g_n*`.
pub fn mixed_state_multiplier(windows: &[Vec<Complex64>], weights: &[f64], mask: &DiscreteDomain) -> Result<CMatrix, GaborError> {
    if windows.is_empty() || windows.len() != weights.len() {
        return Err(GaborError::Window(format!("{} windows but {} weights", windows.len(), weights.len())));
    }
    let l = windows[0].len();
    if windows.iter().any(|w| w.len() != l) {
        return Err(GaborError::Window("windows have different lengths".into()));
    }
    let mut defect = 0.0f64;
    for (i, gi) in windows.iter().enumerate() {
        for (j, gj) in windows.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((inner(gi, gj) - Complex64::new(want, 0.0)).norm());
        }
    }
    if defect > ORTHO_TOL {
        return Err(GaborError::NotOrthonormal(defect));
    }
    let total: f64 = weights.iter().map(|w| w * w).sum();
    if (total - 1.0).abs() > ORTHO_TOL {
        return Err(GaborError::WeightsNotNormalized(total));
    }
    check_mask_on_torus(l, mask)?;
    let mut rho = CMatrix::zeros(l, l);
    for (g, nu) in windows.iter().zip(weights) {
        let w2 = nu * nu;
        for j in 0..l {
            for i in 0..l {
                rho[(i, j)] += g[i] * g[j].conj() * w2;
            }
        }
    }
    let roots = roots_of_unity(l);
    let mut out = CMatrix::zeros(l, l);
    for p in mask.points() {
        let (x, xi) = (p[0] as usize, p[1] as usize);
        for u in 0..l {
            for t in 0..l {
                let phase = roots[(xi * ((t + l - u) % l)) % l];
                out[(t, u)] += rho[((t + l - x) % l, (u + l - x) % l)] * phase;
            }
        }
    }
    Ok(out / Complex64::new(l as f64, 0.0))
}

/// Per-`δ` statistics for one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStat {
    pub delta: f64,
    pub count: usize,
    pub deviation: f64,
    pub plunge: usize,
}

pub fn delta_stats(profile: &SpectralProfile, mu: f64, deltas: &[f64]) -> Vec<DeltaStat> {
    deltas
        .iter()
        .map(|&delta| DeltaStat {
            delta,
            count: spectral::count_above(profile, delta),
            deviation: spectral::spectral_deviation(profile, delta, mu),
            plunge: spectral::symmetric_plunge_count(profile, delta),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RungResult {
    pub instance: GaborInstance,
    pub stats: Vec<DeltaStat>,
    pub wexler_raz: f64,
    /// `(s, N(s))` on the default grid for `γ = 2`.
    pub n_of_s: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RungOutcome {
    pub a: usize,
    pub b: usize,
    pub result: Result<RungResult, GaborError>,
}

/// TF dimension used for Gabor masks.
pub const TF_GAMMA: f64 = 2.0;

/// One rung per `(a, b)`: multiplier spectrum for the discretized shape.
/// Failing rungs are reported, not fatal.
pub fn refinement_study(
    window: &WindowSpec,
    shape: &ContinuousDomain,
    length: usize,
    ladder: &[(usize, usize)],
    deltas: &[f64],
    exec: Execution,
) -> Vec<RungOutcome> {
    exec.map(ladder, |&(a, b)| RungOutcome { a, b, result: run_rung(window, shape, length, a, b, deltas) })
}

fn run_rung(
    window: &WindowSpec,
    shape: &ContinuousDomain,
    length: usize,
    a: usize,
    b: usize,
    deltas: &[f64],
) -> Result<RungResult, GaborError> {
    let system = GaborSystem::new(length, a, b, window)?;
    let mask = system.tf_mask(shape)?;
    let instance = gabor_instance(&system, &mask)?;
    let stats = delta_stats(&instance.profile, instance.mu, deltas);
    let kernel = system.group_kernel();
    let n_of_s = bounds::default_s_grid(TF_GAMMA).into_iter().map(|s| (s, bounds::group_dyadic_decay(&kernel, s))).collect();
    Ok(RungResult { wexler_raz: wexler_raz(&system), instance, stats, n_of_s })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e(l: usize, k: usize) -> Vec<Complex64> {
        (0..l).map(|t| if t == k { c(1., 0.) } else { c(0., 0.) }).collect()
    }

    #[test]
    fn shift_examples() {
        let f = vec![c(1., 2.), c(3., -1.), c(0.5, 0.), c(-2., 1.)];
        assert_eq!(tf_shift(0, 0, &f), f);
        assert_eq!(tf_shift(1, 0, &e(5, 0)), e(5, 1));
        let n0 = norm_sq(&f);
        assert!((norm_sq(&tf_shift(3, 2, &f)) - n0).abs() < 1e-12);
    }

    #[test]
    fn stft_of_delta() {
        let v = stft(&e(6, 0), &e(6, 0));
        for (n, row) in v.iter().enumerate() {
            for z in row {
                let want = if n == 0 { 1.0 } else { 0.0 };
                assert!((z - c(want, 0.)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn full_system_is_tight() {
        let s = GaborSystem::new(8, 1, 1, &WindowSpec::Gauss).unwrap();
        let (a, b) = s.frame().bounds();
        assert!((a - 8.0).abs() < 1e-10 && (b - 8.0).abs() < 1e-10);
        assert!((wexler_raz(&s) - 1.0 / 8.0).abs() < 1e-12);
        for (d, g) in dual_window(&s).iter().zip(s.window()) {
            assert!((d - g / 8.0).norm() < 1e-12);
        }
    }

    #[test]
    fn undersampled_is_not_a_frame() {
        let err = GaborSystem::new(8, 4, 4, &WindowSpec::Gauss).unwrap_err();
        assert!(err.is_not_a_frame());
        assert!(matches!(GaborSystem::new(8, 3, 1, &WindowSpec::Gauss), Err(GaborError::BadDivisor { .. })));
    }

    #[test]
    fn gaussian_frame_wexler_raz() {
        let s = GaborSystem::new(16, 2, 2, &WindowSpec::Gauss).unwrap();
        let (a, b) = s.frame().bounds();
        assert!(a > 0.0 && b >= a);
        assert!((wexler_raz(&s) - 0.25).abs() < 1e-10);
    }

    #[test]
    fn boxcar_is_centered() {
        let g = WindowSpec::Boxcar(3).build(8).unwrap();
        let nz: Vec<usize> = (0..8).filter(|&t| g[t].norm() > 0.0).collect();
        assert_eq!(nz, vec![0, 1, 7]);
        assert!(WindowSpec::Boxcar(9).build(8).is_err());
    }

    #[test]
    fn multiplier_trivial_masks() {
        let s = GaborSystem::new(8, 2, 2, &WindowSpec::Gauss).unwrap();
        let all = s.frame().index().clone();
        assert!((gabor_multiplier(&s, &all).unwrap() - CMatrix::identity(8, 8)).norm() < 1e-10);
        let none = tf_lattice_domain(8, 2, 2, vec![]).unwrap();
        assert_eq!(gabor_multiplier(&s, &none).unwrap().norm(), 0.0);
    }

    #[test]
    fn mixed_state_full_torus_is_identity() {
        let l = 8;
        let all: Vec<Point> = (0..l as i64).flat_map(|x| (0..l as i64).map(move |y| vec![x, y])).collect();
        let mask = full_torus_mask(l, all).unwrap();
        let w = vec![e(l, 0), e(l, 3)];
        let half = 0.5f64.sqrt();
        let m = mixed_state_multiplier(&w, &[half, half], &mask).unwrap();
        assert!((m - CMatrix::identity(l, l)).norm() < 1e-12);
        assert!(matches!(
            mixed_state_multiplier(&w, &[1.0, 1.0], &mask),
            Err(GaborError::WeightsNotNormalized(_))
        ));
        let bad = vec![e(l, 0), e(l, 0)];
        assert!(matches!(mixed_state_multiplier(&bad, &[half, half], &mask), Err(GaborError::NotOrthonormal(_))));
    }

    #[test]
    fn tf_mask_wraps() {
        let disk = ContinuousDomain::disk(vec![0.0, 0.0], 1.0).unwrap();
        let m = tf_mask(8, 1, 1, &disk).unwrap();
        assert_eq!(m.len(), 5);
        assert!(m.contains(&[7, 0]) && m.contains(&[0, 7]));
    }
}
