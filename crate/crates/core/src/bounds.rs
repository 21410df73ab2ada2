//! Bound ingredients on a finite metric measure space with a kernel:
//! the dyadic decay measure `N(s)`, the exponential decay constant `D`,
//! boundary interaction, and the right-hand sides of the deviation bounds.
//!
//! Right-hand sides omit unspecified absolute constants. Powers are taken in
//! log space; anything above `e^700` is reported as `f64::INFINITY`.

use serde::Serialize;
use thiserror::Error;

/// Log-space overflow threshold.
pub const LOG_OVERFLOW: f64 = 700.0;
/// Row-norm tolerance for the normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Default slack on the boundary-interaction vs. inflation check.
pub const LEMMA_SLACK: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("log* needs a positive argument, got {0}")]
    NonPositiveInput(f64),
    #[error("N(s) is infinite on the whole s-grid")]
    AllInfinite,
    #[error("s-grid is empty")]
    EmptyGrid,
    #[error("s = {s} lies below the admissible minimum {min}")]
    GridOutOfRange { s: f64, min: f64 },
    #[error("kernel data is inconsistent: {0}")]
    BadKernel(String),
}

/// `max{1, ln x}`.
pub fn log_star(x: f64) -> Result<f64, BoundsError> {
    if !(x > 0.0) {
        return Err(BoundsError::NonPositiveInput(x));
    }
    Ok(x.ln().max(1.0))
}

/// `max{1, ln x}` given `ln x`.
fn log_star_of_log(ln_x: f64) -> f64 {
    ln_x.max(1.0)
}

/// Dyadic annulus index: 0 for `d ≤ 1`, otherwise `n` with `d ∈ (2^{n-1}, 2^n]`.
pub fn annulus_index(d: f64) -> usize {
    let mut n = 0;
    let mut r = 1.0;
    while d > r {
        n += 1;
        r *= 2.0;
    }
    n
}

/// Dense kernel on a finite metric measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOnDomain {
    n: usize,
    /// Row-major `n × n` distances.
    distance: Vec<f64>,
    /// Row-major `n × n` values of `|K(x, y)|²`.
    magnitude_sq: Vec<f64>,
    masses: Vec<f64>,
    normalized: bool,
}

impl KernelOnDomain {
    pub fn new(distance: Vec<f64>, magnitude_sq: Vec<f64>, masses: Vec<f64>) -> Result<Self, BoundsError> {
        let n = masses.len();
        if distance.len() != n * n || magnitude_sq.len() != n * n {
            return Err(BoundsError::BadKernel(format!("expected {} entries", n * n)));
        }
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(BoundsError::BadKernel("masses must be positive".into()));
        }
        if magnitude_sq.iter().chain(&distance).any(|v| !(*v >= 0.0)) {
            return Err(BoundsError::BadKernel("distances and magnitudes must be nonnegative".into()));
        }
        let normalized = (0..n).all(|x| {
            let row: f64 = (0..n).map(|y| magnitude_sq[x * n + y] * masses[y]).sum();
            (row - 1.0).abs() <= NORMALIZATION_TOL
        });
        Ok(KernelOnDomain { n, distance, magnitude_sq, masses, normalized })
    }

    /// `δ_{xy}` with unit masses on `n` points at distance `|x - y|`.
    pub fn identity(n: usize) -> Self {
        let distance = (0..n * n).map(|k| (k / n).abs_diff(k % n) as f64).collect();
        let magnitude_sq = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        Self::new(distance, magnitude_sq, vec![1.0; n]).expect("identity kernel is valid")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.distance[x * self.n + y]
    }

    pub fn magnitude_sq(&self, x: usize, y: usize) -> f64 {
        self.magnitude_sq[x * self.n + y]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Whether every row satisfies `Σ_y |K(x,y)|² m(y) = 1`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Largest `| |K(x,y)|² - |K(y,x)|² |`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.n {
            for y in 0..x {
                worst = worst.max((self.magnitude_sq(x, y) - self.magnitude_sq(y, x)).abs());
            }
        }
        worst
    }
}

/// Translation-invariant kernel on a finite abelian group `Z_{n_1} × … × Z_{n_k}`,
/// stored as its row from the identity. Elements are indexed row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupKernel {
    dims: Vec<usize>,
    /// `d(e, x)` per element.
    distance: Vec<f64>,
    /// `|K(x, e)|²` per element; `|K(x, y)|²` is the value at `x - y`.
    magnitude_sq: Vec<f64>,
    mass: f64,
}

impl GroupKernel {
    pub fn new(dims: Vec<usize>, distance: Vec<f64>, magnitude_sq: Vec<f64>, mass: f64) -> Result<Self, BoundsError> {
        let n: usize = dims.iter().product();
        if distance.len() != n || magnitude_sq.len() != n {
            return Err(BoundsError::BadKernel(format!("expected {n} group elements")));
        }
        if !(mass > 0.0) {
            return Err(BoundsError::BadKernel("mass must be positive".into()));
        }
        Ok(GroupKernel { dims, distance, magnitude_sq, mass })
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn distance_from_identity(&self) -> &[f64] {
        &self.distance
    }

    pub fn magnitude_sq_from_identity(&self) -> &[f64] {
        &self.magnitude_sq
    }

    fn coords(&self, mut i: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            c[k] = i % self.dims[k];
            i /= self.dims[k];
        }
        c
    }

    /// Row-major index of `x - y`.
    pub fn difference(&self, x: usize, y: usize) -> usize {
        let (cx, cy) = (self.coords(x), self.coords(y));
        let mut idx = 0;
        for k in 0..self.dims.len() {
            let m = self.dims[k];
            idx = idx * m + (cx[k] + m - cy[k]) % m;
        }
        idx
    }

    /// Expands to a dense kernel (for cross-checks on small groups).
    pub fn to_dense(&self) -> KernelOnDomain {
        let n = self.len();
        let mut distance = vec![0.0; n * n];
        let mut magnitude_sq = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                let dxy = self.difference(x, y);
                distance[x * n + y] = self.distance[dxy];
                magnitude_sq[x * n + y] = self.magnitude_sq[dxy];
            }
        }
        KernelOnDomain::new(distance, magnitude_sq, vec![self.mass; n]).expect("group kernel expands consistently")
    }
}

/// `N(s) = Σ_n sup_x Σ_{x' ∈ A_{n,x}} (1 + d(x,x'))^s |K(x,x')|² m(x')`.
pub fn dyadic_decay(kernel: &KernelOnDomain, s: f64) -> f64 {
    let n = kernel.len();
    let mut sup: Vec<f64> = Vec::new();
    let mut row: Vec<f64> = Vec::new();
    for x in 0..n {
        row.iter_mut().for_each(|v| *v = 0.0);
        for y in 0..n {
            let d = kernel.distance(x, y);
            let k = annulus_index(d);
            if k >= row.len() {
                row.resize(k + 1, 0.0);
            }
            row[k] += (1.0 + d).powf(s) * kernel.magnitude_sq(x, y) * kernel.masses[y];
        }
        if sup.len() < row.len() {
            sup.resize(row.len(), 0.0);
        }
        for (a, b) in sup.iter_mut().zip(&row) {
            *a = a.max(*b);
        }
    }
    sup.iter().sum()
}

/// `Σ_x (1 + d(e,x))^s |K(e,x)|² m` for a translation-invariant kernel.
pub fn group_dyadic_decay(kernel: &GroupKernel, s: f64) -> f64 {
    kernel
        .distance
        .iter()
        .zip(&kernel.magnitude_sq)
        .map(|(d, k)| (1.0 + d).powf(s) * k * kernel.mass)
        .sum()
}

/// `D = sup_{x'} Σ_x e^{α d(x,x')^{1/β}} |K(x,x')|² m(x)`.
pub fn exp_decay_constant(kernel: &KernelOnDomain, alpha: f64, beta: f64) -> f64 {
    let n = kernel.len();
    (0..n)
        .map(|xp| {
            (0..n)
                .map(|x| {
                    let d = kernel.distance(x, xp);
                    (alpha * d.powf(1.0 / beta)).exp() * kernel.magnitude_sq(x, xp) * kernel.masses[x]
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

pub fn group_exp_decay_constant(kernel: &GroupKernel, alpha: f64, beta: f64) -> f64 {
    kernel
        .distance
        .iter()
        .zip(&kernel.magnitude_sq)
        .map(|(d, k)| (alpha * d.powf(1.0 / beta)).exp() * k * kernel.mass)
        .sum()
}

/// `Σ_{x∈Ω} Σ_{y∉Ω} |K(x,y)|² m(x) m(y)`.
pub fn boundary_interaction(kernel: &KernelOnDomain, mask: &[bool]) -> f64 {
    let n = kernel.len();
    let mut total = 0.0;
    for x in (0..n).filter(|&x| mask[x]) {
        for y in (0..n).filter(|&y| !mask[y]) {
            total += kernel.magnitude_sq(x, y) * kernel.masses[x] * kernel.masses[y];
        }
    }
    total
}

pub fn group_boundary_interaction(kernel: &GroupKernel, mask: &[bool]) -> f64 {
    let n = kernel.len();
    let m2 = kernel.mass * kernel.mass;
    let mut total = 0.0;
    for x in (0..n).filter(|&x| mask[x]) {
        for y in (0..n).filter(|&y| !mask[y]) {
            total += kernel.magnitude_sq[kernel.difference(x, y)] * m2;
        }
    }
    total
}

/// A minimized right-hand side and where the minimum was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhsEntry {
    pub value: f64,
    pub s_star: f64,
}

fn exp_capped(log_value: f64) -> f64 {
    if log_value > LOG_OVERFLOW {
        f64::INFINITY
    } else {
        log_value.exp()
    }
}

/// Shared minimization: `prefactor · min_s exp(e1(s)·L + e2(s)·ln log*(L·f(s)))`
/// where `L = ln(τ N(s))`.
fn minimize_rhs(
    prefactor: f64,
    tau: f64,
    grid: &[(f64, f64)],
    min_s: f64,
    exponents: impl Fn(f64) -> (f64, f64, f64),
) -> Result<RhsEntry, BoundsError> {
    if grid.is_empty() {
        return Err(BoundsError::EmptyGrid);
    }
    let mut best: Option<(f64, f64)> = None;
    for &(s, n) in grid {
        if s < min_s - 1e-12 {
            return Err(BoundsError::GridOutOfRange { s, min: min_s });
        }
        if !n.is_finite() {
            continue;
        }
        let ln_tn = tau.ln() + n.ln();
        let (outer, root, log_power) = exponents(s);
        let log_factor = log_star_of_log(ln_tn * root).ln();
        let log_term = outer * ln_tn + log_power * log_factor;
        if best.is_none_or(|(b, _)| log_term < b) {
            best = Some((log_term, s));
        }
    }
    let (log_term, s_star) = best.ok_or(BoundsError::AllInfinite)?;
    let value = if prefactor == 0.0 { 0.0 } else { exp_capped(prefactor.ln() + log_term) };
    Ok(RhsEntry { value, s_star })
}

/// `𝕀 · min_{s ≥ γ} (τN(s))^{γ/s} (log*((τN(s))^{1/s}))^{1-γ/s}` over `(s, N(s))` pairs.
pub fn rhs_theorem_main(inflation: f64, gamma: f64, tau: f64, grid: &[(f64, f64)]) -> Result<RhsEntry, BoundsError> {
    minimize_rhs(inflation, tau, grid, gamma, |s| (gamma / s, 1.0 / s, 1.0 - gamma / s))
}

/// `G · min_{s ≥ 1} (τN(s))^{γ/(s+γ-1)} (log*((τN(s))^{1/(s+γ-1)}))^{(s-1)/(s+γ-1)}`
/// with `G = max{𝕀(Ω), perimeter proxy}`.
pub fn rhs_theorem_doubling(maxgeom: f64, gamma: f64, tau: f64, grid: &[(f64, f64)]) -> Result<RhsEntry, BoundsError> {
    minimize_rhs(maxgeom, tau, grid, 1.0, |s| {
        let q = s + gamma - 1.0;
        (gamma / q, 1.0 / q, (s - 1.0) / q)
    })
}

/// `𝕀 · (log*(τD))^{βγ} · log*(log*(τD))`.
pub fn rhs_exponential(inflation: f64, gamma: f64, beta: f64, tau: f64, d: f64) -> f64 {
    if inflation == 0.0 {
        return 0.0;
    }
    let l1 = log_star_of_log(tau.ln() + d.ln());
    let l2 = log_star_of_log(l1.ln());
    exp_capped(inflation.ln() + beta * gamma * l1.ln() + l2.ln())
}

/// Geometric grid `γ · 2^{k/4}`, `k = 0..=16`.
pub fn default_s_grid(gamma: f64) -> Vec<f64> {
    (0..=16).map(|k| gamma * 2f64.powf(k as f64 / 4.0)).collect()
}

/// Boundary interaction against `𝕀(Ω) · N(γ)`, asserted only up to `slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn lemma_check(boundary_interaction: f64, inflation: f64, n_gamma: f64, slack: f64) -> LemmaCheck {
    let rhs = inflation * n_gamma;
    LemmaCheck { lhs: boundary_interaction, rhs, slack, holds: boundary_interaction <= slack * rhs + 1e-12 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackFactors {
    pub lemma: f64,
    pub perimeter_sandwich: f64,
}

/// Per-`δ` bound evaluation for one concentration instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub s_grid: Vec<f64>,
    #[serde(rename = "N_of_s")]
    pub n_of_s: Vec<f64>,
    pub inflation: f64,
    pub s_star: Vec<Option<f64>>,
    pub rhs_main: Vec<Option<f64>>,
    pub rhs_doubling: Vec<Option<f64>>,
    pub rhs_exponential: Vec<Option<f64>>,
    pub boundary_interaction: f64,
    pub lemma: LemmaCheck,
    pub slack_factors: SlackFactors,
}

/// Inputs for [`bound_report`] beyond the kernel's `N(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub inflation: f64,
    /// Perimeter proxy for the doubling variant; omitted when `None`.
    pub perimeter_proxy: Option<f64>,
    /// `(α, β, D)` for the exponential variant.
    pub exponential: Option<(f64, f64, f64)>,
    pub boundary_interaction: f64,
}

/// Evaluates all right-hand sides. `n_of` gives `N(s)`; the grid is the
/// sorted union of `s_main` (restricted to `s ≥ γ`) and `s_doubling`
/// (restricted to `s ≥ 1`).
pub fn bound_report(
    inputs: &BoundInputs,
    s_main: &[f64],
    s_doubling: &[f64],
    n_of: impl Fn(f64) -> f64,
) -> BoundReport {
    let gamma = inputs.gamma;
    let mut s_grid: Vec<f64> = s_main
        .iter()
        .copied()
        .filter(|&s| s >= gamma - 1e-12)
        .chain(s_doubling.iter().copied().filter(|&s| s >= 1.0 - 1e-12))
        .collect();
    s_grid.sort_by(f64::total_cmp);
    s_grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let n_of_s: Vec<f64> = s_grid.iter().map(|&s| n_of(s)).collect();
    let main: Vec<(f64, f64)> =
        s_grid.iter().zip(&n_of_s).filter(|(s, _)| **s >= gamma - 1e-12).map(|(s, n)| (*s, *n)).collect();
    let doubling: Vec<(f64, f64)> =
        s_grid.iter().zip(&n_of_s).filter(|(s, _)| **s >= 1.0 - 1e-12).map(|(s, n)| (*s, *n)).collect();
    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    let mut s_star = Vec::new();
    let mut rhs_main = Vec::new();
    let mut rhs_doubling = Vec::new();
    let mut rhs_exp = Vec::new();
    for &delta in &inputs.deltas {
        let tau = crate::spectral::tau(delta);
        let m = rhs_theorem_main(inputs.inflation, gamma, tau, &main).ok();
        s_star.push(m.map(|e| e.s_star));
        rhs_main.push(m.and_then(|e| finite(e.value)));
        rhs_doubling.push(inputs.perimeter_proxy.and_then(|p| {
            rhs_theorem_doubling(inputs.inflation.max(p), gamma, tau, &doubling).ok().and_then(|e| finite(e.value))
        }));
        rhs_exp.push(inputs.exponential.and_then(|(_, beta, d)| finite(rhs_exponential(inputs.inflation, gamma, beta, tau, d))));
    }
    let n_gamma = n_of(gamma);
    BoundReport {
        gamma,
        deltas: inputs.deltas.clone(),
        s_grid,
        n_of_s,
        inflation: inputs.inflation,
        s_star,
        rhs_main,
        rhs_doubling,
        rhs_exponential: rhs_exp,
        boundary_interaction: inputs.boundary_interaction,
        lemma: lemma_check(inputs.boundary_interaction, inputs.inflation, n_gamma, LEMMA_SLACK),
        slack_factors: SlackFactors { lemma: LEMMA_SLACK, perimeter_sandwich: crate::geometry::SANDWICH_SLACK },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn log_star_examples() {
        assert_eq!(log_star(1.0).unwrap(), 1.0);
        assert_eq!(log_star(E).unwrap(), 1.0);
        assert!((log_star(E * E).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(log_star(0.0), Err(BoundsError::NonPositiveInput(_))));
        assert!(matches!(log_star(-1.0), Err(BoundsError::NonPositiveInput(_))));
    }

    #[test]
    fn annuli_are_closed_on_the_right() {
        assert_eq!(annulus_index(0.0), 0);
        assert_eq!(annulus_index(1.0), 0);
        assert_eq!(annulus_index(1.5), 1);
        assert_eq!(annulus_index(2.0), 1);
        assert_eq!(annulus_index(2.0001), 2);
        assert_eq!(annulus_index(4.0), 2);
    }

    #[test]
    fn identity_kernel_has_unit_decay() {
        let k = KernelOnDomain::identity(6);
        assert!(k.is_normalized());
        for s in [0.0, 1.0, 3.5] {
            assert!((dyadic_decay(&k, s) - 1.0).abs() < 1e-15);
        }
        assert_eq!(exp_decay_constant(&k, 2.0, 3.0), 1.0);
        assert_eq!(boundary_interaction(&k, &[true, false, true, false, true, false]), 0.0);
    }

    #[test]
    fn boundary_interaction_trivial_masks() {
        let n: usize = 4;
        let dist = (0..n * n).map(|k| (k / n).abs_diff(k % n) as f64).collect();
        let mag = vec![0.25; n * n];
        let k = KernelOnDomain::new(dist, mag, vec![1.0; n]).unwrap();
        assert!(k.is_normalized());
        assert_eq!(boundary_interaction(&k, &[false; 4]), 0.0);
        assert_eq!(boundary_interaction(&k, &[true; 4]), 0.0);
        assert!((boundary_interaction(&k, &[true, true, false, false]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn group_and_dense_forms_agree() {
        // Z_5 × Z_3 with torus distance and a decaying kernel
        let dims = vec![5, 3];
        let mut dist = Vec::new();
        let mut mag = Vec::new();
        for i in 0..5i64 {
            for j in 0..3i64 {
                let di = i.min(5 - i) as f64;
                let dj = j.min(3 - j) as f64;
                let d = (di * di + dj * dj).sqrt();
                dist.push(d);
                mag.push((-d).exp());
            }
        }
        let g = GroupKernel::new(dims, dist, mag, 0.5).unwrap();
        let dense = g.to_dense();
        for s in [0.0, 1.0, 2.5] {
            let a = dyadic_decay(&dense, s);
            let b = group_dyadic_decay(&g, s);
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let mask: Vec<bool> = (0..15).map(|i| i % 4 == 0 || i == 7).collect();
        let a = boundary_interaction(&dense, &mask);
        let b = group_boundary_interaction(&g, &mask);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let a = exp_decay_constant(&dense, 1.0, 2.0);
        let b = group_exp_decay_constant(&g, 1.0, 2.0);
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn rhs_main_single_point_grid_collapses() {
        let e = rhs_theorem_main(3.0, 2.0, 4.0, &[(2.0, 1.5)]).unwrap();
        assert!((e.value - 3.0 * 6.0).abs() < 1e-12);
        assert_eq!(e.s_star, 2.0);
    }

    #[test]
    fn rhs_main_saturated_log() {
        // τN ≤ e everywhere: the log factor is 1
        let grid = [(1.0, 0.1), (2.0, 0.2)];
        let e = rhs_theorem_main(2.0, 1.0, 2.0, &grid).unwrap();
        let want = 2.0 * f64::min(0.2, 0.4f64.sqrt());
        assert!((e.value - want).abs() < 1e-12);
    }

    #[test]
    fn rhs_main_hand_evaluated() {
        let grid = [(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)];
        let e = rhs_theorem_main(4.0, 1.0, 10.0, &grid).unwrap();
        let t1: f64 = 10.0;
        let t2 = 10f64.sqrt() * (10f64.sqrt().ln().max(1.0)).powf(0.5);
        let t4 = 10f64.powf(0.25) * (10f64.powf(0.25).ln().max(1.0)).powf(0.75);
        let want = 4.0 * t1.min(t2).min(t4);
        assert!((e.value - want).abs() < 1e-12 * want);
        assert_eq!(e.s_star, 4.0);
    }

    #[test]
    fn rhs_main_errors() {
        assert!(matches!(rhs_theorem_main(1.0, 1.0, 2.0, &[]), Err(BoundsError::EmptyGrid)));
        assert!(matches!(rhs_theorem_main(1.0, 2.0, 2.0, &[(1.0, 1.0)]), Err(BoundsError::GridOutOfRange { .. })));
        assert!(matches!(
            rhs_theorem_main(1.0, 1.0, 2.0, &[(1.0, f64::INFINITY)]),
            Err(BoundsError::AllInfinite)
        ));
    }

    #[test]
    fn rhs_doubling_reductions() {
        let grid = [(1.0, 1.0), (2.0, 1.5), (3.0, 2.0)];
        let a = rhs_theorem_doubling(2.0, 1.0, 5.0, &grid).unwrap();
        let b = rhs_theorem_main(2.0, 1.0, 5.0, &grid).unwrap();
        assert!((a.value - b.value).abs() < 1e-12 * a.value);
        let one = rhs_theorem_doubling(3.0, 2.0, 5.0, &[(1.0, 2.0)]).unwrap();
        assert!((one.value - 3.0 * 10.0).abs() < 1e-12);
        // γ = 2, s = 2: exponents 2/3 and 1/3
        let v = rhs_theorem_doubling(1.0, 2.0, 4.0, &[(2.0, 5.0)]).unwrap().value;
        let x: f64 = 20.0;
        let want = x.powf(2.0 / 3.0) * x.powf(1.0 / 3.0).ln().max(1.0).powf(1.0 / 3.0);
        assert!((v - want).abs() < 1e-12 * want);
    }

    #[test]
    fn rhs_exponential_examples() {
        assert!((rhs_exponential(3.0, 1.0, 1.0, 1.0, 2.0) - 3.0).abs() < 1e-12);
        assert!((rhs_exponential(3.0, 1.0, 1.0, 1.0, E.powf(E)) - 3.0 * E).abs() < 1e-12);
        let v = rhs_exponential(1.5, 1.0, 2.0, 1.0, E.powf(E * E));
        assert!((v - 1.5 * E.powi(4) * 2.0).abs() < 1e-9);
    }

    #[test]
    fn overflow_is_infinite() {
        let e = rhs_theorem_main(1.0, 1.0, 2.0, &[(1.0, 1e306)]).unwrap();
        assert!(e.value.is_infinite());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_s_grid(2.0);
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 2.0);
        assert!((g[16] - 32.0).abs() < 1e-12);
    }

    #[test]
    fn report_serializes_with_documented_keys() {
        let inputs = BoundInputs {
            gamma: 1.0,
            deltas: vec![0.5],
            inflation: 2.0,
            perimeter_proxy: Some(1.0),
            exponential: Some((1.0, 1.0, 1.0)),
            boundary_interaction: 0.0,
        };
        let r = bound_report(&inputs, &default_s_grid(1.0), &default_s_grid(1.0), |_| 1.0);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["s_grid", "N_of_s", "s_star", "rhs_main", "rhs_doubling", "rhs_exponential", "boundary_interaction", "slack_factors"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(r.s_grid.len(), 17);
    }
}
