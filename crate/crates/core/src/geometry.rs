//! Lattices `Λ = A·Z^d`, finite discrete domains on them, continuous shapes,
//! and the boundary-size quantities used by the deviation bounds: discrete
//! boundary, lattice perimeter, inflation constant, doubling ratios and
//! isotropic fineness.
//!
//! Points of a [`DiscreteDomain`] are stored as integer lattice coordinates
//! `k`; the ambient point is `A·k`. Discrete boundaries are measured in
//! lattice coordinates, inflation strips in ambient coordinates.

use std::collections::HashSet;

use nalgebra::DMatrix;
use thiserror::Error;

/// `|det A|` at or below this is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Absolute slack for closed-shape membership in ambient units.
pub const CONTAIN_TOL: f64 = 1e-9;
/// Default slack factor for the perimeter sandwich report.
pub const SANDWICH_SLACK: f64 = 10.0;

pub type Point = Vec<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("generator is singular (|det A| = {0:e})")]
    SingularGenerator(f64),
    #[error("generator must be a non-empty square matrix")]
    BadGenerator,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate point {0:?}")]
    DuplicatePoint(Point),
    #[error("point masses and weights must be positive and finite")]
    NonPositiveMass,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("torus period must be positive in every coordinate")]
    BadPeriod,
}

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

/// Singular-value summary of a generator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularData {
    /// Ascending.
    pub singular_values: Vec<f64>,
    pub norm: f64,
    pub condition: f64,
    pub covolume: f64,
}

/// Singular values, spectral norm, condition number and covolume of `A`.
pub fn singular_data(generator: &[Vec<f64>]) -> Result<SingularData, GeometryError> {
    let d = generator.len();
    if d == 0 || generator.iter().any(|row| row.len() != d) {
        return Err(GeometryError::BadGenerator);
    }
    let a = DMatrix::from_fn(d, d, |i, j| generator[i][j]);
    let det = a.determinant();
    if !det.is_finite() || det.abs() <= SINGULAR_TOL {
        return Err(GeometryError::SingularGenerator(det.abs()));
    }
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let norm = sv[d - 1];
    Ok(SingularData {
        condition: norm / sv[0],
        covolume: sv.iter().product(),
        norm,
        singular_values: sv,
    })
}

/// A full-rank lattice `A·Z^d` with its singular data and isotropic fineness.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    dim: usize,
    generator: Vec<Vec<f64>>,
    inverse: Vec<Vec<f64>>,
    singular: SingularData,
    fineness: f64,
}

impl LatticeSpec {
    pub fn new(generator: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let singular = singular_data(&generator)?;
        let d = generator.len();
        let a = DMatrix::from_fn(d, d, |i, j| generator[i][j]);
        let inv = a.try_inverse().ok_or(GeometryError::SingularGenerator(0.0))?;
        let inverse = (0..d).map(|i| (0..d).map(|j| inv[(i, j)]).collect()).collect();
        let fineness = singular.condition.powi(2 * d as i32) * singular.norm.powi(d as i32).max(1.0);
        Ok(LatticeSpec { dim: d, generator, inverse, singular, fineness })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim]).expect("identity is regular")
    }

    pub fn diagonal(steps: &[f64]) -> Result<Self, GeometryError> {
        let d = steps.len();
        Self::new((0..d).map(|i| (0..d).map(|j| if i == j { steps[i] } else { 0.0 }).collect()).collect())
    }

    /// The lattice `ε·Λ`.
    pub fn scaled(&self, eps: f64) -> Result<Self, GeometryError> {
        Self::new(self.generator.iter().map(|r| r.iter().map(|x| x * eps).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &[Vec<f64>] {
        &self.generator
    }

    /// Ascending singular values.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular.singular_values
    }

    /// Spectral norm `‖A‖`.
    pub fn norm(&self) -> f64 {
        self.singular.norm
    }

    /// `‖A^{-1}‖ = 1/σ_min`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.singular.singular_values[0]
    }

    pub fn condition(&self) -> f64 {
        self.singular.condition
    }

    /// `|Λ| = |det A|`.
    pub fn covolume(&self) -> f64 {
        self.singular.covolume
    }

    /// `κ(A)^{2d} · max{1, ‖A‖^d}`.
    pub fn fineness(&self) -> f64 {
        self.fineness
    }

    pub fn to_ambient(&self, k: &[i64]) -> Vec<f64> {
        self.generator.iter().map(|row| row.iter().zip(k).map(|(a, &ki)| a * ki as f64).sum()).collect()
    }

    pub fn to_lattice_coords(&self, x: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|row| row.iter().zip(x).map(|(a, xi)| a * xi).sum()).collect()
    }
}

/// `κ(A)^{2d} · max{1, ‖A‖^d}`.
pub fn isotropic_fineness(lattice: &LatticeSpec) -> f64 {
    lattice.fineness()
}

// ---------------------------------------------------------------------------
// Discrete domains
// ---------------------------------------------------------------------------

/// A finite, duplicate-free set of lattice points with point masses.
///
/// When `period` is set the domain lives on the discrete torus
/// `Z^d / (period·Z^d)` (in lattice coordinates) with the wrap-around metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDomain {
    lattice: LatticeSpec,
    points: Vec<Point>,
    mass: f64,
    weights: Option<Vec<f64>>,
    period: Option<Vec<i64>>,
}

impl DiscreteDomain {
    /// Sorts points row-major; duplicates are an error. Mass defaults to `|Λ|`.
    pub fn new(lattice: LatticeSpec, points: Vec<Point>) -> Result<Self, GeometryError> {
        let d = lattice.dim();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(GeometryError::DimensionMismatch { expected: d, got: p.len() });
        }
        let mut points = points;
        points.sort();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeometryError::DuplicatePoint(w[0].clone()));
        }
        let mass = lattice.covolume();
        Ok(DiscreteDomain { lattice, points, mass, weights: None, period: None })
    }

    pub fn empty(lattice: LatticeSpec) -> Self {
        let mass = lattice.covolume();
        DiscreteDomain { lattice, points: Vec::new(), mass, weights: None, period: None }
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self, GeometryError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(GeometryError::NonPositiveMass);
        }
        self.mass = mass;
        Ok(self)
    }

    /// Per-point weights, in the domain's (sorted) point order.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, GeometryError> {
        if weights.len() != self.points.len() {
            return Err(GeometryError::WeightCount { expected: self.points.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(GeometryError::NonPositiveMass);
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Places the domain on a torus; coordinates are reduced modulo `period`.
    pub fn on_torus(self, period: Vec<i64>) -> Result<Self, GeometryError> {
        if period.len() != self.lattice.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.lattice.dim(), got: period.len() });
        }
        if period.iter().any(|&p| p <= 0) {
            return Err(GeometryError::BadPeriod);
        }
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(&period).map(|(k, m)| k.rem_euclid(*m)).collect())
            .collect();
        let weights = self.weights.clone();
        let mut out = DiscreteDomain::new(self.lattice, points)?.with_mass(self.mass)?;
        out.weights = weights;
        out.period = Some(period);
        Ok(out)
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn period(&self) -> Option<&[i64]> {
        self.period.as_deref()
    }

    /// Mass of a point outside the domain (and of every point when unweighted).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn point_mass(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(self.mass, |w| w[i])
    }

    /// `μ(Ω)`.
    pub fn measure(&self) -> f64 {
        (0..self.len()).map(|i| self.point_mass(i)).sum()
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let key = self.reduce(k);
        self.points.binary_search(&key).ok()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.index_of(k).is_some()
    }

    fn reduce(&self, k: &[i64]) -> Point {
        match &self.period {
            Some(per) => k.iter().zip(per).map(|(x, m)| x.rem_euclid(*m)).collect(),
            None => k.to_vec(),
        }
    }

    pub fn ambient(&self, i: usize) -> Vec<f64> {
        self.lattice.to_ambient(&self.points[i])
    }

    /// Same lattice, mass and torus, restricted to indices where `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize, &Point) -> bool) -> DiscreteDomain {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if keep(i, p) {
                points.push(p.clone());
                weights.push(self.point_mass(i));
            }
        }
        DiscreteDomain {
            lattice: self.lattice.clone(),
            points,
            mass: self.mass,
            weights: self.weights.as_ref().map(|_| weights),
            period: self.period.clone(),
        }
    }

    /// Translation by a lattice vector (reduced on the torus).
    pub fn translated(&self, shift: &[i64]) -> Result<DiscreteDomain, GeometryError> {
        let moved: Vec<Point> = self.points.iter().map(|p| p.iter().zip(shift).map(|(a, b)| a + b).collect()).collect();
        let mut out = DiscreteDomain::new(self.lattice.clone(), moved.clone())?.with_mass(self.mass)?;
        if let Some(w) = &self.weights {
            // keep weights attached to the moved points
            let mut pairs: Vec<(Point, f64)> = moved.into_iter().zip(w.iter().copied()).collect();
            pairs.sort_by(|a, b| a.0.cmp(&b.0));
            out.weights = Some(pairs.into_iter().map(|p| p.1).collect());
        }
        match &self.period {
            Some(per) => out.on_torus(per.clone()),
            None => Ok(out),
        }
    }

    /// All lattice points of the torus, row-major. `None` off the torus.
    pub fn torus_points(&self) -> Option<Vec<Point>> {
        let per = self.period.as_ref()?;
        let mut out = vec![Vec::new()];
        for &m in per {
            out = out.into_iter().flat_map(|p| (0..m).map(move |k| {
                let mut q = p.clone();
                q.push(k);
                q
            })).collect();
        }
        Some(out)
    }

    /// Ambient distance between lattice points `k` and `j`, wrapping on the torus.
    pub fn distance(&self, k: &[i64], j: &[i64]) -> f64 {
        let diff: Vec<i64> = k.iter().zip(j).map(|(a, b)| a - b).collect();
        match &self.period {
            None => norm(&self.lattice.to_ambient(&diff)),
            Some(per) => torus_norm(&self.lattice, &diff, per),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Shortest ambient length of `diff + per·m` over wraps `m ∈ {-1,0,1}^d`
/// after reducing `diff` to the centered residue.
fn torus_norm(lattice: &LatticeSpec, diff: &[i64], per: &[i64]) -> f64 {
    let d = diff.len();
    let a = lattice.generator();
    let mut base = [0.0f64; 8];
    let mut cols = [[0.0f64; 8]; 8];
    if d > 8 {
        return torus_norm_slow(lattice, diff, per);
    }
    for (j, (&k, &m)) in diff.iter().zip(per).enumerate() {
        let r = k.rem_euclid(m);
        let c = if 2 * r > m { r - m } else { r };
        for i in 0..d {
            base[i] += a[i][j] * c as f64;
            cols[j][i] = a[i][j] * m as f64;
        }
    }
    let mut best = f64::INFINITY;
    let mut v = [0.0f64; 8];
    for code in 0..3usize.pow(d as u32) {
        v[..d].copy_from_slice(&base[..d]);
        let mut c = code;
        for col in cols.iter().take(d) {
            let w = (c % 3) as f64 - 1.0;
            c /= 3;
            if w != 0.0 {
                for i in 0..d {
                    v[i] += w * col[i];
                }
            }
        }
        best = best.min(v[..d].iter().map(|x| x * x).sum::<f64>());
    }
    best.sqrt()
}

fn torus_norm_slow(lattice: &LatticeSpec, diff: &[i64], per: &[i64]) -> f64 {
    let d = diff.len();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(d as u32) {
        let mut c = code;
        let shifted: Vec<i64> = diff
            .iter()
            .zip(per)
            .map(|(&k, &m)| {
                let r = k.rem_euclid(m);
                let centered = if 2 * r > m { r - m } else { r };
                let w = (c % 3) as i64 - 1;
                c /= 3;
                centered + w * m
            })
            .collect();
        best = best.min(norm(&lattice.to_ambient(&shifted)));
    }
    best
}

// ---------------------------------------------------------------------------
// Continuous shapes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Axis-aligned box `[lo, hi]` (an interval when `d = 1`).
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: Vec<f64>, radius: f64 },
    /// Simple polygon in the plane.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// User-supplied boundary regularity parameters; never estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub kappa: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDomain {
    shape: Shape,
    regularity: Option<Regularity>,
}

impl ContinuousDomain {
    pub fn new(shape: Shape) -> Result<Self, GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidShape(m.to_string()));
        match &shape {
            Shape::Rect { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.len() > 2 {
                    return bad("rectangle corners must have matching dimension 1 or 2");
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return bad("degenerate rectangle");
                }
            }
            Shape::Disk { center, radius } => {
                if center.is_empty() || center.len() > 2 || center.iter().any(|c| !c.is_finite()) {
                    return bad("disk center must have dimension 1 or 2");
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("disk radius must be positive");
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least three vertices");
                }
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return bad("polygon vertices must be finite");
                }
                if !polygon_is_simple(vertices) {
                    return bad("polygon is not simple");
                }
            }
        }
        Ok(ContinuousDomain { shape, regularity: None })
    }

    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GeometryError> {
        Self::new(Shape::Rect { lo, hi })
    }

    pub fn disk(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        Self::new(Shape::Disk { center, radius })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        Self::new(Shape::Polygon { vertices })
    }

    pub fn with_regularity(mut self, kappa: f64, eta: f64) -> Result<Self, GeometryError> {
        if !(kappa > 0.0 && eta > 0.0) {
            return Err(GeometryError::InvalidShape("regularity parameters must be positive".into()));
        }
        self.regularity = Some(Regularity { kappa, eta });
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn regularity(&self) -> Option<Regularity> {
        self.regularity
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Rect { lo, .. } => lo.len(),
            Shape::Disk { center, .. } => center.len(),
            Shape::Polygon { .. } => 2,
        }
    }

    /// Closed membership with slack [`CONTAIN_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Rect { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - CONTAIN_TOL && *v <= b + CONTAIN_TOL)
            }
            Shape::Disk { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= radius + CONTAIN_TOL
            }
            Shape::Polygon { vertices } => point_in_polygon(vertices, [x[0], x[1]]),
        }
    }

    /// `(lo, hi)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::Rect { lo, hi } => (lo.clone(), hi.clone()),
            Shape::Disk { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            Shape::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Reference point for dilations: box center, disk center, vertex mean.
    pub fn center(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Rect { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Shape::Disk { center, .. } => center.clone(),
            Shape::Polygon { vertices } => {
                let n = vertices.len() as f64;
                vec![vertices.iter().map(|v| v[0]).sum::<f64>() / n, vertices.iter().map(|v| v[1]).sum::<f64>() / n]
            }
        }
    }

    /// The shape scaled by `factor` about [`Self::center`].
    pub fn dilated(&self, factor: f64) -> Result<Self, GeometryError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(GeometryError::InvalidShape("dilation factor must be positive".into()));
        }
        let c = self.center();
        let scale = |x: &[f64]| -> Vec<f64> { x.iter().zip(&c).map(|(v, ci)| ci + factor * (v - ci)).collect() };
        let shape = match &self.shape {
            Shape::Rect { lo, hi } => Shape::Rect { lo: scale(lo), hi: scale(hi) },
            Shape::Disk { center, radius } => Shape::Disk { center: center.clone(), radius: radius * factor },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|v| {
                    let s = scale(v);
                    [s[0], s[1]]
                }).collect(),
            },
        };
        Ok(ContinuousDomain { shape, regularity: self.regularity })
    }

    /// Codimension-one measure of the boundary.
    pub fn perimeter(&self) -> f64 {
        match &self.shape {
            Shape::Rect { lo, hi } => {
                if lo.len() == 1 {
                    2.0
                } else {
                    2.0 * ((hi[0] - lo[0]) + (hi[1] - lo[1]))
                }
            }
            Shape::Disk { center, radius } => {
                if center.len() == 1 {
                    2.0
                } else {
                    2.0 * std::f64::consts::PI * radius
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                    })
                    .sum()
            }
        }
    }
}

/// Geometric perimeter of a continuous shape.
pub fn continuous_perimeter(domain: &ContinuousDomain) -> f64 {
    domain.perimeter()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if cross(a, b, p).abs() > tol * len.max(1.0) {
        return false;
    }
    p[0] >= a[0].min(b[0]) - tol && p[0] <= a[0].max(b[0]) + tol && p[1] >= a[1].min(b[1]) - tol && p[1] <= a[1].max(b[1]) + tol
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d, 0.0) || on_segment(b, c, d, 0.0) || on_segment(c, a, b, 0.0) || on_segment(d, a, b, 0.0)
}

fn polygon_is_simple(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(a, b, v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = v.len();
    for i in 0..n {
        if on_segment(p, v[i], v[(i + 1) % n], CONTAIN_TOL) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

// ---------------------------------------------------------------------------
// Discretization and boundaries
// ---------------------------------------------------------------------------

/// Integer box `[lo, hi]` (inclusive) in lattice coordinates covering the
/// ambient box `[lo, hi]`.
fn lattice_box(lattice: &LatticeSpec, lo: &[f64], hi: &[f64]) -> (Vec<i64>, Vec<i64>) {
    let d = lattice.dim();
    let mut klo = vec![f64::INFINITY; d];
    let mut khi = vec![f64::NEG_INFINITY; d];
    for corner in 0..(1usize << d) {
        let x: Vec<f64> = (0..d).map(|i| if corner >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
        let k = lattice.to_lattice_coords(&x);
        for i in 0..d {
            klo[i] = klo[i].min(k[i]);
            khi[i] = khi[i].max(k[i]);
        }
    }
    (klo.iter().map(|v| v.floor() as i64 - 1).collect(), khi.iter().map(|v| v.ceil() as i64 + 1).collect())
}

/// Row-major enumeration of the integer box `[lo, hi]`.
fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut k = lo.to_vec();
    loop {
        f(&k);
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if k[i] < hi[i] {
                k[i] += 1;
                for (j, v) in k.iter_mut().enumerate().skip(i + 1) {
                    *v = lo[j];
                }
                break;
            }
        }
    }
}

/// Lattice points inside the closed shape, row-major, mass `|Λ|` each.
pub fn discretize(domain: &ContinuousDomain, lattice: &LatticeSpec) -> Result<DiscreteDomain, GeometryError> {
    if domain.dim() != lattice.dim() {
        return Err(GeometryError::DimensionMismatch { expected: lattice.dim(), got: domain.dim() });
    }
    let (lo, hi) = domain.bounding_box();
    let (klo, khi) = lattice_box(lattice, &lo, &hi);
    let mut points = Vec::new();
    for_each_in_box(&klo, &khi, |k| {
        if domain.contains(&lattice.to_ambient(k)) {
            points.push(k.to_vec());
        }
    });
    DiscreteDomain::new(lattice.clone(), points)
}

fn unit_neighbors(k: &[i64]) -> impl Iterator<Item = Point> + '_ {
    (0..k.len()).flat_map(move |i| {
        [-1i64, 1].into_iter().map(move |s| {
            let mut n = k.to_vec();
            n[i] += s;
            n
        })
    })
}

/// Points of `Ω` with an integer neighbor at lattice distance one outside `Ω`.
pub fn discrete_boundary(domain: &DiscreteDomain) -> DiscreteDomain {
    domain.filter(|_, p| unit_neighbors(p).any(|n| !domain.contains(&n)))
}

/// `‖A‖^{-1} · μ(∂_A Ω)`.
pub fn lattice_perimeter(domain: &DiscreteDomain) -> f64 {
    discrete_boundary(domain).measure() / domain.lattice().norm()
}

/// Largest ambient distance between two points of the domain.
pub fn diameter(domain: &DiscreteDomain) -> f64 {
    let pts = domain.points();
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(domain.distance(&pts[i], &pts[j]));
        }
    }
    best
}

/// Dyadic truncation level for the inflation supremum.
pub fn inflation_levels(domain: &DiscreteDomain) -> u32 {
    ((diameter(domain) + 2.0).log2().ceil() as u32) + 2
}

/// Distance from `k` to the nearest lattice point outside `Ω` (plane case).
fn distance_to_complement(domain: &DiscreteDomain, k: &[i64], hi: &[i64]) -> f64 {
    // a point just past the bounding box is certainly outside
    let mut probe = k.to_vec();
    probe[0] = hi[0] + 1;
    let mut best = domain.distance(k, &probe);
    let reach = (best * domain.lattice().inverse_norm()).ceil() as i64;
    let blo: Vec<i64> = k.iter().map(|v| v - reach).collect();
    let bhi: Vec<i64> = k.iter().map(|v| v + reach).collect();
    for_each_in_box(&blo, &bhi, |j| {
        if !domain.contains(j) {
            best = best.min(domain.distance(k, j));
        }
    });
    best
}

fn distance_to_set(domain: &DiscreteDomain, k: &[i64]) -> f64 {
    domain.points().iter().map(|p| domain.distance(k, p)).fold(f64::INFINITY, f64::min)
}

/// `#{k ∉ Ω : d(k, Ω) ≤ 2^n}` for each level on the whole lattice.
///
/// Along every lattice line in the first coordinate direction, the points
/// within distance `r` of a fixed `p` form an interval (a ball meets a line
/// in a segment). Interval endpoints are confirmed with the exact distance,
/// and the union length per line is accumulated.
fn outer_counts_plane(domain: &DiscreteDomain, n_max: u32, lo: &[i64], hi: &[i64]) -> Vec<usize> {
    let d = domain.lattice().dim();
    let a = domain.lattice().generator();
    let gram = |i: usize, j: usize| -> f64 { (0..d).map(|k| a[k][i] * a[k][j]).sum() };
    let g00 = gram(0, 0);
    let g0: Vec<f64> = (1..d).map(|j| gram(0, j)).collect();
    let grest: Vec<Vec<f64>> = (1..d).map(|i| (1..d).map(|j| gram(i, j)).collect()).collect();
    let levels = n_max as usize + 1;
    let mut counts = vec![0usize; levels];
    let r_max = (1u64 << n_max) as f64;
    let reach = (r_max * domain.lattice().inverse_norm()).ceil() as i64 + 1;
    let line_lo: Vec<i64> = lo[1..].iter().map(|v| v - reach).collect();
    let line_hi: Vec<i64> = hi[1..].iter().map(|v| v + reach).collect();
    let points = domain.points();
    let mut spans: Vec<(i64, i64)> = Vec::with_capacity(points.len());
    let mut probe = vec![0i64; d];
    let mut visit_line = |line: &[i64]| {
        probe[1..].copy_from_slice(line);
        for (n, slot) in counts.iter_mut().enumerate() {
            let r = (1u64 << n) as f64;
            spans.clear();
            for p in points {
                let w: Vec<f64> = (1..d).map(|j| (line[j - 1] - p[j]) as f64).collect();
                let b: f64 = g0.iter().zip(&w).map(|(g, x)| g * x).sum();
                let c: f64 = (0..d - 1).map(|i| (0..d - 1).map(|j| grest[i][j] * w[i] * w[j]).sum::<f64>()).sum();
                let disc = (b * b - g00 * (c - r * r)).max(0.0).sqrt();
                let mut t_lo = ((-b - disc) / g00).ceil() as i64 - 1;
                let mut t_hi = ((-b + disc) / g00).floor() as i64 + 1;
                let mut inside = |t: i64| {
                    probe[0] = p[0] + t;
                    domain.distance(&probe, p) <= r
                };
                while t_lo <= t_hi && !inside(t_lo) {
                    t_lo += 1;
                }
                while t_hi >= t_lo && !inside(t_hi) {
                    t_hi -= 1;
                }
                if t_lo <= t_hi {
                    spans.push((p[0] + t_lo, p[0] + t_hi));
                }
            }
            spans.sort_unstable();
            let mut covered = 0usize;
            let mut end = i64::MIN;
            for &(s0, s1) in spans.iter() {
                let start = s0.max(end.saturating_add(1));
                if s1 >= start {
                    covered += (s1 - start + 1) as usize;
                }
                end = end.max(s1);
            }
            *slot += covered;
        }
    };
    if d == 1 {
        visit_line(&[]);
    } else {
        for_each_in_box(&line_lo, &line_hi, |line| visit_line(line));
    }
    counts.iter().map(|c| c - points.len()).collect()
}

/// Per-level strip measures `(inner, outer)` for `n = 0..=n_max`:
/// `inner[n] = μ{x ∈ Ω : d(x, Ω^c) ≤ 2^n}`, `outer[n] = μ{x ∉ Ω : d(x, Ω) ≤ 2^n}`.
pub fn strip_measures(domain: &DiscreteDomain, n_max: u32) -> (Vec<f64>, Vec<f64>) {
    let levels = n_max as usize + 1;
    let mut inner = vec![0.0; levels];
    let mut outer = vec![0.0; levels];
    if domain.is_empty() {
        return (inner, outer);
    }
    let bump = |acc: &mut Vec<f64>, dist: f64, mass: f64| {
        for (n, slot) in acc.iter_mut().enumerate() {
            if dist <= (1u64 << n) as f64 {
                *slot += mass;
            }
        }
    };
    match domain.torus_points() {
        Some(all) => {
            let complement: Vec<&Point> = all.iter().filter(|p| !domain.contains(p)).collect();
            for (i, p) in domain.points().iter().enumerate() {
                let d = complement.iter().map(|q| domain.distance(p, q)).fold(f64::INFINITY, f64::min);
                bump(&mut inner, d, domain.point_mass(i));
            }
            for q in complement {
                bump(&mut outer, distance_to_set(domain, q), domain.mass());
            }
        }
        None => {
            let d = domain.lattice().dim();
            let mut lo = vec![i64::MAX; d];
            let mut hi = vec![i64::MIN; d];
            for p in domain.points() {
                for i in 0..d {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            for (i, p) in domain.points().iter().enumerate() {
                let dist = distance_to_complement(domain, p, &hi);
                bump(&mut inner, dist, domain.point_mass(i));
            }
            for (slot, count) in outer.iter_mut().zip(outer_counts_plane(domain, n_max, &lo, &hi)) {
                *slot = count as f64 * domain.mass();
            }
        }
    }
    (inner, outer)
}

/// `sup_{n ≤ n_max, E ∈ {Ω, Ω^c}} 2^{-γ(n-1)} μ({x ∈ E^c : d(x, E) ≤ 2^n})`.
///
/// Empty domains (and full tori) give 0.
pub fn inflation_constant(domain: &DiscreteDomain, gamma: f64) -> f64 {
    if domain.is_empty() {
        return 0.0;
    }
    let n_max = inflation_levels(domain);
    let (inner, outer) = strip_measures(domain, n_max);
    inner
        .iter()
        .zip(&outer)
        .enumerate()
        .map(|(n, (a, b))| 2f64.powf(-gamma * (n as f64 - 1.0)) * a.max(*b))
        .fold(0.0, f64::max)
}

/// Inflation constant on a finite metric measure space of `n` points where
/// `Ω` is given by `mask`. Agrees with [`inflation_constant`] on a torus.
pub fn inflation_constant_finite(
    n: usize,
    dist: impl Fn(usize, usize) -> f64,
    masses: &[f64],
    mask: &[bool],
    gamma: f64,
) -> f64 {
    let inside: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let outside: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    if inside.is_empty() || outside.is_empty() {
        return 0.0;
    }
    let mut diam = 0.0f64;
    for (k, &i) in inside.iter().enumerate() {
        for &j in &inside[k + 1..] {
            diam = diam.max(dist(i, j));
        }
    }
    let n_max = ((diam + 2.0).log2().ceil() as u32) + 2;
    let nearest = |x: usize, set: &[usize]| set.iter().map(|&y| dist(x, y)).fold(f64::INFINITY, f64::min);
    let mut strips = vec![0.0f64; n_max as usize + 1];
    let mut outer = vec![0.0f64; n_max as usize + 1];
    for &x in &inside {
        let d = nearest(x, &outside);
        for (lvl, slot) in strips.iter_mut().enumerate() {
            if d <= (1u64 << lvl) as f64 {
                *slot += masses[x];
            }
        }
    }
    for &x in &outside {
        let d = nearest(x, &inside);
        for (lvl, slot) in outer.iter_mut().enumerate() {
            if d <= (1u64 << lvl) as f64 {
                *slot += masses[x];
            }
        }
    }
    strips
        .iter()
        .zip(&outer)
        .enumerate()
        .map(|(lvl, (a, b))| 2f64.powf(-gamma * (lvl as f64 - 1.0)) * a.max(*b))
        .fold(0.0, f64::max)
}

/// `#(B_r(x) ∩ Λ)` for the closed ambient ball.
pub fn ball_count(lattice: &LatticeSpec, center: &[i64], radius: f64) -> usize {
    let reach = (radius * lattice.inverse_norm()).ceil() as i64 + 1;
    let lo: Vec<i64> = center.iter().map(|v| v - reach).collect();
    let hi: Vec<i64> = center.iter().map(|v| v + reach).collect();
    let mut count = 0;
    for_each_in_box(&lo, &hi, |k| {
        let diff: Vec<i64> = k.iter().zip(center).map(|(a, b)| a - b).collect();
        if norm(&lattice.to_ambient(&diff)) <= radius + CONTAIN_TOL {
            count += 1;
        }
    });
    count
}

/// `max #(B_{2r}(x) ∩ Λ) / #(B_r(x) ∩ Λ)` over all center/radius pairs.
pub fn doubling_ratio(lattice: &LatticeSpec, centers: &[Point], radii: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for c in centers {
        for &r in radii {
            let small = ball_count(lattice, c, r).max(1);
            let big = ball_count(lattice, c, 2.0 * r);
            worst = worst.max(big as f64 / small as f64);
        }
    }
    worst
}

/// Two sides of the lattice-perimeter sandwich and the unit-neighbor
/// interaction proxy placed between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub lower: f64,
    pub upper: f64,
    pub lattice_perimeter: f64,
    /// `‖A‖^{-1} ϑ^{-1} Σ_{x∈Ω} Σ_{y∉Ω, |k_x-k_y|=1} m(x) m(y)`.
    pub proxy: f64,
    pub slack: f64,
    pub within_slack: bool,
}

pub fn perimeter_sandwich_check(domain: &DiscreteDomain, slack: f64) -> SandwichReport {
    let lower = lattice_perimeter(domain);
    let d = domain.lattice().dim() as i32;
    let upper = domain.lattice().condition().powi(2 * d) * lower;
    let min_mass = (0..domain.len()).map(|i| domain.point_mass(i)).fold(domain.mass(), f64::min);
    let mut interaction = 0.0;
    for (i, p) in domain.points().iter().enumerate() {
        let outside = unit_neighbors(p).filter(|n| !domain.contains(n)).count();
        interaction += outside as f64 * domain.point_mass(i) * domain.mass();
    }
    let proxy = interaction / (min_mass * domain.lattice().norm());
    let within_slack = proxy >= lower / slack - 1e-12 && proxy <= upper * slack + 1e-12;
    SandwichReport { lower, upper, lattice_perimeter: lower, proxy, slack, within_slack }
}

/// Set view of domain points, for callers doing many membership tests.
pub fn point_set(domain: &DiscreteDomain) -> HashSet<Point> {
    domain.points().iter().cloned().collect()
}
