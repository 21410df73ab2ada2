//! Independent reference computations used by the integration tests.
//! Nothing here calls into the numerical core beyond plain data accessors.
#![allow(dead_code)]

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C = Complex64;
pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn ip(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

/// Eigenvalues of a Hermitian matrix, descending, from nalgebra's solver.
pub fn hermitian_eigs(h: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Eigenvalues of a general complex matrix via Schur form, real parts, descending.
pub fn general_eigs_real(m: &CMat) -> Vec<f64> {
    let ev = m.clone().schur().eigenvalues().expect("complex Schur form is triangular");
    let mut v: Vec<f64> = ev.iter().map(|z| z.re).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn columns(vectors: &[Vec<C>]) -> CMat {
    let m = vectors[0].len();
    CMat::from_fn(m, vectors.len(), |r, k| vectors[k][r])
}

/// `S = Φ Φ*` by direct summation.
pub fn frame_operator(vectors: &[Vec<C>]) -> CMat {
    let phi = columns(vectors);
    &phi * phi.adjoint()
}

/// Canonical dual by LU solves.
pub fn dual_by_lu(vectors: &[Vec<C>]) -> Vec<Vec<C>> {
    let lu = frame_operator(vectors).lu();
    vectors
        .iter()
        .map(|v| {
            let b = DMatrix::from_column_slice(v.len(), 1, v);
            lu.solve(&b).expect("frame operator invertible").iter().copied().collect()
        })
        .collect()
}

/// `Σ_{k∈Ω} φ^d_k φ_k*`.
pub fn multiplier(vectors: &[Vec<C>], dual: &[Vec<C>], mask: &[usize]) -> CMat {
    let m = vectors[0].len();
    let mut out = CMat::zeros(m, m);
    for &k in mask {
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] += dual[k][i] * vectors[k][j].conj();
            }
        }
    }
    out
}

/// `Re ⟨φ^d_k, φ_k⟩`.
pub fn omegas(vectors: &[Vec<C>], dual: &[Vec<C>]) -> Vec<f64> {
    vectors.iter().zip(dual).map(|(v, d)| ip(d, v).re).collect()
}

/// Time-frequency shift written out from the definition.
pub fn shift(x: usize, xi: usize, f: &[C]) -> Vec<C> {
    let l = f.len();
    (0..l)
        .map(|t| {
            let ph = 2.0 * PI * ((xi * t) % l) as f64 / l as f64;
            f[(t + l - x % l) % l] * C::from_polar(1.0, ph)
        })
        .collect()
}

/// `V_g f(n, m) = ⟨f, π(n, m) g⟩` from shifted windows.
pub fn stft_naive(g: &[C], f: &[C]) -> Vec<Vec<C>> {
    let l = f.len();
    (0..l).map(|n| (0..l).map(|m| ip(f, &shift(n, m, g))).collect()).collect()
}

/// Periodized Gaussian with unit norm, from the defining sum.
pub fn gauss_window(l: usize) -> Vec<C> {
    let lf = l as f64;
    let raw: Vec<f64> = (0..l)
        .map(|t| (-4i64..=4).map(|k| (-PI * (t as f64 + k as f64 * lf).powi(2) / lf).exp()).sum())
        .collect();
    let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| c(v / n, 0.0)).collect()
}

/// The Gabor family `π(na, mb) g` in row-major `(n, m)` order.
pub fn gabor_family(g: &[C], a: usize, b: usize) -> Vec<Vec<C>> {
    let l = g.len();
    let mut out = Vec::new();
    for n in 0..l / a {
        for m in 0..l / b {
            out.push(shift(n * a, m * b, g));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Geometry on Z^d with integer arithmetic
// ---------------------------------------------------------------------------

pub fn sq_dist(p: &[i64], q: &[i64]) -> i64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for (a, b) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|p| {
                (*a..=*b).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

/// Boundary points: members with a unit neighbour outside the set.
pub fn boundary_brute(points: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let set: HashSet<&Vec<i64>> = points.iter().collect();
    let mut out: Vec<Vec<i64>> = points
        .iter()
        .filter(|p| {
            (0..p.len()).any(|i| {
                [-1, 1].iter().any(|s| {
                    let mut q = (*p).clone();
                    q[i] += s;
                    !set.contains(&q)
                })
            })
        })
        .cloned()
        .collect();
    out.sort();
    out
}

/// Strip counts `(inner[n], outer[n])` for unit masses on `Z` or `Z²`,
/// `n = 0..=n_max`, and the resulting inflation constant. Every lattice point
/// of the padded box is tested against every point of the set.
pub fn inflation_brute(points: &[Vec<i64>], gamma: f64) -> (Vec<u64>, Vec<u64>, f64) {
    let d = points[0].len();
    assert!(d <= 2);
    let pts: Vec<[i64; 2]> = points.iter().map(|p| [p[0], if d == 2 { p[1] } else { 0 }]).collect();
    let set: HashSet<[i64; 2]> = pts.iter().copied().collect();
    let sq = |a: [i64; 2], b: [i64; 2]| (a[0] - b[0]).pow(2) + (a[1] - b[1]).pow(2);
    let mut diam2 = 0i64;
    for &p in &pts {
        for &q in &pts {
            diam2 = diam2.max(sq(p, q));
        }
    }
    let diam = (diam2 as f64).sqrt();
    let mut n_max = 0u32;
    while ((1u64 << n_max) as f64) < diam + 2.0 {
        n_max += 1;
    }
    n_max += 2;
    let lo = [pts.iter().map(|p| p[0]).min().unwrap(), pts.iter().map(|p| p[1]).min().unwrap()];
    let hi = [pts.iter().map(|p| p[0]).max().unwrap(), pts.iter().map(|p| p[1]).max().unwrap()];
    let levels = n_max as usize + 1;
    let bucket = |d2: i64, acc: &mut [u64]| {
        for (n, slot) in acc.iter_mut().enumerate() {
            if d2 <= 1i64 << (2 * n) {
                *slot += 1;
            }
        }
    };
    let pad = |r: i64, axis: usize| if axis < d { (lo[axis] - r, hi[axis] + r) } else { (0, 0) };
    let mut inner = vec![0u64; levels];
    let (x0, x1) = pad(1, 0);
    let (y0, y1) = pad(1, 1);
    for &p in &pts {
        let mut best = i64::MAX;
        for x in x0..=x1 {
            for y in y0..=y1 {
                if !set.contains(&[x, y]) {
                    best = best.min(sq(p, [x, y]));
                }
            }
        }
        bucket(best, &mut inner);
    }
    let mut outer = vec![0u64; levels];
    let r = 1i64 << n_max;
    let (x0, x1) = pad(r + 1, 0);
    let (y0, y1) = pad(r + 1, 1);
    for x in x0..=x1 {
        for y in y0..=y1 {
            let q = [x, y];
            if set.contains(&q) {
                continue;
            }
            let mut best = i64::MAX;
            for &p in &pts {
                best = best.min(sq(p, q));
            }
            bucket(best, &mut outer);
        }
    }
    let infl = inner
        .iter()
        .zip(&outer)
        .enumerate()
        .map(|(n, (a, b))| 2f64.powf(-gamma * (n as f64 - 1.0)) * (*a.max(b)) as f64)
        .fold(0.0, f64::max);
    (inner, outer, infl)
}

/// `#{k ∈ Z^d : |k - center|² ≤ r²}`.
pub fn ball_count_brute(center: &[i64], r: f64) -> usize {
    let reach = r.floor() as i64 + 1;
    let lo: Vec<i64> = center.iter().map(|v| v - reach).collect();
    let hi: Vec<i64> = center.iter().map(|v| v + reach).collect();
    box_points(&lo, &hi).iter().filter(|k| (sq_dist(k, center) as f64) <= r * r + 1e-9).count()
}

/// Hermitian part sanity: max |H - H*|.
pub fn hermitian_defect(h: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Nonzero part of a descending list.
pub fn above(values: &[f64], tol: f64) -> Vec<f64> {
    values.iter().copied().filter(|v| *v > tol).collect()
}
