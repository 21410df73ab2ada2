//! Seeded random instances: frames, masks, domains, signals, profiles.
//! Every generator takes an explicit RNG so results depend only on the seed.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frame::{norm_sq, FrameError, FrameSystem};
use crate::geometry::{DiscreteDomain, LatticeSpec, Point};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn random_unit_vector(rng: &mut impl Rng, len: usize) -> Vec<Complex64> {
    loop {
        let v = random_vector(rng, len);
        let n = norm_sq(&v).sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// `(index, vector)` pairs for `n` random vectors in `C^m`, indexed `0..n` on `Z`.
pub fn random_frame_pairs(rng: &mut impl Rng, m: usize, n: usize) -> Vec<(Point, Vec<Complex64>)> {
    (0..n as i64).map(|i| (vec![i], random_vector(rng, m))).collect()
}

pub fn random_frame(rng: &mut impl Rng, m: usize, n: usize) -> Result<FrameSystem, FrameError> {
    FrameSystem::from_pairs(LatticeSpec::identity(1), random_frame_pairs(rng, m, n))
}

/// Each index kept independently with probability `p`.
pub fn random_mask(rng: &mut impl Rng, n: usize, p: f64) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(p)).collect()
}

/// `k` distinct orthonormal vectors in `C^len` by Gram–Schmidt.
pub fn orthonormal_family(rng: &mut impl Rng, len: usize, k: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    while out.len() < k {
        let mut v = random_vector(rng, len);
        for u in &out {
            let c: Complex64 = v.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
        let n = norm_sq(&v).sqrt();
        if n > 1e-6 {
            out.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    out
}

/// Random eigenvalue list in `[0, 1]`, seeded with a few exact 0s and 1s.
pub fn random_profile(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..=1.0),
        })
        .collect()
}

/// Random finite domain on `Z^d` with at most `max_points` points: either a
/// grown blob or a scattered set in a box.
pub fn random_domain(rng: &mut impl Rng, d: usize, max_points: usize) -> DiscreteDomain {
    let target = rng.gen_range(1..=max_points.max(1));
    let mut set: BTreeSet<Point> = BTreeSet::new();
    if rng.gen_bool(0.5) {
        let mut frontier = vec![vec![0i64; d]];
        set.insert(vec![0; d]);
        while set.len() < target {
            let base = frontier[rng.gen_range(0..frontier.len())].clone();
            let mut p = base;
            let axis = rng.gen_range(0..d);
            p[axis] += if rng.gen_bool(0.5) { 1 } else { -1 };
            if set.insert(p.clone()) {
                frontier.push(p);
            }
        }
    } else {
        let side = ((target as f64).powf(1.0 / d as f64) * 2.0).ceil() as i64 + 1;
        while set.len() < target {
            set.insert((0..d).map(|_| rng.gen_range(-side..=side)).collect());
        }
    }
    DiscreteDomain::new(LatticeSpec::identity(d), set.into_iter().collect()).expect("distinct points")
}
