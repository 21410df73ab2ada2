mod common;

use std::f64::consts::PI;

use common::*;

use speclab::bounds;
use speclab::frame::{self, FrameSystem};
use speclab::gabor::{self, GaborSystem, WindowSpec};
use speclab::geometry::{self, DiscreteDomain, LatticeSpec};
use speclab::prolate::{self, CyclicInterval};
use speclab::spectral;
use speclab::testbed;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn frame_1d(vectors: Vec<Vec<C>>) -> FrameSystem {
    let pairs = vectors.into_iter().enumerate().map(|(k, v)| (vec![k as i64], v)).collect();
    FrameSystem::from_pairs(LatticeSpec::identity(1), pairs).unwrap()
}

#[test]
fn singular_values_of_triangular_generators() {
    for &(a, b, d) in &[(1.0, 0.0, 1.0), (2.0, 1.0, 0.5), (0.3, -2.0, 4.0), (1.0, 1.0, 1.0)] {
        let data = geometry::singular_data(&[vec![a, b], vec![0.0, d]]).unwrap();
        let tr = a * a + b * b + d * d;
        let det: f64 = a * d;
        let disc = (tr * tr - 4.0 * det * det).sqrt();
        let lo = ((tr - disc) / 2.0).sqrt();
        let hi = ((tr + disc) / 2.0).sqrt();
        assert!(close(data.singular_values[0], lo, 1e-12), "{:?} vs {lo}", data.singular_values);
        assert!(close(data.singular_values[1], hi, 1e-12));
        assert!(close(data.covolume, det.abs(), 1e-12));
        assert!(close(data.condition, hi / lo, 1e-12));
    }
    let lat = LatticeSpec::diagonal(&[0.5, 3.0, 2.0]).unwrap();
    assert_eq!(lat.singular_values(), &[0.5, 2.0, 3.0]);
    assert!(close(lat.norm(), 3.0, 1e-15) && close(lat.inverse_norm(), 2.0, 1e-15));
}

#[test]
fn mercedes_benz_frame_is_tight() {
    let vectors: Vec<Vec<C>> =
        (0..3).map(|k| 2.0 * PI * k as f64 / 3.0).map(|t| vec![c(t.cos(), 0.0), c(t.sin(), 0.0)]).collect();
    let f = frame_1d(vectors.clone());
    let (lo, hi) = frame::frame_bounds(&f);
    assert!(close(lo, 1.5, 1e-12) && close(hi, 1.5, 1e-12));
    for (d, v) in frame::canonical_dual(&f).iter().zip(&vectors) {
        assert!(d.iter().zip(v).all(|(x, y)| (x - y * (2.0 / 3.0)).norm() < 1e-12));
    }
    assert!(f.omega().iter().all(|w| close(*w, 2.0 / 3.0, 1e-12)));
    let p = frame::multiplier_spectrum(&f, &[0]).unwrap();
    assert!(close(p.eigenvalues()[0], 2.0 / 3.0, 1e-12) && p.eigenvalues()[1].abs() < 1e-12);
    let all = frame::multiplier_spectrum(&f, &[0, 1, 2]).unwrap();
    assert!(all.eigenvalues().iter().all(|l| close(*l, 1.0, 1e-12)));
}

#[test]
fn roots_of_unity_and_skewed_frames() {
    let roots: Vec<Vec<C>> = (0..3).map(|k| vec![C::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)]).collect();
    let (lo, hi) = frame::frame_bounds(&frame_1d(roots));
    assert!(close(lo, 3.0, 1e-12) && close(hi, 3.0, 1e-12));

    let skew = frame_1d(vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(1., 0.)]]);
    let (lo, hi) = frame::frame_bounds(&skew);
    assert!(close(lo, 1.0, 1e-12) && close(hi, 3.0, 1e-12));
    let w = skew.omega();
    assert!(close(w[0], 2.0 / 3.0, 1e-12) && close(w[1], 2.0 / 3.0, 1e-12) && close(w[2], 2.0 / 3.0, 1e-12));
}

#[test]
fn frame_operator_and_dual_match_direct_solves() {
    for seed in 0..12u64 {
        let mut rng = testbed::rng(seed);
        let m = 2 + seed as usize % 7;
        let pairs = testbed::random_frame_pairs(&mut rng, m, 2 * m + 1);
        let vectors: Vec<Vec<C>> = pairs.iter().map(|p| p.1.clone()).collect();
        let f = FrameSystem::from_pairs(LatticeSpec::identity(1), pairs).unwrap();
        let s = frame_operator(&vectors);
        assert!((frame::frame_operator(&f) - &s).iter().all(|z| z.norm() < 1e-10));
        let eig = hermitian_eigs(&s);
        let (lo, hi) = frame::frame_bounds(&f);
        assert!(close(lo, eig[m - 1], 1e-10) && close(hi, eig[0], 1e-10));
        let dual = dual_by_lu(&vectors);
        for (a, b) in frame::canonical_dual(&f).iter().zip(&dual) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9));
        }
        let w = omegas(&vectors, &dual);
        assert!(f.omega().iter().zip(&w).all(|(a, b)| close(*a, *b, 1e-10)));
        let mask = testbed::random_mask(&mut rng, vectors.len(), 0.5);
        let ours = frame::multiplier_from_indices(&f, &mask);
        assert!((ours - multiplier(&vectors, &dual, &mask)).iter().all(|z| z.norm() < 1e-9));
    }
}

#[test]
fn stft_matches_definition() {
    for l in [5usize, 8, 12] {
        let mut rng = testbed::rng(l as u64);
        let g = testbed::random_unit_vector(&mut rng, l);
        let f = testbed::random_vector(&mut rng, l);
        let ours = gabor::stft(&g, &f);
        let naive = stft_naive(&g, &f);
        for (r1, r2) in ours.iter().zip(&naive) {
            assert!(r1.iter().zip(r2).all(|(a, b)| (a - b).norm() < 1e-11));
        }
    }
}

#[test]
fn gauss_window_and_wexler_raz() {
    for (l, a, b) in [(16usize, 2usize, 2usize), (24, 3, 4), (32, 4, 4)] {
        let sys = GaborSystem::new(l, a, b, &WindowSpec::Gauss).unwrap();
        let g = gauss_window(l);
        assert!(sys.window().iter().zip(&g).all(|(x, y)| (x - y).norm() < 1e-12));
        assert!(close(gabor::wexler_raz(&sys), (a * b) as f64 / l as f64, 1e-10));
        let fam = gabor_family(&g, a, b);
        assert!(sys.frame().vectors().iter().zip(&fam).all(|(u, v)| u.iter().zip(v).all(|(x, y)| (x - y).norm() < 1e-12)));
    }
}

#[test]
fn group_kernel_agrees_with_dense_kernel() {
    for (l, a, b) in [(12usize, 2usize, 3usize), (16, 4, 2), (16, 2, 2)] {
        let sys = GaborSystem::new(l, a, b, &WindowSpec::Gauss).unwrap();
        let group = sys.group_kernel();
        let expanded = group.to_dense();
        let dense = frame::kernel_on_domain(sys.frame());
        let n = dense.len();
        for x in 0..n {
            for y in 0..n {
                assert!(close(expanded.distance(x, y), dense.distance(x, y), 1e-12));
                assert!(close(expanded.magnitude_sq(x, y), dense.magnitude_sq(x, y), 1e-9));
            }
        }
        for s in bounds::default_s_grid(2.0) {
            let g = bounds::group_dyadic_decay(&group, s);
            assert!(close(g, bounds::dyadic_decay(&dense, s), 1e-9), "s = {s}");
        }
        let mask: Vec<bool> = testbed::random_mask(&mut testbed::rng(l as u64), n, 0.4).iter().fold(vec![false; n], |mut m, &i| {
            m[i] = true;
            m
        });
        assert!(close(bounds::group_boundary_interaction(&group, &mask), bounds::boundary_interaction(&dense, &mask), 1e-9));
    }
}

#[test]
fn boundary_and_ball_counts_match_enumeration() {
    for seed in 0..20u64 {
        let d = 1 + seed as usize % 2;
        let dom = testbed::random_domain(&mut testbed::rng(seed), d, 40);
        let mut ours: Vec<Vec<i64>> = geometry::discrete_boundary(&dom).points().to_vec();
        ours.sort();
        assert_eq!(ours, boundary_brute(dom.points()));
    }
    for d in 1..=3 {
        let lat = LatticeSpec::identity(d);
        let center = vec![3i64; d];
        for r in [0.0, 0.5, 1.0, 1.5, 2.0, 3.7, 6.0] {
            assert_eq!(geometry::ball_count(&lat, &center, r), ball_count_brute(&center, r), "d={d} r={r}");
        }
    }
}

#[test]
fn inflation_of_small_sets() {
    let single = DiscreteDomain::new(LatticeSpec::identity(2), vec![vec![0, 0]]).unwrap();
    let (inner, outer, infl) = inflation_brute(single.points(), 2.0);
    let n = geometry::inflation_levels(&single);
    let (a, b) = geometry::strip_measures(&single, n);
    assert_eq!(a, inner.iter().map(|&v| v as f64).collect::<Vec<_>>());
    assert_eq!(b, outer.iter().map(|&v| v as f64).collect::<Vec<_>>());
    assert_eq!(geometry::inflation_constant(&single, 2.0), infl);
    assert_eq!(b[0], 4.0);
    assert_eq!(b[1], 12.0);
}

#[test]
fn prolate_projection_and_full_intervals() {
    let l = 24;
    let freq = CyclicInterval::new(l, 20, 9).unwrap();
    let p = prolate::projection_matrix(l, &freq);
    assert!(((&p * &p) - &p).iter().all(|z| z.norm() < 1e-12));
    assert!(close(p.trace().re, 9.0, 1e-12));
    let inst = prolate::prolate_operator(l, freq, CyclicInterval::full(l).unwrap()).unwrap();
    let prof = inst.spectrum().unwrap();
    assert_eq!(spectral::count_above(&prof, 0.5), 9);
    assert!(prof.eigenvalues()[9..].iter().all(|v| v.abs() < 1e-12));
    let single = prolate::prolate_operator(l, CyclicInterval::new(l, 3, 1).unwrap(), CyclicInterval::new(l, 7, 1).unwrap()).unwrap();
    assert!(close(single.spectrum().unwrap().eigenvalues()[0], 1.0 / l as f64, 1e-12));
    assert_eq!(CyclicInterval::inclusive(l, 22, 1).unwrap().iter().collect::<Vec<_>>(), vec![22, 23, 0, 1]);
}
