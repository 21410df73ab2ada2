mod common;

use common::*;
use proptest::prelude::*;

use speclab::eigen::{jacobi_eigen, CMatrix};
use speclab::exec::Execution;
use speclab::frame::{self, FrameSystem};
use speclab::gabor::{self, GaborSystem, WindowSpec};
use speclab::geometry::{self, DiscreteDomain, LatticeSpec};
use speclab::harness::{self, ExperimentConfig};
use speclab::prolate::{self, CyclicInterval};
use speclab::spectral::{self, SpectralProfile};
use speclab::testbed;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn norm_sq(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_hermitian(seed: u64, n: usize) -> CMatrix {
    let mut rng = testbed::rng(seed);
    let a = CMatrix::from_fn(n, n, |_, _| testbed::random_vector(&mut rng, 1)[0]);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn tf_shift_is_unitary(l in 2usize..24, x in 0usize..64, xi in 0usize..64, seed in any::<u64>()) {
        let f = testbed::random_vector(&mut testbed::rng(seed), l);
        let g = gabor::tf_shift(x, xi, &f);
        prop_assert!((norm_sq(&g) - norm_sq(&f)).abs() < 1e-12 * norm_sq(&f).max(1.0));
        let naive = shift(x, xi, &f);
        prop_assert!(g.iter().zip(&naive).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn tf_shifts_compose_up_to_phase(
        l in 2usize..20,
        (x1, y1, x2, y2) in (0usize..40, 0usize..40, 0usize..40, 0usize..40),
        seed in any::<u64>(),
    ) {
        let f = testbed::random_vector(&mut testbed::rng(seed), l);
        let lhs = gabor::tf_shift(x1, y1, &gabor::tf_shift(x2, y2, &f));
        let rhs = gabor::tf_shift(x1 + x2, y1 + y2, &f);
        let phase = C::from_polar(1.0, -2.0 * std::f64::consts::PI * ((y2 * x1) % l) as f64 / l as f64);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b * phase).norm() < 1e-11);
        }
    }

    #[test]
    fn counting_and_plunge_relations(values in prop::collection::vec(0.0f64..=1.0, 1..40), delta in 0.01f64..0.49) {
        let p = SpectralProfile::from_eigenvalues(values.clone());
        let above = spectral::count_above(&p, delta);
        let high = spectral::count_above(&p, 1.0 - delta);
        let plunge = spectral::plunge_count(&p, delta).unwrap();
        let at_high = values.iter().filter(|&&v| v == 1.0 - delta).count();
        prop_assert_eq!(plunge, above - high - at_high);
        prop_assert_eq!(plunge, spectral::symmetric_plunge_count(&p, 1.0 - delta));
        prop_assert!(spectral::count_above(&p, delta / 2.0) >= above);
    }

    #[test]
    fn deviation_inequality_holds(values in prop::collection::vec(0.0f64..=1.0, 1..40), delta in 0.01f64..0.99, p in 0.1f64..=2.0) {
        let prof = SpectralProfile::from_eigenvalues(values);
        let check = spectral::deviation_inequality_check(&prof, delta, p).unwrap();
        prop_assert!(check.holds, "lhs {} rhs {}", check.lhs, check.rhs);
    }

    #[test]
    fn hankel_norms_are_monotone_in_p(values in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let prof = SpectralProfile::from_eigenvalues(values);
        let s2 = spectral::hankel_schatten(&prof, 2.0).unwrap();
        let s1 = spectral::hankel_schatten(&prof, 1.0).unwrap();
        let s_half = spectral::hankel_schatten(&prof, 0.5).unwrap();
        prop_assert!(s2 <= s1 + 1e-12 && s1 <= s_half + 1e-12);
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn frame_spectra_lie_in_unit_interval(seed in any::<u64>(), m in 2usize..10, extra in 0usize..10, p in 0.1f64..0.9) {
        let mut rng = testbed::rng(seed);
        let f = testbed::random_frame(&mut rng, m, m + extra).unwrap();
        let mask = testbed::random_mask(&mut rng, f.len(), p);
        let mu = f.mu(&mask);
        for prof in [frame::multiplier_spectrum(&f, &mask).unwrap(), frame::concentration_spectrum(&f, &mask).unwrap()] {
            prop_assert!(prof.eigenvalues().iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
            prop_assert!((prof.eigenvalue_sum() - mu).abs() < 1e-9 * mu.max(1.0));
        }
    }

    #[test]
    fn multiplier_spectrum_is_unitarily_invariant(seed in any::<u64>(), m in 2usize..8, extra in 0usize..6) {
        let mut rng = testbed::rng(seed);
        let pairs = testbed::random_frame_pairs(&mut rng, m, m + extra);
        let mask = testbed::random_mask(&mut rng, pairs.len(), 0.5);
        let u = testbed::orthonormal_family(&mut rng, m, m);
        let rotated: Vec<_> = pairs
            .iter()
            .map(|(k, v)| (k.clone(), (0..m).map(|i| ip(v, &u[i])).collect::<Vec<C>>()))
            .collect();
        let a = FrameSystem::from_pairs(LatticeSpec::identity(1), pairs).unwrap();
        let b = FrameSystem::from_pairs(LatticeSpec::identity(1), rotated).unwrap();
        let pa = frame::multiplier_spectrum(&a, &mask).unwrap();
        let pb = frame::multiplier_spectrum(&b, &mask).unwrap();
        prop_assert!(max_gap(pa.eigenvalues(), pb.eigenvalues()) < 1e-9);
    }

    #[test]
    fn jacobi_matches_reference_solver(seed in any::<u64>(), n in 1usize..14) {
        let h = random_hermitian(seed, n);
        let ours = jacobi_eigen(&h, true).unwrap();
        prop_assert!(max_gap(&ours.values, &hermitian_eigs(&h)) < 1e-10);
        let v = ours.vectors.unwrap();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, ours.values.iter().map(|&x| c(x, 0.0))));
        let residual = &h * &v - &v * d;
        prop_assert!(residual.iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn strip_measures_are_translation_invariant(seed in any::<u64>(), d in 1usize..=2, s0 in -20i64..20, s1 in -20i64..20) {
        let dom = testbed::random_domain(&mut testbed::rng(seed), d, 30);
        let moved = dom.translated(&[s0, s1][..d]).unwrap();
        let n = geometry::inflation_levels(&dom);
        prop_assert_eq!(n, geometry::inflation_levels(&moved));
        prop_assert_eq!(geometry::strip_measures(&dom, n), geometry::strip_measures(&moved, n));
        prop_assert_eq!(geometry::lattice_perimeter(&dom), geometry::lattice_perimeter(&moved));
    }

    #[test]
    fn torus_inflation_matches_finite_space(seed in any::<u64>(), l0 in 3i64..10, l1 in 3i64..10, p in 0.1f64..0.9) {
        let mut rng = testbed::rng(seed);
        let all: Vec<Vec<i64>> = (0..l0).flat_map(|x| (0..l1).map(move |y| vec![x, y])).collect();
        let keep = testbed::random_mask(&mut rng, all.len(), p);
        prop_assume!(!keep.is_empty() && keep.len() < all.len());
        let pts: Vec<Vec<i64>> = keep.iter().map(|&i| all[i].clone()).collect();
        let dom = DiscreteDomain::new(LatticeSpec::identity(2), pts).unwrap().on_torus(vec![l0, l1]).unwrap();
        let mut mask = vec![false; all.len()];
        keep.iter().for_each(|&i| mask[i] = true);
        let finite = geometry::inflation_constant_finite(all.len(), |i, j| dom.distance(&all[i], &all[j]), &vec![1.0; all.len()], &mask, 2.0);
        let torus = geometry::inflation_constant(&dom, 2.0);
        prop_assert!((finite - torus).abs() <= 1e-12 * torus.max(1.0), "{finite} vs {torus}");
    }

    #[test]
    fn gabor_spectrum_is_translation_covariant(
        (l, a, b) in prop::sample::select(vec![(8usize, 2usize, 2usize), (12, 2, 3), (12, 3, 2), (16, 4, 2)]),
        p in 0.2f64..0.8,
        (sn, sm) in (0i64..8, 0i64..8),
        seed in any::<u64>(),
    ) {
        let sys = GaborSystem::new(l, a, b, &WindowSpec::Gauss).unwrap();
        let (nn, nm) = ((l / a) as i64, (l / b) as i64);
        let all: Vec<Vec<i64>> = (0..nn).flat_map(|x| (0..nm).map(move |y| vec![x, y])).collect();
        let keep = testbed::random_mask(&mut testbed::rng(seed), all.len(), p);
        let moved: Vec<usize> = keep
            .iter()
            .map(|&i| {
                let q = [(all[i][0] + sn).rem_euclid(nn), (all[i][1] + sm).rem_euclid(nm)];
                all.iter().position(|v| v[..] == q[..]).unwrap()
            })
            .collect();
        let pa = frame::multiplier_spectrum(sys.frame(), &keep).unwrap();
        let pb = frame::multiplier_spectrum(sys.frame(), &moved).unwrap();
        prop_assert!(max_gap(pa.eigenvalues(), pb.eigenvalues()) < 1e-9);
    }

    #[test]
    fn prolate_spectrum_properties(l in 4usize..40, fi in 1usize..40, ti in 1usize..40, s0 in 0usize..40, s1 in 0usize..40) {
        let (fi, ti) = (fi.min(l), ti.min(l));
        let base = prolate::prolate_operator(l, CyclicInterval::new(l, 0, fi).unwrap(), CyclicInterval::new(l, 0, ti).unwrap()).unwrap();
        let moved = prolate::prolate_operator(l, CyclicInterval::new(l, s0 % l, fi).unwrap(), CyclicInterval::new(l, s1 % l, ti).unwrap()).unwrap();
        let dual = prolate::prolate_operator(l, CyclicInterval::new(l, 0, ti).unwrap(), CyclicInterval::new(l, 0, fi).unwrap()).unwrap();
        let p0 = base.spectrum().unwrap();
        prop_assert!((p0.eigenvalue_sum() - (fi * ti) as f64 / l as f64).abs() < 1e-9 * l as f64);
        prop_assert!(max_gap(p0.eigenvalues(), moved.spectrum().unwrap().eigenvalues()) < 1e-9);
        prop_assert!(max_gap(p0.eigenvalues(), dual.spectrum().unwrap().eigenvalues()) < 1e-9);
        if ti < l {
            let bigger = prolate::prolate_operator(l, CyclicInterval::new(l, 0, fi).unwrap(), CyclicInterval::new(l, 0, ti + 1).unwrap()).unwrap();
            let pb = bigger.spectrum().unwrap();
            prop_assert!(p0.eigenvalues().iter().zip(pb.eigenvalues()).all(|(x, y)| *x <= y + 1e-9));
        }
    }

    #[test]
    fn parallel_and_sequential_maps_agree(items in prop::collection::vec(any::<u32>(), 0..200)) {
        let f = |x: &u32| (*x as f64).sqrt().to_bits();
        prop_assert_eq!(Execution::Sequential.map(&items, f), Execution::Parallel.map(&items, f));
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn config_serialization_round_trips(
        length in prop::sample::select(vec![16usize, 24, 32, 48]),
        seed in any::<u32>(),
        r in 1.0f64..6.0,
        deltas in prop::collection::vec(0.01f64..0.99, 1..4),
    ) {
        let deltas: Vec<String> = deltas.iter().map(|d| speclab::io::format_f64(*d)).collect();
        let pairs = vec![
            ("kind", "spectrum".to_string()),
            ("out", "run/out".to_string()),
            ("seed", seed.to_string()),
            ("length", length.to_string()),
            ("shift", "2".to_string()),
            ("mod", "2".to_string()),
            ("domain", format!("disk:{},{},{}", length / 2, length / 2, speclab::io::format_f64(r))),
            ("deltas", deltas.join(",")),
        ];
        let dir = std::path::Path::new(".");
        let a = ExperimentConfig::from_pairs(&pairs, dir).unwrap();
        let text = harness::serialize_config(&a);
        let b = harness::parse_config(&text, dir).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        prop_assert_eq!(text, harness::serialize_config(&b));
    }
}
