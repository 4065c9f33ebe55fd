use proptest::prelude::*;

use hm_core::dla::{dla_run, DlaMode, DlaOptions};
use hm_core::families::{generate, FamilySpec};
use hm_core::harmonic::{check_reverse_path, harmonic_from, harmonic_stationary};
use hm_core::hitting::return_tail_curve;
use hm_core::rng::rng_from_seed;
use hm_core::spectral::{boundary_ratio, cheeger, spectrum, CheegerMode};
use hm_core::{BuildOptions, Chain, MeasureOnSet, VertexSet};

/// Connected weighted graph: a random spanning tree plus extra edges.
fn weighted_graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (3..=max_n).prop_flat_map(|n| {
        let tree = proptest::collection::vec((any::<prop::sample::Index>(), 0.1f64..5.0), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n, 0.1f64..5.0), 0..2 * n);
        (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
            let mut edges: Vec<_> = tree
                .into_iter()
                .enumerate()
                .map(|(i, (parent, w))| (parent.index(i + 1), i + 1, w))
                .collect();
            edges.extend(extra.into_iter().filter(|(a, b, _)| a != b));
            (n, edges)
        })
    })
}

fn chain_and_set(max_n: usize) -> impl Strategy<Value = (Chain, VertexSet)> {
    weighted_graph(max_n).prop_flat_map(|(n, edges)| {
        let chain = Chain::from_weights(n, &edges).unwrap();
        let mask = proptest::collection::vec(any::<bool>(), n);
        (Just(chain), mask, 0..n).prop_map(|(chain, mut mask, forced)| {
            mask[forced] = true;
            let n = mask.len();
            if mask.iter().all(|&b| b) {
                mask[(forced + 1) % n] = false;
            }
            (chain, VertexSet::from_mask(mask))
        })
    })
}

fn family() -> impl Strategy<Value = FamilySpec> {
    prop_oneof![
        (3usize..12).prop_map(|n| FamilySpec::Complete { n }),
        (3usize..20).prop_map(|n| FamilySpec::Cycle { n }),
        (3usize..6, 1usize..3).prop_map(|(n, d)| FamilySpec::Torus { n, d }),
        (2usize..5, any::<u64>()).prop_map(|(k, seed)| FamilySpec::TreeExpander { k, seed }),
        (5usize..13, any::<u64>()).prop_map(|(h, seed)| FamilySpec::RandomRegular {
            n: 2 * h,
            d: 3,
            seed
        }),
        (2usize..5).prop_map(|n| FamilySpec::Lamplighter { n }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn families_are_reversible(spec in family()) {
        let chain = generate(&spec).unwrap();
        let n = chain.n();
        prop_assert!((chain.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for x in 0..n {
            let row: f64 = (0..n).map(|y| chain.p(x, y)).sum();
            prop_assert!((row - 1.0).abs() < 1e-12);
            for y in 0..n {
                let lhs = chain.pi()[x] * chain.p(x, y);
                let rhs = chain.pi()[y] * chain.p(y, x);
                prop_assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn generation_is_deterministic(spec in family()) {
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        prop_assert_eq!(a.kernel(), b.kernel());
    }

    #[test]
    fn harmonic_measures_are_probability_vectors((chain, s) in chain_and_set(14)) {
        for y in 0..chain.n() {
            let h = harmonic_from(&chain, &s, y).unwrap();
            prop_assert!(h.weights().iter().all(|&w| w >= -1e-12));
            prop_assert!((h.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
            if s.contains(y) {
                prop_assert!((h.weight(y) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_measure_is_pi_average((chain, s) in chain_and_set(12)) {
        let stat = harmonic_stationary(&chain, &s).unwrap();
        let mut avg = vec![0.0; s.len()];
        for y in 0..chain.n() {
            let h = harmonic_from(&chain, &s, y).unwrap();
            for (a, w) in avg.iter_mut().zip(h.weights()) {
                *a += chain.pi()[y] * w;
            }
        }
        for (a, b) in avg.iter().zip(stat.weights()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn lazify_preserves_pi_and_harmonic_measure((chain, s) in chain_and_set(12)) {
        let lazy = chain.lazify();
        for (a, b) in chain.pi().iter().zip(lazy.pi()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for y in 0..chain.n() {
            let h = harmonic_from(&chain, &s, y).unwrap();
            let l = harmonic_from(&lazy, &s, y).unwrap();
            for (a, b) in h.weights().iter().zip(l.weights()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lazy_spectrum_is_nonnegative((n, edges) in weighted_graph(14)) {
        let chain = Chain::from_weights_with(n, &edges, BuildOptions { auto_lazify: false })
            .unwrap()
            .lazify();
        let s = spectrum(&chain).unwrap();
        prop_assert!((s.eigenvalues[0] - 1.0).abs() < 1e-10);
        prop_assert!(s.eigenvalues.iter().all(|&l| l > -1e-10 && l < 1.0 + 1e-10));
        prop_assert!(s.gap > 0.0);
    }

    #[test]
    fn reverse_path_identity_holds((chain, s) in chain_and_set(12)) {
        prop_assert!(check_reverse_path(&chain, &s).unwrap().max_residual < 1e-8);
    }

    #[test]
    fn return_tail_is_monotone_and_dominated((chain, s) in chain_and_set(12)) {
        let lazy = chain.lazify();
        let curve = return_tail_curve(&lazy, &s, 60).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].exact <= w[0].exact + 1e-14);
        }
        prop_assert!(curve.iter().all(|p| p.holds()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sweep_never_beats_exact_cheeger((n, edges) in weighted_graph(12)) {
        let chain = Chain::from_weights(n, &edges).unwrap();
        let exact = cheeger(&chain, CheegerMode::Exact).unwrap();
        let sweep = cheeger(&chain, CheegerMode::Sweep).unwrap();
        prop_assert!(sweep.phi >= exact.phi - 1e-12);
        prop_assert!((boundary_ratio(&chain, &exact.witness) - exact.phi).abs() < 1e-12);
        prop_assert!(chain.mass(&exact.witness) <= 0.5 + 1e-12);
    }

    #[test]
    fn walks_reproduce_from_seed((chain, s) in chain_and_set(12), seed in any::<u64>()) {
        let start = MeasureOnSet::dense(chain.pi().to_vec()).unwrap();
        let a = chain.sample_walk(&start, &s, &mut rng_from_seed(seed), 10_000).unwrap();
        let b = chain.sample_walk(&start, &s, &mut rng_from_seed(seed), 10_000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dla_traces_are_valid((n, edges) in weighted_graph(12), seed in any::<u64>()) {
        let chain = Chain::from_weights(n, &edges).unwrap();
        for mode in [DlaMode::Exact, DlaMode::Walk] {
            let opts = DlaOptions { mode, ..DlaOptions::default() };
            let trace = dla_run(&chain, 0, n - 1, opts, seed).unwrap();
            prop_assert!(trace.is_complete());
            trace.validate(&chain).unwrap();
            let again = dla_run(&chain, 0, n - 1, opts, seed).unwrap();
            prop_assert_eq!(trace.tau, again.tau);
        }
    }
}
