//! Generated-input properties: invariants that must hold for every valid
//! structure, not just the fixed fixtures in the unit suites.

use locdep::bounds;
use locdep::covers;
use locdep::depstruct::{DependencyGraph, HyperDependence};
use locdep::rational::{int, ratio, Rational};
use locdep::selfbound::{self, certify, TabulatedFunction, Variant};
use num_traits::{One, Zero};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn arb_graph(max_n: usize) -> impl Strategy<Value = DependencyGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m).prop_map(move |mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .copied()
                .zip(mask)
                .filter_map(|(e, keep)| keep.then_some(e))
                .collect();
            DependencyGraph::from_edges(n, &edges).expect("indices in range")
        })
    })
}

/// Weights shaped `numer/denom` with `1 <= numer <= denom <= 6`.
fn arb_weight() -> impl Strategy<Value = Rational> {
    (1i64..=6).prop_flat_map(|denom| (1i64..=denom).prop_map(move |numer| ratio(numer, denom)))
}

fn arb_hd(max_sources: usize, max_vars: usize) -> impl Strategy<Value = HyperDependence> {
    (1..=max_sources).prop_flat_map(move |n_sources| {
        proptest::collection::vec(
            proptest::collection::btree_set(0..n_sources, 1..=n_sources),
            1..=max_vars,
        )
        .prop_map(move |sets| HyperDependence::new(n_sources, sets).expect("nonempty source sets"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(64)
    })]

    #[test]
    fn cover_chain_and_independence_floor(g in arb_graph(8)) {
        let (chi, _) = covers::chromatic_number(&g, 24).unwrap();
        let (chi_star, witness) = covers::fractional_chromatic(&g, 24).unwrap();
        prop_assert!(chi_star <= int(chi as i64));
        prop_assert!(chi <= g.max_degree() + 1);
        // chi* is at least n over the largest independent set size.
        let sets = covers::maximal_independent_sets(&g, 24).unwrap();
        let alpha = sets.iter().map(|s| s.len()).max().unwrap();
        prop_assert!(chi_star.clone() * int(alpha as i64) >= int(g.n() as i64));
        let report = covers::verify_cover(&g, &witness).unwrap();
        prop_assert!(report.proper && report.fractional);
    }

    #[test]
    fn exactify_is_weight_preserving_and_exact(
        g in arb_graph(7),
        extra_weights in proptest::collection::vec(arb_weight(), 1..4),
        seeds in proptest::collection::vec(0usize..128, 1..4),
    ) {
        let (_, base) = covers::fractional_chromatic(&g, 24).unwrap();
        let mut parts = base.parts().to_vec();
        for (w, seed) in extra_weights.iter().zip(seeds) {
            // A deterministic greedy independent set keyed by the seed.
            let mut set = BTreeSet::new();
            for v in 0..g.n() {
                let v = (v + seed) % g.n();
                if set.iter().all(|&u| !g.has_edge(u, v)) {
                    set.insert(v);
                }
            }
            parts.push((set, w.clone()));
        }
        let cover = covers::FractionalCover::new(g.n(), parts).unwrap();
        let exact = covers::exactify(&cover).unwrap();
        prop_assert_eq!(exact.total_weight(), cover.total_weight());
        for i in 0..g.n() {
            prop_assert!(exact.coverage(i).is_one());
        }
        let report = covers::verify_cover(&g, &exact).unwrap();
        prop_assert!(report.proper && report.exact);
        for (set, _) in exact.parts() {
            prop_assert!(
                set.is_empty() || cover.parts().iter().any(|(s, _)| set.is_subset(s))
            );
        }
    }

    #[test]
    fn reduce_caps_parameters_by_closed_neighborhood(hd in arb_hd(6, 5)) {
        let m = hd.derived_graph().max_degree() + 1;
        let reduced = hd.reduce();
        let p = reduced.params();
        prop_assert!(p.k <= m, "k' = {} > m = {m}", p.k);
        prop_assert!(p.l <= m, "l' = {} > m = {m}", p.l);
        prop_assert_eq!(reduced.n_vars(), hd.n_vars());
    }

    #[test]
    fn weighted_counts_certify_all_variants(
        weights in proptest::collection::vec((0i64..=4, 1i64..=4), 1..5),
    ) {
        // f(x) = sum w_i x_i with w_i in [0, 1] over binary coordinates.
        let w: Vec<Rational> = weights
            .iter()
            .map(|&(n, d)| ratio(n.min(d), d))
            .collect();
        let n = w.len();
        let f = TabulatedFunction::from_fn(vec![2; n], |p| {
            p.iter()
                .zip(&w)
                .filter(|&(&x, _)| x == 1)
                .map(|(_, wi)| wi.clone())
                .fold(Rational::zero(), |acc, wi| acc + wi)
        })
        .unwrap();
        let alpha: Vec<TabulatedFunction<Rational>> = w
            .iter()
            .map(|wi| TabulatedFunction::from_fn(vec![2; n], |_| wi.clone()).unwrap())
            .collect();
        // The alpha totals are constant, so the budget must cover them at f = 0.
        let total: Rational = w.iter().cloned().fold(Rational::zero(), |acc, wi| acc + wi);
        let strong = certify(&f, Variant::AlphaSb, &int(0), &total, Some(&alpha)).unwrap();
        prop_assert!(strong.holds, "alpha violation {}", strong.worst_violation);
        let sb = certify(&f, Variant::Sb, &int(1), &int(0), None).unwrap();
        prop_assert!(sb.holds, "sb violation {}", sb.worst_violation);
        let weak = certify(&f, Variant::WeakSb, &int(1), &int(0), None).unwrap();
        prop_assert!(weak.holds, "weak violation {}", weak.worst_violation);
    }

    #[test]
    fn tail_curves_never_increase_in_t(
        chi_num in 2i64..=8,
        k in 1usize..=4,
        l in 1usize..=4,
        range in 0.5f64..4.0,
        count in 2usize..=12,
    ) {
        let chi = ratio(chi_num, 2);
        let grid: Vec<f64> = (0..count).map(|i| i as f64 * 0.7).collect();
        let ranges = vec![range; 6];
        let evals: Vec<f64> = grid
            .iter()
            .map(|&t| bounds::janson_hoeffding(&chi, &ranges, t).unwrap().raw)
            .collect();
        prop_assert!(evals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        let evals: Vec<f64> = grid
            .iter()
            .map(|&t| bounds::talagrand_hd(k, l, t).unwrap().raw)
            .collect();
        prop_assert!(evals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        for &t in &grid {
            let e = bounds::eigenvalue_tail(1, k, l, t).unwrap();
            prop_assert!(e.capped() <= 1.0 && e.capped() >= 0.0);
        }
    }

    #[test]
    fn inf_marginals_match_direct_minimum(
        sizes in proptest::collection::vec(2usize..=3, 1..=4),
        salt in any::<u64>(),
    ) {
        let f = TabulatedFunction::from_fn(sizes.clone(), |p| {
            // Deterministic pseudo-values keyed by the point and the salt.
            let mut h = salt;
            for &c in p {
                h = h.wrapping_mul(6364136223846793005).wrapping_add(c as u64 + 1);
            }
            (h >> 32) as f64 / 4294967296.0
        })
        .unwrap();
        let marginals = selfbound::inf_marginals(&f);
        prop_assert_eq!(marginals.len(), sizes.len());
        for idx in 0..f.domain_size() {
            let point = f.point_of(idx);
            for (i, g) in marginals.iter().enumerate() {
                let direct = (0..sizes[i])
                    .map(|v| {
                        let mut q = point.clone();
                        q[i] = v;
                        *f.value(&q)
                    })
                    .fold(f64::INFINITY, f64::min);
                // The marginal table lives on the domain without coordinate i.
                let mut reduced = point.clone();
                reduced.remove(i);
                prop_assert_eq!(*g.value(&reduced), direct);
            }
        }
    }

    #[test]
    fn convex_distance_basic_geometry(
        n in 1usize..=4,
        point_seeds in proptest::collection::vec(0u32..16, 1..=6),
        x_seed in 0u32..16,
    ) {
        let to_point = |s: u32| -> Vec<usize> { (0..n).map(|i| ((s >> i) & 1) as usize).collect() };
        let x = to_point(x_seed);
        let points: Vec<Vec<usize>> = point_seeds.iter().map(|&s| to_point(s)).collect();
        let d = selfbound::convex_distance(&x, &points).unwrap();
        // Never farther than the nearest point in Hamming terms.
        let nearest = points
            .iter()
            .map(|y| x.iter().zip(y).filter(|(a, b)| a != b).count())
            .min()
            .unwrap();
        prop_assert!(d <= (nearest as f64).sqrt() + 1e-12);
        prop_assert_eq!(d == 0.0, points.contains(&x));
        // Adding a point can only bring the hull closer.
        let mut more = points.clone();
        more.push(to_point(x_seed ^ 1));
        if more.len() <= selfbound::CONVEX_DISTANCE_MAX_POINTS {
            let d2 = selfbound::convex_distance(&x, &more).unwrap();
            prop_assert!(d2 <= d + 1e-12);
        }
    }
}
