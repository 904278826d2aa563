mod common;

use proptest::prelude::*;
use rdcc_core::measures::{classify_constraint, expected_loss, generalized_divergence, objective};
use rdcc_core::solver::update_r;
use rdcc_core::{loss_bounds, Regime};

use common::{gd_reverse, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expected_loss_within_bounds(seed in any::<u64>(), nv in 1usize..=5, nu in 1usize..=5, nw in 1usize..=5) {
        let mut rng = rng(seed);
        let p = common::random_general(&mut rng, nv, nu, nw);
        let q = common::random_weight(&mut rng, &p);
        let b = loss_bounds(&p);
        let l = expected_loss(&p, &q);
        prop_assert!(b.l_min - 1e-12 <= l && l <= b.l_max + 1e-12);
    }

    #[test]
    fn markov_objective_is_nonnegative(seed in any::<u64>(), nv in 1usize..=5, nu in 1usize..=5, nw in 1usize..=5) {
        let mut rng = rng(seed);
        let p = common::random_markov(&mut rng, nv, nu, nw, false);
        let q = common::random_weight(&mut rng, &p);
        prop_assert!(objective(&p, &q) >= -1e-12);
        prop_assert!((objective(&p, &q) - common::mutual_gap(&p, &q)).abs() < 1e-10);
    }

    #[test]
    fn divergence_splits_at_the_optimal_reverse(seed in any::<u64>(), nv in 1usize..=5, nu in 1usize..=5, nw in 1usize..=5) {
        let mut rng = rng(seed);
        let p = common::random_general(&mut rng, nv, nu, nw);
        let q = common::random_weight(&mut rng, &p);
        let r = common::random_reverse(&mut rng, &p);
        let r_star = update_r(&p, &q);
        let lhs = generalized_divergence(&p, &q, &r);
        let rhs = generalized_divergence(&p, &q, &r_star) + gd_reverse(&p, &q, &r_star, &r);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn regimes_are_ordered_in_loss(seed in any::<u64>(), nv in 1usize..=4, nu in 1usize..=4) {
        let mut rng = rng(seed);
        let p = common::random_general(&mut rng, nv, nu, 2);
        let b = loss_bounds(&p);
        let mut last = Regime::Infeasible;
        for k in 0..=60 {
            let l = b.l_min - 0.5 + k as f64 * (b.l_max - b.l_min + 1.0) / 60.0;
            let regime = classify_constraint(l, &b);
            prop_assert!(regime >= last);
            last = regime;
        }
        prop_assert_eq!(classify_constraint(b.l_min, &b), Regime::Minimum);
    }
}
