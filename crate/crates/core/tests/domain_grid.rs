//! Soundness of the numeric domains by exhaustive enumeration of the integer
//! grid [-8, 8]^n for n ≤ 4.

mod common;

use common::grid::*;
use numlab::numdom::{Intervals, Polyhedron};
use numlab::Int;
use proptest::prelude::*;

macro_rules! grid_suite {
    ($m:ident, $d:ty) => {
        mod $m {
            use super::*;

            proptest! {
                #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

                #[test]
                fn construction((n, s) in small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4)))) {
                    check_construction::<$d>(n, &s)?;
                }

                #[test]
                fn join_and_widen_cover_inputs((n, a, b) in small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), raw_state(n, 4)))) {
                    check_join_widen::<$d>(n, &a, &b)?;
                }

                #[test]
                fn order_entailment_and_bounds((n, a, b, c) in small_n().prop_flat_map(|n| (Just(n), raw_state(n, 3), raw_state(n, 3), raw_cons(n)))) {
                    check_order::<$d>(n, &a, &b, &c)?;
                }

                #[test]
                fn guards((n, s, l, op, r) in small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), expr(n), cmp(), expr(n)))) {
                    check_guard::<$d>(n, &s, &l, op, &r)?;
                }

                #[test]
                fn updates((n, s, p, rhs, m) in update_case()) {
                    check_update::<$d>(n, &s, p, &rhs, m)?;
                }

                #[test]
                fn projection((n, s, away) in small_n().prop_flat_map(|n| (Just(n), raw_state(n, 4), prop::collection::btree_set(0..n, 0..=n)))) {
                    check_project::<$d>(n, &s, &away)?;
                }

                #[test]
                fn widening_stabilizes((n, steps) in chain_case()) {
                    check_widening::<$d>(n, &steps)?;
                }
            }
        }
    };
}

grid_suite!(intervals, Intervals<String, Int>);
grid_suite!(polyhedra, Polyhedron<String, Int>);
