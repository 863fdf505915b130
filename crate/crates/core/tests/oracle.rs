mod common;

use common::oracle::{brute_hull_vertices, brute_symmetry, oracle_decompose, oracle_step, SizeLimitExceeded};
use common::{arb_mask, arb_rule, arb_state, pts};
use modlap::dynamics::{step, step_generic};
use modlap::geometry::{convex_hull, figure_symmetry};
use modlap::periodicity::{decompose, detect_replication, MatchMode};
use modlap::{LatticeState, Mask, Point, UpdateRule};
use proptest::prelude::*;

#[test]
fn point_under_moore_gives_ring() {
    let moore = Mask::builtin("moore").unwrap();
    let out = oracle_step(&LatticeState::point(), &moore, 2, UpdateRule::Laplacian);
    let ring = LatticeState::from_text("111\n1.1\n111\n").unwrap().translated(Point::new(-1, -1));
    assert_eq!(out, ring);
    assert_eq!(step(&LatticeState::point(), &moore, 2, UpdateRule::Laplacian), ring);
}

#[test]
fn point_under_von_neumann_mod_3() {
    let vn = Mask::builtin("von-neumann").unwrap();
    // center: 4·(0 − 1) ≡ 2, arms: 1
    let want = LatticeState::from_text(".1.\n121\n.1.\n").unwrap().translated(Point::new(-1, -1));
    assert_eq!(oracle_step(&LatticeState::point(), &vn, 3, UpdateRule::Laplacian), want);
}

#[test]
fn two_cells_superpose() {
    let vn = Mask::builtin("von-neumann").unwrap();
    let a = LatticeState::point();
    let b = LatticeState::point().translated(Point::new(3, 1));
    let both = a.add_mod(&b, 3);
    let sum =
        oracle_step(&a, &vn, 3, UpdateRule::Laplacian).add_mod(&oracle_step(&b, &vn, 3, UpdateRule::Laplacian), 3);
    assert_eq!(oracle_step(&both, &vn, 3, UpdateRule::Laplacian), sum);
}

#[test]
fn decompose_points() {
    let g = pts(&[(0, 0), (5, 0), (0, 7), (-3, -3)]);
    let all = oracle_decompose(&LatticeState::point(), &g).unwrap();
    assert_eq!(all.len(), 1);
    assert_eq!(all[0].len(), 4);
}

#[test]
fn decompose_domino_is_identity_only() {
    let d = pts(&[(0, 0), (1, 0)]);
    assert_eq!(oracle_decompose(&d, &d).unwrap(), vec![vec![Point::ORIGIN]]);
    assert!(detect_replication(&d, &d, MatchMode::Exact).is_none());
}

#[test]
fn decompose_size_limit() {
    let big = LatticeState::from_cells((0..65).map(|i| (Point::new(i, 0), 1)));
    assert_eq!(oracle_decompose(&LatticeState::point(), &big), Err(SizeLimitExceeded));
}

#[test]
fn hull_micro_cases() {
    let plus: Vec<Point> = pts(&[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]).support().into_iter().collect();
    assert_eq!(brute_hull_vertices(&plus).len(), 4);
    let line: Vec<Point> = (0..5).map(|i| Point::new(i, i)).collect();
    assert_eq!(brute_hull_vertices(&line), [Point::new(0, 0), Point::new(4, 4)].into_iter().collect());
}

fn shifts_strategy() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::btree_set(((-12i64..=12), (-12i64..=12)), 2..=4)
        .prop_map(|s| s.into_iter().map(|(x, y)| Point::new(x * 7, y * 7)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn stepper_matches_oracle(state in arb_state(9, 4, 12), mask in arb_mask(), k in 2u8..=9, rule in arb_rule()) {
        let s = LatticeState::from_cells(state.cells().map(|(p, v)| (p, v % k)));
        prop_assert_eq!(step(&s, &mask, k, rule), oracle_step(&s, &mask, k, rule));
        prop_assert_eq!(step_generic(&s, &mask, k, rule), oracle_step(&s, &mask, k, rule));
    }

    #[test]
    fn planted_copies_are_recovered(f in arb_state(3, 2, 5), shifts in shifts_strategy()) {
        prop_assume!(!f.is_empty());
        let g = LatticeState::from_cells(shifts.iter().flat_map(|&t| f.cells().map(move |(p, v)| (p + t, v))));
        let mut want = shifts.clone();
        want.sort();
        let all = oracle_decompose(&f, &g).unwrap();
        prop_assert_eq!(all.len(), 1);
        prop_assert!(all.contains(&want));
        let fast = decompose(&f, &g, MatchMode::Exact).unwrap();
        prop_assert!(all.contains(&fast));
    }

    #[test]
    fn decompose_agrees_with_oracle(f in arb_state(2, 1, 3), g in arb_state(2, 4, 14)) {
        let all = oracle_decompose(&f, &g).unwrap();
        prop_assert!(all.len() <= 1);
        match decompose(&f, &g, MatchMode::Exact) {
            Some(shifts) => prop_assert!(all.contains(&shifts)),
            None => prop_assert!(all.is_empty()),
        }
    }

    #[test]
    fn hull_matches_brute_force(cells in prop::collection::btree_set(((-6i64..=6), (-6i64..=6)), 1..14)) {
        let v: Vec<Point> = cells.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        let fast: std::collections::BTreeSet<Point> = convex_hull(&v).into_iter().collect();
        prop_assert_eq!(fast, brute_hull_vertices(&v));
    }

    #[test]
    fn symmetry_matches_brute_force(s in arb_state(3, 3, 10)) {
        prop_assert_eq!(figure_symmetry(&s, MatchMode::Exact), brute_symmetry(&s));
    }
}
