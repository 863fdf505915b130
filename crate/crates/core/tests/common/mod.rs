#![allow(dead_code)]

pub mod oracle;

use modlap::{LatticeState, Mask, Point, UpdateRule};
use proptest::prelude::*;

pub fn builtin_masks() -> Vec<Mask> {
    Mask::builtin_names().map(|n| Mask::builtin(n).unwrap()).collect()
}

pub fn pts(v: &[(i64, i64)]) -> LatticeState {
    LatticeState::from_cells(v.iter().map(|&(x, y)| (Point::new(x, y), 1)))
}

/// Sparse random figure with values below `k`, placed anywhere in a small box.
pub fn arb_state(k: u8, side: i64, max_cells: usize) -> impl Strategy<Value = LatticeState> {
    prop::collection::vec(((-side..=side), (-side..=side), 1..k), 0..=max_cells)
        .prop_map(|cells| LatticeState::from_cells(cells.into_iter().map(|(x, y, v)| (Point::new(x, y), v))))
}

pub fn arb_rule() -> impl Strategy<Value = UpdateRule> {
    prop::sample::select(UpdateRule::ALL.to_vec())
}

pub fn arb_mask() -> impl Strategy<Value = Mask> {
    prop::sample::select(builtin_masks())
}
