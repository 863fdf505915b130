//! Stepping engine: one modular update per step, driven by a [`Schedule`].
//!
//! The generic path accumulates neighbor sums row by row on byte residues.
//! Modulus 2 has a bit-plane path that packs 64 cells per word and replaces
//! the sums with shifted XORs; [`Simulation`] stays in that representation
//! across consecutive binary steps.

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{BoundingBox, LatticeState, Point};
use crate::masks::Mask;

/// Windows at least this large are stepped row-parallel.
const PARALLEL_CELLS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// Σ (u(g) − u(p))
    #[default]
    Laplacian,
    /// u(p) + Σ u(g)
    IdentityPlusSum,
    /// Σ u(g)
    NeighborSum,
}

impl UpdateRule {
    pub const ALL: [UpdateRule; 3] = [UpdateRule::Laplacian, UpdateRule::IdentityPlusSum, UpdateRule::NeighborSum];

    /// Coefficient of u(p) reduced into `[0, k)`.
    pub fn center_coefficient(self, degree: usize, k: u8) -> u32 {
        let k = i64::from(k);
        match self {
            UpdateRule::Laplacian => (-(degree as i64)).rem_euclid(k) as u32,
            UpdateRule::IdentityPlusSum => 1 % k as u32,
            UpdateRule::NeighborSum => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Laplacian => "laplacian",
            UpdateRule::IdentityPlusSum => "identity-plus-sum",
            UpdateRule::NeighborSum => "neighbor-sum",
        }
    }
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "laplacian" => Ok(UpdateRule::Laplacian),
            "identity-plus-sum" | "ips" => Ok(UpdateRule::IdentityPlusSum),
            "neighbor-sum" => Ok(UpdateRule::NeighborSum),
            _ => Err(format!("unknown rule {s:?} (laplacian, identity-plus-sum, neighbor-sum)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("schedule must end with a repeating part such as \"2*\" or \"[2,3]*\"")]
    MissingCycle,
    #[error("empty repeating part")]
    EmptyCycle,
    #[error("bad modulus {0:?}")]
    BadNumber(String),
    #[error("modulus {0} is below 2")]
    TooSmall(u32),
    #[error("modulus {0} exceeds 255")]
    TooLarge(u32),
}

/// Eventually periodic modulus sequence: a finite prefix then a repeating cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Schedule {
    prefix: Vec<u8>,
    cycle: Vec<u8>,
}

impl Schedule {
    pub fn new(prefix: Vec<u8>, cycle: Vec<u8>) -> Result<Schedule, ScheduleError> {
        if cycle.is_empty() {
            return Err(ScheduleError::EmptyCycle);
        }
        if let Some(&k) = prefix.iter().chain(&cycle).find(|&&k| k < 2) {
            return Err(ScheduleError::TooSmall(u32::from(k)));
        }
        Ok(Schedule { prefix, cycle })
    }

    pub fn constant(k: u8) -> Schedule {
        Schedule::new(Vec::new(), vec![k]).expect("constant modulus >= 2")
    }

    pub fn repeating(cycle: &[u8]) -> Schedule {
        Schedule::new(Vec::new(), cycle.to_vec()).expect("valid cycle")
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    pub fn modulus_at(&self, t: usize) -> u8 {
        match self.prefix.get(t) {
            Some(&k) => k,
            None => self.cycle[(t - self.prefix.len()) % self.cycle.len()],
        }
    }

    pub fn modulus_bound(&self) -> u8 {
        self.prefix.iter().chain(&self.cycle).copied().max().expect("cycle is nonempty")
    }

    pub fn is_constant(&self, k: u8) -> bool {
        self.prefix.iter().chain(&self.cycle).all(|&m| m == k)
    }
}

fn parse_moduli(list: &str) -> Result<Vec<u8>, ScheduleError> {
    list.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: u32 = s.parse().map_err(|_| ScheduleError::BadNumber(s.into()))?;
            match v {
                0 | 1 => Err(ScheduleError::TooSmall(v)),
                256.. => Err(ScheduleError::TooLarge(v)),
                _ => Ok(v as u8),
            }
        })
        .collect()
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    /// Accepts `2*`, `[2,3]*`, `2,3,[2]*` and `2,[3,2,2]*`; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, ScheduleError> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = s.strip_suffix('*').ok_or(ScheduleError::MissingCycle)?;
        let (prefix, cycle) = if let Some(inner) = body.strip_suffix(']') {
            let open = inner.rfind('[').ok_or_else(|| ScheduleError::BadNumber(body.into()))?;
            (parse_moduli(&inner[..open])?, parse_moduli(&inner[open + 1..])?)
        } else {
            let mut all = parse_moduli(body)?;
            let last = all.pop().ok_or(ScheduleError::EmptyCycle)?;
            (all, vec![last])
        };
        Schedule::new(prefix, cycle)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u8]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        if self.prefix.is_empty() && self.cycle.len() == 1 {
            return write!(f, "{}*", self.cycle[0]);
        }
        if !self.prefix.is_empty() {
            write!(f, "{},", join(&self.prefix))?;
        }
        write!(f, "[{}]*", join(&self.cycle))
    }
}

impl TryFrom<String> for Schedule {
    type Error = ScheduleError;
    fn try_from(s: String) -> Result<Self, ScheduleError> {
        s.parse()
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.to_string()
    }
}

/// One update with modulus `k`; modulus 2 takes the bit-plane path.
pub fn step(state: &LatticeState, mask: &Mask, k: u8, rule: UpdateRule) -> LatticeState {
    if k == 2 {
        step_binary(state, mask, rule)
    } else {
        step_generic(state, mask, k, rule)
    }
}

/// Byte-residue stepper valid for every `k >= 2`.
pub fn step_generic(state: &LatticeState, mask: &Mask, k: u8, rule: UpdateRule) -> LatticeState {
    assert!(k >= 2, "modulus must be at least 2");
    let Some(win) = state.window() else { return LatticeState::zeros(Point::ORIGIN, 0, 0, k.into()) };
    let r = mask.radius() as i64;
    let (w, h) = (state.width() as i64, state.height() as i64);
    let (ow, oh) = ((w + 2 * r) as usize, (h + 2 * r) as usize);
    let center = rule.center_coefficient(mask.degree(), k);
    let kk = u32::from(k);
    let terms: Vec<(Point, u32)> =
        mask.offsets().iter().map(|&o| (o, 1u32)).chain((center != 0).then_some((Point::ORIGIN, center))).collect();

    let compute_row = |y: usize, out: &mut [u8], acc: &mut Vec<u32>| {
        acc.clear();
        acc.resize(ow, 0);
        for &(o, c) in &terms {
            let sy = y as i64 - r + o.y;
            if sy < 0 || sy >= h {
                continue;
            }
            let src = state.row(sy as usize);
            // output column X reads source column X - r + o.x
            let shift = o.x - r;
            let x0 = (-shift).max(0) as usize;
            let x1 = ((w - shift).min(ow as i64)).max(0) as usize;
            if x0 >= x1 {
                continue;
            }
            let s0 = (x0 as i64 + shift) as usize;
            let src = &src[s0..s0 + (x1 - x0)];
            if c == 1 {
                for (a, &v) in acc[x0..x1].iter_mut().zip(src) {
                    *a += u32::from(v);
                }
            } else {
                for (a, &v) in acc[x0..x1].iter_mut().zip(src) {
                    *a += c * u32::from(v);
                }
            }
        }
        for (o, &a) in out.iter_mut().zip(acc.iter()) {
            *o = (a % kk) as u8;
        }
    };

    let mut values = vec![0u8; ow * oh];
    if ow * oh >= PARALLEL_CELLS {
        values.par_chunks_mut(ow).enumerate().for_each_init(Vec::new, |acc, (y, row)| compute_row(y, row, acc));
    } else {
        let mut acc = Vec::new();
        for (y, row) in values.chunks_mut(ow).enumerate() {
            compute_row(y, row, &mut acc);
        }
    }
    let origin = Point::new(win.min_x - r, win.min_y - r);
    retighten(LatticeState::from_raw(origin, ow, oh, values, k.into()))
}

/// Crops windows that carry far more padding than support.
fn retighten(s: LatticeState) -> LatticeState {
    match s.bounding_box() {
        None => LatticeState::zeros(Point::ORIGIN, 0, 0, s.modulus_bound()),
        Some(b) if s.width() * s.height() > 2 * b.area() + 256 => s.reframed(b),
        Some(_) => s,
    }
}

/// Modulus-2 stepper on a packed copy of the state's parities.
pub fn step_binary(state: &LatticeState, mask: &Mask, rule: UpdateRule) -> LatticeState {
    BitGrid::from_state(state).step(mask, rule).to_state()
}

/// Packed parity plane: bit `x % 64` of word `x / 64` in each row; tail bits stay zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    origin: Point,
    width: usize,
    height: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitGrid {
    fn zeros(origin: Point, width: usize, height: usize) -> BitGrid {
        let stride = width.div_ceil(64);
        BitGrid { origin, width, height, stride, words: vec![0; stride * height] }
    }

    pub fn from_state(s: &LatticeState) -> BitGrid {
        let mut g = BitGrid::zeros(s.origin(), s.width(), s.height());
        for y in 0..s.height() {
            let row = &mut g.words[y * g.stride..(y + 1) * g.stride];
            for (x, &v) in s.row(y).iter().enumerate() {
                row[x / 64] |= u64::from(v & 1) << (x % 64);
            }
        }
        g
    }

    pub fn to_state(&self) -> LatticeState {
        let mut values = vec![0u8; self.width * self.height];
        for y in 0..self.height {
            let row = self.row(y);
            let out = &mut values[y * self.width..(y + 1) * self.width];
            for (j, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out[j * 64 + b] = 1;
                    bits &= bits - 1;
                }
            }
        }
        LatticeState::from_raw(self.origin, self.width, self.height, values, 2)
    }

    fn row(&self, y: usize) -> &[u64] {
        &self.words[y * self.stride..(y + 1) * self.stride]
    }

    /// 64 bits of `row` starting at bit position `start` (may be negative); absent bits are zero.
    #[inline]
    fn extract(row: &[u64], start: i64) -> u64 {
        let q = start.div_euclid(64);
        let s = start.rem_euclid(64) as u32;
        let get = |i: i64| if i >= 0 && (i as usize) < row.len() { row[i as usize] } else { 0 };
        let lo = get(q) >> s;
        if s == 0 {
            lo
        } else {
            lo | (get(q + 1) << (64 - s))
        }
    }

    fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => u64::MAX,
            n => (1u64 << n) - 1,
        }
    }

    pub fn step(&self, mask: &Mask, rule: UpdateRule) -> BitGrid {
        let r = mask.radius() as i64;
        let mut out = BitGrid::zeros(
            Point::new(self.origin.x - r, self.origin.y - r),
            self.width + 2 * r as usize,
            self.height + 2 * r as usize,
        );
        if self.width == 0 || self.height == 0 {
            return out;
        }
        let center = rule.center_coefficient(mask.degree(), 2) == 1;
        let terms: Vec<Point> = mask.offsets().iter().copied().chain(center.then_some(Point::ORIGIN)).collect();
        let tail = out.tail_mask();
        let (h, stride) = (self.height as i64, out.stride);
        let compute_row = |y: usize, dst: &mut [u64]| {
            for &o in &terms {
                let sy = y as i64 - r + o.y;
                if sy < 0 || sy >= h {
                    continue;
                }
                let src = self.row(sy as usize);
                let base = o.x - r;
                for (j, d) in dst.iter_mut().enumerate() {
                    *d ^= Self::extract(src, 64 * j as i64 + base);
                }
            }
            if let Some(last) = dst.last_mut() {
                *last &= tail;
            }
        };
        if out.words.len() * 64 >= PARALLEL_CELLS * 4 {
            out.words.par_chunks_mut(stride).enumerate().for_each(|(y, row)| compute_row(y, row));
        } else {
            for (y, row) in out.words.chunks_mut(stride).enumerate() {
                compute_row(y, row);
            }
        }
        out.retightened()
    }

    pub fn support_size(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let nonzero = |y: usize| self.row(y).iter().any(|&w| w != 0);
        let y0 = (0..self.height).find(|&y| nonzero(y))?;
        let y1 = (0..self.height).rev().find(|&y| nonzero(y))?;
        let (mut x0, mut x1) = (usize::MAX, 0usize);
        for y in y0..=y1 {
            let row = self.row(y);
            if let Some(j) = row.iter().position(|&w| w != 0) {
                x0 = x0.min(j * 64 + row[j].trailing_zeros() as usize);
            }
            if let Some(j) = row.iter().rposition(|&w| w != 0) {
                x1 = x1.max(j * 64 + 63 - row[j].leading_zeros() as usize);
            }
        }
        Some(BoundingBox {
            min_x: self.origin.x + x0 as i64,
            min_y: self.origin.y + y0 as i64,
            max_x: self.origin.x + x1 as i64,
            max_y: self.origin.y + y1 as i64,
        })
    }

    /// Ones inside `b`.
    pub fn count_in(&self, b: &BoundingBox) -> usize {
        let (ox, oy) = (self.origin.x, self.origin.y);
        let x0 = (b.min_x - ox).max(0);
        let x1 = (b.max_x - ox).min(self.width as i64 - 1);
        let y0 = (b.min_y - oy).max(0);
        let y1 = (b.max_y - oy).min(self.height as i64 - 1);
        if x0 > x1 || y0 > y1 {
            return 0;
        }
        let len = (x1 - x0 + 1) as usize;
        let mut total = 0;
        for y in y0..=y1 {
            let row = self.row(y as usize);
            let mut done = 0;
            while done < len {
                let n = (len - done).min(64);
                let m = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                total += (Self::extract(row, x0 + done as i64) & m).count_ones() as usize;
                done += n;
            }
        }
        total
    }

    fn reframed(&self, b: BoundingBox) -> BitGrid {
        let mut out = BitGrid::zeros(b.min_corner(), b.width(), b.height());
        let dx = b.min_x - self.origin.x;
        let dy = b.min_y - self.origin.y;
        let tail = out.tail_mask();
        for y in 0..out.height {
            let sy = y as i64 + dy;
            if sy < 0 || sy >= self.height as i64 {
                continue;
            }
            let src = self.row(sy as usize);
            let dst = &mut out.words[y * out.stride..(y + 1) * out.stride];
            for (j, d) in dst.iter_mut().enumerate() {
                *d = Self::extract(src, 64 * j as i64 + dx);
            }
            if let Some(last) = dst.last_mut() {
                *last &= tail;
            }
        }
        out
    }

    fn retightened(self) -> BitGrid {
        match self.bounding_box() {
            None => BitGrid::zeros(Point::ORIGIN, 0, 0),
            Some(b) if self.width * self.height > 2 * b.area() + 4096 => self.reframed(b),
            Some(_) => self,
        }
    }
}

enum Repr {
    Bytes(LatticeState),
    Bits(BitGrid),
}

/// A running trajectory. Observers see it after every step through [`Observer`].
pub struct Simulation {
    mask: Mask,
    schedule: Schedule,
    rule: UpdateRule,
    t: usize,
    repr: Repr,
    cache: OnceCell<LatticeState>,
    bit_path: bool,
}

/// Called with the simulation at t = 0 and after every step.
pub trait Observer {
    fn observe(&mut self, sim: &Simulation);
}

impl<F: FnMut(&Simulation)> Observer for F {
    fn observe(&mut self, sim: &Simulation) {
        self(sim)
    }
}

impl Simulation {
    pub fn new(seed: &LatticeState, mask: &Mask, schedule: &Schedule, rule: UpdateRule) -> Simulation {
        Simulation {
            mask: mask.clone(),
            schedule: schedule.clone(),
            rule,
            t: 0,
            repr: Repr::Bytes(seed.clone()),
            cache: OnceCell::new(),
            bit_path: true,
        }
    }

    /// Disables the bit-plane path (for cross-checking the generic path).
    pub fn without_bit_path(mut self) -> Simulation {
        self.bit_path = false;
        self
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn rule(&self) -> UpdateRule {
        self.rule
    }

    /// Modulus applied by the step that produced the current state.
    pub fn last_modulus(&self) -> Option<u8> {
        self.t.checked_sub(1).map(|t| self.schedule.modulus_at(t))
    }

    pub fn advance(&mut self) {
        let k = self.schedule.modulus_at(self.t);
        let next = match (&self.repr, k == 2 && self.bit_path) {
            (Repr::Bits(g), true) => Repr::Bits(g.step(&self.mask, self.rule)),
            (Repr::Bytes(s), true) => Repr::Bits(BitGrid::from_state(s).step(&self.mask, self.rule)),
            (Repr::Bytes(s), false) => Repr::Bytes(step_generic(s, &self.mask, k, self.rule)),
            (Repr::Bits(g), false) => Repr::Bytes(step_generic(&g.to_state(), &self.mask, k, self.rule)),
        };
        self.repr = next;
        self.cache = OnceCell::new();
        self.t += 1;
    }

    /// Current state; materialized from the bit plane on first use.
    pub fn state(&self) -> &LatticeState {
        match &self.repr {
            Repr::Bytes(s) => s,
            Repr::Bits(g) => self.cache.get_or_init(|| g.to_state()),
        }
    }

    pub fn into_state(self) -> LatticeState {
        match self.repr {
            Repr::Bytes(s) => s,
            Repr::Bits(g) => self.cache.into_inner().unwrap_or_else(|| g.to_state()),
        }
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        match &self.repr {
            Repr::Bytes(s) => s.bounding_box(),
            Repr::Bits(g) => g.bounding_box(),
        }
    }

    pub fn support_size(&self) -> usize {
        match &self.repr {
            Repr::Bytes(s) => s.support_size(),
            Repr::Bits(g) => g.support_size(),
        }
    }

    /// Cells inside `b` per residue `0..k`.
    pub fn residue_counts(&self, b: &BoundingBox, k: usize) -> Vec<usize> {
        match &self.repr {
            Repr::Bytes(s) => s.residue_counts(b, k),
            Repr::Bits(g) => {
                let ones = g.count_in(b);
                let mut c = vec![0; k.max(2)];
                c[0] = b.area() - ones;
                c[1] = ones;
                c
            }
        }
    }
}

/// Steps `t_max` times, calling every observer at t = 0 and after each step.
pub fn run(
    seed: &LatticeState,
    mask: &Mask,
    schedule: &Schedule,
    rule: UpdateRule,
    t_max: usize,
    observers: &mut [&mut dyn Observer],
) -> Simulation {
    let mut sim = Simulation::new(seed, mask, schedule, rule);
    for o in observers.iter_mut() {
        o.observe(&sim);
    }
    for _ in 0..t_max {
        sim.advance();
        for o in observers.iter_mut() {
            o.observe(&sim);
        }
    }
    sim
}

/// Tight copies of every state of a run, index = step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<LatticeState>,
}

impl Trajectory {
    pub fn record(seed: &LatticeState, mask: &Mask, schedule: &Schedule, rule: UpdateRule, t_max: usize) -> Trajectory {
        let mut tr = Trajectory::default();
        run(seed, mask, schedule, rule, t_max, &mut [&mut tr]);
        tr
    }

    pub fn from_states(states: Vec<LatticeState>) -> Trajectory {
        Trajectory { states }
    }

    pub fn states(&self) -> &[LatticeState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Last step index.
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

impl Observer for Trajectory {
    fn observe(&mut self, sim: &Simulation) {
        self.states.push(sim.state().tightened());
    }
}
