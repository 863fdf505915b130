//! Seed returns, replication events and the predicted replication laws.
//!
//! A replication of `F` in `G` is an exact cover: `G` is the disjoint union of
//! translated copies of `F`. Scanning `G` in row order, the first uncovered
//! cell can only be covered by a copy whose own first cell sits there, so the
//! decomposition is forced and unique; the scan either builds it or proves
//! that none exists.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::lattice::{LatticeState, Point};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PeriodError {
    #[error("modulus {0} is outside 2..=16")]
    UnsupportedK(u8),
    #[error("no predicted time within the law's horizon satisfies 2t >= ws")]
    EmptyLawWithinHorizon,
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("parts sum to {sum}, expected {t}")]
    PartsMismatch { t: u64, sum: u64 },
    #[error("bad arguments: {0}")]
    BadArgument(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodKind {
    Small,
    Big,
}

impl fmt::Display for PeriodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodKind::Small => "small",
            PeriodKind::Big => "big",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Residues must agree.
    #[default]
    Exact,
    /// Only supports must agree.
    SupportOnly,
}

/// Decomposition of one figure into translated copies of another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replication {
    /// Non-identity shifts, sorted by (dx, dy).
    pub copies: Vec<Point>,
    /// Whether the untranslated figure is one of the copies.
    pub identity: bool,
    pub kind: PeriodKind,
}

impl Replication {
    pub fn total_copies(&self) -> usize {
        self.copies.len() + usize::from(self.identity)
    }

    /// All shifts including (0,0) when present, sorted by (dx, dy).
    pub fn all_shifts(&self) -> Vec<Point> {
        let mut v = self.copies.clone();
        if self.identity {
            v.push(Point::ORIGIN);
        }
        v.sort();
        v
    }

    /// Copies per row or column of the arrangement: the larger count of distinct dx or dy.
    pub fn copies_per_line(&self) -> usize {
        let shifts = self.all_shifts();
        let xs: BTreeSet<i64> = shifts.iter().map(|p| p.x).collect();
        let ys: BTreeSet<i64> = shifts.iter().map(|p| p.y).collect();
        xs.len().max(ys.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationEvent {
    pub tau: usize,
    pub shifted_by: usize,
    pub replication: Replication,
    pub mode: MatchMode,
}

impl ReplicationEvent {
    /// Number of translated copies (the identity copy is reported separately).
    pub fn s(&self) -> usize {
        self.replication.copies.len()
    }

    pub fn kind(&self) -> PeriodKind {
        self.replication.kind
    }

    /// `t=<τ> kind=<small|big> s=<copies> shifts=[(dx,dy),...] exact=<bool> identity=<bool>`
    pub fn log_line(&self) -> String {
        let shifts: Vec<String> = self.replication.copies.iter().map(|p| p.to_string()).collect();
        let mut line = format!(
            "t={} kind={} s={} shifts=[{}] exact={} identity={}",
            self.tau,
            self.replication.kind,
            self.s(),
            shifts.join(","),
            self.mode == MatchMode::Exact,
            self.replication.identity
        );
        if self.shifted_by > 0 {
            line.push_str(&format!(" t0={}", self.shifted_by));
        }
        line
    }
}

/// Whether rectangles of a `w`×`h` figure placed at `shifts` are pairwise disjoint.
pub fn rectangles_disjoint(shifts: &[Point], w: i64, h: i64) -> bool {
    let mut grid: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
    for &p in shifts {
        let key = (p.x.div_euclid(w), p.y.div_euclid(h));
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = grid.get(&(key.0 + dx, key.1 + dy)) {
                    if v.iter().any(|q| (q.x - p.x).abs() < w && (q.y - p.y).abs() < h) {
                        return false;
                    }
                }
            }
        }
        grid.entry(key).or_default().push(p);
    }
    true
}

/// Exact-cover decomposition of `g` into at least two translated copies of `f`.
pub fn detect_replication(f: &LatticeState, g: &LatticeState, mode: MatchMode) -> Option<Replication> {
    let shifts = decompose(f, g, mode)?;
    if shifts.len() < 2 {
        return None;
    }
    let fb = f.bounding_box()?;
    let kind = if rectangles_disjoint(&shifts, fb.width() as i64, fb.height() as i64) {
        PeriodKind::Big
    } else {
        PeriodKind::Small
    };
    let identity = shifts.contains(&Point::ORIGIN);
    let mut copies: Vec<Point> = shifts.into_iter().filter(|&p| p != Point::ORIGIN).collect();
    copies.sort();
    Some(Replication { copies, identity, kind })
}

/// All shifts of the forced cover, sorted, or `None` when `g` is not a disjoint union of copies of `f`.
pub fn decompose(f: &LatticeState, g: &LatticeState, mode: MatchMode) -> Option<Vec<Point>> {
    let fcells: Vec<(Point, u8)> = f.cells().collect();
    let (anchor, _) = *fcells.first()?;
    let rel: Vec<(Point, u8)> = fcells.iter().map(|&(p, v)| (p - anchor, v)).collect();
    let n = g.support_size();
    if n == 0 || !n.is_multiple_of(rel.len()) {
        return None;
    }
    let gb = g.bounding_box()?;
    let g = g.reframed(gb);
    let (w, h) = (gb.width() as i64, gb.height() as i64);
    let mut rem: Vec<u8> = g.values().to_vec();
    let mut shifts = Vec::with_capacity(n / rel.len());
    for i in 0..rem.len() {
        if rem[i] == 0 {
            continue;
        }
        let (cx, cy) = ((i as i64) % w, (i as i64) / w);
        for &(d, v) in &rel {
            let (x, y) = (cx + d.x, cy + d.y);
            if x < 0 || y < 0 || x >= w || y >= h {
                return None;
            }
            let j = (y * w + x) as usize;
            let ok = match mode {
                MatchMode::Exact => rem[j] == v,
                MatchMode::SupportOnly => rem[j] != 0,
            };
            if !ok {
                return None;
            }
            rem[j] = 0;
        }
        shifts.push(Point::new(gb.min_x + cx, gb.min_y + cy) - anchor);
    }
    shifts.sort();
    Some(shifts)
}

/// Rebuilds the union of copies of `f` at the given shifts (overlaps keep the last value).
pub fn reconstruct(f: &LatticeState, shifts: &[Point]) -> LatticeState {
    LatticeState::from_cells(shifts.iter().flat_map(|&s| f.cells().map(move |(p, v)| (p + s, v))))
}

/// Steps t >= 1 at which the seed reappears in its own bounding box and the whole
/// state is the seed or a union of its copies.
pub fn detect_return(trajectory: &Trajectory, seed: &LatticeState) -> Vec<usize> {
    let Some(sb) = seed.bounding_box() else { return Vec::new() };
    let window = seed.reframed(sb);
    trajectory
        .states()
        .par_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, g)| {
            g.restricted(sb) == window && (*g == seed || detect_replication(seed, g, MatchMode::Exact).is_some())
        })
        .map(|(t, _)| t)
        .collect()
}

/// Replication events of `states[t0]` inside `states[t0 + τ]` for every grid point.
pub fn shifted_period_scan(
    trajectory: &Trajectory,
    t0_grid: &[usize],
    tau_grid: &[usize],
    mode: MatchMode,
) -> Vec<ReplicationEvent> {
    let states = trajectory.states();
    let pairs: Vec<(usize, usize)> = t0_grid
        .iter()
        .flat_map(|&t0| tau_grid.iter().map(move |&tau| (t0, tau)))
        .filter(|&(t0, tau)| tau > 0 && t0 + tau < states.len())
        .collect();
    let mut events: Vec<ReplicationEvent> = pairs
        .par_iter()
        .filter_map(|&(t0, tau)| {
            detect_replication(&states[t0], &states[t0 + tau], mode).map(|replication| ReplicationEvent {
                tau,
                shifted_by: t0,
                replication,
                mode,
            })
        })
        .collect();
    events.sort_by(|a, b| {
        (a.tau, a.shifted_by, &a.replication.copies).cmp(&(b.tau, b.shifted_by, &b.replication.copies))
    });
    events
}

/// Replication times predicted for a constant modulus: every positive multiple
/// of `period` up to `horizon`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictedLaw {
    pub k: u8,
    pub period: usize,
    pub horizon: usize,
    pub times: Vec<usize>,
    pub description: String,
}

impl PredictedLaw {
    pub fn contains(&self, t: usize) -> bool {
        t > 0 && t.is_multiple_of(self.period)
    }
}

fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [(n, 1)]
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Base period of the law for a prime power `p^e`.
fn prime_power_period(p: u64, e: u32) -> (usize, String) {
    match (p, e) {
        (2, _) => (16, "binary scale: multiples of 16".into()),
        (3, 1) => (27, "ternary: multiples of 27".into()),
        (3, _) => (81, "powers of three: multiples of 81".into()),
        (p, _) => ((p * p) as usize, format!("base {p}: multiples of {}", p * p)),
    }
}

pub fn predict_times(k: u8, horizon: usize) -> Result<PredictedLaw, PeriodError> {
    if !(2..=16).contains(&k) {
        return Err(PeriodError::UnsupportedK(k));
    }
    let parts: Vec<(usize, String)> =
        prime_factors(u64::from(k)).into_iter().map(|(p, e)| prime_power_period(p, e)).collect();
    let period = parts.iter().fold(1, |acc, (p, _)| acc / gcd(acc, *p) * p);
    let description = if parts.len() == 1 {
        parts[0].1.clone()
    } else {
        let names: Vec<String> = parts.iter().map(|(_, d)| d.clone()).collect();
        format!("intersection of [{}]: multiples of {period}", names.join("; "))
    };
    let times = (1..).map(|m| m * period).take_while(|&t| t <= horizon).collect();
    Ok(PredictedLaw { k, period, horizon, times, description })
}

/// First predicted time with 2t >= w·s.
pub fn t_big(seed_extent: usize, copies: usize, law: &PredictedLaw) -> Result<usize, PeriodError> {
    if seed_extent < 1 || copies < 2 {
        return Err(PeriodError::BadArgument("need s >= 1 and w >= 2"));
    }
    law.times.iter().copied().find(|&t| 2 * t >= copies * seed_extent).ok_or(PeriodError::EmptyLawWithinHorizon)
}

/// Whether the multinomial coefficient t! / Π parts! is nonzero modulo the prime `p`:
/// the base-`p` digits of the parts add up to those of `t` with no carries.
pub fn lucas_multinomial_odd(t: u64, parts: &[u64], p: u64) -> Result<bool, PeriodError> {
    if !is_prime(p) {
        return Err(PeriodError::NonPrime(p));
    }
    let sum: u64 = parts.iter().sum();
    if sum != t {
        return Err(PeriodError::PartsMismatch { t, sum });
    }
    let mut rest: Vec<u64> = parts.to_vec();
    let mut t = t;
    while t > 0 || rest.iter().any(|&x| x > 0) {
        let digit_sum: u64 = rest.iter().map(|x| x % p).sum();
        if digit_sum != t % p {
            return Ok(false);
        }
        t /= p;
        for x in &mut rest {
            *x /= p;
        }
    }
    Ok(true)
}
