//! Rug / quasi-carpet / carpet classification of trajectories and the
//! symmetry-inheritance prediction.
//!
//! Symmetry is checked at every step from 0 to the horizon. Density, stripe
//! and hole criteria are audited from `warmup` to the horizon, after the
//! transient in which every small seed still has a sparse, gappy box.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::geometry::figure_symmetry;
use crate::lattice::LatticeState;
use crate::masks::{SymmetryClass, SymmetrySignature};
use crate::metrics::density;
use crate::periodicity::MatchMode;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("trajectory ends at t = {got}, horizon is {need}")]
    HorizonNotReached { need: usize, got: usize },
    #[error("invalid criteria: {0}")]
    InvalidCriteria(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarpetCriteria {
    pub min_density: f64,
    pub max_stripe_fraction: f64,
    pub max_hole_fraction: f64,
    pub horizon: usize,
    /// First step at which density, stripes and holes are audited.
    pub warmup: usize,
}

impl Default for CarpetCriteria {
    fn default() -> Self {
        CarpetCriteria {
            min_density: 0.056,
            max_stripe_fraction: 0.10,
            max_hole_fraction: 0.10,
            horizon: 80,
            warmup: 32,
        }
    }
}

impl CarpetCriteria {
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if !frac(self.min_density) || !frac(self.max_stripe_fraction) || !frac(self.max_hole_fraction) {
            return Err(TaxonomyError::InvalidCriteria("fractions must lie in (0, 1)"));
        }
        if self.horizon < 1 {
            return Err(TaxonomyError::InvalidCriteria("horizon must be at least 1"));
        }
        if self.warmup > self.horizon {
            return Err(TaxonomyError::InvalidCriteria("warmup exceeds horizon"));
        }
        Ok(())
    }
}

/// Empty bands and central hole of one state, as fractions of its bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Audit {
    /// Widest run of empty rows over the box height.
    pub horizontal_stripe: f64,
    /// Widest run of empty columns over the box width.
    pub vertical_stripe: f64,
    /// Side of the largest empty square centered in the middle half of the box, over the shorter box side.
    pub central_hole: f64,
}

impl Audit {
    pub fn worst_stripe(&self) -> f64 {
        self.horizontal_stripe.max(self.vertical_stripe)
    }

    pub fn passes(&self, c: &CarpetCriteria) -> bool {
        self.worst_stripe() <= c.max_stripe_fraction && self.central_hole <= c.max_hole_fraction
    }
}

fn longest_run(flags: impl Iterator<Item = bool>) -> usize {
    let (mut best, mut cur) = (0, 0);
    for f in flags {
        cur = if f { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

pub fn stripe_and_hole_audit(state: &LatticeState) -> Audit {
    let Some(b) = state.bounding_box() else { return Audit::default() };
    let s = state.reframed(b);
    let (w, h) = (b.width(), b.height());
    let v = s.values();
    let empty_rows = longest_run((0..h).map(|y| v[y * w..(y + 1) * w].iter().all(|&c| c == 0)));
    let empty_cols = longest_run((0..w).map(|x| (0..h).all(|y| v[y * w + x] == 0)));

    // dp[x] = side of the largest empty square whose bottom-right cell is (x, y)
    let (wi, hi) = (w as i64, h as i64);
    let mut prev = vec![0i64; w];
    let mut cur = vec![0i64; w];
    let mut best = 0i64;
    for y in 0..h {
        for x in 0..w {
            cur[x] = if v[y * w + x] != 0 {
                0
            } else if x == 0 || y == 0 {
                1
            } else {
                1 + prev[x].min(prev[x - 1]).min(cur[x - 1])
            };
            if cur[x] <= best {
                continue;
            }
            // center of a side-n square ending at cell x is x + 1 - n/2; it must lie in [w/4, 3w/4]
            let (xi, yi) = (x as i64, y as i64);
            let hi_n = cur[x].min((4 * xi + 4 - wi) / 2).min((4 * yi + 4 - hi) / 2);
            let lo_n = ((4 * xi + 4 - 3 * wi + 1) / 2).max((4 * yi + 4 - 3 * hi + 1) / 2).max(1);
            if hi_n >= lo_n {
                best = best.max(hi_n);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Audit {
        horizontal_stripe: empty_rows as f64 / h as f64,
        vertical_stripe: empty_cols as f64 / w as f64,
        central_hole: best as f64 / w.min(h) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Carpet,
    QuasiCarpet,
    RugChaotic,
    RugDisappearing,
    RugSolid,
}

impl Verdict {
    pub fn is_rug(self) -> bool {
        matches!(self, Verdict::RugChaotic | Verdict::RugDisappearing | Verdict::RugSolid)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Carpet => "carpet",
            Verdict::QuasiCarpet => "quasi-carpet",
            Verdict::RugChaotic => "rug-chaotic",
            Verdict::RugDisappearing => "rug-disappearing",
            Verdict::RugSolid => "rug-solid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureClass {
    pub verdict: Verdict,
    /// Minimum ρ over the audited steps.
    pub min_rho: f64,
    pub min_rho_at: usize,
    pub worst_stripe: f64,
    pub worst_stripe_at: usize,
    pub worst_hole: f64,
    pub worst_hole_at: usize,
    /// Double symmetry held at every step 0..=horizon.
    pub sym_persisted: bool,
    pub first_asymmetric_step: Option<usize>,
    /// Reflections that held at every step.
    pub persistent_axes: SymmetrySignature,
    /// Steps with empty support.
    pub vanishing_times: Vec<usize>,
    /// Steps t >= 1 with support at most twice the seed's.
    pub seed_scale_times: Vec<usize>,
}

/// Times share a stride when all consecutive gaps are multiples of the smallest gap.
fn periodic(times: &[usize]) -> bool {
    if times.len() < 2 {
        return false;
    }
    let gaps: Vec<usize> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let g = *gaps.iter().min().expect("two times");
    gaps.iter().all(|&d| d % g == 0)
}

pub fn classify(trajectory: &Trajectory, criteria: &CarpetCriteria) -> Result<FigureClass, TaxonomyError> {
    criteria.validate()?;
    if trajectory.is_empty() || trajectory.horizon() < criteria.horizon {
        return Err(TaxonomyError::HorizonNotReached { need: criteria.horizon, got: trajectory.horizon() });
    }
    let states = &trajectory.states()[..=criteria.horizon];
    let seed_support = states[0].support_size();

    let mut persistent = SymmetrySignature::FULL;
    let mut first_asymmetric_step = None;
    let mut vanishing_times = Vec::new();
    let mut seed_scale_times = Vec::new();
    let (mut min_rho, mut min_rho_at) = (f64::INFINITY, 0);
    let (mut worst_stripe, mut worst_stripe_at) = (0.0, 0);
    let (mut worst_hole, mut worst_hole_at) = (0.0, 0);

    for (t, s) in states.iter().enumerate() {
        let sig = figure_symmetry(s, MatchMode::Exact);
        persistent.horizontal &= sig.horizontal;
        persistent.vertical &= sig.vertical;
        persistent.diagonal &= sig.diagonal;
        persistent.anti_diagonal &= sig.anti_diagonal;
        if first_asymmetric_step.is_none() && sig.class() != SymmetryClass::DoubleSymmetric {
            first_asymmetric_step = Some(t);
        }
        let support = s.support_size();
        if support == 0 {
            vanishing_times.push(t);
        }
        if t >= 1 && support <= 2 * seed_support {
            seed_scale_times.push(t);
        }
        if t < criteria.warmup {
            continue;
        }
        let rho = density(s);
        if rho < min_rho {
            (min_rho, min_rho_at) = (rho, t);
        }
        let a = stripe_and_hole_audit(s);
        if a.worst_stripe() > worst_stripe {
            (worst_stripe, worst_stripe_at) = (a.worst_stripe(), t);
        }
        if a.central_hole > worst_hole {
            (worst_hole, worst_hole_at) = (a.central_hole, t);
        }
    }

    let sym_persisted = first_asymmetric_step.is_none();
    let criteria_hold = min_rho >= criteria.min_density
        && worst_stripe <= criteria.max_stripe_fraction
        && worst_hole <= criteria.max_hole_fraction;
    let verdict = if sym_persisted {
        if criteria_hold {
            Verdict::Carpet
        } else {
            Verdict::QuasiCarpet
        }
    } else if !vanishing_times.is_empty() || periodic(&seed_scale_times) {
        Verdict::RugDisappearing
    } else if persistent.any() {
        Verdict::RugSolid
    } else {
        Verdict::RugChaotic
    };
    Ok(FigureClass {
        verdict,
        min_rho,
        min_rho_at,
        worst_stripe,
        worst_stripe_at,
        worst_hole,
        worst_hole_at,
        sym_persisted,
        first_asymmetric_step,
        persistent_axes: persistent,
        vanishing_times,
        seed_scale_times,
    })
}

/// Expected large-scale outcome for a seed class (rows) and a mask class (columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedOutcome {
    /// double × double: the only case that may give quasi-carpets or carpets.
    CarpetPossible,
    /// double seed × single-axis mask.
    SingleAxisSurvives,
    /// single-axis seed × double mask.
    SingleAxisPersists,
    /// single × single: one axis persists when the axes agree.
    SingleAxisIfConcordant,
    /// any symmetric seed × asymmetric mask.
    ChaoticNoCarpet,
    /// asymmetric seed × double mask.
    SingleAxisMayAppear,
    /// asymmetric seed × single-axis mask.
    OneAxisPossible,
    /// asymmetric × asymmetric.
    FullyChaotic,
}

impl ExpectedOutcome {
    pub fn carpet_possible(self) -> bool {
        self == ExpectedOutcome::CarpetPossible
    }
}

impl fmt::Display for ExpectedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpectedOutcome::CarpetPossible => "carpet-possible",
            ExpectedOutcome::SingleAxisSurvives => "single-axis-survives",
            ExpectedOutcome::SingleAxisPersists => "single-axis-persists",
            ExpectedOutcome::SingleAxisIfConcordant => "single-axis-if-concordant",
            ExpectedOutcome::ChaoticNoCarpet => "chaotic-no-carpet",
            ExpectedOutcome::SingleAxisMayAppear => "single-axis-may-appear",
            ExpectedOutcome::OneAxisPossible => "one-axis-possible",
            ExpectedOutcome::FullyChaotic => "fully-chaotic",
        })
    }
}

pub fn predict_class(seed: &SymmetrySignature, mask: &SymmetrySignature) -> ExpectedOutcome {
    use ExpectedOutcome::*;
    use SymmetryClass::*;
    match (seed.class(), mask.class()) {
        (DoubleSymmetric, DoubleSymmetric) => CarpetPossible,
        (DoubleSymmetric, SingleAxis) => SingleAxisSurvives,
        (SingleAxis, DoubleSymmetric) => SingleAxisPersists,
        (SingleAxis, SingleAxis) => SingleAxisIfConcordant,
        (DoubleSymmetric | SingleAxis, Asymmetric) => ChaoticNoCarpet,
        (Asymmetric, DoubleSymmetric) => SingleAxisMayAppear,
        (Asymmetric, SingleAxis) => OneAxisPossible,
        (Asymmetric, Asymmetric) => FullyChaotic,
    }
}
