//! Per-step observables: relative density, period ratio, per-residue densities
//! and color entropy (nats), plus their CSV stream.

use std::io::{self, Write};

use thiserror::Error;

use crate::dynamics::{Observer, Simulation};
use crate::lattice::{BoundingBox, LatticeState};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("density at t = {0} is zero")]
    DivisionByZeroDensity(usize),
    #[error("step {0} is outside the trace")]
    OutOfTrace(usize),
    #[error("color count {k} does not exceed residue {max}")]
    ColorCountTooSmall { k: usize, max: u8 },
}

/// |A| / |r|, or 0 for an empty support.
pub fn density(state: &LatticeState) -> f64 {
    match state.bounding_box() {
        Some(b) => state.support_size() as f64 / b.area() as f64,
        None => 0.0,
    }
}

/// ρ_{t+τ} / ρ_t.
pub fn period_ratio(trace: &[f64], t: usize, tau: usize) -> Result<f64, MetricsError> {
    let a = *trace.get(t).ok_or(MetricsError::OutOfTrace(t))?;
    let b = *trace.get(t + tau).ok_or(MetricsError::OutOfTrace(t + tau))?;
    if a == 0.0 {
        return Err(MetricsError::DivisionByZeroDensity(t));
    }
    Ok(b / a)
}

/// Fractions of the bounding box holding each residue `0..k`. Empty states put everything in class 0.
pub fn per_residue_densities(state: &LatticeState, k: usize) -> Result<Vec<f64>, MetricsError> {
    check_colors(state, k)?;
    Ok(match state.bounding_box() {
        Some(b) => fractions(&state.residue_counts(&b, k)[..k], b.area()),
        None => empty_fractions(k),
    })
}

/// Shannon entropy in nats of the residue classes inside the bounding box.
pub fn color_entropy(state: &LatticeState, k: usize) -> Result<f64, MetricsError> {
    Ok(entropy(&per_residue_densities(state, k)?))
}

fn check_colors(state: &LatticeState, k: usize) -> Result<(), MetricsError> {
    let max = state.max_value();
    if k < 2 || usize::from(max) >= k {
        return Err(MetricsError::ColorCountTooSmall { k, max });
    }
    Ok(())
}

fn fractions(counts: &[usize], area: usize) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / area as f64).collect()
}

fn empty_fractions(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[0] = 1.0;
    v
}

/// −Σ p ln p with 0 ln 0 = 0.
pub fn entropy(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    h.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub t: usize,
    pub rho: f64,
    /// ρ_t / ρ_{t−τ}; absent for t < τ or a zero earlier density.
    pub kappa: Option<f64>,
    pub rho_c: Vec<f64>,
    pub entropy: f64,
    pub bbox: Option<BoundingBox>,
    pub support: usize,
}

/// Collects one [`MetricsRow`] per observed step.
#[derive(Debug, Clone)]
pub struct MetricsRecorder {
    colors: usize,
    tau: usize,
    rows: Vec<MetricsRow>,
}

pub const DEFAULT_TAU: usize = 8;

impl MetricsRecorder {
    /// `colors` is the schedule's modulus bound; `tau` the period-ratio lag.
    pub fn new(colors: usize, tau: usize) -> MetricsRecorder {
        MetricsRecorder { colors: colors.max(2), tau, rows: Vec::new() }
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<MetricsRow> {
        self.rows
    }

    pub fn densities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho).collect()
    }

    pub fn colors(&self) -> usize {
        self.colors
    }
}

impl Observer for MetricsRecorder {
    fn observe(&mut self, sim: &Simulation) {
        let t = sim.time();
        let bbox = sim.bounding_box();
        let support = sim.support_size();
        let (rho, rho_c) = match &bbox {
            Some(b) => {
                let counts = sim.residue_counts(b, self.colors);
                assert!(counts.len() == self.colors, "residue outside color range at t = {t}");
                (support as f64 / b.area() as f64, fractions(&counts, b.area()))
            }
            None => (0.0, empty_fractions(self.colors)),
        };
        let kappa = t
            .checked_sub(self.tau)
            .filter(|_| self.tau > 0)
            .and_then(|s| self.rows.get(s))
            .filter(|r| r.rho > 0.0)
            .map(|r| rho / r.rho);
        let entropy = entropy(&rho_c);
        self.rows.push(MetricsRow { t, rho, kappa, rho_c, entropy, bbox, support });
    }
}

/// Formats like C's `%.9g` (shortest of fixed/scientific, trailing zeros trimmed).
pub fn format_sig9(x: f64) -> String {
    const P: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_header(colors: usize) -> String {
    let mut h = String::from("t,rho,kappa,entropy,support,box_w,box_h");
    for c in 0..colors {
        h.push_str(&format!(",rho_{c}"));
    }
    h
}

pub fn csv_line(r: &MetricsRow) -> String {
    let (bw, bh) = r.bbox.map_or((0, 0), |b| (b.width(), b.height()));
    let mut s = format!(
        "{},{},{},{},{},{},{}",
        r.t,
        format_sig9(r.rho),
        r.kappa.map(format_sig9).unwrap_or_default(),
        format_sig9(r.entropy),
        r.support,
        bw,
        bh
    );
    for &p in &r.rho_c {
        s.push(',');
        s.push_str(&format_sig9(p));
    }
    s
}

/// Header plus one line per row, ordered by t.
pub fn write_csv<W: Write>(mut w: W, colors: usize, rows: &[MetricsRow]) -> io::Result<()> {
    writeln!(w, "{}", csv_header(colors))?;
    let mut sorted: Vec<&MetricsRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.t);
    for r in sorted {
        writeln!(w, "{}", csv_line(r))?;
    }
    w.flush()
}
