//! Desk-scale experiment campaigns: carpet sweeps over seed × mask × schedule
//! grids, constant-k period scans, density fingerprints and entropy jumps.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{run, Schedule, ScheduleError, Trajectory, UpdateRule};
use crate::lattice::LatticeState;
use crate::masks::{Mask, MaskError};
use crate::metrics::{format_sig9, MetricsRecorder, DEFAULT_TAU};
use crate::periodicity::{
    detect_replication, detect_return, predict_times, t_big, MatchMode, PeriodError, PeriodKind, PredictedLaw,
    ReplicationEvent,
};
use crate::seeds::{Seed, SeedError, SizeClass};
use crate::taxonomy::{classify, predict_class, CarpetCriteria, ExpectedOutcome, FigureClass, TaxonomyError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    Validation(String),
    #[error(transparent)]
    Criteria(#[from] TaxonomyError),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

/// Cycle `[2, k, 2, …, 2]` with `s` trailing twos.
pub fn two_k_twos(k: u8, s: usize) -> Schedule {
    let mut cycle = vec![2, k];
    cycle.extend(std::iter::repeat_n(2, s));
    Schedule::repeating(&cycle)
}

/// `(k, s)` when the schedule is a pure cycle `[2, k, 2^s]` with `k != 2`.
pub fn family_params(schedule: &Schedule) -> Option<(u8, usize)> {
    let c = schedule.cycle();
    if !schedule.prefix().is_empty() || c.len() < 2 || c[0] != 2 || c[1] == 2 {
        return None;
    }
    c[2..].iter().all(|&m| m == 2).then(|| (c[1], c.len() - 2))
}

/// Seeds by builtin name, file path, or `random-<small|medium|large>` drawn with `rng_seed`.
pub fn resolve_seed(name: &str, rng_seed: u64) -> Result<Seed, SeedError> {
    match name.strip_prefix("random-").map(str::parse::<SizeClass>) {
        Some(Ok(class)) => Seed::random(class, 0.5, rng_seed),
        _ => Seed::resolve(name),
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub seeds: Vec<Seed>,
    pub masks: Vec<Mask>,
    pub schedules: Vec<Schedule>,
    pub rule: UpdateRule,
    pub horizon: usize,
    pub criteria: CarpetCriteria,
    /// Keep only seed × mask pairs whose predicted class allows a carpet.
    pub carpet_sweep: bool,
    pub retain_traces: bool,
    pub output_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let empty = |what: &str| Err(ExperimentError::Validation(format!("{what} list is empty")));
        if self.seeds.is_empty() {
            return empty("seed");
        }
        if self.masks.is_empty() {
            return empty("mask");
        }
        if self.schedules.is_empty() {
            return empty("schedule");
        }
        self.criteria.validate()?;
        if self.horizon < self.criteria.horizon {
            return Err(ExperimentError::Validation(format!(
                "horizon {} is below the criteria horizon {}",
                self.horizon, self.criteria.horizon
            )));
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, seed) in self.seeds.iter().enumerate() {
            for (j, mask) in self.masks.iter().enumerate() {
                if !self.carpet_sweep || predict_class(&seed.symmetry(), &mask.symmetry()).carpet_possible() {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub seed: String,
    pub mask: String,
    pub schedule: Schedule,
    pub prediction: ExpectedOutcome,
    pub class: FigureClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleCount {
    pub schedule: Schedule,
    pub k: Option<u8>,
    pub s: Option<usize>,
    pub cells: usize,
    pub carpets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Ordered by schedule, then seed, then mask, as listed in the sweep.
    pub cells: Vec<CellResult>,
    /// One entry per schedule, in sweep order.
    pub counts: Vec<ScheduleCount>,
}

impl SweepResult {
    /// Carpet count summed over every schedule of the `[2, k, 2^s]` family with this `k`.
    pub fn carpets_for_k(&self, k: u8) -> usize {
        self.counts.iter().filter(|c| c.k == Some(k)).map(|c| c.carpets).sum()
    }

    /// Carpet counts keyed by `(k, s)`.
    pub fn family_counts(&self) -> BTreeMap<(u8, usize), usize> {
        let mut m = BTreeMap::new();
        for c in &self.counts {
            if let (Some(k), Some(s)) = (c.k, c.s) {
                *m.entry((k, s)).or_default() += c.carpets;
            }
        }
        m
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let pairs = spec.pairs();
    let jobs: Vec<(usize, usize, usize)> =
        (0..spec.schedules.len()).flat_map(|k| pairs.iter().map(move |&(i, j)| (k, i, j))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(k, i, j)| run_cell(spec, &spec.seeds[i], &spec.masks[j], &spec.schedules[k]))
        .collect::<Result<Vec<_>, _>>()?;
    let counts = spec
        .schedules
        .iter()
        .map(|sched| {
            let mine = cells.iter().filter(|c| &c.schedule == sched);
            let (k, s) = family_params(sched).unzip();
            let (n, carpets) = mine.fold((0, 0), |(n, c), cell| {
                (n + 1, c + usize::from(cell.class.verdict == crate::taxonomy::Verdict::Carpet))
            });
            ScheduleCount { schedule: sched.clone(), k, s, cells: n, carpets }
        })
        .collect();
    let result = SweepResult { cells, counts };
    if let Some(dir) = &spec.output_dir {
        write_sweep_outputs(&result, dir)?;
    }
    Ok(result)
}

fn run_cell(spec: &SweepSpec, seed: &Seed, mask: &Mask, schedule: &Schedule) -> Result<CellResult, ExperimentError> {
    let mut traj = Trajectory::default();
    let mut rec = MetricsRecorder::new(usize::from(schedule.modulus_bound()), DEFAULT_TAU);
    if spec.retain_traces {
        run(seed.figure(), mask, schedule, spec.rule, spec.horizon, &mut [&mut traj, &mut rec]);
    } else {
        run(seed.figure(), mask, schedule, spec.rule, spec.horizon, &mut [&mut traj]);
    }
    Ok(CellResult {
        seed: seed.name().to_string(),
        mask: mask.name().to_string(),
        schedule: schedule.clone(),
        prediction: predict_class(&seed.symmetry(), &mask.symmetry()),
        class: classify(&traj, &spec.criteria)?,
        density_trace: spec.retain_traces.then(|| rec.densities()),
    })
}

pub const CLASSIFICATION_HEADER: &str = "seed,mask,schedule,verdict,min_rho,worst_stripe,worst_hole,sym_persisted";

pub fn classification_line(c: &CellResult) -> String {
    format!(
        "{},{},\"{}\",{},{},{},{},{}",
        c.seed,
        c.mask,
        c.schedule,
        c.class.verdict,
        format_sig9(c.class.min_rho),
        format_sig9(c.class.worst_stripe),
        format_sig9(c.class.worst_hole),
        c.class.sym_persisted
    )
}

pub fn write_classification<W: Write>(mut w: W, cells: &[CellResult]) -> io::Result<()> {
    writeln!(w, "{CLASSIFICATION_HEADER}")?;
    for c in cells {
        writeln!(w, "{}", classification_line(c))?;
    }
    w.flush()
}

pub fn write_counts<W: Write>(mut w: W, counts: &[ScheduleCount]) -> io::Result<()> {
    writeln!(w, "schedule,k,s,cells,carpets")?;
    for c in counts {
        let opt = |x: Option<String>| x.unwrap_or_default();
        writeln!(
            w,
            "\"{}\",{},{},{},{}",
            c.schedule,
            opt(c.k.map(|k| k.to_string())),
            opt(c.s.map(|s| s.to_string())),
            c.cells,
            c.carpets
        )?;
    }
    w.flush()
}

/// Writes `classification.csv` and `counts.csv` into `dir`, creating it if needed.
pub fn write_sweep_outputs(result: &SweepResult, dir: &Path) -> Result<(), ExperimentError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = dir.join("classification.csv");
    let f = fs::File::create(&p).map_err(io_err(&p))?;
    write_classification(io::BufWriter::new(f), &result.cells).map_err(io_err(&p))?;
    let p = dir.join("counts.csv");
    let f = fs::File::create(&p).map_err(io_err(&p))?;
    write_counts(io::BufWriter::new(f), &result.counts).map_err(io_err(&p))?;
    Ok(())
}

/// Schedule generators accepted in campaign files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleTemplate {
    /// Cycles `[2, k, 2^s]`.
    TwoKTwos {
        k: Vec<u8>,
        s: ParamRange,
    },
    /// Cycles `[2, k]`.
    Alternating {
        k: Vec<u8>,
    },
    /// Cycles `[2, k, 2, 2]`.
    Repetitive {
        k: Vec<u8>,
    },
    /// Prefix `2, k` followed by `[2]*`.
    Phase {
        k: Vec<u8>,
    },
    Constant {
        k: Vec<u8>,
    },
}

/// Either an explicit list or an inclusive `{ "from": a, "to": b }` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRange {
    List(Vec<usize>),
    Range { from: usize, to: usize },
}

impl ParamRange {
    pub fn values(&self) -> Vec<usize> {
        match self {
            ParamRange::List(v) => v.clone(),
            ParamRange::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

impl ScheduleTemplate {
    pub fn expand(&self) -> Result<Vec<Schedule>, ScheduleError> {
        let check = |ks: &[u8]| match ks.iter().find(|&&k| k < 2) {
            Some(&k) => Err(ScheduleError::TooSmall(u32::from(k))),
            None => Ok(()),
        };
        Ok(match self {
            ScheduleTemplate::TwoKTwos { k, s } => {
                check(k)?;
                k.iter().flat_map(|&k| s.values().into_iter().map(move |s| two_k_twos(k, s))).collect()
            }
            ScheduleTemplate::Alternating { k } => {
                check(k)?;
                k.iter().map(|&k| Schedule::repeating(&[2, k])).collect()
            }
            ScheduleTemplate::Repetitive { k } => {
                check(k)?;
                k.iter().map(|&k| Schedule::repeating(&[2, k, 2, 2])).collect()
            }
            ScheduleTemplate::Phase { k } => {
                k.iter().map(|&k| Schedule::new(vec![2, k], vec![2])).collect::<Result<_, _>>()?
            }
            ScheduleTemplate::Constant { k } => {
                check(k)?;
                k.iter().map(|&k| Schedule::constant(k)).collect()
            }
        })
    }
}

fn default_true() -> bool {
    true
}

/// Campaign file contents (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seeds: Vec<String>,
    pub masks: Vec<String>,
    #[serde(default)]
    pub schedules: Vec<Schedule>,
    #[serde(default)]
    pub template: Option<ScheduleTemplate>,
    #[serde(default)]
    pub rule: UpdateRule,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub criteria: CarpetCriteria,
    #[serde(default = "default_true")]
    pub carpet_sweep: bool,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<CampaignConfig, ExperimentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_spec(self) -> Result<SweepSpec, ExperimentError> {
        let seeds = self.seeds.iter().map(|s| resolve_seed(s, self.rng_seed)).collect::<Result<_, _>>()?;
        let masks = self.masks.iter().map(|m| Mask::resolve(m)).collect::<Result<_, _>>()?;
        let mut schedules = self.schedules;
        if let Some(t) = &self.template {
            schedules.extend(t.expand()?);
        }
        Ok(SweepSpec {
            seeds,
            masks,
            schedules,
            rule: self.rule,
            horizon: self.horizon.unwrap_or(self.criteria.horizon),
            criteria: self.criteria,
            carpet_sweep: self.carpet_sweep,
            retain_traces: false,
            output_dir: self.output_dir,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservedTime {
    pub t: usize,
    /// Seed reappears in its own box.
    pub is_return: bool,
    pub kind: Option<PeriodKind>,
    pub in_law: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodScan {
    pub law: PredictedLaw,
    pub returns: Vec<usize>,
    /// Replications of the seed at step t, one per step where one exists.
    pub events: Vec<ReplicationEvent>,
    /// Union of return and replication times.
    pub observed: Vec<ObservedTime>,
    pub first_big: Option<ReplicationEvent>,
    /// Smallest law time with 2t >= w·s for the first big event's w.
    pub predicted_t_big: Option<usize>,
    /// Whether the first big event satisfies 2t >= w·s.
    pub lemma_holds: Option<bool>,
}

impl PeriodScan {
    pub fn replication_times(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.tau).collect()
    }

    pub fn all_in_law(&self) -> bool {
        self.observed.iter().all(|o| o.in_law)
    }
}

/// Constant-`k` run compared against the predicted replication law.
pub fn period_scan(
    seed: &Seed,
    mask: &Mask,
    k: u8,
    rule: UpdateRule,
    horizon: usize,
) -> Result<PeriodScan, PeriodError> {
    let law = predict_times(k, horizon)?;
    let figure = seed.figure();
    if horizon == 0 {
        return Ok(PeriodScan {
            law,
            returns: Vec::new(),
            events: Vec::new(),
            observed: Vec::new(),
            first_big: None,
            predicted_t_big: None,
            lemma_holds: None,
        });
    }
    let traj = Trajectory::record(figure, mask, &Schedule::constant(k), rule, horizon);
    let returns = detect_return(&traj, figure);
    let events: Vec<ReplicationEvent> = traj
        .states()
        .par_iter()
        .enumerate()
        .skip(1)
        .filter_map(|(t, g)| {
            detect_replication(figure, g, MatchMode::Exact).map(|replication| ReplicationEvent {
                tau: t,
                shifted_by: 0,
                replication,
                mode: MatchMode::Exact,
            })
        })
        .collect();
    let mut times: BTreeMap<usize, ObservedTime> = BTreeMap::new();
    for &t in &returns {
        times.insert(t, ObservedTime { t, is_return: true, kind: None, in_law: law.contains(t) });
    }
    for e in &events {
        let o = times.entry(e.tau).or_insert(ObservedTime {
            t: e.tau,
            is_return: false,
            kind: None,
            in_law: law.contains(e.tau),
        });
        o.kind = Some(e.kind());
    }
    let first_big = events.iter().find(|e| e.kind() == PeriodKind::Big).cloned();
    let extent = seed.extent();
    let (predicted_t_big, lemma_holds) = match &first_big {
        Some(e) => {
            let w = e.replication.copies_per_line();
            (t_big(extent, w.max(2), &law).ok(), Some(2 * e.tau >= w * extent))
        }
        None => (None, None),
    };
    Ok(PeriodScan {
        law,
        returns,
        events,
        observed: times.into_values().collect(),
        first_big,
        predicted_t_big,
        lemma_holds,
    })
}

/// Half-width of the window in which a density minimum must be the strict minimum.
pub const MINIMUM_WINDOW: usize = 4;

/// Steps `t` whose density is strictly below every other value within `±window`
/// (the window must fit inside the trace).
pub fn local_minima(trace: &[f64], window: usize) -> Vec<usize> {
    if trace.len() < 2 * window + 1 {
        return Vec::new();
    }
    (window..trace.len() - window)
        .filter(|&t| (t - window..=t + window).all(|u| u == t || trace[t] < trace[u]))
        .collect()
}

/// Most frequent residue of `times` modulo `m` (smallest on ties) and its share.
pub fn modal_class(times: &[usize], m: usize) -> Option<(usize, f64)> {
    if times.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; m];
    for &t in times {
        counts[t % m] += 1;
    }
    let (class, &n) = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("m > 0");
    Some((class, n as f64 / times.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub minima: Vec<usize>,
    pub class_mod8: usize,
    /// Fraction of minima in the modal class mod 8.
    pub regularity: f64,
    pub class_mod16: usize,
    pub regularity_mod16: f64,
}

/// Phase of the density minima of a trace; `None` when it has no minima.
pub fn fingerprint_trace(trace: &[f64]) -> Option<PhaseReport> {
    phase_of_minima(local_minima(trace, MINIMUM_WINDOW))
}

pub fn phase_of_minima(minima: Vec<usize>) -> Option<PhaseReport> {
    let (class_mod8, regularity) = modal_class(&minima, 8)?;
    let (class_mod16, regularity_mod16) = modal_class(&minima, 16)?;
    Some(PhaseReport { minima, class_mod8, regularity, class_mod16, regularity_mod16 })
}

pub fn density_trace(
    seed: &LatticeState,
    mask: &Mask,
    schedule: &Schedule,
    rule: UpdateRule,
    horizon: usize,
) -> Vec<f64> {
    let mut rec = MetricsRecorder::new(usize::from(schedule.modulus_bound()), DEFAULT_TAU);
    run(seed, mask, schedule, rule, horizon, &mut [&mut rec]);
    rec.densities()
}

pub fn density_fingerprint(
    seed: &Seed,
    mask: &Mask,
    schedule: &Schedule,
    rule: UpdateRule,
    horizon: usize,
) -> Result<Option<PhaseReport>, ExperimentError> {
    if horizon < 32 {
        return Err(ExperimentError::Validation(format!("fingerprint horizon {horizon} is below 32")));
    }
    Ok(fingerprint_trace(&density_trace(seed.figure(), mask, schedule, rule, horizon)))
}

/// Step times typical of binary and ternary periods.
pub const BINARY_TERNARY_TIMES: [usize; 8] = [8, 16, 27, 32, 54, 64, 81, 128];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyJumps {
    /// Steps t of the largest |H_t − H_{t−1}|, largest first.
    pub times: Vec<usize>,
    pub hits: Vec<usize>,
    /// hits / times.
    pub score: f64,
}

pub fn entropy_jumps(entropy: &[f64], top: usize) -> EntropyJumps {
    let mut jumps: Vec<(usize, f64)> =
        entropy.windows(2).enumerate().map(|(i, w)| (i + 1, (w[1] - w[0]).abs())).collect();
    jumps.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let times: Vec<usize> = jumps.into_iter().take(top).map(|(t, _)| t).collect();
    let hits: Vec<usize> = times.iter().copied().filter(|t| BINARY_TERNARY_TIMES.contains(t)).collect();
    let score = if times.is_empty() { 0.0 } else { hits.len() as f64 / times.len() as f64 };
    EntropyJumps { times, hits, score }
}

/// Entropy trace of a constant-`k` run and its largest jumps.
pub fn entropy_fluctuations(
    seed: &Seed,
    mask: &Mask,
    k: u8,
    rule: UpdateRule,
    horizon: usize,
    top: usize,
) -> EntropyJumps {
    let mut rec = MetricsRecorder::new(usize::from(k), DEFAULT_TAU);
    run(seed.figure(), mask, &Schedule::constant(k), rule, horizon, &mut [&mut rec]);
    let h: Vec<f64> = rec.rows().iter().map(|r| r.entropy).collect();
    entropy_jumps(&h, top)
}
