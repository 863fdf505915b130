#[allow(dead_code)]
#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use modlap::experiments::{
    self, local_minima, period_scan, phase_of_minima, run_sweep, two_k_twos, SweepSpec, MINIMUM_WINDOW,
};
use modlap::metrics::{color_entropy, csv_header, csv_line, density, per_residue_densities, MetricsRecorder};
use modlap::periodicity::{detect_return, predict_times};
use modlap::render::{render_pgm, Palette};
use modlap::taxonomy::{classify, CarpetCriteria, Verdict};
use modlap::{LatticeState, Mask, Point, Schedule, Seed, Simulation, SymmetryClass, Trajectory, UpdateRule};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A trajectory some criterion looked at; the metric identities are checked on all of them.
#[derive(Clone)]
struct RunSpec {
    seed: LatticeState,
    mask: Mask,
    schedule: Schedule,
    rule: UpdateRule,
    horizon: usize,
}

#[derive(Default)]
struct Runs(Vec<RunSpec>);

impl Runs {
    fn add(&mut self, seed: &LatticeState, mask: &Mask, schedule: &Schedule, rule: UpdateRule, horizon: usize) {
        self.0.push(RunSpec { seed: seed.clone(), mask: mask.clone(), schedule: schedule.clone(), rule, horizon });
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn seed(name: &str) -> Seed {
    Seed::builtin(name).unwrap()
}

fn mask(name: &str) -> Mask {
    Mask::builtin(name).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn double_symmetric_pairs() -> Vec<(Seed, Mask)> {
    let seeds: Vec<Seed> =
        Seed::builtin_names().map(seed).filter(|s| s.symmetry().class() == SymmetryClass::DoubleSymmetric).collect();
    let masks: Vec<Mask> =
        Mask::builtin_names().map(mask).filter(|m| m.symmetry().class() == SymmetryClass::DoubleSymmetric).collect();
    seeds.iter().flat_map(|s| masks.iter().map(move |m| (s.clone(), m.clone()))).collect()
}

fn small_seeds() -> Vec<Seed> {
    Seed::builtin_names().map(seed).filter(|s| s.size_class() == modlap::SizeClass::Small).collect()
}

fn c1_frobenius(runs: &mut Runs) -> Outcome {
    let horizon = 64;
    let mut misses = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut cases = 0;
    for s in ["point", "neumann"] {
        for m in ["von-neumann", "moore"] {
            for k in [2u8, 3, 5, 7] {
                let (sd, mk, sched) = (seed(s), mask(m), Schedule::constant(k));
                let start = Instant::now();
                let traj = Trajectory::record(sd.figure(), &mk, &sched, UpdateRule::IdentityPlusSum, horizon);
                let found: BTreeSet<usize> = detect_return(&traj, sd.figure()).into_iter().collect();
                slowest = slowest.max(start.elapsed());
                runs.add(sd.figure(), &mk, &sched, UpdateRule::IdentityPlusSum, horizon);
                cases += 1;
                let want = std::iter::successors(Some(usize::from(k)), |t| Some(t * usize::from(k)))
                    .take_while(|&t| t <= horizon);
                let missing: Vec<usize> = want.filter(|t| !found.contains(t)).collect();
                if !missing.is_empty() {
                    misses.push(format!("{s}/{m}/k={k} missing {missing:?}"));
                }
            }
        }
    }
    let fast = slowest < Duration::from_secs(1);
    outcome(
        misses.is_empty() && fast,
        format!(
            "{} of {cases} cases revive at every k^m <= 64, slowest {}; {}",
            cases - misses.len(),
            secs(slowest),
            misses.join("; ")
        ),
    )
}

fn c2_cross(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let (sd, mk) = (seed("point"), mask("von-neumann"));
    let horizon = 16;
    runs.add(sd.figure(), &mk, &Schedule::constant(2), UpdateRule::IdentityPlusSum, horizon);
    let scan = period_scan(&sd, &mk, 2, UpdateRule::IdentityPlusSum, horizon).unwrap();
    let Some(ev) = scan.first_big else { return outcome(false, "no big replication event") };
    let copies: BTreeSet<Point> = ev.replication.copies.iter().copied().collect();
    let d = copies.iter().map(|p| p.x.abs().max(p.y.abs())).max().unwrap_or(0);
    let cross: BTreeSet<Point> =
        [Point::new(d, 0), Point::new(-d, 0), Point::new(0, d), Point::new(0, -d)].into_iter().collect();
    let traj = Trajectory::record(sd.figure(), &mk, &Schedule::constant(2), UpdateRule::IdentityPlusSum, ev.tau);
    let all = oracle::oracle_decompose(sd.figure(), &traj.states()[ev.tau]).unwrap();
    let agrees = all == vec![ev.replication.all_shifts()];
    let elapsed = start.elapsed();
    outcome(
        ev.s() == 4 && d > 0 && copies == cross && agrees && elapsed < Duration::from_secs(1),
        format!("{} (oracle agrees: {agrees}), {}", ev.log_line(), secs(elapsed)),
    )
}

fn scan_cases(ks: &[u8], runs: &mut Runs) -> Vec<(String, experiments::PeriodScan)> {
    let mut out = Vec::new();
    for s in small_seeds() {
        for m in ["von-neumann", "moore"] {
            for &k in ks {
                let mk = mask(m);
                runs.add(s.figure(), &mk, &Schedule::constant(k), UpdateRule::Laplacian, 200);
                let scan = period_scan(&s, &mk, k, UpdateRule::Laplacian, 200).unwrap();
                out.push((format!("{}/{m}/k={k}", s.name()), scan));
            }
        }
    }
    out
}

fn c3_period_laws(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let scans = scan_cases(&[3, 5, 7], runs);
    let elapsed = start.elapsed();
    let mut bad = Vec::new();
    let mut clean = 0;
    for (name, scan) in &scans {
        clean += usize::from(scan.all_in_law() && scan.lemma_holds != Some(false));
        let outside: Vec<usize> = scan.observed.iter().filter(|o| !o.in_law).map(|o| o.t).collect();
        if !outside.is_empty() {
            bad.push(format!("{name} outside {}: {outside:?}", scan.law.description));
        }
        if scan.lemma_holds == Some(false) {
            let e = scan.first_big.as_ref().unwrap();
            bad.push(format!("{name} lemma fails at t={} w={}", e.tau, e.replication.copies_per_line()));
        }
    }
    outcome(
        bad.is_empty() && elapsed < Duration::from_secs(30),
        format!("{clean} of {} scans clean, {}; {}", scans.len(), secs(elapsed), summarize(&bad)),
    )
}

fn c4_prime_powers(runs: &mut Runs) -> Outcome {
    let scans = scan_cases(&[4, 8, 9], runs);
    let mut bad = Vec::new();
    for (name, scan) in &scans {
        let k = scan.law.k;
        let law = predict_times(k, 200).unwrap();
        let want_period = if k == 9 { 81 } else { predict_times(2, 200).unwrap().period };
        let outside: Vec<usize> =
            scan.returns.iter().copied().filter(|&t| !law.contains(t) || t % want_period != 0).collect();
        if !outside.is_empty() {
            bad.push(format!("{name} returns outside multiples of {want_period}: {outside:?}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} scans, {} with returns outside the law; {}", scans.len(), bad.len(), summarize(&bad)),
    )
}

fn summarize(items: &[String]) -> String {
    if items.len() <= 4 {
        return items.join("; ");
    }
    format!("{}; ... {} more", items[..4].join("; "), items.len() - 4)
}

fn c5_fingerprint(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let horizon = 128;
    let binary = Schedule::constant(2);
    let kicked: Schedule = "2,3,[2]*".parse().unwrap();
    let mut bad = Vec::new();
    let mut pooled = Vec::new();
    let mut base_class = None;
    let pairs = double_symmetric_pairs();
    for (s, m) in &pairs {
        runs.add(s.figure(), m, &binary, UpdateRule::Laplacian, horizon);
        runs.add(s.figure(), m, &kicked, UpdateRule::Laplacian, horizon);
        let trace = experiments::density_trace(s.figure(), m, &binary, UpdateRule::Laplacian, horizon);
        match phase_of_minima(local_minima(&trace, MINIMUM_WINDOW)) {
            Some(r) if r.class_mod8 == 0 && r.regularity >= 0.8 => base_class = Some(0),
            Some(r) => {
                bad.push(format!("{}/{} class {} regularity {:.3}", s.name(), m.name(), r.class_mod8, r.regularity))
            }
            None => bad.push(format!("{}/{} has no minima", s.name(), m.name())),
        }
        let trace = experiments::density_trace(s.figure(), m, &kicked, UpdateRule::Laplacian, horizon);
        pooled.extend(local_minima(&trace, MINIMUM_WINDOW));
    }
    let shifted = phase_of_minima(pooled);
    let shift_ok = matches!((&shifted, base_class), (Some(r), Some(b)) if r.class_mod8 == (b + 2) % 8);
    let elapsed = start.elapsed();
    let shifted_desc =
        shifted.map_or("none".into(), |r| format!("class {} regularity {:.3}", r.class_mod8, r.regularity));
    outcome(
        bad.is_empty() && shift_ok && elapsed < Duration::from_secs(10),
        format!(
            "{} pairs binary class 0 mod 8; 2,3,[2]* pooled {shifted_desc}; {}; {}",
            pairs.len() - bad.len(),
            secs(elapsed),
            bad.join("; ")
        ),
    )
}

fn c6_sweep(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let ks = [3u8, 4, 5, 6, 7, 8, 9, 11];
    let (seeds, masks): (Vec<Seed>, Vec<Mask>) = {
        let pairs = double_symmetric_pairs();
        let mut seeds: Vec<Seed> = Vec::new();
        let mut masks: Vec<Mask> = Vec::new();
        for (s, m) in pairs {
            if !seeds.iter().any(|x| x.name() == s.name()) {
                seeds.push(s);
            }
            if !masks.iter().any(|x| x.name() == m.name()) {
                masks.push(m);
            }
        }
        (seeds, masks)
    };
    let spec = SweepSpec {
        seeds,
        masks,
        schedules: ks.iter().flat_map(|&k| (1..=8).map(move |s| two_k_twos(k, s))).collect(),
        rule: UpdateRule::Laplacian,
        horizon: 80,
        criteria: CarpetCriteria::default(),
        carpet_sweep: true,
        retain_traces: false,
        output_dir: None,
    };
    let result = run_sweep(&spec).unwrap();
    for c in &result.cells {
        let s = spec.seeds.iter().find(|s| s.name() == c.seed).unwrap();
        let m = spec.masks.iter().find(|m| m.name() == c.mask).unwrap();
        runs.add(s.figure(), m, &c.schedule, UpdateRule::Laplacian, 80);
    }
    let counts: Vec<(u8, usize)> = ks.iter().map(|&k| (k, result.carpets_for_k(k))).collect();
    let three = result.carpets_for_k(3);
    let even_zero = counts.iter().all(|&(k, n)| k % 2 == 1 || n == 0);
    let three_max = counts.iter().all(|&(_, n)| three >= n);
    let elapsed = start.elapsed();
    let shown: Vec<String> = counts.iter().map(|(k, n)| format!("k{k}={n}")).collect();
    outcome(
        even_zero && three >= 1 && three_max && elapsed < Duration::from_secs(300),
        format!("carpets {} over {} cells, {}", shown.join(" "), result.cells.len(), secs(elapsed)),
    )
}

fn c7_2322(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let sched = Schedule::repeating(&[2, 3, 2, 2]);
    let criteria = CarpetCriteria::default();
    let dn = mask("diag-neumann");
    let point = seed("point");
    let asym = LatticeState::from_text("11\n1.\n.1\n").unwrap();
    runs.add(point.figure(), &dn, &sched, UpdateRule::Laplacian, 80);
    runs.add(&asym, &dn, &sched, UpdateRule::Laplacian, 80);
    let a = classify(&Trajectory::record(point.figure(), &dn, &sched, UpdateRule::Laplacian, 80), &criteria).unwrap();
    let b = classify(&Trajectory::record(&asym, &dn, &sched, UpdateRule::Laplacian, 80), &criteria).unwrap();
    let elapsed = start.elapsed();
    outcome(
        a.verdict == Verdict::Carpet && b.verdict == Verdict::RugChaotic && elapsed < Duration::from_secs(5),
        format!(
            "point: {} (min_rho {:.4} at {}, stripe {:.4}, hole {:.4} at {}); asymmetric: {}; {}",
            a.verdict,
            a.min_rho,
            a.min_rho_at,
            a.worst_stripe,
            a.worst_hole,
            a.worst_hole_at,
            b.verdict,
            secs(elapsed)
        ),
    )
}

fn c8_identities(runs: &Runs) -> Outcome {
    let checked: Vec<(usize, Vec<String>)> = runs
        .0
        .par_iter()
        .map(|r| {
            let k = usize::from(r.schedule.modulus_bound());
            let mut sim = Simulation::new(&r.seed, &r.mask, &r.schedule, r.rule);
            let mut bad = Vec::new();
            for t in 0..=r.horizon {
                if t > 0 {
                    sim.advance();
                }
                let s = sim.state();
                let p = per_residue_densities(s, k).unwrap();
                let h = color_entropy(s, k).unwrap();
                let sum_ok = (p.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
                let rho_ok = (density(s) - (1.0 - p[0])).abs() <= 1e-12;
                let h_ok = (0.0..=(k as f64).ln() + 1e-12).contains(&h);
                if !(sum_ok && rho_ok && h_ok) {
                    bad.push(format!("{} t={t}", r.schedule));
                }
            }
            (r.horizon + 1, bad)
        })
        .collect();
    let steps: usize = checked.iter().map(|c| c.0).sum();
    let bad: Vec<String> = checked.into_iter().flat_map(|c| c.1).collect();
    outcome(bad.is_empty(), format!("{steps} steps over {} runs; {}", runs.0.len(), summarize(&bad)))
}

fn random_state(rng: &mut ChaCha8Rng, k: u8) -> LatticeState {
    let (w, h) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
    let cells: Vec<(Point, u8)> =
        (0..w).flat_map(|x| (0..h).map(move |y| Point::new(x, y))).map(|p| (p, rng.gen_range(0..k))).collect();
    LatticeState::from_cells(cells)
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

fn weak_compositions(t: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![t]];
    }
    (0..=t)
        .flat_map(|first| {
            weak_compositions(t - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn c9_oracle() -> Outcome {
    let groups: Vec<(String, u8, UpdateRule)> = Mask::builtin_names()
        .flat_map(|m| (2u8..=9).flat_map(move |k| UpdateRule::ALL.into_iter().map(move |r| (m.to_string(), k, r))))
        .collect();
    let mismatches: Vec<String> = groups
        .par_iter()
        .enumerate()
        .filter_map(|(i, (m, k, r))| {
            let mk = mask(m);
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + i as u64);
            (0..1000).find_map(|n| {
                let s = random_state(&mut rng, *k);
                (modlap::step(&s, &mk, *k, *r) != oracle::oracle_step(&s, &mk, *k, *r))
                    .then(|| format!("{m}/k={k}/{r:?} #{n}"))
            })
        })
        .collect();
    let mut lucas_bad = 0;
    let mut lucas_total = 0;
    for p in [2u64, 3, 5] {
        for t in 0..=12u64 {
            for parts in 1..=4 {
                for c in weak_compositions(t, parts) {
                    let denom = c.iter().fold(BigUint::from(1u32), |acc, &x| acc * factorial(x));
                    let nonzero = (factorial(t) / denom) % BigUint::from(p) != BigUint::from(0u32);
                    lucas_total += 1;
                    if modlap::periodicity::lucas_multinomial_odd(t, &c, p).unwrap() != nonzero {
                        lucas_bad += 1;
                    }
                }
            }
        }
    }
    outcome(
        mismatches.is_empty() && lucas_bad == 0,
        format!(
            "{} tuples over {} groups, {} mismatches; Lucas {lucas_bad}/{lucas_total} wrong; {}",
            groups.len() * 1000,
            groups.len(),
            mismatches.len(),
            summarize(&mismatches)
        ),
    )
}

fn artifacts() -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let sched = Schedule::constant(3);
    let colors = 3;
    let mut sim = Simulation::new(&LatticeState::point(), &mask("moore"), &sched, UpdateRule::Laplacian);
    let mut rec = MetricsRecorder::new(colors, 8);
    let mut csv = format!("{}\n", csv_header(colors));
    for t in 0..=160 {
        if t > 0 {
            sim.advance();
        }
        modlap::Observer::observe(&mut rec, &sim);
        csv.push_str(&csv_line(rec.rows().last().unwrap()));
        csv.push('\n');
    }
    let pgm = render_pgm(sim.state(), &Palette::for_modulus(colors), 1).unwrap();
    let spec = SweepSpec {
        seeds: vec![seed("point"), seed("neumann")],
        masks: vec![mask("von-neumann"), mask("moore")],
        schedules: vec![two_k_twos(3, 1), two_k_twos(5, 2)],
        rule: UpdateRule::Laplacian,
        horizon: 80,
        criteria: CarpetCriteria::default(),
        carpet_sweep: true,
        retain_traces: false,
        output_dir: None,
    };
    let result = run_sweep(&spec).unwrap();
    let mut sweep = Vec::new();
    experiments::write_classification(&mut sweep, &result.cells).unwrap();
    experiments::write_counts(&mut sweep, &result.counts).unwrap();
    (csv.into_bytes(), pgm, sweep)
}

fn c10_determinism() -> Outcome {
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let n = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let one = pool(1).install(artifacts);
    let many = pool(n).install(artifacts);
    let same = one == many;
    let start = Instant::now();
    let mut sim =
        Simulation::new(&LatticeState::point(), &mask("von-neumann"), &Schedule::constant(2), UpdateRule::Laplacian);
    for _ in 0..1000 {
        sim.advance();
    }
    let b = sim.bounding_box().unwrap();
    let elapsed = start.elapsed();
    let timing = if elapsed < Duration::from_secs(10) { "within 10s" } else { "over 10s (non-strict)" };
    outcome(
        same && b.width() == 2001 && b.height() == 2001,
        format!(
            "1 vs {n} threads byte-identical: {same}; 1000 binary steps box {}x{} in {} {timing}",
            b.width(),
            b.height(),
            secs(elapsed)
        ),
    )
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let criteria: Vec<(&str, Outcome)> = vec![
        ("C1 frobenius revival", c1_frobenius(&mut runs)),
        ("C2 binary cross replication", c2_cross(&mut runs)),
        ("C3 prime period laws", c3_period_laws(&mut runs)),
        ("C4 prime-power reduction", c4_prime_powers(&mut runs)),
        ("C5 binary density fingerprint", c5_fingerprint(&mut runs)),
        ("C6 carpet sweep structure", c6_sweep(&mut runs)),
        ("C7 [2,3,2,2] carpet", c7_2322(&mut runs)),
    ];
    let mut criteria = criteria;
    criteria.push(("C8 metric identities", c8_identities(&runs)));
    criteria.push(("C9 oracle equivalence", c9_oracle()));
    criteria.push(("C10 determinism and speed", c10_determinism()));
    let mut failed = 0;
    for (name, o) in &criteria {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail.trim_end_matches("; "));
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
