use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modlap::experiments::{self, CampaignConfig};
use modlap::geometry;
use modlap::metrics::{self, MetricsRecorder};
use modlap::render::{render_pgm, Palette};
use modlap::taxonomy::{self, CarpetCriteria};
use modlap::{Mask, Schedule, Seed, Simulation, Trajectory, UpdateRule};

#[derive(Parser)]
#[command(name = "modlap", version, about = "Discrete Laplacians iterated modulo a schedule of moduli")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory, streaming per-step metrics as CSV.
    Run(RunArgs),
    /// Run a carpet sweep described by a JSON campaign file.
    Sweep(SweepArgs),
    /// Constant-k replication scan against the predicted law.
    Periods(PeriodsArgs),
    /// Phase of the density minima.
    Fingerprint(FingerprintArgs),
    /// Classify one trajectory as carpet, quasi-carpet or rug.
    Classify(ClassifyArgs),
    /// Write the state after a number of steps as a netpbm image.
    Render(RenderArgs),
    /// Inspect neighborhood masks.
    Mask {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Inspect seeds.
    Seed {
        #[command(subcommand)]
        action: CatalogAction,
        /// RNG seed for random-<size> seeds.
        #[arg(long, default_value_t = 0, global = true)]
        rng_seed: u64,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// List builtin names.
    List,
    /// Print the figure of a builtin name or file.
    Show {
        /// Builtin name or file path.
        name: String,
    },
}

#[derive(Args, Clone)]
struct Setup {
    /// Builtin seed name, seed file, or random-<small|medium|large>.
    #[arg(long, default_value = "point")]
    seed: String,
    /// Builtin mask name or mask file.
    #[arg(long, default_value = "von-neumann")]
    mask: String,
    /// Modulus schedule, e.g. "2*", "[2,3]*", "2,3,[2]*".
    #[arg(long, default_value = "[2]*")]
    schedule: String,
    /// laplacian, identity-plus-sum (ips) or neighbor-sum.
    #[arg(long, default_value = "laplacian")]
    rule: String,
    /// RNG seed for random seeds.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    setup: Setup,
    /// Number of steps after the seed.
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// CSV output path ("-" for stdout).
    #[arg(long, default_value = "-")]
    csv: PathBuf,
    /// Lag of the period ratio.
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    tau: usize,
    /// Report entropy in bits instead of nats.
    #[arg(long)]
    bits: bool,
    /// Directory for netpbm frames.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// Outline descriptor CSV path, sampled like frames.
    #[arg(long)]
    outline: Option<PathBuf>,
    /// Write a frame and outline row every n steps.
    #[arg(long, default_value_t = 1)]
    every: usize,
    /// Pixels per lattice cell.
    #[arg(long, default_value_t = 1)]
    scale: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Campaign file (JSON, see docs/config.md).
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodsArgs {
    /// Constant modulus, 2 to 16.
    #[arg(long)]
    k: u8,
    /// Builtin mask name or mask file.
    #[arg(long, default_value = "von-neumann")]
    mask: String,
    /// Builtin seed name, seed file, or random-<small|medium|large>.
    #[arg(long, default_value = "point")]
    seed: String,
    /// laplacian, identity-plus-sum (ips) or neighbor-sum.
    #[arg(long, default_value = "laplacian")]
    rule: String,
    /// Last step scanned.
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    /// RNG seed for random seeds.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Print every shift of every event.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct FingerprintArgs {
    #[command(flatten)]
    setup: Setup,
    /// Last step of the density trace (at least 32).
    #[arg(long, default_value_t = 128)]
    horizon: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    setup: Setup,
    /// JSON file with criteria overrides.
    #[arg(long)]
    criteria: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    setup: Setup,
    /// Step to render.
    #[arg(long, default_value_t = 0)]
    steps: usize,
    /// Output image path.
    #[arg(long)]
    out: PathBuf,
    /// Pixels per lattice cell.
    #[arg(long, default_value_t = 1)]
    scale: usize,
}

enum Failure {
    Usage(String),
    Io(String),
}

type Outcome = Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn stdout_err(e: io::Error) -> Failure {
    Failure::Io(format!("stdout: {e}"))
}

struct Resolved {
    seed: Seed,
    mask: Mask,
    schedule: Schedule,
    rule: UpdateRule,
}

impl Setup {
    fn resolve(&self) -> Result<Resolved, Failure> {
        Ok(Resolved {
            seed: experiments::resolve_seed(&self.seed, self.rng_seed).map_err(usage)?,
            mask: Mask::resolve(&self.mask).map_err(usage)?,
            schedule: self.schedule.parse().map_err(usage)?,
            rule: self.rule.parse().map_err(usage)?,
        })
    }
}

fn create(path: &Path) -> Result<Box<dyn Write>, Failure> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    Ok(Box::new(BufWriter::new(File::create(path).map_err(io_at(path))?)))
}

fn cmd_run(a: RunArgs) -> Outcome {
    let r = a.setup.resolve()?;
    if a.every == 0 || a.scale == 0 {
        return Err(usage("--every and --scale must be at least 1"));
    }
    let colors = usize::from(r.schedule.modulus_bound());
    let palette = Palette::for_modulus(colors);
    if let Some(dir) = &a.frames {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    let mut out = create(&a.csv)?;
    let mut outline = match &a.outline {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{}", geometry::DESCRIPTOR_HEADER).map_err(io_at(p))?;
            Some((p, w))
        }
        None => None,
    };
    let mut rec = MetricsRecorder::new(colors, a.tau);
    let mut observe = |sim: &Simulation, rec: &mut MetricsRecorder, out: &mut Box<dyn Write>| -> Outcome {
        modlap::Observer::observe(rec, sim);
        let mut row = rec.rows().last().expect("row just recorded").clone();
        if a.bits {
            row.entropy /= std::f64::consts::LN_2;
        }
        writeln!(out, "{}", metrics::csv_line(&row)).map_err(io_at(&a.csv))?;
        if !sim.time().is_multiple_of(a.every) {
            return Ok(());
        }
        if let Some((p, w)) = outline.as_mut() {
            if let Some(d) = geometry::describe(sim.state(), geometry::DEFAULT_MERGE_TOLERANCE_DEG) {
                writeln!(w, "{}", geometry::descriptor_csv_line(sim.time(), &d)).map_err(io_at(p))?;
            }
        }
        if let Some(dir) = &a.frames {
            let img = render_pgm(sim.state(), &palette, a.scale).map_err(usage)?;
            let p = dir.join(format!("frame_{:05}.pgm", sim.time()));
            fs::write(&p, img).map_err(io_at(&p))?;
        }
        Ok(())
    };
    writeln!(out, "{}", metrics::csv_header(colors)).map_err(io_at(&a.csv))?;
    let mut sim = Simulation::new(r.seed.figure(), &r.mask, &r.schedule, r.rule);
    for t in 0..=a.steps {
        if t > 0 {
            sim.advance();
        }
        observe(&sim, &mut rec, &mut out)?;
    }
    if let Some((p, mut w)) = outline {
        w.flush().map_err(io_at(p))?;
    }
    out.flush().map_err(io_at(&a.csv))
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let text = fs::read_to_string(&a.config).map_err(io_at(&a.config))?;
    let mut config = CampaignConfig::from_json(&text).map_err(usage)?;
    if a.out.is_some() {
        config.output_dir = a.out;
    }
    let spec = config.into_spec().map_err(usage)?;
    let result = experiments::run_sweep(&spec).map_err(|e| match e {
        experiments::ExperimentError::Io { .. } => Failure::Io(e.to_string()),
        e => usage(e),
    })?;
    let stdout = io::stdout();
    experiments::write_counts(stdout.lock(), &result.counts).map_err(stdout_err)
}

fn cmd_periods(a: PeriodsArgs) -> Outcome {
    let seed = experiments::resolve_seed(&a.seed, a.rng_seed).map_err(usage)?;
    let mask = Mask::resolve(&a.mask).map_err(usage)?;
    let rule: UpdateRule = a.rule.parse().map_err(usage)?;
    let scan = experiments::period_scan(&seed, &mask, a.k, rule, a.horizon).map_err(usage)?;
    let mut o = io::stdout().lock();
    let mut lines = vec![
        format!("law: {} (period {})", scan.law.description, scan.law.period),
        format!("returns: {:?}", scan.returns),
    ];
    for e in &scan.events {
        let head = if a.verbose {
            e.log_line()
        } else {
            format!("t={} kind={} s={} identity={}", e.tau, e.kind(), e.s(), e.replication.identity)
        };
        lines.push(format!("{head} in_law={}", scan.law.contains(e.tau)));
    }
    let outside: Vec<usize> = scan.observed.iter().filter(|o| !o.in_law).map(|o| o.t).collect();
    lines.push(format!("outside law: {outside:?}"));
    match &scan.first_big {
        Some(e) => {
            let w = e.replication.copies_per_line();
            lines.push(format!(
                "first big: t={} w={} s={} lemma(2t>=ws)={} predicted t_big={}",
                e.tau,
                w,
                seed.extent(),
                scan.lemma_holds.unwrap_or(false),
                scan.predicted_t_big.map_or("none".into(), |t| t.to_string())
            ));
        }
        None => lines.push("first big: none".into()),
    }
    for l in lines {
        writeln!(o, "{l}").map_err(stdout_err)?;
    }
    Ok(())
}

fn cmd_fingerprint(a: FingerprintArgs) -> Outcome {
    let r = a.setup.resolve()?;
    let report = experiments::density_fingerprint(&r.seed, &r.mask, &r.schedule, r.rule, a.horizon).map_err(usage)?;
    let mut o = io::stdout().lock();
    match report {
        Some(p) => writeln!(
            o,
            "minima: {:?}\nmod 8: class {} regularity {}\nmod 16: class {} regularity {}",
            p.minima,
            p.class_mod8,
            metrics::format_sig9(p.regularity),
            p.class_mod16,
            metrics::format_sig9(p.regularity_mod16)
        ),
        None => writeln!(o, "minima: none"),
    }
    .map_err(stdout_err)
}

fn cmd_classify(a: ClassifyArgs) -> Outcome {
    let r = a.setup.resolve()?;
    let criteria: CarpetCriteria = match &a.criteria {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(io_at(p))?).map_err(usage)?,
        None => CarpetCriteria::default(),
    };
    let traj = Trajectory::record(r.seed.figure(), &r.mask, &r.schedule, r.rule, criteria.horizon);
    let class = taxonomy::classify(&traj, &criteria).map_err(usage)?;
    let cell = experiments::CellResult {
        seed: r.seed.name().to_string(),
        mask: r.mask.name().to_string(),
        schedule: r.schedule,
        prediction: taxonomy::predict_class(&r.seed.symmetry(), &r.mask.symmetry()),
        class,
        density_trace: None,
    };
    let mut o = io::stdout().lock();
    writeln!(o, "{}\n{}", experiments::CLASSIFICATION_HEADER, experiments::classification_line(&cell))
        .map_err(stdout_err)?;
    writeln!(o, "# predicted: {}", cell.prediction).map_err(stdout_err)
}

fn cmd_render(a: RenderArgs) -> Outcome {
    let r = a.setup.resolve()?;
    let mut sim = Simulation::new(r.seed.figure(), &r.mask, &r.schedule, r.rule);
    for _ in 0..a.steps {
        sim.advance();
    }
    let palette = Palette::for_modulus(usize::from(r.schedule.modulus_bound()));
    let img = render_pgm(sim.state(), &palette, a.scale).map_err(usage)?;
    fs::write(&a.out, img).map_err(io_at(&a.out))
}

fn cmd_mask(action: CatalogAction) -> Outcome {
    let mut o = io::stdout().lock();
    match action {
        CatalogAction::List => {
            for name in Mask::builtin_names() {
                let m = Mask::builtin(name).map_err(usage)?;
                writeln!(o, "{name}\t{}", m.symmetry().class()).map_err(stdout_err)?;
            }
            Ok(())
        }
        CatalogAction::Show { name } => {
            let m = Mask::resolve(&name).map_err(usage)?;
            write!(o, "{}", m.to_text()).map_err(stdout_err)
        }
    }
}

fn cmd_seed(action: CatalogAction, rng_seed: u64) -> Outcome {
    let mut o = io::stdout().lock();
    match action {
        CatalogAction::List => {
            for name in Seed::builtin_names() {
                let s = Seed::builtin(name).map_err(usage)?;
                writeln!(o, "{name}\t{}\t{}", s.size_class(), s.symmetry().class()).map_err(stdout_err)?;
            }
            Ok(())
        }
        CatalogAction::Show { name } => {
            let s = experiments::resolve_seed(&name, rng_seed).map_err(usage)?;
            write!(o, "{}", s.to_text().map_err(usage)?).map_err(stdout_err)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Periods(a) => cmd_periods(a),
        Command::Fingerprint(a) => cmd_fingerprint(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Render(a) => cmd_render(a),
        Command::Mask { action } => cmd_mask(action),
        Command::Seed { action, rng_seed } => cmd_seed(action, rng_seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
