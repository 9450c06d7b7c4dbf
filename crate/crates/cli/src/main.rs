//! `timecorr` command-line driver: simulate sample sets, analyse them into
//! figure tables, and run the built-in oracle suite.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use timecorr::analysis::run_analysis;
use timecorr::config::RunConfig;
use timecorr::dump::{write_field, write_screen};
use timecorr::grid::Grid;
use timecorr::propagation::ChannelPropagator;
use timecorr::screens::{evaluate_screen, RingTable, SparseScreenSet};
use timecorr::seed::derive_seed;
use timecorr::selfcheck::run_selfcheck;
use timecorr::statistics::{run_monte_carlo, RunControl, SampleSet};

const EXIT_CONFIG: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_SELFCHECK: u8 = 4;

const PRESETS: &[(&str, &str)] = &[
    ("paper_50km", include_str!("../../../presets/paper_50km.json")),
    ("desk", include_str!("../../../presets/desk.json")),
];

const RESOLVED_CONFIG: &str = "resolved_config.json";
const CHECKPOINT: &str = "checkpoint.jsonl";

#[derive(Parser)]
#[command(name = "timecorr", version, about = "Two-time transmittance statistics of turbulent channels")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo channel simulation and store the sample sets.
    Simulate(SimulateArgs),
    /// Compute figure tables from stored sample sets.
    Analyze(AnalyzeArgs),
    /// Run the oracle suite.
    Selfcheck(SelfcheckArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct ConfigSource {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `timecorr presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ConfigSource,
    /// Output directory.
    #[arg(long, env = "TIMECORR_OUT")]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of realizations.
    #[arg(long)]
    samples: Option<usize>,
    /// Stop after this many new realizations; rerun to resume.
    #[arg(long)]
    max_new: Option<usize>,
    /// Also write the first screen and the received field of realization 0.
    #[arg(long)]
    dump: bool,
    /// Exit successfully even when more than 1 % of realizations tripped the
    /// aliasing guard.
    #[arg(long)]
    allow_flagged: bool,
    /// Run the analysis blocks of the configuration after simulating.
    #[arg(long)]
    analyze: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Sample files (CSV or `.bin`) to analyse instead of a run directory.
    #[arg(long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Configuration whose analysis blocks are used; defaults to the run's
    /// resolved configuration.
    #[command(flatten)]
    source: ConfigSource,
    /// Directory for the tables; defaults to the run directory.
    #[arg(long, env = "TIMECORR_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    /// Also write the report as JSON to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failure carrying the exit status it maps to.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit status {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Selfcheck(a) => selfcheck(a),
        Command::Presets => {
            for (name, text) in PRESETS {
                let description = RunConfig::from_json_str(text)
                    .ok()
                    .and_then(|c| c.description)
                    .unwrap_or_default();
                println!("{name:<12} {description}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(Exit(code)) = e.downcast_ref::<Exit>() {
                return ExitCode::from(*code);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<timecorr::Error>() {
            return match err {
                timecorr::Error::Config(_) | timecorr::Error::Json(_) => EXIT_CONFIG,
                timecorr::Error::NumericalGuard(_) => EXIT_GUARD,
                _ => 1,
            };
        }
    }
    1
}

fn load_config(source: &ConfigSource) -> anyhow::Result<Option<RunConfig>> {
    let cfg = match (&source.config, &source.preset) {
        (Some(path), _) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) => {
            let text = PRESETS
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| timecorr::Error::Config(format!("unknown preset {name:?}")))?;
            RunConfig::from_json_str(text)?
        }
        (None, None) => return Ok(None),
    };
    Ok(Some(cfg))
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.source)?
        .ok_or_else(|| timecorr::Error::Config("simulate needs --config or --preset".into()))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = args.samples {
        cfg.n_samples = n;
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("timecorr-out"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let hash = cfg.hash();
    fs::write(out.join(RESOLVED_CONFIG), cfg.to_json_pretty())?;
    log::info!("config hash {hash}, writing to {}", out.display());

    let control = RunControl {
        checkpoint: Some(out.join(CHECKPOINT)),
        max_new_realizations: args.max_new,
        config_hash: Some(hash.clone()),
    };
    let run = run_monte_carlo(&cfg.monte_carlo(), &control)?;
    if !run.is_complete() {
        println!(
            "{} of {} realizations stored in {}; rerun the same command to continue",
            run.completed,
            run.requested,
            out.join(CHECKPOINT).display()
        );
        return Ok(());
    }
    for (i, set) in run.sets.iter().enumerate() {
        set.write_csv(&out.join(format!("samples_r{i}.csv")))?;
        set.write_binary(&out.join(format!("samples_r{i}.bin")))?;
    }
    println!("{} realizations, {} aperture radii -> {}", run.completed, run.sets.len(), out.display());

    if args.dump {
        dump_first_realization(&cfg, &out)?;
    }
    if args.analyze {
        write_tables(&run.sets, &cfg, &out)?;
    }
    let flagged = run.sets.first().map_or(0.0, |s| s.meta().flagged_fraction);
    if flagged > 0.01 && !args.allow_flagged {
        eprintln!(
            "error: {:.1} % of realizations tripped the aliasing guard; widen the grid or pass --allow-flagged",
            100.0 * flagged
        );
        return Err(Exit(EXIT_GUARD).into());
    }
    Ok(())
}

fn dump_first_realization(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let g = &cfg.geometry;
    let grid = Grid::new(g.grid_n, g.grid_step);
    let table = RingTable::for_geometry(&cfg.turbulence, g, cfg.screens.ring_count)?;
    let seed = derive_seed(cfg.master_seed, 0);
    let screens = SparseScreenSet::sample(&table, g, seed, cfg.screens.amplitude_law);
    let shift = cfg.shifts[0];
    if let Some(first) = screens.screens.first() {
        let phase = evaluate_screen(first, grid, shift);
        write_screen(&out.join("dump_screen0.bin"), &phase, grid, seed, shift)?;
    }
    let mut cp = ChannelPropagator::new(g, &cfg.beam)?;
    let fields = cp.propagate_shifts(&screens, &[shift])?;
    write_field(&out.join("dump_field.bin"), &fields[0].field, Some(shift))?;
    Ok(())
}

fn write_tables(sets: &[SampleSet], cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let hash = cfg.hash();
    for table in run_analysis(sets, &cfg.analysis)? {
        let path = table.write(out, &hash)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sample_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(i) = name
            .strip_prefix("samples_r")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|i| i.parse().ok())
        {
            found.push((i, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn read_samples(path: &Path) -> anyhow::Result<SampleSet> {
    let set = if path.extension().is_some_and(|e| e == "bin") {
        SampleSet::read_binary(path)
    } else {
        SampleSet::read_csv(path)
    };
    set.with_context(|| format!("reading {}", path.display()))
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let files = match (&args.run, args.inputs.is_empty()) {
        (Some(dir), true) => sample_files(dir)?,
        (None, false) => args.inputs.clone(),
        (Some(_), false) => bail!(timecorr::Error::Config("give either --run or --input, not both".into())),
        (None, true) => bail!(timecorr::Error::Config("analyze needs --run or --input".into())),
    };
    if files.is_empty() {
        bail!(timecorr::Error::Config("no sample files found".into()));
    }
    let cfg = match load_config(&args.source)? {
        Some(c) => c,
        None => {
            let dir = args
                .run
                .as_ref()
                .ok_or_else(|| anyhow!(timecorr::Error::Config("--input needs --config or --preset".into())))?;
            RunConfig::load(&dir.join(RESOLVED_CONFIG))?
        }
    };
    cfg.validate()?;
    let sets = files.iter().map(|p| read_samples(p)).collect::<anyhow::Result<Vec<_>>>()?;
    for s in &sets {
        let missing: Vec<f64> = cfg.shifts.iter().copied().filter(|x| s.shift_index(*x).is_err()).collect();
        if !missing.is_empty() {
            bail!(timecorr::Error::Config(format!(
                "sample set lacks shift columns {missing:?} requested by the configuration"
            )));
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| args.run.clone())
        .unwrap_or_else(|| PathBuf::from("timecorr-out"));
    fs::create_dir_all(&out)?;
    fs::write(out.join("analysis_config.json"), cfg.to_json_pretty())?;
    write_tables(&sets, &cfg, &out)
}

fn selfcheck(args: SelfcheckArgs) -> anyhow::Result<()> {
    let report = run_selfcheck()?;
    for c in &report.checks {
        println!(
            "{} {:<52} tolerance {:<40} measured {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.tolerance,
            c.measured
        );
    }
    if let Some(path) = &args.report {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    if report.passed() {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        Err(Exit(EXIT_SELFCHECK).into())
    }
}
