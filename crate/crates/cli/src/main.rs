//! `sfpbench`: run the benchmark suite on the emulated executive and print
//! the results.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid configuration or
//! dataset, 4 a benchmark failed.

use std::path::PathBuf;
use std::process::ExitCode;
use std::rc::Rc;

use clap::Parser;

use sfpbench::report::{self, Format, RunConfig, RunPlan};
use sfpbench::suite::{self, Group, SuiteError};
use sfpbench::timebase::{ClockKind, Rate};
use sfpbench::workloads::data::DEFAULT_SEED;

#[derive(Parser, Debug)]
#[command(
    name = "sfpbench",
    version,
    about = "Partition-aware RTOS benchmarks on an emulated ARINC-653 executive"
)]
struct Cli {
    /// Run one group: grey, apex or complete.
    #[arg(long)]
    group: Option<Group>,
    /// Run a benchmark by application or row name; repeatable.
    #[arg(long = "bench", value_name = "NAME")]
    benches: Vec<String>,
    /// Time source: virtual (cost model) or host (wall clock).
    #[arg(long)]
    clock: Option<ClockKind>,
    /// Tick rate, e.g. 75 or 37.5.
    #[arg(long, value_name = "RATE")]
    ticks_per_us: Option<Rate>,
    /// Iterations per benchmark, replacing the group defaults.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    iters: Option<u32>,
    #[arg(long)]
    format: Option<Format>,
    /// Run configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the scheduling trace of every run to this file.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Seed of the synthetic datasets and of APEX APP 3's payloads.
    #[arg(long)]
    seed: Option<u64>,
    /// PGM image for Sobel.
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,
    /// Edge-list graph for Dijkstra.
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Raw s16le signal for ADPCM.
    #[arg(long, value_name = "PATH")]
    signal: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Config(String),
    Bench(SuiteError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Bench(_) => 4,
        }
    }
}

fn plan(cli: Cli) -> Result<RunPlan, Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    let mut plan = RunPlan::default();

    let names = if cli.benches.is_empty() {
        cfg.benches.clone()
    } else {
        cli.benches.clone()
    };
    let group = match (cli.group, &cfg.group) {
        (Some(g), _) => Some(g),
        (None, Some(g)) => Some(g.parse::<Group>().map_err(Failure::Config)?),
        (None, None) => None,
    };
    if !names.is_empty() {
        plan.benches = names
            .iter()
            .map(|n| suite::find_bench(n).map_err(|e| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?;
        if let Some(g) = group {
            plan.benches.retain(|b| b.group == g);
        }
    } else if let Some(g) = group {
        plan.benches = suite::group(g).collect();
    }

    let s = &mut plan.settings;
    s.clock = cli.clock.or(cfg.clock).unwrap_or(s.clock);
    s.rate = cli.ticks_per_us.or(cfg.ticks_per_us).unwrap_or(s.rate);
    if let Some(c) = cfg.costs {
        s.costs = c;
    }
    if let Some(h) = cfg.health_monitor {
        s.health_monitor = h;
    }
    if let Some(cap) = cfg.process_cap {
        if cap == 0 {
            return Err(Failure::Config("process_cap must be at least 1".into()));
        }
        s.process_cap = cap;
    }
    plan.iterations = cli.iters.or(cfg.iterations);
    if plan.iterations == Some(0) {
        return Err(Failure::Config("iterations must be at least 1".into()));
    }
    plan.process_count = cfg.process_count.unwrap_or(plan.process_count);
    if plan.process_count < 2 {
        return Err(Failure::Config("process_count must be at least 2".into()));
    }

    let mut datasets = cfg.datasets;
    datasets.image = cli.image.or(datasets.image);
    datasets.graph = cli.graph.or(datasets.graph);
    datasets.signal = cli.signal.or(datasets.signal);
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    plan.data = Rc::new(datasets.build(seed).map_err(|e| Failure::Config(e.to_string()))?);

    plan.format = cli.format.unwrap_or_default();
    plan.trace = cli.trace;
    Ok(plan)
}

fn run(cli: Cli) -> Result<String, Failure> {
    let plan = plan(cli)?;
    let out = report::execute_plan(&plan).map_err(Failure::Bench)?;
    if let Some(path) = &plan.trace {
        std::fs::write(path, report::render_traces(&out.traces))
            .map_err(|e| Failure::Config(format!("cannot write trace {}: {e}", path.display())))?;
    }
    Ok(report::emit(&out.rows, plan.format, plan.settings.rate))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}\n\nFor more information, try '--help'."),
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Bench(e) => eprintln!("benchmark failed: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}
