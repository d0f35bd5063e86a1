//! `wsn-trust`: generate scenarios, run the trust filters and process the
//! Intel Lab sensor log.
//!
//! Settings resolve as command-line flags, then the `--config` JSON file, then
//! built-in defaults. Exit codes: 0 success, 1 error, 2 usage error,
//! 3 some filter step hit `max_iterations` without converging, 4 some runs
//! failed (outputs are written and the failures listed in `manifest.json`).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use wsn_trust::harness::{self, FilterResult};
use wsn_trust::ingest::{self, Attribute, EpochGrid, SyncConfig};
use wsn_trust::io::{self as wio, TimingRow};
use wsn_trust::sim::{self, FaultSpec};
use wsn_trust::{DrawPolicy, Estimator, ExperimentConfig, ExperimentResult, FilterKind, ModelConfig, ScenarioSource};

const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_RUNS_FAILED: u8 = 4;

const INTEL_HINT: &str = "the Intel Berkeley Research Lab log is available from \
http://db.csail.mit.edu/labdata/data.txt.gz (plain or gzipped files are accepted)";

#[derive(Parser)]
#[command(name = "wsn-trust", version, about = "Trust estimation for wireless sensor networks with particle filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write scenario.json, frames.csv and truth.csv.
    Simulate(SimulateArgs),
    /// Run Monte Carlo experiments on a scenario.
    Run(RunArgs),
    /// Synchronize the Intel Lab log, inject faults and run the filters.
    Intel(IntelArgs),
    /// Print the program version and output schema version.
    Version,
}

#[derive(Args)]
struct SimulateArgs {
    /// Reference scenario (Sensors A, B, C faulty; the rest honest, 100 steps).
    #[arg(long)]
    paper: bool,
    /// Number of nodes (at least 4 with --paper).
    #[arg(long)]
    d: usize,
    /// Number of time steps (ignored with --paper).
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Mean of honest readings.
    #[arg(long, default_value_t = sim::PAPER_MEAN)]
    mean: f64,
    /// Standard deviation of honest readings.
    #[arg(long, default_value_t = sim::DEFAULT_READING_STD)]
    reading_std: f64,
    /// Fault to inject, e.g. `stuck_at,node=2,start=31,end=60,value=100`.
    /// Nodes and steps are 1-based; repeatable. Not combinable with --paper.
    #[arg(long = "fault")]
    faults: Vec<FaultSpec>,
    /// Random seed [default: random, logged].
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "WSN_TRUST_OUT", default_value = "wsn-trust-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    /// Aging parameter alpha [default: 0.85].
    #[arg(long)]
    alpha: Option<f64>,
    /// Process noise variance, every node [default: 0.01].
    #[arg(long)]
    q: Option<f64>,
    /// Likelihood sharpness beta [default: 0.1].
    #[arg(long)]
    beta: Option<f64>,
    /// Agreement threshold on readings [default: 0.6; 2 for `intel`].
    #[arg(long)]
    r: Option<f64>,
    /// Inner-loop convergence threshold T_x [default: 1e-5].
    #[arg(long)]
    tx: Option<f64>,
    /// Particles per component N [default: 100].
    #[arg(long)]
    particles: Option<usize>,
    /// Inner-loop iteration cap [default: 100].
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Randomness across inner iterations [default: coupled].
    #[arg(long, value_enum)]
    draws: Option<DrawArg>,
    /// Reported point estimate [default: weighted].
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated filters: ipf, bdmpf, bootstrap [default: ipf,bdmpf; ipf for `intel`].
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<FilterKind>>,
    /// Monte Carlo runs M [default: 100].
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run m uses seed+m [default: random, logged].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core [default: 0].
    #[arg(long)]
    jobs: Option<usize>,
    /// Initial trust of every node [default: 0.5].
    #[arg(long)]
    init: Option<f64>,
    /// JSON file with any of the settings above.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON written by `simulate`.
    #[arg(long, conflicts_with = "paper")]
    scenario: Option<PathBuf>,
    /// Use the reference scenario with --d nodes.
    #[arg(long, requires = "d")]
    paper: bool,
    /// Nodes for --paper.
    #[arg(long)]
    d: Option<usize>,
    /// Standard deviation of honest readings for --paper.
    #[arg(long, default_value_t = sim::DEFAULT_READING_STD)]
    reading_std: f64,
    /// Redraw the scenario per run instead of sharing one (--paper only).
    #[arg(long)]
    redraw: bool,
    /// Timing study over these node counts (IPF, one worker); writes timing.json.
    #[arg(long, value_delimiter = ',', conflicts_with = "alphas")]
    scaling: Option<Vec<usize>>,
    /// One experiment per aging parameter; results under alpha_<value>/.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct IntelArgs {
    /// Dataset file (plain text or gzip).
    #[arg(long, env = "WSN_TRUST_INTEL_DATA")]
    data: PathBuf,
    /// Comma-separated mote ids [default: 9,10,11,12,13].
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<u32>>,
    /// Attribute to track [default: temperature].
    #[arg(long)]
    attribute: Option<Attribute>,
    /// Only records from this date, or `all` [default: 2004-02-28].
    #[arg(long)]
    day: Option<String>,
    /// First grid epoch [default: first observed].
    #[arg(long)]
    grid_start: Option<u32>,
    /// Last grid epoch [default: last observed].
    #[arg(long)]
    grid_end: Option<u32>,
    /// Grid stride in epochs [default: 1].
    #[arg(long)]
    grid_stride: Option<u32>,
    /// Longest gap bridged by interpolation, in epochs [default: 20].
    #[arg(long)]
    max_gap: Option<u32>,
    /// Fault to inject, replacing the default four; steps are 1-based grid
    /// positions. Repeatable.
    #[arg(long = "fault", conflicts_with = "no_faults")]
    faults: Vec<FaultSpec>,
    /// Inject no faults.
    #[arg(long)]
    no_faults: bool,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum DrawArg {
    Coupled,
    Independent,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Weighted,
    Resampled,
}

/// Contents of `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    q: Option<f64>,
    beta: Option<f64>,
    r: Option<f64>,
    t_x: Option<f64>,
    n_particles: Option<usize>,
    max_iterations: Option<usize>,
    draws: Option<DrawPolicy>,
    estimator: Option<Estimator>,
    filters: Option<Vec<FilterKind>>,
    runs: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    init: Option<f64>,
    redraw: Option<bool>,
    nodes: Option<Vec<u32>>,
    attribute: Option<Attribute>,
    day: Option<String>,
    grid_start: Option<u32>,
    grid_end: Option<u32>,
    grid_stride: Option<u32>,
    max_gap: Option<u32>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> u64 {
    flag.or(file).unwrap_or_else(|| {
        let seed = rand::random();
        info!("no seed given; using random seed {seed}");
        seed
    })
}

fn resolve_model(d: usize, args: &ModelArgs, file: &FileConfig, default_r: f64) -> ModelConfig {
    let defaults = ModelConfig::with_nodes(d);
    let q = args.q.or(file.q).unwrap_or(ModelConfig::DEFAULT_Q);
    ModelConfig {
        alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        q_diag: vec![q; d],
        beta: args.beta.or(file.beta).unwrap_or(defaults.beta),
        r: args.r.or(file.r).unwrap_or(default_r),
        t_x: args.tx.or(file.t_x).unwrap_or(defaults.t_x),
        n_particles: args.particles.or(file.n_particles).unwrap_or(defaults.n_particles),
        d,
        max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(defaults.max_iterations),
        draws: match args.draws {
            Some(DrawArg::Coupled) => DrawPolicy::Coupled,
            Some(DrawArg::Independent) => DrawPolicy::Independent,
            None => file.draws.unwrap_or_default(),
        },
        estimator: match args.estimator {
            Some(EstimatorArg::Weighted) => Estimator::Weighted,
            Some(EstimatorArg::Resampled) => Estimator::Resampled,
            None => file.estimator.unwrap_or_default(),
        },
    }
}

fn resolve_experiment(
    source: ScenarioSource,
    d: usize,
    args: &ExperimentArgs,
    file: &FileConfig,
    default_filters: &[FilterKind],
    default_r: f64,
) -> ExperimentConfig {
    let base = ExperimentConfig::paper(d);
    ExperimentConfig {
        source,
        filters: args.filters.clone().or_else(|| file.filters.clone()).unwrap_or_else(|| default_filters.to_vec()),
        runs: args.runs.or(file.runs).unwrap_or(base.runs),
        base_seed: resolve_seed(args.seed, file.seed),
        model: resolve_model(d, &args.model, file, default_r),
        init: args.init.or(file.init).unwrap_or(base.init),
        redraw_scenario: false,
        jobs: args.jobs.or(file.jobs).unwrap_or(base.jobs),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_scenario_files(dir: &Path, scenario: &sim::Scenario) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    wio::write_scenario_json(create(&dir.join("scenario.json"))?, scenario)?;
    wio::write_frames_csv(create(&dir.join("frames.csv"))?, &scenario.frames)?;
    wio::write_truth_csv(create(&dir.join("truth.csv"))?, &scenario.truth)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<u8> {
    let seed = resolve_seed(args.seed, None);
    let scenario = if args.paper {
        if !args.faults.is_empty() {
            bail!("--fault cannot be combined with --paper; the reference scenario has fixed faults");
        }
        sim::paper_scenario(args.d, args.reading_std, seed)?
    } else {
        sim::faulted_scenario(args.d, args.k, args.mean, args.reading_std, &args.faults, seed)?
    };
    write_scenario_files(&args.out.out, &scenario)?;
    info!("wrote {} steps x {} nodes to {}", scenario.steps(), scenario.nodes(), args.out.out.display());
    Ok(0)
}

fn print_summary(result: &ExperimentResult) {
    let names: Vec<&str> = result.scenario.nodes.iter().map(|n| n.name.as_str()).collect();
    let steps = result.scenario.steps();
    for f in &result.results {
        println!("{} ({} runs, {} failed)", f.kind, f.runs.len(), f.failures.len());
        if f.runs.is_empty() {
            continue;
        }
        println!("  {:<16} {:>11} {:>10}", "node", "final_trust", "mean_rmse");
        for (j, name) in names.iter().enumerate() {
            let rmse = f.rmse.as_ref().map_or(f64::NAN, |r| r.time_averaged(j));
            println!("  {name:<16} {:>11.4} {rmse:>10.4}", f.mean_estimate(steps, j));
        }
        if f.kind == FilterKind::Ipf {
            let iters: usize = f.runs.iter().flat_map(|r| &r.iterations).sum();
            let total: usize = f.runs.iter().map(|r| r.iterations.len()).sum();
            let stuck = f.runs.iter().flat_map(|r| &r.converged).filter(|c| !**c).count();
            println!(
                "  mean IPF iterations {:.2}; steps without convergence {stuck}",
                iters as f64 / total.max(1) as f64
            );
        }
    }
}

fn exit_status(results: &[&FilterResult]) -> u8 {
    if results.iter().any(|f| !f.failures.is_empty()) {
        warn!("some runs failed; see manifest.json");
        EXIT_RUNS_FAILED
    } else if results.iter().any(|f| !f.all_converged()) {
        warn!("some steps reached max_iterations without converging");
        EXIT_NOT_CONVERGED
    } else {
        0
    }
}

/// Fully resolved settings, written to `config.json` next to the results.
#[derive(Serialize)]
struct Resolved<'a> {
    filters: &'a [FilterKind],
    runs: usize,
    seed: u64,
    init: f64,
    redraw: bool,
    jobs: usize,
    model: &'a ModelConfig,
}

fn write_resolved(dir: &Path, cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let resolved = Resolved {
        filters: &cfg.filters,
        runs: cfg.runs,
        seed: cfg.base_seed,
        init: cfg.init,
        redraw: cfg.redraw_scenario,
        jobs: cfg.jobs,
        model: &cfg.model,
    };
    fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(create(&dir.join("config.json"))?, &resolved)?;
    Ok(())
}

fn run_and_export(cfg: &ExperimentConfig, dir: &Path) -> anyhow::Result<u8> {
    write_resolved(dir, cfg)?;
    let result = harness::monte_carlo(cfg)?;
    harness::export(dir, &result)?;
    print_summary(&result);
    Ok(exit_status(&result.results.iter().collect::<Vec<_>>()))
}

fn run(args: RunArgs) -> anyhow::Result<u8> {
    let file = FileConfig::load(args.exp.config.as_deref())?;
    let out = &args.exp.out.out;
    let (source, d) = match (&args.scenario, args.paper) {
        (Some(path), _) => {
            let f = File::open(path).with_context(|| format!("cannot open scenario {}", path.display()))?;
            let s = wio::read_scenario_json(std::io::BufReader::new(f))?;
            let d = s.nodes();
            (ScenarioSource::Fixed(s), d)
        }
        (None, true) => {
            let d = args.d.expect("clap requires --d with --paper");
            (ScenarioSource::Paper { d, reading_std: args.reading_std }, d)
        }
        (None, false) => bail!("give a scenario with --scenario FILE or use --paper --d N"),
    };
    let mut cfg =
        resolve_experiment(source, d, &args.exp, &file, &[FilterKind::Ipf, FilterKind::Bdmpf], ModelConfig::DEFAULT_R);
    cfg.redraw_scenario = args.redraw || file.redraw.unwrap_or(false);

    if let Some(dims) = &args.scaling {
        write_resolved(out, &cfg)?;
        let rows: Vec<TimingRow> = harness::scaling_study(dims, &cfg)?;
        wio::write_timing_json(create(&out.join("timing.json"))?, &rows)?;
        println!("{:>4} {:>12} {:>7}", "d", "mean_seconds", "ratio");
        for r in &rows {
            println!("{:>4} {:>12.6} {:>7.3}", r.d, r.mean_seconds, r.ratio);
        }
        return Ok(0);
    }

    if let Some(alphas) = &args.alphas {
        write_resolved(out, &cfg)?;
        let sweep = harness::alpha_sweep(alphas, &cfg)?;
        let mut status = 0;
        for a in &sweep {
            let dir = out.join(format!("alpha_{}", a.alpha));
            harness::export(&dir, &a.result)?;
            println!("alpha = {}", a.alpha);
            print_summary(&a.result);
            status = status.max(exit_status(&a.result.results.iter().collect::<Vec<_>>()));
        }
        return Ok(status);
    }

    run_and_export(&cfg, out)
}

fn intel(args: IntelArgs) -> anyhow::Result<u8> {
    let file = FileConfig::load(args.exp.config.as_deref())?;
    if !args.data.exists() {
        bail!("dataset {} not found; {INTEL_HINT}", args.data.display());
    }

    let day = match args.day.clone().or_else(|| file.day.clone()) {
        None => Some(SyncConfig::default_day()),
        Some(s) if s.eq_ignore_ascii_case("all") => None,
        Some(s) => Some(s.parse().with_context(|| format!("--day `{s}` is not YYYY-MM-DD"))?),
    };
    let grid_start = args.grid_start.or(file.grid_start);
    let grid_end = args.grid_end.or(file.grid_end);
    let grid_stride = args.grid_stride.or(file.grid_stride);
    let grid = match (grid_start, grid_end) {
        (Some(start), Some(end)) => Some(EpochGrid { start, end, stride: grid_stride.unwrap_or(1) }),
        (None, None) if grid_stride.is_none() => None,
        _ => bail!("--grid-start and --grid-end must be given together"),
    };
    let sync_cfg = SyncConfig {
        node_ids: args
            .nodes
            .clone()
            .or_else(|| file.nodes.clone())
            .unwrap_or_else(|| SyncConfig::DEFAULT_NODES.to_vec()),
        attribute: args.attribute.or(file.attribute).unwrap_or_default(),
        grid,
        day,
        max_gap: args.max_gap.or(file.max_gap).unwrap_or(SyncConfig::DEFAULT_MAX_GAP),
    };

    let (records, report) = ingest::parse_dataset(ingest::open_dataset(&args.data)?)?;
    if report.skipped > 0 {
        warn!("skipped {} malformed lines (first at {:?})", report.skipped, report.first_skipped);
    }
    let sync = ingest::synchronize(&records, &sync_cfg)?;
    for w in &sync.warnings {
        warn!("{w:?}");
    }
    let d = sync_cfg.node_ids.len();
    let k = sync.frames.len();

    let faults: Vec<FaultSpec> = if args.no_faults {
        Vec::new()
    } else if !args.faults.is_empty() {
        args.faults.clone()
    } else {
        let (kept, dropped): (Vec<_>, Vec<_>) = sim::real_data_faults().into_iter().partition(|f| f.node < d);
        for f in dropped {
            info!("default fault `{f}` skipped: only {d} nodes");
        }
        if let Some(f) = kept.iter().find(|f| f.end >= k) {
            bail!("default fault `{f}` does not fit in {k} grid epochs; widen the grid or pass --fault/--no-faults");
        }
        kept
    };

    let names = sync_cfg.node_ids.iter().map(|m| format!("mote {m}")).collect();
    let seed = resolve_seed(args.exp.seed, file.seed);
    let scenario = sim::scenario_from_frames(sync.frames, names, &faults, seed)?;
    let out = args.exp.out.out.clone();
    write_scenario_files(&out, &scenario)?;
    let mut epochs = create(&out.join("epochs.csv"))?;
    writeln!(epochs, "step,epoch")?;
    for (i, e) in sync.epochs.iter().enumerate() {
        writeln!(epochs, "{},{e}", i + 1)?;
    }
    epochs.flush()?;

    let mut exp = args.exp;
    exp.seed = Some(seed);
    let cfg = resolve_experiment(ScenarioSource::Fixed(scenario), d, &exp, &file, &[FilterKind::Ipf], 2.0);
    run_and_export(&cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a),
        Command::Intel(a) => intel(a),
        Command::Version => {
            println!("wsn-trust {} (output schema {})", env!("CARGO_PKG_VERSION"), wio::SCHEMA_VERSION);
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
