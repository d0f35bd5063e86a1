//! Monte Carlo experiments: repeated filter runs over a scenario, per-node
//! per-step RMSE against the ground truth, wall-clock timing, dimension
//! scaling and aging-parameter sweeps.
//!
//! Run `m` (1-based) of an experiment with base seed `b` uses seed
//! [`run_seed`]`(b, m) = b + m` (wrapping). Each filter kind draws from its
//! own ChaCha stream of that seed, so adding or removing filters from an
//! experiment never changes another filter's trajectory. Results are
//! collected in run order regardless of how many worker threads execute
//! them.

use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{run_filter, FilterKind};
use crate::io::{
    write_iterations_csv, write_rmse_csv, write_timing_json, write_trajectories_csv, IterationRow, TimingRow,
    TrajectoryRow, SCHEMA_VERSION,
};
use crate::model::{ModelConfig, ReadingFrame, TrustState};
use crate::sim::{paper_scenario, Scenario};

/// Where an experiment's readings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// The reference scenario with `d` nodes.
    Paper { d: usize, reading_std: f64 },
    /// A fixed, pre-built scenario (simulated file or real data).
    Fixed(Scenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: ScenarioSource,
    pub filters: Vec<FilterKind>,
    /// Number of independent runs M.
    pub runs: usize,
    pub base_seed: u64,
    pub model: ModelConfig,
    /// Initial trust of every node.
    pub init: f64,
    /// Draw a fresh scenario realization per run instead of sharing one.
    pub redraw_scenario: bool,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub const DEFAULT_INIT: f64 = 0.5;

    /// The reference setting: `d` nodes, default model parameters, IPF and
    /// BDMPF, 100 runs.
    pub fn paper(d: usize) -> Self {
        ExperimentConfig {
            source: ScenarioSource::Paper { d, reading_std: crate::sim::DEFAULT_READING_STD },
            filters: vec![FilterKind::Ipf, FilterKind::Bdmpf],
            runs: 100,
            base_seed: 0,
            model: ModelConfig::with_nodes(d),
            init: Self::DEFAULT_INIT,
            redraw_scenario: false,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("at least one run is required"));
        }
        if self.filters.is_empty() {
            return Err(Error::config("at least one filter is required"));
        }
        if !(0.0..=1.0).contains(&self.init) {
            return Err(Error::config(format!("initial trust must lie in [0, 1], got {}", self.init)));
        }
        self.model.validate()?;
        let d = match &self.source {
            ScenarioSource::Paper { d, .. } => *d,
            ScenarioSource::Fixed(s) => {
                s.validate()?;
                if self.redraw_scenario {
                    return Err(Error::config("a fixed scenario cannot be redrawn per run"));
                }
                s.nodes()
            }
        };
        if d != self.model.d {
            return Err(Error::Dimension { expected: self.model.d, found: d });
        }
        Ok(())
    }

    fn scenario(&self, seed: u64) -> Result<Scenario> {
        match &self.source {
            ScenarioSource::Paper { d, reading_std } => paper_scenario(*d, *reading_std, seed),
            ScenarioSource::Fixed(s) => Ok(s.clone()),
        }
    }
}

/// Seed of run `m` (1-based).
pub fn run_seed(base: u64, m: usize) -> u64 {
    base.wrapping_add(m as u64)
}

fn scenario_seed_for_run(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Independent stream for one filter kind within a run.
pub fn filter_rng(seed: u64, kind: FilterKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match kind {
        FilterKind::Bootstrap => 1,
        FilterKind::Ipf => 2,
        FilterKind::Bdmpf => 3,
    });
    rng
}

/// Estimates and diagnostics of one completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    /// `estimates[k][j]`: estimate of node `j` after frame `k`.
    pub estimates: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    /// 1-based failing frame, when the failure happened inside the filter.
    pub step: Option<usize>,
    pub message: String,
}

/// `RMSE[k][j]` over Monte Carlo runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseTrace {
    pub values: Vec<Vec<f64>>,
}

impl RmseTrace {
    /// `sqrt(sum_m (xhat^m_{k,j} - x_{k,j})^2 / M)` for every step and node.
    pub fn from_runs<'a>(estimates: impl IntoIterator<Item = &'a [Vec<f64>]>, truth: &[TrustState]) -> Result<Self> {
        let mut sums: Vec<Vec<f64>> = truth.iter().map(|t| vec![0.0; t.len()]).collect();
        let mut runs = 0usize;
        for est in estimates {
            if est.len() != truth.len() {
                return Err(Error::Dimension { expected: truth.len(), found: est.len() });
            }
            for ((row, e), t) in sums.iter_mut().zip(est).zip(truth) {
                if e.len() != t.len() {
                    return Err(Error::Dimension { expected: t.len(), found: e.len() });
                }
                for ((s, x), y) in row.iter_mut().zip(e).zip(t.values()) {
                    *s += (x - y) * (x - y);
                }
            }
            runs += 1;
        }
        if runs == 0 {
            return Err(Error::config("RMSE needs at least one run"));
        }
        let values = sums.into_iter().map(|row| row.into_iter().map(|s| (s / runs as f64).sqrt()).collect()).collect();
        Ok(RmseTrace { values })
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn nodes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Value at 1-based step `k` and 0-based node `j`.
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.values[k - 1][j]
    }

    /// Mean over all steps for node `j`.
    pub fn time_averaged(&self, j: usize) -> f64 {
        self.time_averaged_over(j, 1..=self.steps())
    }

    /// Mean over the 1-based inclusive step range for node `j`.
    pub fn time_averaged_over(&self, j: usize, steps: RangeInclusive<usize>) -> f64 {
        let (sum, n) = steps.fold((0.0, 0usize), |(s, n), k| (s + self.at(k, j), n + 1));
        sum / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

impl TimingSummary {
    fn from_runs(runs: &[RunRecord]) -> Self {
        let secs: Vec<f64> = runs.iter().map(|r| r.wall_time.as_secs_f64()).collect();
        if secs.is_empty() {
            return TimingSummary { mean_seconds: 0.0, min_seconds: 0.0, max_seconds: 0.0 };
        }
        TimingSummary {
            mean_seconds: secs.iter().sum::<f64>() / secs.len() as f64,
            min_seconds: secs.iter().copied().fold(f64::INFINITY, f64::min),
            max_seconds: secs.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub kind: FilterKind,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    /// `None` when every run failed.
    pub rmse: Option<RmseTrace>,
    pub timing: TimingSummary,
}

impl FilterResult {
    /// Mean estimate over runs at 1-based step `k` for node `j`.
    pub fn mean_estimate(&self, k: usize, j: usize) -> f64 {
        self.runs.iter().map(|r| r.estimates[k - 1][j]).sum::<f64>() / self.runs.len() as f64
    }

    /// Mean estimate over runs and over the 1-based inclusive step range.
    pub fn mean_estimate_over(&self, j: usize, steps: RangeInclusive<usize>) -> f64 {
        let (sum, n) = steps.fold((0.0, 0usize), |(s, n), k| (s + self.mean_estimate(k, j), n + 1));
        sum / n as f64
    }

    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.converged.iter().all(|&c| c))
    }

    /// Fraction of (run, step) pairs whose inner loop needed at most
    /// `limit` sweeps.
    pub fn iteration_share_within(&self, limit: usize) -> f64 {
        let (hit, total) = self
            .runs
            .iter()
            .flat_map(|r| r.iterations.iter())
            .fold((0usize, 0usize), |(h, t), &i| (h + usize::from(i <= limit), t + 1));
        hit as f64 / total.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// The shared scenario realization (the first run's, when redrawing).
    pub scenario: Scenario,
    pub results: Vec<FilterResult>,
}

impl ExperimentResult {
    pub fn filter(&self, kind: FilterKind) -> Option<&FilterResult> {
        self.results.iter().find(|r| r.kind == kind)
    }
}

fn execute_run(
    kind: FilterKind,
    run: usize,
    seed: u64,
    frames: &[ReadingFrame],
    model: &ModelConfig,
    init: &TrustState,
) -> std::result::Result<RunRecord, RunFailure> {
    let mut rng = filter_rng(seed, kind);
    let started = Instant::now();
    let outputs = run_filter(kind, frames, model, init, &mut rng);
    let wall_time = started.elapsed();
    match outputs {
        Ok(outputs) => Ok(RunRecord {
            run,
            seed,
            iterations: outputs.iter().map(|o| o.iterations_used).collect(),
            converged: outputs.iter().map(|o| o.converged).collect(),
            estimates: outputs.into_iter().map(|o| o.estimate.into_values()).collect(),
            wall_time,
        }),
        Err(e) => Err(RunFailure {
            run,
            seed,
            step: match &e {
                Error::Step { step, .. } => Some(*step),
                _ => None,
            },
            message: e.to_string(),
        }),
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every configured filter `runs` times and aggregates RMSE and timing.
///
/// Failed runs are recorded with their seed and failing step; the RMSE is
/// computed over the runs that completed.
pub fn monte_carlo(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let shared = cfg.scenario(cfg.base_seed)?;
    let init = TrustState::uniform(cfg.model.d, cfg.init, 0)?;

    let scenarios: Vec<Scenario> = if cfg.redraw_scenario {
        (1..=cfg.runs)
            .map(|m| cfg.scenario(scenario_seed_for_run(run_seed(cfg.base_seed, m))))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut results = Vec::with_capacity(cfg.filters.len());
    for &kind in &cfg.filters {
        let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = with_pool(cfg.jobs, || {
            (1..=cfg.runs)
                .into_par_iter()
                .map(|m| {
                    let frames = if cfg.redraw_scenario { &scenarios[m - 1].frames } else { &shared.frames };
                    execute_run(kind, m, run_seed(cfg.base_seed, m), frames, &cfg.model, &init)
                })
                .collect()
        })?;

        let mut runs = Vec::with_capacity(outcomes.len());
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(r) => runs.push(r),
                Err(f) => {
                    log::warn!("{kind} run {} (seed {}) failed: {}", f.run, f.seed, f.message);
                    failures.push(f);
                }
            }
        }
        let rmse = if runs.is_empty() {
            None
        } else {
            Some(RmseTrace::from_runs(runs.iter().map(|r| r.estimates.as_slice()), &shared.truth)?)
        };
        let timing = TimingSummary::from_runs(&runs);
        results.push(FilterResult { kind, runs, failures, rmse, timing });
    }

    Ok(ExperimentResult { scenario: shared, results })
}

/// Mean single-run wall time of the iterative filter for every `d`, with
/// ratios relative to the first (smallest) `d`. Runs on one worker.
pub fn scaling_study(d_values: &[usize], base: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    if d_values.is_empty() {
        return Err(Error::config("scaling study needs at least one dimension"));
    }
    if d_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("scaling dimensions must be sorted ascending"));
    }
    let reading_std = match base.source {
        ScenarioSource::Paper { reading_std, .. } => reading_std,
        ScenarioSource::Fixed(_) => crate::sim::DEFAULT_READING_STD,
    };
    let mut rows: Vec<TimingRow> = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let cfg = ExperimentConfig {
            source: ScenarioSource::Paper { d, reading_std },
            filters: vec![FilterKind::Ipf],
            model: base.model.clone().resized(d),
            redraw_scenario: false,
            jobs: 1,
            ..base.clone()
        };
        let result = monte_carlo(&cfg)?;
        let mean_seconds = result.results[0].timing.mean_seconds;
        let ratio = match rows.first() {
            Some(first) => mean_seconds / first.mean_seconds,
            None => 1.0,
        };
        rows.push(TimingRow { d, mean_seconds, ratio });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct AlphaResult {
    pub alpha: f64,
    pub result: ExperimentResult,
}

/// One experiment per aging parameter, all on the same scenario realization.
pub fn alpha_sweep(alphas: &[f64], base: &ExperimentConfig) -> Result<Vec<AlphaResult>> {
    if alphas.is_empty() {
        return Err(Error::config("alpha sweep needs at least one value"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            let mut cfg = base.clone();
            cfg.model.alpha = alpha;
            Ok(AlphaResult { alpha, result: monte_carlo(&cfg)? })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    filters: Vec<&'a str>,
    runs: usize,
    steps: usize,
    nodes: usize,
    failures: Vec<ManifestFailure>,
}

#[derive(Debug, Serialize)]
struct ManifestFailure {
    filter: String,
    run: usize,
    seed: u64,
    step: Option<usize>,
    message: String,
}

/// Writes `<dir>/<filter>/{trajectories,rmse,iterations}.csv` and
/// `timing.json` for every filter, plus `<dir>/manifest.json`.
pub fn export(dir: &Path, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let truth = &result.scenario.truth;
    for fr in &result.results {
        let sub = dir.join(fr.kind.as_str());
        fs::create_dir_all(&sub)?;
        let rows = fr.runs.iter().flat_map(|r| {
            r.estimates.iter().enumerate().flat_map(move |(k, row)| {
                row.iter().enumerate().map(move |(j, &estimate)| TrajectoryRow {
                    run: r.run,
                    step: k + 1,
                    node: j + 1,
                    estimate,
                    truth: truth[k].values()[j],
                })
            })
        });
        write_trajectories_csv(BufWriter::new(File::create(sub.join("trajectories.csv"))?), rows)?;
        if let Some(rmse) = &fr.rmse {
            write_rmse_csv(BufWriter::new(File::create(sub.join("rmse.csv"))?), &rmse.values)?;
        }
        let iterations = fr.runs.iter().flat_map(|r| {
            r.iterations.iter().enumerate().map(move |(k, &i)| IterationRow {
                run: r.run,
                step: k + 1,
                ipf_iterations: i,
            })
        });
        write_iterations_csv(BufWriter::new(File::create(sub.join("iterations.csv"))?), iterations)?;
        let timing = [TimingRow { d: result.scenario.nodes(), mean_seconds: fr.timing.mean_seconds, ratio: 1.0 }];
        write_timing_json(BufWriter::new(File::create(sub.join("timing.json"))?), &timing)?;
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        filters: result.results.iter().map(|r| r.kind.as_str()).collect(),
        runs: result.results.iter().map(|r| r.runs.len() + r.failures.len()).max().unwrap_or(0),
        steps: result.scenario.steps(),
        nodes: result.scenario.nodes(),
        failures: result
            .results
            .iter()
            .flat_map(|r| {
                r.failures.iter().map(move |f| ManifestFailure {
                    filter: r.kind.to_string(),
                    run: f.run,
                    seed: f.seed,
                    step: f.step,
                    message: f.message.clone(),
                })
            })
            .collect(),
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("manifest.json"))?), &manifest)?;
    Ok(())
}
