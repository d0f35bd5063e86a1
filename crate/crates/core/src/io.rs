//! File formats.
//!
//! All CSV files carry a header row; steps and nodes are 1-based. Floats are
//! written with Rust's shortest round-trip formatting, so re-reading a file
//! reproduces the in-memory values bit for bit.
//!
//! | file               | columns                                   |
//! |--------------------|-------------------------------------------|
//! | frames / truth CSV | `step,node_1,...,node_d` (empty = absent) |
//! | `trajectories.csv` | `run,step,node,estimate,truth`            |
//! | `rmse.csv`         | `step,node,rmse`                          |
//! | `iterations.csv`   | `run,step,ipf_iterations`                 |
//! | `timing.json`      | array of `{d, mean_seconds, ratio}`       |
//!
//! Scenarios are JSON documents mirroring [`Scenario`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ReadingFrame, TrustState};
use crate::sim::Scenario;

/// Version of the output file layout, recorded in `manifest.json`.
pub const SCHEMA_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Parse(format!("`{s}` is not a non-negative integer")))
}

fn wide_header(d: usize) -> Vec<String> {
    std::iter::once("step".to_string()).chain((1..=d).map(|j| format!("node_{j}"))).collect()
}

pub fn write_frames_csv<W: Write>(w: W, frames: &[ReadingFrame]) -> Result<()> {
    let d = frames.first().map_or(0, ReadingFrame::len);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(wide_header(d))?;
    for f in frames {
        let row = std::iter::once(f.time_step.to_string())
            .chain(f.readings.iter().map(|y| y.map(fmt_f64).unwrap_or_default()));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frames_csv<R: Read>(r: R) -> Result<Vec<ReadingFrame>> {
    let mut input = csv::Reader::from_reader(r);
    let d = input.headers()?.len().saturating_sub(1);
    let mut frames = Vec::new();
    for rec in input.records() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(Error::Dimension { expected: d, found: rec.len().saturating_sub(1) });
        }
        let step = parse_usize(&rec[0])?;
        let readings = rec
            .iter()
            .skip(1)
            .map(|cell| if cell.trim().is_empty() { Ok(None) } else { parse_f64(cell).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        frames.push(ReadingFrame::new(readings, step));
    }
    Ok(frames)
}

pub fn write_truth_csv<W: Write>(w: W, truth: &[TrustState]) -> Result<()> {
    let d = truth.first().map_or(0, TrustState::len);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(wide_header(d))?;
    for t in truth {
        let row = std::iter::once(t.time_step().to_string()).chain(t.values().iter().map(|&v| fmt_f64(v)));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth_csv<R: Read>(r: R) -> Result<Vec<TrustState>> {
    read_frames_csv(r)?
        .into_iter()
        .map(|f| {
            let values = f
                .readings
                .into_iter()
                .map(|y| y.ok_or_else(|| Error::Parse("truth cells cannot be empty".into())))
                .collect::<Result<Vec<_>>>()?;
            TrustState::new(values, f.time_step)
        })
        .collect()
}

pub fn write_scenario_json<W: Write>(w: W, scenario: &Scenario) -> Result<()> {
    serde_json::to_writer_pretty(w, scenario)?;
    Ok(())
}

pub fn read_scenario_json<R: Read>(r: R) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_reader(r)?;
    scenario.validate()?;
    Ok(scenario)
}

/// One row of `trajectories.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub run: usize,
    pub step: usize,
    pub node: usize,
    pub estimate: f64,
    pub truth: f64,
}

pub fn write_trajectories_csv<W: Write>(w: W, rows: impl IntoIterator<Item = TrajectoryRow>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["run", "step", "node", "estimate", "truth"])?;
    for r in rows {
        out.write_record([
            r.run.to_string(),
            r.step.to_string(),
            r.node.to_string(),
            fmt_f64(r.estimate),
            fmt_f64(r.truth),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectories_csv<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut input = csv::Reader::from_reader(r);
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse(format!("trajectory row has {} fields", rec.len())));
            }
            Ok(TrajectoryRow {
                run: parse_usize(&rec[0])?,
                step: parse_usize(&rec[1])?,
                node: parse_usize(&rec[2])?,
                estimate: parse_f64(&rec[3])?,
                truth: parse_f64(&rec[4])?,
            })
        })
        .collect()
}

/// Writes `rmse.csv` from a `[step][node]` table.
pub fn write_rmse_csv<W: Write>(w: W, rmse: &[Vec<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "node", "rmse"])?;
    for (k, row) in rmse.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out.write_record([(k + 1).to_string(), (j + 1).to_string(), fmt_f64(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads `rmse.csv` back into a `[step][node]` table.
pub fn read_rmse_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut input = csv::Reader::from_reader(r);
    let mut table: Vec<Vec<f64>> = Vec::new();
    for rec in input.records() {
        let rec = rec?;
        let step = parse_usize(&rec[0])?;
        let node = parse_usize(&rec[1])?;
        if step == 0 || node == 0 {
            return Err(Error::Parse("steps and nodes are 1-based".into()));
        }
        if table.len() < step {
            table.resize(step, Vec::new());
        }
        let row = &mut table[step - 1];
        if row.len() < node {
            row.resize(node, f64::NAN);
        }
        row[node - 1] = parse_f64(&rec[2])?;
    }
    Ok(table)
}

/// One row of `iterations.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationRow {
    pub run: usize,
    pub step: usize,
    pub ipf_iterations: usize,
}

pub fn write_iterations_csv<W: Write>(w: W, rows: impl IntoIterator<Item = IterationRow>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["run", "step", "ipf_iterations"])?;
    for r in rows {
        out.write_record([r.run.to_string(), r.step.to_string(), r.ipf_iterations.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_iterations_csv<R: Read>(r: R) -> Result<Vec<IterationRow>> {
    let mut input = csv::Reader::from_reader(r);
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(IterationRow {
                run: parse_usize(&rec[0])?,
                step: parse_usize(&rec[1])?,
                ipf_iterations: parse_usize(&rec[2])?,
            })
        })
        .collect()
}

/// One row of `timing.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub d: usize,
    pub mean_seconds: f64,
    pub ratio: f64,
}

pub fn write_timing_json<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    serde_json::to_writer_pretty(w, rows)?;
    Ok(())
}

pub fn read_timing_json<R: Read>(r: R) -> Result<Vec<TimingRow>> {
    Ok(serde_json::from_reader(r)?)
}
