//! Intel Berkeley lab sensor data: parsing and synchronization onto a common
//! epoch grid.
//!
//! Each line of the dataset is
//! `date time epoch moteid temperature humidity light voltage`, whitespace
//! separated. Lines that do not parse are counted and skipped.
//!
//! Motes sample asynchronously, so every selected node's series is linearly
//! interpolated onto the grid. Grid points outside a node's samples, or inside
//! a gap wider than `max_gap` epochs, are reported as absent.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime};
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ReadingFrame;

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub epoch: u32,
    pub mote_id: u32,
    pub temperature: f64,
    pub humidity: f64,
    pub light: f64,
    pub voltage: f64,
}

impl RawRecord {
    pub fn attribute(&self, attribute: Attribute) -> f64 {
        match attribute {
            Attribute::Temperature => self.temperature,
            Attribute::Humidity => self.humidity,
            Attribute::Light => self.light,
        }
    }
}

impl FromStr for RawRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!("expected 8 fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("field {} `{}` is not a number", i + 1, fields[i])))
        };
        let int = |i: usize| -> Result<u32> {
            fields[i]
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("field {} `{}` is not an integer", i + 1, fields[i])))
        };
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
            .map_err(|e| Error::Parse(format!("bad date `{}`: {e}", fields[0])))?;
        let time = NaiveTime::parse_from_str(fields[1], "%H:%M:%S%.f")
            .map_err(|e| Error::Parse(format!("bad time `{}`: {e}", fields[1])))?;
        let mote_id = int(3)?;
        if mote_id == 0 {
            return Err(Error::Parse("mote id must be at least 1".into()));
        }
        Ok(RawRecord {
            date,
            time,
            epoch: int(2)?,
            mote_id,
            temperature: num(4)?,
            humidity: num(5)?,
            light: num(6)?,
            voltage: num(7)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub lines: usize,
    pub skipped: usize,
    /// 1-based line numbers of the first ten skipped lines.
    pub first_skipped: Vec<usize>,
}

/// Parses every line of a dataset stream. Blank lines are ignored.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<(Vec<RawRecord>, ParseReport)> {
    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match line.parse::<RawRecord>() {
            Ok(rec) => records.push(rec),
            Err(_) => {
                report.skipped += 1;
                if report.first_skipped.len() < 10 {
                    report.first_skipped.push(i + 1);
                }
            }
        }
    }
    Ok((records, report))
}

/// Opens a dataset file, transparently decompressing gzip input.
pub fn open_dataset(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    #[default]
    Temperature,
    Humidity,
    Light,
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "temperature" | "temp" => Ok(Attribute::Temperature),
            "humidity" => Ok(Attribute::Humidity),
            "light" => Ok(Attribute::Light),
            other => Err(Error::config(format!("unknown attribute `{other}`"))),
        }
    }
}

/// Inclusive epoch grid `start, start + stride, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochGrid {
    pub start: u32,
    pub end: u32,
    pub stride: u32,
}

impl EpochGrid {
    pub fn epochs(&self) -> impl Iterator<Item = u32> {
        (self.start..=self.end).step_by(self.stride.max(1) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncConfig {
    pub node_ids: Vec<u32>,
    pub attribute: Attribute,
    /// `None` spans the epochs observed for the selected nodes.
    pub grid: Option<EpochGrid>,
    pub day: Option<NaiveDate>,
    pub max_gap: u32,
}

impl SyncConfig {
    pub const DEFAULT_NODES: [u32; 5] = [9, 10, 11, 12, 13];
    pub const DEFAULT_MAX_GAP: u32 = 20;

    pub fn default_day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2004, 2, 28).expect("valid date")
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_ids.is_empty() {
            return Err(Error::config("at least one node id is required"));
        }
        let mut sorted = self.node_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("node ids must be distinct"));
        }
        if let Some(g) = self.grid {
            if g.start >= g.end {
                return Err(Error::config(format!("grid start {} must be before end {}", g.start, g.end)));
            }
            if g.stride == 0 {
                return Err(Error::config("grid stride must be at least 1"));
            }
        }
        Ok(())
    }
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            node_ids: Self::DEFAULT_NODES.to_vec(),
            attribute: Attribute::Temperature,
            grid: None,
            day: Some(Self::default_day()),
            max_gap: Self::DEFAULT_MAX_GAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncWarning {
    /// No usable records for this mote; its column is absent throughout.
    NoRecords { mote_id: u32 },
}

#[derive(Debug, Clone)]
pub struct Synchronized {
    pub frames: Vec<ReadingFrame>,
    /// Grid epoch of every frame.
    pub epochs: Vec<u32>,
    pub warnings: Vec<SyncWarning>,
}

/// Sorted `(epoch, value)` samples with repeated epochs averaged.
fn node_series(records: &[RawRecord], mote_id: u32, cfg: &SyncConfig) -> Vec<(u32, f64)> {
    let mut raw: Vec<(u32, f64)> = records
        .iter()
        .filter(|r| r.mote_id == mote_id && cfg.day.is_none_or(|d| r.date == d))
        .map(|r| (r.epoch, r.attribute(cfg.attribute)))
        .filter(|(_, v)| v.is_finite())
        .collect();
    raw.sort_by_key(|&(e, _)| e);
    let mut series: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
    let mut run = 0usize;
    for (e, v) in raw {
        match series.last_mut() {
            Some((last, acc)) if *last == e => {
                run += 1;
                *acc += (v - *acc) / run as f64;
            }
            _ => {
                run = 1;
                series.push((e, v));
            }
        }
    }
    series
}

/// Linear interpolation of a sorted series at `epoch`.
pub fn interpolate(series: &[(u32, f64)], epoch: u32, max_gap: u32) -> Option<f64> {
    let hi = series.partition_point(|&(e, _)| e < epoch);
    match series.get(hi) {
        Some(&(e, v)) if e == epoch => Some(v),
        Some(&(e1, v1)) if hi > 0 => {
            let (e0, v0) = series[hi - 1];
            if e1 - e0 > max_gap {
                return None;
            }
            let t = (epoch - e0) as f64 / (e1 - e0) as f64;
            Some(v0 + (v1 - v0) * t)
        }
        _ => None,
    }
}

/// Interpolates every selected node onto the epoch grid. Columns follow
/// `cfg.node_ids` order; frames are numbered 1.. in grid order.
pub fn synchronize(records: &[RawRecord], cfg: &SyncConfig) -> Result<Synchronized> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let series: Vec<Vec<(u32, f64)>> = cfg
        .node_ids
        .iter()
        .map(|&id| {
            let s = node_series(records, id, cfg);
            if s.is_empty() {
                log::warn!("no usable records for mote {id}");
                warnings.push(SyncWarning::NoRecords { mote_id: id });
            }
            s
        })
        .collect();

    let grid = match cfg.grid {
        Some(g) => g,
        None => {
            let lo = series.iter().filter_map(|s| s.first()).map(|&(e, _)| e).min();
            let hi = series.iter().filter_map(|s| s.last()).map(|&(e, _)| e).max();
            match (lo, hi) {
                (Some(start), Some(end)) if start < end => EpochGrid { start, end, stride: 1 },
                _ => return Ok(Synchronized { frames: Vec::new(), epochs: Vec::new(), warnings }),
            }
        }
    };

    let epochs: Vec<u32> = grid.epochs().collect();
    let frames = epochs
        .iter()
        .enumerate()
        .map(|(i, &epoch)| {
            let readings = series.iter().map(|s| interpolate(s, epoch, cfg.max_gap)).collect();
            ReadingFrame::new(readings, i + 1)
        })
        .collect();
    Ok(Synchronized { frames, epochs, warnings })
}
