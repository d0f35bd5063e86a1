//! Synthetic reading streams and fault injection.
//!
//! Frame indices in this module are 0-based positions in the frame sequence;
//! the frames themselves carry 1-based `time_step`s.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ReadingFrame, TrustState};

/// Number of steps in the reference scenario.
pub const PAPER_STEPS: usize = 100;
/// Centre of trustworthy readings in the reference scenario, degrees Celsius.
pub const PAPER_MEAN: f64 = 20.0;
/// Default spread of trustworthy readings. With r = 0.6 two honest nodes
/// agree with probability ~0.966.
pub const DEFAULT_READING_STD: f64 = 0.2;

/// What goes wrong with a node's readings, with kind-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    /// The node stops reporting.
    Sleeper,
    /// The node reports a constant.
    StuckAt { value: f64 },
    /// Zero-mean Gaussian noise added to every reading.
    VarianceDegradation { std: f64 },
    /// A constant bias added to a reading with the given per-step probability.
    Offset { offset: f64, probability: f64 },
    /// Readings replaced by a linear rise from `base` at the window start to
    /// `peak` at `peak_index`, then a linear fall back to `base` at the
    /// window end.
    Ramp { base: f64, peak: f64, peak_index: usize },
}

impl FaultKind {
    pub fn name(&self) -> &'static str {
        match self {
            FaultKind::Sleeper => "sleeper",
            FaultKind::StuckAt { .. } => "stuck_at",
            FaultKind::VarianceDegradation { .. } => "variance_degradation",
            FaultKind::Offset { .. } => "offset",
            FaultKind::Ramp { .. } => "ramp",
        }
    }
}

/// A fault on one node over the inclusive frame index window `start..=end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub node: usize,
    pub start: usize,
    pub end: usize,
    #[serde(flatten)]
    pub kind: FaultKind,
}

impl FaultSpec {
    pub fn new(node: usize, start: usize, end: usize, kind: FaultKind) -> Self {
        FaultSpec { node, start, end, kind }
    }

    pub fn covers(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn validate(&self, d: usize, k: usize) -> Result<()> {
        if self.node >= d {
            return Err(Error::config(format!("fault node {} out of range for {d} nodes", self.node + 1)));
        }
        if self.start > self.end || self.end >= k {
            return Err(Error::config(format!(
                "fault window {}..={} must satisfy start <= end < {k}",
                self.start, self.end
            )));
        }
        match self.kind {
            FaultKind::VarianceDegradation { std } if !(std >= 0.0 && std.is_finite()) => {
                Err(Error::config(format!("variance degradation std must be non-negative, got {std}")))
            }
            FaultKind::Offset { probability, .. } if !(0.0..=1.0).contains(&probability) => {
                Err(Error::config(format!("offset probability must lie in [0, 1], got {probability}")))
            }
            FaultKind::Ramp { peak_index, .. } if !(self.start..=self.end).contains(&peak_index) => {
                Err(Error::config(format!("ramp peak index {peak_index} outside window {}..={}", self.start, self.end)))
            }
            _ => Ok(()),
        }
    }
}

/// Textual form used on the command line: comma-separated `key=value` pairs
/// after the kind, with 1-based `node` and 1-based inclusive `start`/`end`
/// steps, e.g. `stuck_at,node=2,start=301,end=401,value=100`.
impl FromStr for FaultSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',').map(str::trim);
        let kind_name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut fields = std::collections::BTreeMap::new();
        for part in parts.filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| Error::config(format!("fault field `{part}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("fault field `{key}` has non-numeric value `{value}`")))?;
            fields.insert(key.trim().to_ascii_lowercase(), value);
        }
        let mut take = |key: &str| {
            fields.remove(key).ok_or_else(|| Error::config(format!("{kind_name} fault is missing `{key}`")))
        };
        let one_based = |v: f64, key: &str| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize - 1)
            } else {
                Err(Error::config(format!("`{key}` must be a positive integer, got {v}")))
            }
        };
        let node = one_based(take("node")?, "node")?;
        let start = one_based(take("start")?, "start")?;
        let end = one_based(take("end")?, "end")?;
        let kind = match kind_name.as_str() {
            "sleeper" => FaultKind::Sleeper,
            "stuck_at" | "stuck" => FaultKind::StuckAt { value: take("value")? },
            "variance_degradation" | "variance" => FaultKind::VarianceDegradation { std: take("std")? },
            "offset" => FaultKind::Offset { offset: take("offset")?, probability: take("probability").unwrap_or(1.0) },
            "ramp" => FaultKind::Ramp {
                base: take("base")?,
                peak: take("peak")?,
                peak_index: one_based(take("peak_step")?, "peak_step")?,
            },
            other => return Err(Error::config(format!("unknown fault kind `{other}`"))),
        };
        if let Some(extra) = fields.keys().next() {
            return Err(Error::config(format!("unexpected field `{extra}` for {kind_name} fault")));
        }
        Ok(FaultSpec { node, start, end, kind })
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},node={},start={},end={}", self.kind.name(), self.node + 1, self.start + 1, self.end + 1)?;
        match &self.kind {
            FaultKind::Sleeper => Ok(()),
            FaultKind::StuckAt { value } => write!(f, ",value={value}"),
            FaultKind::VarianceDegradation { std } => write!(f, ",std={std}"),
            FaultKind::Offset { offset, probability } => write!(f, ",offset={offset},probability={probability}"),
            FaultKind::Ramp { base, peak, peak_index } => {
                write!(f, ",base={base},peak={peak},peak_step={}", peak_index + 1)
            }
        }
    }
}

/// How a node behaves over the whole scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "snake_case")]
pub enum Behavior {
    Honest,
    /// Readings drawn uniformly from `[low, high]` at every step.
    Uniform {
        low: f64,
        high: f64,
    },
    Faulty {
        faults: Vec<FaultSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    #[serde(flatten)]
    pub behavior: Behavior,
}

/// Reading frames with binary ground-truth trust labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub frames: Vec<ReadingFrame>,
    pub truth: Vec<TrustState>,
    pub nodes: Vec<NodeSpec>,
    pub seed: u64,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        self.frames.len()
    }

    pub fn nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.truth.len() {
            return Err(Error::config(format!(
                "scenario has {} frames but {} truth rows",
                self.frames.len(),
                self.truth.len()
            )));
        }
        let d = self.nodes.len();
        for (f, t) in self.frames.iter().zip(&self.truth) {
            if f.len() != d {
                return Err(Error::Dimension { expected: d, found: f.len() });
            }
            if t.len() != d {
                return Err(Error::Dimension { expected: d, found: t.len() });
            }
            if t.values().iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::config("ground truth labels must be 0 or 1"));
            }
        }
        Ok(())
    }
}

/// `k` frames of `d` readings drawn i.i.d. from `N(mean, std^2)`. `std == 0`
/// yields constant readings.
pub fn generate_baseline<R: Rng + ?Sized>(
    d: usize,
    k: usize,
    mean: f64,
    std: f64,
    rng: &mut R,
) -> Result<Vec<ReadingFrame>> {
    if d < 2 {
        return Err(Error::config(format!("at least 2 nodes are required, got {d}")));
    }
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::config(format!("reading std must be non-negative, got {std}")));
    }
    Ok((0..k)
        .map(|i| {
            let readings = (0..d)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    Some(mean + std * z)
                })
                .collect();
            ReadingFrame::new(readings, i + 1)
        })
        .collect())
}

fn ramp_value(index: usize, start: usize, end: usize, base: f64, peak: f64, peak_index: usize) -> f64 {
    if index <= peak_index {
        if peak_index == start {
            return peak;
        }
        base + (peak - base) * (index - start) as f64 / (peak_index - start) as f64
    } else {
        peak - (peak - base) * (index - peak_index) as f64 / (end - peak_index) as f64
    }
}

/// Rewrites the readings of `spec.node` inside the fault window. Nothing
/// outside that node and window is touched.
pub fn apply_fault<R: Rng + ?Sized>(frames: &mut [ReadingFrame], spec: &FaultSpec, rng: &mut R) -> Result<()> {
    let d = frames.first().map_or(0, ReadingFrame::len);
    spec.validate(d, frames.len())?;
    for (index, frame) in frames.iter_mut().enumerate().take(spec.end + 1).skip(spec.start) {
        let slot = &mut frame.readings[spec.node];
        match spec.kind {
            FaultKind::Sleeper => *slot = None,
            FaultKind::StuckAt { value } => *slot = Some(value),
            FaultKind::VarianceDegradation { std } => {
                let noise = Normal::new(0.0, std).map_err(|e| Error::config(e.to_string()))?;
                if let Some(y) = slot.as_mut() {
                    *y += noise.sample(rng);
                }
            }
            FaultKind::Offset { offset, probability } => {
                let hit = rng.random::<f64>() < probability;
                if let (true, Some(y)) = (hit, slot.as_mut()) {
                    *y += offset;
                }
            }
            FaultKind::Ramp { base, peak, peak_index } => {
                *slot = Some(ramp_value(index, spec.start, spec.end, base, peak, peak_index));
            }
        }
    }
    Ok(())
}

/// Ground truth for `d` nodes over `k` steps: every node trusted except
/// inside the given fault windows.
pub fn truth_from_faults(d: usize, k: usize, faults: &[FaultSpec]) -> Vec<TrustState> {
    (0..k)
        .map(|i| {
            let values =
                (0..d).map(|j| if faults.iter().any(|f| f.node == j && f.covers(i)) { 0.0 } else { 1.0 }).collect();
            TrustState::new(values, i + 1).expect("labels are binary")
        })
        .collect()
}

fn node_stream(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64 + 1);
    rng
}

/// The reference ten-node-style scenario over 100 steps with `d` nodes:
///
/// - node 1 ("Sensor A"): readings ramp 20 -> 40 over steps 30..50 and back
///   to 20 by step 70; untrusted on steps 31..=70.
/// - node 2 ("Sensor B"): readings uniform on `[0, 100]`; never trusted.
/// - node 3 ("Sensor C"): stops reporting after step 50; untrusted from 51.
/// - nodes 4.. : honest `N(20, reading_std^2)` readings.
///
/// Every node draws from its own stream of `seed`, so honest readings of a
/// given node are identical across different `d`.
pub fn paper_scenario(d: usize, reading_std: f64, seed: u64) -> Result<Scenario> {
    if d < 4 {
        return Err(Error::config(format!("the reference scenario needs at least 4 nodes, got {d}")));
    }
    if !(reading_std >= 0.0 && reading_std.is_finite()) {
        return Err(Error::config(format!("reading std must be non-negative, got {reading_std}")));
    }
    let k = PAPER_STEPS;
    let mut frames: Vec<ReadingFrame> = (0..k).map(|i| ReadingFrame::new(vec![None; d], i + 1)).collect();
    for j in 0..d {
        let mut rng = node_stream(seed, j);
        for frame in frames.iter_mut() {
            frame.readings[j] = Some(if j == 1 {
                rng.random_range(0.0..=100.0)
            } else {
                let z: f64 = rng.sample(StandardNormal);
                PAPER_MEAN + reading_std * z
            });
        }
    }

    let ramp = FaultSpec::new(0, 29, 69, FaultKind::Ramp { base: PAPER_MEAN, peak: 40.0, peak_index: 49 });
    let sleeper = FaultSpec::new(2, 50, k - 1, FaultKind::Sleeper);
    let mut unused = ChaCha8Rng::seed_from_u64(seed);
    apply_fault(&mut frames, &ramp, &mut unused)?;
    apply_fault(&mut frames, &sleeper, &mut unused)?;

    let labels = [
        FaultSpec::new(0, 30, 69, FaultKind::Sleeper),
        FaultSpec::new(1, 0, k - 1, FaultKind::Sleeper),
        FaultSpec::new(2, 50, k - 1, FaultKind::Sleeper),
    ];
    let truth = truth_from_faults(d, k, &labels);

    let mut nodes = vec![
        NodeSpec { name: "Sensor A".into(), behavior: Behavior::Faulty { faults: vec![ramp] } },
        NodeSpec { name: "Sensor B".into(), behavior: Behavior::Uniform { low: 0.0, high: 100.0 } },
        NodeSpec { name: "Sensor C".into(), behavior: Behavior::Faulty { faults: vec![sleeper] } },
    ];
    for j in 3..d {
        let name = if j == 3 { "Sensor D".to_string() } else { format!("node {}", j + 1) };
        nodes.push(NodeSpec { name, behavior: Behavior::Honest });
    }

    Ok(Scenario { frames, truth, nodes, seed })
}

/// Honest `N(mean, std^2)` readings with the given faults injected, in order.
pub fn faulted_scenario(d: usize, k: usize, mean: f64, std: f64, faults: &[FaultSpec], seed: u64) -> Result<Scenario> {
    for f in faults {
        f.validate(d, k)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = generate_baseline(d, k, mean, std, &mut rng)?;
    for f in faults {
        apply_fault(&mut frames, f, &mut rng)?;
    }
    let truth = truth_from_faults(d, k, faults);
    let nodes = (0..d)
        .map(|j| {
            let own: Vec<FaultSpec> = faults.iter().filter(|f| f.node == j).cloned().collect();
            NodeSpec {
                name: format!("node {}", j + 1),
                behavior: if own.is_empty() { Behavior::Honest } else { Behavior::Faulty { faults: own } },
            }
        })
        .collect();
    Ok(Scenario { frames, truth, nodes, seed })
}

/// The four faults injected into real data: a sleeper on the first node over
/// grid indices 500..=700, a stuck-at-100 on the second over 300..=400,
/// variance degradation (std 20) on the third over 200..=250 and an offset of
/// 100 with probability 0.5 on the fourth over 100..=150.
pub fn real_data_faults() -> Vec<FaultSpec> {
    vec![
        FaultSpec::new(0, 500, 700, FaultKind::Sleeper),
        FaultSpec::new(1, 300, 400, FaultKind::StuckAt { value: 100.0 }),
        FaultSpec::new(2, 200, 250, FaultKind::VarianceDegradation { std: 20.0 }),
        FaultSpec::new(3, 100, 150, FaultKind::Offset { offset: 100.0, probability: 0.5 }),
    ]
}

/// Wraps existing frames (e.g. synchronized real data) into a scenario,
/// injecting `faults` and labelling their windows untrusted.
pub fn scenario_from_frames(
    mut frames: Vec<ReadingFrame>,
    names: Vec<String>,
    faults: &[FaultSpec],
    seed: u64,
) -> Result<Scenario> {
    let d = names.len();
    let k = frames.len();
    if let Some(f) = frames.iter().find(|f| f.len() != d) {
        return Err(Error::Dimension { expected: d, found: f.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in faults {
        apply_fault(&mut frames, f, &mut rng)?;
    }
    let truth = truth_from_faults(d, k, faults);
    let nodes = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let own: Vec<FaultSpec> = faults.iter().filter(|f| f.node == j).cloned().collect();
            NodeSpec {
                name,
                behavior: if own.is_empty() { Behavior::Honest } else { Behavior::Faulty { faults: own } },
            }
        })
        .collect();
    let scenario = Scenario { frames, truth, nodes, seed };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn baseline_grand_mean_within_clt_band() {
        let frames = generate_baseline(10, 100, 20.0, 0.2, &mut rng(1)).unwrap();
        let all: Vec<f64> = frames.iter().flat_map(|f| f.readings.iter().map(|y| y.unwrap())).collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((mean - 20.0).abs() < 3.0 * 0.2 / (1000f64).sqrt(), "{mean}");
    }

    #[test]
    fn degenerate_baseline_is_constant() {
        let frames = generate_baseline(3, 5, 20.0, 0.0, &mut rng(1)).unwrap();
        assert!(frames.iter().all(|f| f.readings.iter().all(|y| *y == Some(20.0))));
        assert_eq!(frames[4].time_step, 5);
    }

    #[test]
    fn honest_pairs_mostly_agree() {
        let frames = generate_baseline(10, 100, 20.0, 0.2, &mut rng(2)).unwrap();
        let mut agree = 0;
        let mut total = 0;
        for f in &frames {
            for a in 0..10 {
                for b in (a + 1)..10 {
                    total += 1;
                    if (f.readings[a].unwrap() - f.readings[b].unwrap()).abs() < 0.6 {
                        agree += 1;
                    }
                }
            }
        }
        assert!(agree as f64 / total as f64 >= 0.95);
    }

    #[test]
    fn ramp_midpoint_is_linear() {
        let mut frames = generate_baseline(2, 100, 20.0, 0.0, &mut rng(0)).unwrap();
        let spec = FaultSpec::new(0, 29, 69, FaultKind::Ramp { base: 20.0, peak: 40.0, peak_index: 49 });
        apply_fault(&mut frames, &spec, &mut rng(0)).unwrap();
        assert_eq!(frames[39].readings[0], Some(30.0));
        assert_eq!(frames[49].readings[0], Some(40.0));
        assert_eq!(frames[59].readings[0], Some(30.0));
        assert_eq!(frames[69].readings[0], Some(20.0));
    }

    #[test]
    fn sleeper_and_stuck_windows_are_exact() {
        let original = generate_baseline(3, 500, 20.0, 0.5, &mut rng(3)).unwrap();
        let mut frames = original.clone();
        apply_fault(&mut frames, &FaultSpec::new(2, 50, 99, FaultKind::Sleeper), &mut rng(0)).unwrap();
        for (i, f) in frames.iter().enumerate().take(100) {
            assert_eq!(f.readings[2].is_none(), (50..100).contains(&i));
        }
        apply_fault(&mut frames, &FaultSpec::new(1, 300, 400, FaultKind::StuckAt { value: 100.0 }), &mut rng(0))
            .unwrap();
        for (i, f) in frames.iter().enumerate() {
            if (300..=400).contains(&i) {
                assert_eq!(f.readings[1], Some(100.0));
            } else {
                assert_eq!(f.readings[1], original[i].readings[1]);
            }
            assert_eq!(f.readings[0], original[i].readings[0]);
        }
    }

    #[test]
    fn offset_hits_about_half_the_window() {
        let original = generate_baseline(2, 1000, 20.0, 0.0, &mut rng(0)).unwrap();
        let mut frames = original.clone();
        let spec = FaultSpec::new(1, 0, 999, FaultKind::Offset { offset: 100.0, probability: 0.5 });
        apply_fault(&mut frames, &spec, &mut rng(5)).unwrap();
        let hits = frames.iter().filter(|f| f.readings[1] == Some(120.0)).count();
        let misses = frames.iter().filter(|f| f.readings[1] == Some(20.0)).count();
        assert_eq!(hits + misses, 1000);
        assert!((hits as f64 - 500.0).abs() < 3.0 * (250f64).sqrt(), "{hits}");
    }

    #[test]
    fn invalid_faults_rejected() {
        let mut frames = generate_baseline(3, 10, 20.0, 0.1, &mut rng(0)).unwrap();
        assert!(apply_fault(&mut frames, &FaultSpec::new(3, 0, 1, FaultKind::Sleeper), &mut rng(0)).is_err());
        assert!(apply_fault(&mut frames, &FaultSpec::new(0, 5, 10, FaultKind::Sleeper), &mut rng(0)).is_err());
        assert!(apply_fault(&mut frames, &FaultSpec::new(0, 6, 5, FaultKind::Sleeper), &mut rng(0)).is_err());
        assert!("melt,node=1,start=1,end=2".parse::<FaultSpec>().is_err());
        assert!("stuck_at,node=1,start=1,end=2".parse::<FaultSpec>().is_err());
        assert!("sleeper,node=0,start=1,end=2".parse::<FaultSpec>().is_err());
    }

    #[test]
    fn fault_text_form() {
        let spec: FaultSpec = "stuck_at, node=2, start=301, end=401, value=100".parse().unwrap();
        assert_eq!(spec, FaultSpec::new(1, 300, 400, FaultKind::StuckAt { value: 100.0 }));
        for text in [
            "sleeper,node=1,start=501,end=701",
            "variance_degradation,node=3,start=201,end=251,std=20",
            "offset,node=4,start=101,end=151,offset=100,probability=0.5",
            "ramp,node=1,start=30,end=70,base=20,peak=40,peak_step=50",
        ] {
            let spec: FaultSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn paper_scenario_labels() {
        let s = paper_scenario(10, 0.2, 7).unwrap();
        s.validate().unwrap();
        assert_eq!(s.steps(), 100);
        for (i, t) in s.truth.iter().enumerate() {
            let step = i + 1;
            let a = if (31..=70).contains(&step) { 0.0 } else { 1.0 };
            let c = if step >= 51 { 0.0 } else { 1.0 };
            assert_eq!(t.values()[0], a, "A at {step}");
            assert_eq!(t.values()[1], 0.0);
            assert_eq!(t.values()[2], c);
            assert!(t.values()[3..].iter().all(|&v| v == 1.0));
        }
        for (i, f) in s.frames.iter().enumerate() {
            assert_eq!(f.readings[2].is_none(), i >= 50);
            let b = f.readings[1].unwrap();
            assert!((0.0..=100.0).contains(&b));
        }
        assert_eq!(s.frames[39].readings[0], Some(30.0));
        assert_eq!(s.nodes[3].name, "Sensor D");
        assert!(paper_scenario(3, 0.2, 7).is_err());
    }

    #[test]
    fn paper_scenario_is_seeded_and_extends_across_d() {
        let a = paper_scenario(5, 0.2, 11).unwrap();
        let b = paper_scenario(5, 0.2, 11).unwrap();
        assert_eq!(a, b);
        let wide = paper_scenario(20, 0.2, 11).unwrap();
        for (fa, fw) in a.frames.iter().zip(&wide.frames) {
            assert_eq!(&fw.readings[..5], &fa.readings[..]);
        }
        assert_ne!(paper_scenario(5, 0.2, 12).unwrap().frames, a.frames);
    }

    #[test]
    fn faulted_scenario_truth_follows_windows() {
        let faults = vec![
            FaultSpec::new(0, 2, 4, FaultKind::Sleeper),
            FaultSpec::new(2, 5, 5, FaultKind::StuckAt { value: 1.0 }),
        ];
        let s = faulted_scenario(3, 8, 20.0, 0.1, &faults, 1).unwrap();
        s.validate().unwrap();
        assert_eq!(s.truth[3].values(), &[0.0, 1.0, 1.0]);
        assert_eq!(s.truth[5].values(), &[1.0, 1.0, 0.0]);
        assert!(matches!(s.nodes[1].behavior, Behavior::Honest));
    }
}
