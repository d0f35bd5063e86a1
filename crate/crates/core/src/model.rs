//! The state space trust model: per-node trust states, the aging transition,
//! pairwise reading votes, the trust-weighted voting metric and the
//! likelihoods built on top of it.
//!
//! Trust values live in `[0, 1]`. The transition is `x' = alpha * x + v` with
//! `v ~ N(0, q)`, redrawn until `x'` lands inside `[0, 1]`. The likelihood of a
//! reading frame is `exp(-sum_j |x_j - V_j| / beta)`, where `V_j` is the
//! trust-weighted fraction of other nodes whose readings agree with node `j`
//! within `r`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on redraws of a single truncated transition. Hitting it means
/// the random source is broken, not that the model is.
pub const MAX_TRANSITION_REDRAWS: u64 = 1_000_000;

/// Trust values of every node at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    values: Vec<f64>,
    time_step: usize,
}

impl TrustState {
    pub fn new(values: Vec<f64>, time_step: usize) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::config(format!("trust value {v} of node {} is outside [0, 1]", j + 1)));
        }
        Ok(TrustState { values, time_step })
    }

    /// Every node at the same trust value.
    pub fn uniform(d: usize, value: f64, time_step: usize) -> Result<Self> {
        Self::new(vec![value; d], time_step)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time_step(&self) -> usize {
        self.time_step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Readings reported by every node at one time step. A node that did not
/// report is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingFrame {
    pub readings: Vec<Option<f64>>,
    pub time_step: usize,
}

impl ReadingFrame {
    pub fn new(readings: Vec<Option<f64>>, time_step: usize) -> Self {
        ReadingFrame { readings, time_step }
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// How the iterative filter draws its prior particles across inner iterations
/// of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawPolicy {
    /// Every inner iteration replays the same per-component random stream, so
    /// the prior draws and resampling uniforms are shared and the estimate
    /// only moves when the voting metrics do.
    #[default]
    Coupled,
    /// Every inner iteration consumes fresh randomness.
    Independent,
}

/// Which particle set a filter reports its point estimate from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Importance-weighted mean of the propagated particles, taken before
    /// resampling. Smooth in the voting metric, which lets the iterative
    /// filter's inner loop settle.
    #[default]
    Weighted,
    /// Plain mean of the resampled particles.
    Resampled,
}

/// Model and filter parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Aging parameter.
    pub alpha: f64,
    /// Diagonal of the process noise covariance, one entry per node.
    pub q_diag: Vec<f64>,
    /// Likelihood sharpness.
    pub beta: f64,
    /// Agreement threshold on readings, in reading units.
    pub r: f64,
    /// Convergence threshold of the iterative filter's inner loop.
    pub t_x: f64,
    pub n_particles: usize,
    pub d: usize,
    pub max_iterations: usize,
    #[serde(default)]
    pub draws: DrawPolicy,
    #[serde(default)]
    pub estimator: Estimator,
}

impl ModelConfig {
    pub const DEFAULT_ALPHA: f64 = 0.85;
    pub const DEFAULT_Q: f64 = 0.01;
    pub const DEFAULT_BETA: f64 = 0.1;
    pub const DEFAULT_R: f64 = 0.6;
    pub const DEFAULT_T_X: f64 = 1e-5;
    pub const DEFAULT_PARTICLES: usize = 100;
    pub const DEFAULT_MAX_ITERATIONS: usize = 100;

    /// Default parameters for `d` nodes: N=100, alpha=0.85, Q=diag(0.01),
    /// beta=0.1, r=0.6, T_x=1e-5.
    pub fn with_nodes(d: usize) -> Self {
        ModelConfig {
            alpha: Self::DEFAULT_ALPHA,
            q_diag: vec![Self::DEFAULT_Q; d],
            beta: Self::DEFAULT_BETA,
            r: Self::DEFAULT_R,
            t_x: Self::DEFAULT_T_X,
            n_particles: Self::DEFAULT_PARTICLES,
            d,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            draws: DrawPolicy::default(),
            estimator: Estimator::default(),
        }
    }

    /// Changes the node count, filling new process noise entries with the
    /// value of the first existing entry (or the default).
    pub fn resized(mut self, d: usize) -> Self {
        let fill = self.q_diag.first().copied().unwrap_or(Self::DEFAULT_Q);
        self.q_diag.resize(d, fill);
        self.d = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::config(format!("r must be positive, got {}", self.r)));
        }
        if !(self.t_x > 0.0 && self.t_x.is_finite()) {
            return Err(Error::config(format!("t_x must be positive, got {}", self.t_x)));
        }
        if self.n_particles == 0 {
            return Err(Error::config("n_particles must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if self.d < 2 {
            return Err(Error::config(format!("at least 2 nodes are required, got {}", self.d)));
        }
        if self.q_diag.len() != self.d {
            return Err(Error::config(format!("q_diag has {} entries but d = {}", self.q_diag.len(), self.d)));
        }
        if let Some(q) = self.q_diag.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(Error::config(format!("q_diag entries must be positive, got {q}")));
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.d || self.q_diag.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: if found != self.d { found } else { self.q_diag.len() },
            });
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::with_nodes(10)
    }
}

/// One aging step of a single trust component, `alpha * x + v` with
/// `v ~ N(0, q)`, redrawn until the result lies in `[0, 1]`.
///
/// `q == 0` is accepted and yields the deterministic `alpha * x`.
pub fn transition_component<R: Rng + ?Sized>(x: f64, alpha: f64, q: f64, rng: &mut R) -> Result<f64> {
    let mean = alpha * x;
    if q == 0.0 {
        return Ok(mean);
    }
    let std = q.sqrt();
    for _ in 0..MAX_TRANSITION_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let next = mean + std * z;
        if (0.0..=1.0).contains(&next) {
            return Ok(next);
        }
    }
    Err(Error::TruncationExhausted(MAX_TRANSITION_REDRAWS))
}

/// Applies [`transition_component`] to every node and advances the time step.
pub fn transition_state<R: Rng + ?Sized>(x: &TrustState, cfg: &ModelConfig, rng: &mut R) -> Result<TrustState> {
    cfg.check_dim(x.len())?;
    let values = x
        .values
        .iter()
        .zip(&cfg.q_diag)
        .map(|(&v, &q)| transition_component(v, cfg.alpha, q, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrustState { values, time_step: x.time_step + 1 })
}

/// Vote cast by one node about another node's reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Agree,
    Disagree,
    /// The voter reported nothing and takes no part in the tally.
    Abstain,
}

impl Vote {
    pub fn value(self) -> Option<f64> {
        match self {
            Vote::Agree => Some(1.0),
            Vote::Disagree => Some(0.0),
            Vote::Abstain => None,
        }
    }
}

/// Vote of `voter` on `candidate`: agreement when both readings differ by
/// strictly less than `r`. A silent candidate gets a disagreement, a silent
/// voter abstains.
pub fn vote(voter: Option<f64>, candidate: Option<f64>, r: f64) -> Vote {
    match (voter, candidate) {
        (_, None) => Vote::Disagree,
        (None, Some(_)) => Vote::Abstain,
        (Some(a), Some(b)) => {
            if (a - b).abs() < r {
                Vote::Agree
            } else {
                Vote::Disagree
            }
        }
    }
}

/// Trust-weighted share of agreeing votes on `j`.
///
/// `weights` and `votes` are indexed by voter; pairs where the vote is
/// `None` (abstention) or the voter is `j` itself are skipped. When the
/// remaining weights sum to zero the unweighted mean of the votes is used,
/// and with no votes at all the metric is 0.
fn weighted_vote_share(j: usize, weights: &[f64], votes: impl Iterator<Item = Option<f64>>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut plain_sum = 0.0;
    let mut count = 0usize;
    for (n, (w, u)) in weights.iter().zip(votes).enumerate() {
        if n == j {
            continue;
        }
        let Some(u) = u else { continue };
        num += w * u;
        den += w;
        plain_sum += u;
        count += 1;
    }
    if den > 0.0 {
        num / den
    } else if count > 0 {
        plain_sum / count as f64
    } else {
        0.0
    }
}

/// Voting metric of node `j`: `sum_n x_n U(n, j) / sum_n x_n` over the other,
/// non-abstaining nodes. `trusts[j]` is ignored.
pub fn voting_metric(trusts: &[f64], readings: &[Option<f64>], j: usize, r: f64) -> f64 {
    let votes = readings.iter().map(|&y_n| vote(y_n, readings[j], r).value());
    weighted_vote_share(j, trusts, votes)
}

/// Pairwise votes of one reading frame, computed once and reused for every
/// particle and inner iteration at that time step.
#[derive(Debug, Clone)]
pub struct VoteTable {
    d: usize,
    // votes[j * d + n] is the vote of n on j.
    votes: Vec<Option<f64>>,
}

impl VoteTable {
    pub fn new(readings: &[Option<f64>], r: f64) -> Self {
        let d = readings.len();
        let mut votes = Vec::with_capacity(d * d);
        for &candidate in readings {
            for &voter in readings {
                votes.push(vote(voter, candidate, r).value());
            }
        }
        VoteTable { d, votes }
    }

    pub fn len(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn vote(&self, voter: usize, candidate: usize) -> Option<f64> {
        self.votes[candidate * self.d + voter]
    }

    /// Trust-weighted voting metric of `j`; `trusts[j]` is ignored.
    pub fn metric(&self, trusts: &[f64], j: usize) -> f64 {
        let row = &self.votes[j * self.d..(j + 1) * self.d];
        weighted_vote_share(j, trusts, row.iter().copied())
    }

    /// Unweighted voting metric used by the BDMPF baseline: every other node
    /// counts as fully trusted.
    pub fn unweighted_metric(&self, j: usize) -> f64 {
        let row = &self.votes[j * self.d..(j + 1) * self.d];
        let mut sum = 0.0;
        let mut count = 0usize;
        for (n, u) in row.iter().enumerate() {
            if n == j {
                continue;
            }
            if let Some(u) = u {
                sum += u;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

// `residual / beta` as an unevaluated sum hi + lo, so that exponentials of
// sums and products of exponentials agree to a few ulps.
fn scaled_residual(residual: f64, beta: f64) -> (f64, f64) {
    let hi = residual / beta;
    let rem = (-hi).mul_add(beta, residual);
    (hi, rem / beta)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

// exp(-(hi + lo)) for |lo| << ulp(hi).
fn exp_neg(hi: f64, lo: f64) -> f64 {
    (-hi).exp() * (1.0 - lo)
}

/// Likelihood factor of a single component: `exp(-|x_j - v_j| / beta)`.
pub fn component_factor(x_j: f64, v_j: f64, beta: f64) -> f64 {
    let (hi, lo) = scaled_residual((x_j - v_j).abs(), beta);
    exp_neg(hi, lo)
}

/// Likelihood of a whole frame given a joint trust state. Each node's voting
/// metric is weighted by the other components of `x` itself.
pub fn joint_likelihood(x: &TrustState, frame: &ReadingFrame, cfg: &ModelConfig) -> Result<f64> {
    cfg.check_dim(x.len())?;
    cfg.check_dim(frame.len())?;
    let values = x.values();
    let mut hi = 0.0;
    let mut lo = 0.0;
    for j in 0..values.len() {
        let v_j = voting_metric(values, &frame.readings, j, cfg.r);
        let (h, l) = scaled_residual((values[j] - v_j).abs(), cfg.beta);
        let (s, e) = two_sum(hi, h);
        hi = s;
        lo += e + l;
    }
    let (hi, lo) = two_sum(hi, lo);
    Ok(exp_neg(hi, lo))
}

/// Log of [`joint_likelihood`] using a precomputed vote table; used to weight
/// joint particles.
pub(crate) fn joint_log_likelihood(values: &[f64], votes: &VoteTable, beta: f64) -> f64 {
    let total: f64 = (0..values.len()).map(|j| (values[j] - votes.metric(values, j)).abs()).sum();
    -total / beta
}

/// Likelihood of component `j` at value `x_j`, conditional on the other
/// components' trust values in `others` (`others[j]` is ignored).
pub fn component_likelihood(
    x_j: f64,
    others: &[f64],
    frame: &ReadingFrame,
    j: usize,
    cfg: &ModelConfig,
) -> Result<f64> {
    cfg.check_dim(others.len())?;
    cfg.check_dim(frame.len())?;
    let v_j = voting_metric(others, &frame.readings, j, cfg.r);
    Ok(component_factor(x_j, v_j, cfg.beta))
}
