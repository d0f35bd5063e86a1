//! Particle filters over the trust model.
//!
//! Three estimators share the same resampling primitive:
//!
//! - [`bootstrap_pf_step`]: a joint d-dimensional bootstrap filter weighted by
//!   the joint likelihood.
//! - [`ipf_step`]: the iterative particle filter. Each component is filtered
//!   on its own one-dimensional cloud, conditioned on the current estimates
//!   of the other components, and the sweep over components is repeated until
//!   the estimate stops moving (RMS change at most `t_x`) or `max_iterations`
//!   sweeps have run.
//! - [`bdmpf_step`]: the BDMPF baseline, which filters every component
//!   independently with the unweighted voting metric.
//!
//! Every step resamples unconditionally. The reported estimate is chosen by
//! [`Estimator`]: the weighted mean before resampling (default) or the mean of
//! the resampled particles.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    joint_log_likelihood, transition_component, DrawPolicy, Estimator, ModelConfig, ReadingFrame, TrustState, VoteTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bootstrap,
    Ipf,
    Bdmpf,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Bootstrap, FilterKind::Ipf, FilterKind::Bdmpf];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Bootstrap => "bootstrap",
            FilterKind::Ipf => "ipf",
            FilterKind::Bdmpf => "bdmpf",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bootstrap" | "pf" => Ok(FilterKind::Bootstrap),
            "ipf" => Ok(FilterKind::Ipf),
            "bdmpf" => Ok(FilterKind::Bdmpf),
            other => Err(Error::config(format!("unknown filter `{other}` (expected bootstrap, ipf or bdmpf)"))),
        }
    }
}

/// Empirical posterior, stored per component.
///
/// For the joint bootstrap filter the columns are aligned: particle `i` of
/// the joint cloud is `(particles[0][i], ..., particles[d-1][i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    particles: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl ParticleCloud {
    /// All `n` particles of every component at `init`'s value.
    pub fn dirac(init: &TrustState, n: usize) -> Self {
        let particles = init.values().iter().map(|&v| vec![v; n]).collect();
        Self::uniform(particles)
    }

    /// Equally weighted cloud from per-component particle sets.
    pub fn uniform(particles: Vec<Vec<f64>>) -> Self {
        let weights = particles.iter().map(|p| vec![1.0 / p.len() as f64; p.len()]).collect();
        ParticleCloud { particles, weights }
    }

    pub fn with_weights(particles: Vec<Vec<f64>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if particles.len() != weights.len() || particles.iter().zip(&weights).any(|(p, w)| p.len() != w.len()) {
            return Err(Error::config("particle and weight shapes differ"));
        }
        Ok(ParticleCloud { particles, weights })
    }

    pub fn dim(&self) -> usize {
        self.particles.len()
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.particles[j]
    }

    pub fn weights(&self, j: usize) -> &[f64] {
        &self.weights[j]
    }

    /// Weighted mean of every component.
    pub fn means(&self) -> Vec<f64> {
        self.particles.iter().zip(&self.weights).map(|(p, w)| p.iter().zip(w).map(|(x, w)| x * w).sum()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub estimate: TrustState,
    pub posterior: ParticleCloud,
    /// Inner-loop sweeps over the components (1 for the single-pass filters).
    pub iterations_used: usize,
    /// False when the iterative filter stopped at `max_iterations`.
    pub converged: bool,
    pub wall_time: Duration,
}

/// Normalizes weights in place so they sum to one.
pub fn normalize_weights(weights: &mut [f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::WeightUnderflow { component: None });
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Normalized weights from log weights, shifted by their maximum first.
fn weights_from_log(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::WeightUnderflow { component: None });
    }
    let mut w: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    normalize_weights(&mut w)?;
    Ok(w)
}

/// Draws `n` indices i.i.d. with `P(index = l) = weights[l]`.
pub fn resample_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        if w.is_nan() || w < 0.0 {
            return Err(Error::WeightUnderflow { component: None });
        }
        acc += w;
        cdf.push(acc);
    }
    if !(acc > 0.0 && acc.is_finite()) {
        return Err(Error::WeightUnderflow { component: None });
    }
    let last = weights.len() - 1;
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            // First index whose cumulative weight exceeds u; zero-weight
            // entries are never picked because their cdf equals the previous.
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Multinomial resampling: `N` particles drawn with replacement according to
/// `weights`; the output carries implied uniform weights.
pub fn resample<R: Rng + ?Sized>(particles: &[f64], weights: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if particles.len() != weights.len() {
        return Err(Error::Dimension { expected: particles.len(), found: weights.len() });
    }
    if particles.is_empty() {
        return Ok(Vec::new());
    }
    let idx = resample_indices(weights, particles.len(), rng)?;
    Ok(idx.into_iter().map(|i| particles[i]).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn point_estimate(estimator: Estimator, resampled: &[f64], weighted_mean: f64) -> f64 {
    match estimator {
        Estimator::Weighted => weighted_mean,
        Estimator::Resampled => mean(resampled),
    }
}

fn check_inputs(prior: &ParticleCloud, frame: &ReadingFrame, cfg: &ModelConfig) -> Result<()> {
    cfg.check_dim(prior.dim())?;
    cfg.check_dim(frame.len())?;
    if cfg.n_particles == 0 {
        return Err(Error::config("n_particles must be at least 1"));
    }
    Ok(())
}

/// One filtering pass over a single component with a fixed voting metric:
/// draw from the prior cloud, age, weight by `exp(-|x - v| / beta)`,
/// resample.
#[allow(clippy::too_many_arguments)]
fn filter_component<R: Rng + ?Sized>(
    prior: &[f64],
    prior_weights: &[f64],
    v_j: f64,
    alpha: f64,
    q: f64,
    beta: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let idx = resample_indices(prior_weights, n, rng)?;
    let predicted =
        idx.into_iter().map(|i| transition_component(prior[i], alpha, q, rng)).collect::<Result<Vec<_>>>()?;
    let log_w: Vec<f64> = predicted.iter().map(|x| -(x - v_j).abs() / beta).collect();
    let w = weights_from_log(&log_w)?;
    let weighted_mean = predicted.iter().zip(&w).map(|(x, w)| x * w).sum();
    Ok((resample(&predicted, &w, rng)?, weighted_mean))
}

/// One step of the joint bootstrap particle filter.
pub fn bootstrap_pf_step<R: Rng + ?Sized>(
    prior: &ParticleCloud,
    frame: &ReadingFrame,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<FilterOutput> {
    check_inputs(prior, frame, cfg)?;
    let started = Instant::now();
    let d = cfg.d;
    let n = cfg.n_particles;

    // Joint particles are aligned across components, so the first
    // component's weights are the joint weights.
    let idx = resample_indices(prior.weights(0), n, rng)?;
    let mut predicted = vec![0.0; n * d];
    for (i, &src) in idx.iter().enumerate() {
        for j in 0..d {
            predicted[i * d + j] = transition_component(prior.component(j)[src], cfg.alpha, cfg.q_diag[j], rng)?;
        }
    }

    let votes = VoteTable::new(&frame.readings, cfg.r);
    let log_w: Vec<f64> = predicted.chunks_exact(d).map(|x| joint_log_likelihood(x, &votes, cfg.beta)).collect();
    let w = weights_from_log(&log_w)?;
    let selected = resample_indices(&w, n, rng)?;

    let particles: Vec<Vec<f64>> = (0..d).map(|j| selected.iter().map(|&i| predicted[i * d + j]).collect()).collect();
    let estimate: Vec<f64> = (0..d)
        .map(|j| {
            let weighted_mean = w.iter().enumerate().map(|(i, w)| w * predicted[i * d + j]).sum();
            point_estimate(cfg.estimator, &particles[j], weighted_mean)
        })
        .collect();

    Ok(FilterOutput {
        estimate: TrustState::new(estimate, frame.time_step)?,
        posterior: ParticleCloud::uniform(particles),
        iterations_used: 1,
        converged: true,
        wall_time: started.elapsed(),
    })
}

/// Root mean square difference between two estimates.
pub fn rms_change(a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sq / a.len() as f64).sqrt()
}

/// One step of the iterative particle filter.
///
/// The estimate starts at `prev_estimate` and the comparison vector at zero,
/// so at least one sweep always runs. Components are swept in ascending
/// order and each update is visible to the components after it within the
/// same sweep.
pub fn ipf_step<R: Rng + ?Sized>(
    prior: &ParticleCloud,
    prev_estimate: &TrustState,
    frame: &ReadingFrame,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<FilterOutput> {
    check_inputs(prior, frame, cfg)?;
    cfg.check_dim(prev_estimate.len())?;
    let started = Instant::now();
    let d = cfg.d;
    let n = cfg.n_particles;
    let votes = VoteTable::new(&frame.readings, cfg.r);

    let streams: Vec<u64> = match cfg.draws {
        DrawPolicy::Coupled => (0..d).map(|_| rng.random()).collect(),
        DrawPolicy::Independent => Vec::new(),
    };

    let mut estimate = prev_estimate.values().to_vec();
    let mut previous = vec![0.0; d];
    let mut particles: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        if iterations > 0 {
            previous.copy_from_slice(&estimate);
        }
        for j in 0..d {
            let v_j = votes.metric(&estimate, j);
            let update = match cfg.draws {
                DrawPolicy::Coupled => {
                    let mut stream = ChaCha8Rng::seed_from_u64(streams[j]);
                    filter_component(
                        prior.component(j),
                        prior.weights(j),
                        v_j,
                        cfg.alpha,
                        cfg.q_diag[j],
                        cfg.beta,
                        n,
                        &mut stream,
                    )
                }
                DrawPolicy::Independent => filter_component(
                    prior.component(j),
                    prior.weights(j),
                    v_j,
                    cfg.alpha,
                    cfg.q_diag[j],
                    cfg.beta,
                    n,
                    rng,
                ),
            };
            let (resampled, weighted_mean) = update.map_err(|e| match e {
                Error::WeightUnderflow { .. } => Error::WeightUnderflow { component: Some(j) },
                other => other,
            })?;
            estimate[j] = point_estimate(cfg.estimator, &resampled, weighted_mean);
            particles[j] = resampled;
        }
        iterations += 1;
        if rms_change(&estimate, &previous) <= cfg.t_x {
            converged = true;
            break;
        }
    }

    Ok(FilterOutput {
        estimate: TrustState::new(estimate, frame.time_step)?,
        posterior: ParticleCloud::uniform(particles),
        iterations_used: iterations,
        converged,
        wall_time: started.elapsed(),
    })
}

/// One step of the BDMPF baseline: every component filtered once,
/// independently, against the unweighted voting metric.
pub fn bdmpf_step<R: Rng + ?Sized>(
    prior: &ParticleCloud,
    frame: &ReadingFrame,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<FilterOutput> {
    check_inputs(prior, frame, cfg)?;
    let started = Instant::now();
    let votes = VoteTable::new(&frame.readings, cfg.r);
    let mut particles = Vec::with_capacity(cfg.d);
    let mut estimate = Vec::with_capacity(cfg.d);
    for j in 0..cfg.d {
        let (resampled, weighted_mean) = filter_component(
            prior.component(j),
            prior.weights(j),
            votes.unweighted_metric(j),
            cfg.alpha,
            cfg.q_diag[j],
            cfg.beta,
            cfg.n_particles,
            rng,
        )
        .map_err(|e| match e {
            Error::WeightUnderflow { .. } => Error::WeightUnderflow { component: Some(j) },
            other => other,
        })?;
        estimate.push(point_estimate(cfg.estimator, &resampled, weighted_mean));
        particles.push(resampled);
    }
    Ok(FilterOutput {
        estimate: TrustState::new(estimate, frame.time_step)?,
        posterior: ParticleCloud::uniform(particles),
        iterations_used: 1,
        converged: true,
        wall_time: started.elapsed(),
    })
}

/// Runs one filter over a reading sequence, starting from a point-mass prior
/// at `init`. Errors carry the 1-based index of the failing frame.
pub fn run_filter<R: Rng + ?Sized>(
    kind: FilterKind,
    frames: &[ReadingFrame],
    cfg: &ModelConfig,
    init: &TrustState,
    rng: &mut R,
) -> Result<Vec<FilterOutput>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    cfg.check_dim(init.len())?;
    let mut cloud = ParticleCloud::dirac(init, cfg.n_particles);
    let mut estimate = init.clone();
    let mut outputs = Vec::with_capacity(frames.len());
    for (k, frame) in frames.iter().enumerate() {
        let out = match kind {
            FilterKind::Bootstrap => bootstrap_pf_step(&cloud, frame, cfg, rng),
            FilterKind::Ipf => ipf_step(&cloud, &estimate, frame, cfg, rng),
            FilterKind::Bdmpf => bdmpf_step(&cloud, frame, cfg, rng),
        }
        .map_err(|e| e.at_step(k + 1))?;
        cloud = out.posterior.clone();
        estimate = out.estimate.clone();
        outputs.push(out);
    }
    Ok(outputs)
}
