//! Trust evaluation for wireless sensor networks as nonlinear state
//! filtering.
//!
//! Every node carries a trust value in `[0, 1]` that ages towards zero and is
//! pulled up by agreement with the readings of other, trusted nodes. The
//! crate provides the model ([`model`]), three particle filters over it
//! ([`filter`]), a scenario simulator with fault injection ([`sim`]), an
//! ingestion path for the Intel Berkeley lab dataset ([`ingest`]) and a Monte
//! Carlo harness ([`harness`]) with file exports ([`io`]).

pub mod error;
pub mod filter;
pub mod harness;
pub mod ingest;
pub mod io;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
pub use filter::{FilterKind, FilterOutput, ParticleCloud};
pub use harness::{ExperimentConfig, ExperimentResult, RmseTrace, ScenarioSource};
pub use model::{DrawPolicy, Estimator, ModelConfig, ReadingFrame, TrustState};
pub use sim::{FaultKind, FaultSpec, Scenario};
