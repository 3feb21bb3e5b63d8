//! Simulator and online learning stack for disaster-response resource allocation.
//!
//! The crate models a community's disaster response as a ten-state
//! cyber-physical-social ODE with three control channels (crisis
//! communication, power restoration, EMS deployment), poses resource
//! allocation as a three-player non-zero-sum differential game, and solves
//! it online with per-player actor-critic learners over a quadratic value
//! basis. Supporting modules cover parameter calibration from observed
//! trajectories, baseline controllers, equilibrium/excitation diagnostics,
//! and reproducible report generation.
//!
//! Everything is deterministic given a scenario seed: the only randomness
//! (exploration phases, deviation directions) flows from seeded ChaCha8
//! streams, so repeated runs are byte-identical.

pub mod baselines;
pub mod calibration;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod learner;
pub mod report;
pub mod scenario;
pub mod synth;

pub use error::{CpsgError, Result};
pub use scenario::{CpsParams, Scenario, StateVector};
