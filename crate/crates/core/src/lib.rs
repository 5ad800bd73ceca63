//! Boltzmann machine training with pluggable Boltzmann samplers.
//!
//! The crate is organised around five pieces:
//!
//! - [`ising`]: the graph model, Ising energy, state enumeration, visible
//!   clamping and `{0,1}` / `{-1,+1}` basis conversion.
//! - [`samplers`]: Boltzmann samplers. An exact enumeration sampler (the
//!   oracle), a heat-bath Gibbs emulator and an HTTP client for a remote
//!   annealer service, together with a mock server speaking the same protocol.
//! - [`metrics`]: exact marginals, KL divergence, Hellinger distance,
//!   conditional probabilities, inverse-temperature fitting and the
//!   temperature analysis of trained machines.
//! - [`training`]: gradient estimators, the momentum update and the
//!   distribution-matching / function-approximation training loops.
//! - [`datasets`]: logic gates, the 2-bit adder, the two-phase patterns and
//!   bundled parameter fixtures.
//!
//! Node ordering is always `[visible input | visible output | hidden]`.

pub mod datasets;
pub mod error;
pub mod ising;
pub mod metrics;
pub mod samplers;
pub mod training;

pub use datasets::Dataset;
pub use error::{Error, Result};
pub use ising::{Basis, BoltzmannMachine, SpinState};
pub use metrics::Distribution;
pub use samplers::{SampleSet, Sampler, SamplerConfig};
pub use training::{GradientEstimate, TrainingConfig, TrainingTrace};
