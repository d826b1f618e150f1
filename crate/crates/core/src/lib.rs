//! Hamiltonian Monte Carlo with energy-preserving splitting integrators.
//!
//! The two-stage splitting family `Ψ_h^(b)` run at the step size `h_b`
//! integrates Gaussian targets with zero energy error, so HMC accepts every
//! proposal. Around that core the crate provides:
//!
//! - [`linear`]: closed-form analysis of splitting maps on the Gaussian test
//!   problem (map coefficients, `h_b`, energy-error matrices, presets);
//! - [`integrators`]: Störmer-Verlet, the splitting family and its scaled
//!   variant for diagonal Gaussians;
//! - [`targets`]: Gaussian families, perturbed Gaussians, a log-Gaussian Cox
//!   process and Bayesian logistic regression;
//! - [`sampler`]: fixed-step HMC and the adaptive-`b` driver that shrinks `b`
//!   after every rejection;
//! - [`diagnostics`]: acceptance rate, energy-error statistics, ESS and
//!   posterior summaries;
//! - [`cli`]: the `splithmc` experiment harness.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrators;
pub mod linear;
pub mod rng;
pub mod sampler;
pub mod targets;
pub mod types;

pub use error::{Error, EvalError, Result};
pub use integrators::{integrate, IntegratorSpec, Scheme, TrajectoryResult};
pub use rng::RngState;
pub use sampler::{hmc_run, hmc_run_adaptive, AdaptiveState, ChainOutput, HmcConfig, Initializer};
pub use types::{
    draw_momentum, hamiltonian, DiagonalMetric, HamiltonianValue, PhasePoint, TargetModel,
};
