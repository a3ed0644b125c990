//! Truth-versus-rumor diffusion with endogenous verification.
//!
//! Two groups of equal size hold opposite biases about a binary state of the
//! world; group 0's bias is the truth. Informed individuals pass their opinion
//! on in random meetings and forget at a constant rate (an SIS process).
//! Before adopting a message, a member of group 1 may pay to verify it, and
//! the rates at which they do so are determined in a Bayesian equilibrium.
//!
//! The crate provides:
//!
//! * [`dynamics`]: the mean-field laws of motion and an RK4 integrator;
//! * [`steady`]: closed-form steady states, stability and the truth-to-rumor ratio;
//! * [`equilibrium`]: posteriors, best responses, a fixed-point solver,
//!   thresholds, homophily comparative statics and the partisan extension;
//! * [`closed_forms`]: explicit equilibria for the capped exponential technology;
//! * [`abm`]: an agent-based Monte Carlo simulator;
//! * [`records`]: CSV row types shared by the command-line tool.

pub mod abm;
pub mod closed_forms;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod params;
pub mod records;
mod roots;
pub mod steady;
pub mod verification;

pub use error::{Error, Result};
pub use params::{KeyValues, ModelParams, ModelSpec, Rates};
pub use verification::{ExpCapped, Family, Rational, Verification};
