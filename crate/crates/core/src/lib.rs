//! Sequential identification of every arm whose importance-weighted mean
//! beats a control arm, when the population is split into subpopulations.
//!
//! The crate is organised bottom-up:
//!
//! - [`expfam`]: divergences, derivatives and sampling for the Bernoulli and
//!   known-variance Gaussian families.
//! - [`model`]: bandit instances, interaction modes, weight matrices and the
//!   answer set.
//! - [`glr`]: the constrained transport problem between the control and one
//!   arm, and the generalized likelihood ratio built on top of it.
//! - [`learner`]: AdaHedge over a finite simplex.
//! - [`oracle`]: characteristic times and oracle weights (iterative saddle
//!   point solver plus the Gaussian closed forms).
//! - [`policy`]: Track-and-Stop per mode, best-challenger and uniform
//!   sampling, with the anytime risk assessment.
//! - [`sim`]: environments, the episode runner and the experiment drivers.
//! - [`cli`]: the `abcs` command line.

pub mod cli;
pub mod expfam;
pub mod glr;
pub mod learner;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod sim;

pub use expfam::{CellFamily, DomainError, Family};
pub use model::{Instance, InstanceMeta, InstanceSpec, Mode, ModelError, WeightMatrix};
pub use oracle::{OracleError, OracleResult};
pub use policy::{Decision, Phase, Policy, PolicyConfig, PolicyKind, RiskReport, Threshold, Tracking};
