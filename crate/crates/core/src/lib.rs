//! Bayesian mixture of finite mixtures (MFM) with univariate Gaussian
//! components.
//!
//! The crate provides
//!
//! * the four priors on the number of components `K` together with the
//!   static / dynamic Dirichlet schedules ([`prior_k`]),
//! * exact computation of the prior on the number of filled components
//!   `K+` ([`partition_prior`]),
//! * the telescoping sampler, a transdimensional Gibbs scheme that samples
//!   `K` explicitly given the partition ([`sampler`]),
//! * posterior summaries and prior density curves ([`summaries`]),
//! * a deterministic factorial-sweep runner ([`harness`]).

pub mod dataset;
pub mod error;
pub mod harness;
pub mod math;
pub mod partition_prior;
pub mod prior_k;
pub mod sampler;
pub mod summaries;

pub use dataset::Dataset;
pub use error::{MfmError, Result};
pub use partition_prior::{ClusterSizes, KPlusDistribution};
pub use prior_k::{DirichletSchedule, PriorOnK};
pub use harness::{MfmSetting, SweepConfig};
pub use sampler::{ChainTrace, ComponentPriors, Likelihood, MfmModel, Protocol, SamplerState};
pub use summaries::KPlusPosteriorSummary;
