//! Two-stage nonparametric importance sampling.
//!
//! Each estimator spends `M = round(lambda N)` trial draws on a pilot,
//! fits an LBFP proposal `q^` to the pilot weights, and spends the
//! remaining `N - M` draws on importance sampling from `q^`:
//!
//! - [`nis_integrate`]: weights `|phi| p / q0`, unnormalized IS.
//! - [`nis_split_integrate`]: the same on `phi+` and `phi-` separately.
//! - [`nsis_integrate`]: weights `|phi - I~| p~ / q0`, self-normalized IS;
//!   only the unnormalized target `p~` is used.

mod bandwidth;
mod pipeline;
mod problem;
mod proposal;

pub use bandwidth::{
    curvature_pilot_width, effective_sample_size, optimal_lambda, plugin_bandwidth, plugin_constants, reference_bandwidth,
    weighted_moments, BandwidthRule, PluginConstants, PluginMode,
};
pub use pipeline::{
    estimate_is_proposal, estimate_sis_proposal, is_integrate, mc_integrate, nis_integrate,
    nis_split_integrate, nsis_integrate, pilot_snis_estimate, sis_integrate, IntegrationResult,
    Method, NisConfig, LAMBDA_WARN,
};
pub use problem::{GaussianProposal, Problem, Proposal, ScalarField, UniformBox};
pub use proposal::{AxisScaling, ProposalEstimate};
