//! Rare-event level crossing in single and dual server FIFO queues.
//!
//! A busy period starts with one job in an empty system and ends when the
//! system is empty again or holds `K` jobs (waiting plus in service). The
//! estimators average `phi * l` over busy periods, where `l` is the
//! likelihood ratio of every interarrival and service draw of the period.
//!
//! Crude MC uses the nominal laws. IS and NIS first simulate a pilot under
//! exponential interarrivals at the nominal service rate, then fit an
//! exponential interarrival proposal from the hit paths by weighted MLE.
//! NIS additionally fits the service proposal as a weighted LBFP folded at
//! zero.

mod estimate;
mod law;
mod sim;
mod trace;

pub use estimate::{
    estimate_level_prob, estimate_with_proposals, fit_interarrival_proposal, fit_service_proposal, run_pilot,
    trial_laws, LevelProbEstimate, PilotWeighting, QueueConfig, QueueMethod, CHUNK,
};
pub use law::{ReflectedLbfp, TimeLaw};
pub use sim::{gambler_ruin_prob, simulate_busy_period, BusyPeriodPath, PathDraws, QueueModel};
pub use trace::{
    fit_trace, generate_synthetic_trace, read_trace, write_trace, TraceFit, TraceRecord, SYNTHETIC_ARRIVAL_RATE,
    TRACE_HEADER,
};
