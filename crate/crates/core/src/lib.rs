//! Age of information, message rate and energy-state uncertainty reduction
//! for a noiseless binary energy-harvesting channel.
//!
//! The transmitter either has no battery or an unlimited one. Updates are
//! `1` symbols, so the interval between consecutive updates is at once the
//! timing-channel input, the driver of data freshness, and the carrier of
//! information about the energy arrivals. The modules cover:
//!
//! - [`prob`]: probabilities, binary entropy and interval pmfs.
//! - [`age`]: single-letter peak/average age and the minimum ages.
//! - [`capacity`]: capacity under peak and average age budgets.
//! - [`policies`]: zero-wait, wait-and-transmit and probabilistic-periodic
//!   policies with their optimizers.
//! - [`regions`]: (rate, state amplification) and (rate, state masking)
//!   regions and the sweeps behind the trade-off curves.
//! - [`simulator`]: seeded Monte Carlo simulation of the battery dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod age;
pub mod capacity;
pub mod error;
pub mod policies;
pub mod prob;
pub mod regions;
pub mod search;
pub mod simulator;

pub use age::{avg_age, min_ages_infinite, min_ages_zero, peak_age, AgeConstraints, Bound, MinAgeReport};
pub use capacity::{
    capacity, capacity_peak_only, feasibility, max_entropy_pmf, CapacityOptions, CapacityResult, Feasibility,
};
pub use error::{Error, Result};
pub use policies::{
    optimize_wat, policy_metrics, policy_to_pmf, policy_to_pmf_auto, prob_periodic_policy, wat_metrics,
    zero_wait_optimize, PolicyMetrics, PolicyOptimum, PolicySpec,
};
pub use prob::{binary_entropy, pmf_entropy, pmf_moments, InterUpdatePmf, Probability};
pub use regions::{
    amp_region_infinite, mask_region_sweep, max_amp_given_rate, tradeoff_sweep, zero_battery_amp, zero_battery_mask,
    Battery, DeltaKind, RegionPoint, Source,
};
pub use simulator::{
    estimate_interval_entropy, estimate_mi_zero_battery, simulate, simulate_with_trace, SimConfig, SimStats,
    UpdateRecord,
};
