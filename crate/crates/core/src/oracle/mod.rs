//! Tree-level ground truth for the mean-field recursion.
//!
//! Nothing here calls [`fuse_step`](crate::dynamics::fuse_step) to produce
//! statistics. The recursion is only consulted for the design-time rule
//! schedule, which relays apply regardless of which children report.

mod enumerate;
mod simulate;

pub use enumerate::{
    exact_message_statistics, exact_root_statistics, exact_root_statistics_with_cap,
    MessageStatistics, Profile, ProfileDistribution, DEFAULT_PROFILE_CAP, MAX_ENUMERATION_HEIGHT,
};
pub use simulate::{simulate_monte_carlo, Hypothesis, SimulationReport};

use crate::dynamics::{self, ErrorTriplet, FusionRule};
use crate::error::Result;

/// Rule applied at each level `1..=height`, taken from the analytic trajectory.
pub fn derive_level_rules(initial: ErrorTriplet, height: u32) -> Result<Vec<FusionRule>> {
    let path = dynamics::trajectory(initial, height)?;
    Ok(path
        .iter()
        .skip(1)
        .map(|r| r.rule_used.expect("levels above 0 carry a rule"))
        .collect())
}
