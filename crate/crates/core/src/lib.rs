//! Error-probability dynamics of balanced binary relay trees whose leaf
//! sensors fail independently.
//!
//! * [`dynamics`]: the per-level fusion recursion and trajectories.
//! * [`regions`]: the `U`, `L`, `B1`, `R` geometry and invariant region.
//! * [`bounds`]: step-ratio checks, fusion-center bounds, sensor-count solver
//!   and asymptotic sweeps.
//! * [`oracle`]: exact enumeration and Monte Carlo ground truth for the tree.
//! * [`cli`] and [`output`]: the command-line surface and its CSV/JSON format.

pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod output;
pub mod regions;

pub use dynamics::{ErrorTriplet, FusionRule, TrajectoryRecord};
pub use error::{Error, Result};
pub use regions::RegionLabel;
