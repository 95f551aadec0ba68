//! Per-cycle placement of unmanned-vehicle network nodes by greedy
//! maximization of a joint sensing and communications utility.
//!
//! Communications are scored either by graph resistance ([`legacy`]) or by
//! per-pair disruption-tolerant requirements ([`dtn`]). [`sim`] drives the
//! control-cycle loop over a [`scenario::Scenario`], and [`whatif`] compares
//! requirement variants ahead of a mission.

pub mod dtn;
pub mod error;
pub mod grid;
pub mod legacy;
pub mod optimizer;
pub mod reference;
pub mod scenario;
pub mod sensing;
pub mod sim;
pub mod whatif;

pub use error::{Error, Result};
pub use grid::{CapabilityParams, GridSpec, Metric, Position, Topology};
pub use scenario::{CommModel, Scenario, FORMAT_VERSION};
pub use sim::{run, CycleRecord, Outcome, RunResult};
