//! Location validation for participatory sensing through mobile WiFi hotspots.
//!
//! Users periodically declare their position; a subset of them is selected as
//! mobile hotspots (MHSs) and mutually validates the users in WiFi range.
//! Sightings are relayed as chains of sight, which feed a collusion detector, a
//! fraud-covering detector and a subjective-logic reputation filter.
//!
//! The [`harness`] module wires everything into a deterministic, seeded simulator.

pub mod adversary;
pub mod cos;
pub mod error;
pub mod harness;
pub mod mobility;
pub mod model;
pub mod protocol;
pub mod reputation;
pub mod topology;

pub use error::{Error, Result};
pub use model::{AreaGrid, AreaId, Position, RoundSchedule, ScenarioConfig, UserId, Violation};
