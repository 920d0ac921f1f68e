//! Offline transmit-power scheduling for energy-harvesting transmitters.
//!
//! The transmitted energy curve `E(t)` must stay between a minimum energy
//! curve `M(t)` and the harvested energy curve `H(t)`. For any strictly
//! concave rate function the throughput-optimal `E(t)` is the taut string
//! between the two curves, which [`string_solver::taut_string`] computes
//! exactly on piecewise-linear inputs.
//!
//! Beyond the point-to-point case the crate covers:
//!
//! * two-user Gaussian broadcast channels ([`broadcast`]), reduced to a
//!   point-to-point problem through a composite rate function;
//! * batteries that leak at a constant rate ([`leakage`]);
//! * brute-force oracles used to cross-check every solver ([`oracle`]);
//! * a scenario-file driven command line front end ([`cli`]).

pub mod broadcast;
pub mod cli;
pub mod curves;
pub mod error;
pub mod leakage;
pub mod oracle;
pub mod rate;
pub mod string_solver;

pub use error::{Error, Result};

/// Absolute tolerance, in energy units, used for feasibility contacts.
pub const ENERGY_TOL: f64 = 1e-9;

/// Relative slack used when comparing times that should coincide.
pub(crate) const TIME_EPS: f64 = 1e-12;
