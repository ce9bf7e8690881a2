//! Parallel Glauber dynamics (PGD) for CSMA scheduling on interference graphs.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`graph`]: interference graphs, feasible schedules and exact enumeration
//!   of the schedule space,
//! * [`dynamics`]: the PGD-CSMA kernel, decision-schedule rules, exact
//!   transition matrices and the product-form stationary law,
//! * [`mixing`]: total-variation diagnostics, coupling-based mixing-time
//!   bounds and coupled-chain coalescence,
//! * [`fugacity`]: service rates, the log-partition objective and its
//!   maximiser, and capacity-region membership,
//! * [`queueing`]: fixed-parameter and adaptive queue simulation together
//!   with the associated queue and frame-length bounds.
//!
//! Links are indexed from 0. A schedule is a bit mask over at most
//! [`graph::MAX_LINKS`] links.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod fugacity;
pub mod graph;
pub mod linalg;
pub mod lp;
pub mod math;
pub mod mixing;
pub mod queueing;
pub mod rng;
pub mod stats;

pub use dynamics::{ChainState, DecisionDistribution, DecisionRule, FugacityVector};
pub use error::{Error, Result};
pub use graph::{InterferenceGraph, Schedule, ScheduleSpace};
