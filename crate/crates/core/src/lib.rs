//! Routing and broadcast with mutual information accumulation.
//!
//! Nodes of a wireless network collect partial information about a packet
//! from every transmission they overhear (the rateless-code model) and decode
//! once `i_max` bits have arrived. This crate provides:
//!
//! * [`network`]: topologies, capacity formulas, the accumulation rule and the
//!   seeded random topology generator.
//! * [`unicast`]: minimum-delay routing via the single-transmitter greedy
//!   schedule searched over all relay subsets, plus the shortest-path baseline.
//! * [`energy`]: minimum-energy routing under a delay constraint for linear
//!   rate-power curves.
//! * [`broadcast`]: minimum-delay broadcast by branching over transmitters.
//! * [`line`]: the exact line-network solution and its delay-ratio analysis.
//! * [`heuristics`]: the two polynomial-time heuristics built on the
//!   shortest path.
//! * [`lp`]: a dense two-phase simplex and the per-ordering linear programs
//!   used as an exhaustive verification oracle.
//! * [`experiment`]: the seeded random-topology batch and its CSV output.

pub mod broadcast;
pub mod energy;
mod error;
pub mod experiment;
pub mod heuristics;
pub mod line;
pub mod lp;
pub mod network;
pub mod replay;
pub mod unicast;

pub use error::{Error, Result};
pub use network::{MutualInfoState, NodeId, Topology};
pub use unicast::{Schedule, Stage, UnicastSolution};

/// Relative tolerance under which a node counts as decoded, and under which two
/// candidate decode times are treated as simultaneous.
pub const DECODE_TOL: f64 = 1e-12;
