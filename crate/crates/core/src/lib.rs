//! Module placement for dynamically reconfigurable cell arrays.
//!
//! Rectangular modules with fixed time spans are placed on a cell grid;
//! modules whose spans do not overlap may reuse the same cells. The crate
//! provides:
//!
//! - [`anneal`]: simulated-annealing placement minimizing array area, with an
//!   optional fault-tolerance term,
//! - [`fault`]: single-cell fault coverage via relocation into maximal empty
//!   rectangles ([`empty_rect`]),
//! - [`pipeline`]: the greedy baseline, the two-stage area-then-fault-tolerance
//!   optimizer, and weight sweeps,
//! - [`io`] and [`cli`]: file formats, layout rendering, and the command line.

pub mod anneal;
pub mod cli;
pub mod empty_rect;
pub mod error;
pub mod fault;
pub mod io;
pub mod pipeline;
pub mod placement;
pub mod problem;

pub use error::{Error, Result};
pub use placement::{PlacedModule, Placement, Position};
pub use problem::{load_problem, pcr_fixture, GridSpec, ModuleSpec, ProblemInstance};
