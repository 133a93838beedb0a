//! Online geometric dispersion: keep points that arrive and depart over time
//! as far as possible from each other and from the container boundary.
//!
//! The crate is organized around one state-machine interface
//! ([`OnlineAlgorithm`]): a placement algorithm receives arrivals and
//! departures and must answer each arrival with a position immediately.
//! Everything else is support machinery:
//!
//! * [`geometry`]: points, halfspace polytopes, the dispersion/packing
//!   radius conversion.
//! * [`events`]: arrival/departure sequences, timeline slicing, and the two
//!   objective evaluators (all-time worst case and cumulative distance).
//! * [`bounds`]: closed-form reference optima and a brute-force grid oracle.
//! * [`algo1d`]: the harmonic pre-fixed-position algorithm for the unit
//!   segment, plus its logarithmic exact-placement variant.
//! * [`algo2d`]: the 36-position grid algorithm for the unit square with its
//!   round/case position-creation phase.
//! * [`algokd`]: the grid-search greedy for arbitrary k-dimensional
//!   polytopes (k >= 2), with and without the boundary term.
//! * [`cd_reduction`]: the offline cumulative-distance reduction that drives
//!   any online placement algorithm as a black box.
//! * [`adversary`]: instance generators, including the adaptive adversary
//!   that picks departure times after observing placements.
//! * [`sim`]: the event loop connecting sequences to algorithms, producing
//!   placement traces.
//! * [`report`]: run reports, guarantee checks, and the verification suites.

// Validation guards are written `!(x > y)` so that NaN fails them; the
// `partial_cmp` rewrite clippy suggests would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod algo1d;
pub mod algo2d;
pub mod algokd;
pub mod bounds;
pub mod cd_reduction;
pub mod events;
pub mod geometry;
pub mod report;
pub mod sim;

pub use events::{EventSequence, PlacementTrace, TimedPoint, TimelineSlices};
pub use geometry::{BoundaryFlag, Point, Polytope};
pub use sim::OnlineAlgorithm;

/// Errors surfaced by any module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("point lies outside the polytope (residual {residual:.3e} on halfspace {halfspace})")]
    OutsidePolytope { halfspace: usize, residual: f64 },
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid event sequence: {0}")]
    InvalidSequence(String),
    #[error("malformed instance line {line}: {reason}")]
    MalformedInstance { line: usize, reason: String },
    #[error("malformed trace record {record}: {reason}")]
    MalformedTrace { record: usize, reason: String },
    #[error("unknown point id {0}")]
    UnknownId(u64),
    #[error("point id {0} is already present")]
    DuplicateId(u64),
    #[error("search budget exceeded: spent {spent} of {budget} evaluations")]
    BudgetExceeded { spent: u64, budget: u64 },
    #[error(
        "no grid center lies inside the polytope (m = {m}); \
         the declared covering rate {gamma} appears overstated"
    )]
    NoGridCenter { m: usize, gamma: f64 },
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("incompatible algorithm/polytope pair: {0}")]
    Incompatible(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Numeric tolerances used across the crate.
///
/// All arithmetic is IEEE double. The placement constructions involve
/// irrational coordinates (logarithms, harmonic sums), so every closed-form
/// comparison carries an explicit tolerance instead of expecting exact
/// equality.
pub mod tol {
    /// Relative tolerance for single closed-form identities (a handful of
    /// floating-point operations on each side).
    pub const CLOSED_FORM_REL: f64 = 1e-12;

    /// Absolute tolerance for quantities accumulated over many operations
    /// (long sums, simulated distances over thousands of events).
    pub const GEOMETRY_ABS: f64 = 1e-9;

    /// Absolute tolerance on halfspace residuals for containment tests.
    /// Boundary points count as inside; pre-fixed positions sit strictly in
    /// the interior, so this only affects degenerate user-supplied input.
    pub const CONTAINMENT_ABS: f64 = 1e-12;

    /// Check |a - b| <= rel * max(|a|, |b|, 1).
    pub fn close_rel(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }
}
