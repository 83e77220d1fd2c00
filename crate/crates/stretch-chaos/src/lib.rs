//! Numerical verification of the stretching-along-paths property for planar
//! maps and for Poincaré maps of periodically switched planar systems.
//!
//! A verified configuration is turned into a certificate: periodic points for
//! every admissible itinerary up to a given period, a transition matrix and a
//! lower bound for the topological entropy.

pub mod cli;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod models;
pub mod orbits;
pub mod report;
pub mod stretching;
pub mod symdyn;

pub use error::DomainError;
pub use geometry::{BBox, OrientedRectangle, Path, Point, RegionPredicate};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
