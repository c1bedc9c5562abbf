//! Rolling-ball dynamics on pancake surfaces and the no-slip billiard limit.
//!
//! A pancake surface is the boundary of the r-neighborhood of a flat plate:
//! the locus of centers of a radius-r ball rolling on the plate. This crate
//! integrates the non-holonomic rolling equations on such surfaces, implements
//! the no-slip billiard collision map on the plate itself, and measures how the
//! rolling system converges to the billiard as r shrinks.
//!
//! Module map:
//! - [`geometry`]: plate families, pancake surface construction, normals,
//!   shape operators, projections, and the skew-matrix algebra.
//! - [`dynamics`]: the rolling-equation right-hand side and the RK4 +
//!   projection integrator with seam-crossing events.
//! - [`oracles`]: closed-form solutions and conserved quantities used as
//!   ground truth in tests and experiments.
//! - [`billiard`]: free flight plus the no-slip collision map, orbits, and
//!   caustic statistics.
//! - [`limit`]: edge-crossing experiments and radius-convergence studies.
//! - [`config`] / [`scenario`]: the JSON-driven CLI front end.

pub mod billiard;
pub mod config;
pub mod dynamics;
pub mod geometry;
pub mod limit;
pub mod oracles;
pub mod scenario;

pub use geometry::{build_pancake, PancakeSurface, PlateSpec, RegionKind, SkewMap};
