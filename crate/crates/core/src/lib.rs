//! Topological descriptors for planar point deployments.
//!
//! The pipeline: ingest or generate a planar point set, build its Delaunay
//! triangulation, assign alpha-complex entry values to every simplex, sweep
//! the filtration to get Betti curves and Euler characteristics, then
//! extract fractal signatures (ripples, peaks, Hurst coefficients) and fit
//! heavy-tailed candidate distributions to the Euler-characteristic samples.
//!
//! Alpha convention: entry values are radii (lengths, in meters), not
//! squared radii. Square them when comparing with tools that use the
//! radius-squared convention.

pub mod error;
pub mod fractal;
pub mod filtration;
pub mod geometry;
pub mod homology;
pub mod ingest;
pub mod points;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use points::PointSet;
