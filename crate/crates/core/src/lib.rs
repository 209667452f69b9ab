//! Metric sigma-transforms and hyperbolic unfoldings of singular hypersurfaces.
//!
//! The crate turns model hypersurfaces (cones over products of spheres,
//! catenoids, spheres, hyperplanes) or triangle meshes into weighted graphs,
//! computes the metric sigma-transform `b` and its reciprocal `delta`, and
//! measures the geometry of the conformal metric `b * g`: uniformity,
//! Gromov hyperbolicity, Whitney smoothings and boundary rays.
//!
//! The crate is `no_std` and only needs `alloc`. Enable the `parallel`
//! feature to spread independent shortest-path queries over a rayon pool.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod boundary;
pub mod discretize;
pub mod hyperbolicity;
pub mod length;
pub mod metricspace;
pub mod models;
pub mod paths;
pub mod sigma;
pub mod tolerance;
pub mod uniformity;
pub mod whitney;

mod linalg;
mod par;
mod sampling;

pub use discretize::{MetricGraph, VertexFlags};
pub use length::Length;
pub use models::{ModelKind, ModelSpec, ModelSurface};
pub use sigma::SigmaField;
