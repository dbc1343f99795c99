//! Computational toolkit for limited-view thermoacoustic tomography with a
//! variable sound speed.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: grids, sound-speed fields, domains with sampled boundaries,
//!   detector patches, phantoms and the on-disk field format.
//! - [`geodesic`]: travel-time distances in the metric `c⁻² δ`, both free
//!   space and restricted to the exterior of the domain, plus a Dijkstra
//!   oracle on a 16-neighbour graph.
//! - [`coverage`]: the detector coverage condition and the minimal
//!   observation time.
//! - [`wave`]: leapfrog simulation of `u_tt = c² Δu`, boundary traces, the
//!   exterior Dirichlet problem and discrete energy.
//! - [`continuation`]: symbols and surface classification, domains of
//!   dependence and the unique-continuation cone constructions.
//! - [`inversion`]: the measurement operator, its exact discrete adjoint and
//!   projected Landweber iteration.

pub mod continuation;
pub mod coverage;
mod error;
pub mod field;
pub mod geodesic;
pub mod inversion;
pub mod wave;

pub use error::{Error, Result};
