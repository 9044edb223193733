//! Conformal and landmark-matching Teichmüller maps of disk-type point clouds.
//!
//! The crate works directly on unstructured samples: differential operators are
//! built from second-order moving least squares (MLS) in local tangent charts,
//! with Delaunay 1-rings patching the boundary. On top of those operators it
//! provides
//!
//! * [`param::conformal_parameterize`]: flattening of a 4-cornered disk-type
//!   cloud onto a rectangle of unit width and optimal height (its conformal
//!   module),
//! * [`param::teichmuller_parameterize`]: the landmark-matching extremal map
//!   between two rectangles, computed by iterating on the Beltrami coefficient,
//! * [`shape`]: registration, Teichmüller distance matrices, classical MDS and
//!   nearest-neighbour classification.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// `!(x < y)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beltrami;
pub mod cli;
pub mod cloud;
pub mod error;
pub mod mls;
pub mod param;
pub mod qc;
pub mod report;
pub mod shape;
pub mod synth;

pub use beltrami::ComplexField;
pub use cloud::{Landmark, LandmarkTarget, PointCloud};
pub use error::{Error, Result};
pub use num_complex::Complex64;
