//! Continuous Procrustes distances between disk-type surfaces.
//!
//! Each surface is flattened onto the unit disk, candidate Moebius
//! transformations are enumerated from density extrema, and each candidate is
//! refined by a thin-plate spline warp and Moser's area-preserving flow before
//! the rigid alignment energy is evaluated.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod linalg;
pub mod locate;
pub mod mesh;
pub mod mobius;
pub mod moser;
pub mod pipeline;
pub mod procrustes;
pub mod sampling;
pub mod synth;
pub mod tps;
pub mod uniformize;

pub use error::{Error, Result};
pub use mesh::{TriangleMesh, Vec3};
pub use mobius::{MobiusTransform, Orientation};
pub use pipeline::{continuous_procrustes, distance_matrix, CorrespondenceMap, RunConfig};
pub use procrustes::RigidMotion;
