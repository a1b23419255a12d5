//! Moser's flow: an area-preserving correction `phi` of the disk with
//! `nu(phi(z)) det(grad phi(z)) = mu(z)`.
//!
//! Densities are piecewise constant on a quasi-uniform triangulation of the disk;
//! the potential solves a Neumann Poisson problem with linear elements and the
//! flow of `grad a / (t nu + (1 - t) mu)` is integrated with classical RK4.

mod fem;
mod flow;

pub use fem::{build_disk_mesh, resample_density, solve_neumann_poisson, solve_poisson_rhs, solve_poisson_vertex_rhs, DiskFEMesh, ElementDensity, FlowField};
pub use flow::{flow_point, moser_map, moser_map_with, FlowInterpolation, MoserFlow, MoserMap};
