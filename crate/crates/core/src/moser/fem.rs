use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgOptions, CsrMatrix};
use crate::locate::PlanarLocator;
use crate::synth::{ring_disk, ring_disk_vertex_count};
use crate::uniformize::signed_area;

const MAX_FE_VERTICES: usize = 1_000_000;

/// Quasi-uniform triangulation of the unit disk for the Poisson solve and the flow.
#[derive(Debug, Clone)]
pub struct DiskFEMesh {
    locator: PlanarLocator,
    boundary: Vec<bool>,
    areas: Vec<f64>,
    h: f64,
}

pub fn build_disk_mesh(h: f64) -> Result<DiskFEMesh> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} must lie in (0, 1)")));
    }
    let rings = (1.0 / h).ceil() as usize;
    if ring_disk_vertex_count(rings) > MAX_FE_VERTICES {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} needs more than {MAX_FE_VERTICES} vertices")));
    }
    let (pts, faces) = ring_disk(rings);
    let boundary_start = ring_disk_vertex_count(rings - 1);
    let boundary = (0..pts.len()).map(|v| v >= boundary_start).collect();
    let points: Vec<Complex64> = pts.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    let areas = faces.iter().map(|f| signed_area(points[f[0]], points[f[1]], points[f[2]])).collect();
    Ok(DiskFEMesh { locator: PlanarLocator::new(points, faces), boundary, areas, h })
}

impl DiskFEMesh {
    pub fn vertices(&self) -> &[Complex64] {
        self.locator.points()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        self.locator.faces()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn target_h(&self) -> f64 {
        self.h
    }

    pub fn locator(&self) -> &PlanarLocator {
        &self.locator
    }

    pub fn face_midpoint(&self, f: usize) -> Complex64 {
        let v = self.vertices();
        let [a, b, c] = self.faces()[f];
        (v[a] + v[b] + v[c]) / 3.0
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        let v = self.vertices();
        self.faces().iter().flat_map(move |f| (0..3).map(move |k| (v[f[k]] - v[f[(k + 1) % 3]]).norm()))
    }

    /// Element containing `z` (nearest element when `z` falls outside the polygon).
    pub fn element_at(&self, z: Complex64) -> usize {
        self.locator.locate(z).face
    }

    /// Outward unit normal of the boundary edge of face `f`, if it has one.
    fn boundary_edge_normal(&self, f: usize) -> Option<Complex64> {
        let face = self.faces()[f];
        let v = self.vertices();
        (0..3).find_map(|k| {
            let (a, b) = (face[k], face[(k + 1) % 3]);
            if self.boundary[a] && self.boundary[b] {
                // CCW face: interior on the left, so the outward normal is the edge rotated clockwise.
                let e = v[b] - v[a];
                Some(Complex64::new(e.im, -e.re) / e.norm())
            } else {
                None
            }
        })
    }
}

/// Density sampled at vertices and element midpoints, floored and normalized to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDensity {
    pub values: Vec<f64>,
    pub vertex_values: Vec<f64>,
    pub floor: f64,
}

impl ElementDensity {
    pub fn mass(&self, mesh: &DiskFEMesh) -> f64 {
        self.values.iter().zip(mesh.face_areas()).map(|(v, a)| v * a).sum()
    }

    /// Linear interpolation of the vertex values.
    pub fn interpolate(&self, mesh: &DiskFEMesh, z: Complex64) -> f64 {
        let loc = mesh.locator().locate(z);
        mesh.locator().interpolate(&loc, &self.vertex_values)
    }
}

/// Samples `source` at vertices and element midpoints, floors at `floor_rel`
/// times the mean sampled value and rescales to unit mass.
pub fn resample_density(mesh: &DiskFEMesh, source: impl Fn(Complex64) -> f64, floor_rel: f64) -> ElementDensity {
    let raw: Vec<f64> = (0..mesh.faces().len()).map(|f| source(mesh.face_midpoint(f)).max(0.0)).collect();
    let mean = raw.iter().zip(mesh.face_areas()).map(|(v, a)| v * a).sum::<f64>() / mesh.total_area();
    let floor = (floor_rel * mean).max(f64::MIN_POSITIVE);
    let floored: Vec<f64> = raw.iter().map(|&v| v.max(floor)).collect();
    let mass: f64 = floored.iter().zip(mesh.face_areas()).map(|(v, a)| v * a).sum();
    let scale = mass.recip();
    let vertex_values = mesh.vertices().iter().map(|&z| source(z).max(floor) * scale).collect();
    ElementDensity { values: floored.iter().map(|v| v * scale).collect(), vertex_values, floor: floor * scale }
}

/// Potential `a` (per vertex), its element-wise gradient and a recovered
/// continuous gradient at the vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    pub potential: Vec<f64>,
    pub gradient: Vec<[f64; 2]>,
    pub vertex_gradient: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn velocity(&self, f: usize) -> Complex64 {
        Complex64::new(self.gradient[f][0], self.gradient[f][1])
    }

    pub fn vertex_velocity(&self, v: usize) -> Complex64 {
        Complex64::new(self.vertex_gradient[v][0], self.vertex_gradient[v][1])
    }

    pub fn is_zero(&self) -> bool {
        self.gradient.iter().all(|g| g[0] == 0.0 && g[1] == 0.0)
    }
}

/// Gradients of the three hat functions on a triangle.
fn hat_gradients(p: [Complex64; 3], area: f64) -> [Complex64; 3] {
    // grad(lambda_k) = rot90(p_{k+2} - p_{k+1}) / (2 area)
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let e = p[(k + 2) % 3] - p[(k + 1) % 3];
        out[k] = Complex64::new(-e.im, e.re) / (2.0 * area);
    }
    out
}

/// Solves `laplace(a) = rhs` with zero Neumann data; `rhs` is per element and
/// is shifted to zero mean first.
pub fn solve_poisson_rhs(mesh: &DiskFEMesh, rhs: &[f64]) -> Result<FlowField> {
    let faces = mesh.faces();
    if rhs.len() != faces.len() {
        return Err(Error::LengthMismatch { expected: faces.len(), got: rhs.len() });
    }
    let areas = mesh.face_areas();
    let mean = rhs.iter().zip(areas).map(|(r, a)| r * a).sum::<f64>() / mesh.total_area();
    let mut load = vec![0.0; mesh.vertices().len()];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            load[v] -= (rhs[fi] - mean) * areas[fi] / 3.0;
        }
    }
    solve_with_load(mesh, &load)
}

/// As [`solve_poisson_rhs`] with a piecewise linear `rhs` given at the vertices.
pub fn solve_poisson_vertex_rhs(mesh: &DiskFEMesh, rhs: &[f64]) -> Result<FlowField> {
    let n = mesh.vertices().len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: rhs.len() });
    }
    let areas = mesh.face_areas();
    let integral: f64 =
        mesh.faces().iter().zip(areas).map(|(f, a)| a * f.iter().map(|&v| rhs[v]).sum::<f64>() / 3.0).sum();
    let mean = integral / mesh.total_area();
    let mut load = vec![0.0; n];
    for (f, &area) in mesh.faces().iter().zip(areas) {
        let sum: f64 = f.iter().map(|&v| rhs[v] - mean).sum();
        for &v in f {
            load[v] -= area / 12.0 * (sum + rhs[v] - mean);
        }
    }
    solve_with_load(mesh, &load)
}

/// Weak form `-int grad a . grad w = int rhs w`; `load` holds the right-hand side integrals, negated.
fn solve_with_load(mesh: &DiskFEMesh, load: &[f64]) -> Result<FlowField> {
    let faces = mesh.faces();
    let areas = mesh.face_areas();
    let n = mesh.vertices().len();
    let mut triplets = Vec::with_capacity(faces.len() * 9);
    let mut grads = Vec::with_capacity(faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let p = f.map(|v| mesh.vertices()[v]);
        let g = hat_gradients(p, areas[fi]);
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((f[i], f[j], areas[fi] * (g[i] * g[j].conj()).re));
            }
        }
        grads.push(g);
    }
    let stiffness = CsrMatrix::from_triplets(n, triplets);
    let opts = CgOptions { rel_tol: 1e-12, project_constants: true, ..Default::default() };
    let potential = conjugate_gradient(&stiffness, load, None, opts)?;

    let mut gradient = Vec::with_capacity(faces.len());
    for (fi, f) in faces.iter().enumerate() {
        let g = grads[fi];
        let mut v = g[0] * potential[f[0]] + g[1] * potential[f[1]] + g[2] * potential[f[2]];
        // Neumann data holds only weakly; make boundary elements exactly tangent.
        if let Some(normal) = mesh.boundary_edge_normal(fi) {
            v -= normal * (v * normal.conj()).re;
        }
        gradient.push([v.re, v.im]);
    }

    let vertex_gradient = recover_gradient(mesh, &potential);
    Ok(FlowField { potential, gradient, vertex_gradient })
}

/// Vertex gradients from a least-squares quadratic fit of the potential over the
/// two-ring of each vertex, tangent on the circle.
fn recover_gradient(mesh: &DiskFEMesh, potential: &[f64]) -> Vec<[f64; 2]> {
    let n = mesh.vertices().len();
    let mut ring: Vec<Vec<usize>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for &a in f {
            for &b in f {
                if a != b && !ring[a].contains(&b) {
                    ring[a].push(b);
                }
            }
        }
    }
    let z = mesh.vertices();
    let scale = mesh.h;
    (0..n)
        .map(|v| {
            let mut patch: Vec<usize> = ring[v].clone();
            for &w in &ring[v] {
                for &u in &ring[w] {
                    if u != v && !patch.contains(&u) {
                        patch.push(u);
                    }
                }
            }
            let mut ata = Matrix5::zeros();
            let mut atb = Vector5::zeros();
            for &u in &patch {
                let d = (z[u] - z[v]) / scale;
                let row = Vector5::new(d.re, d.im, d.re * d.re, d.re * d.im, d.im * d.im);
                ata += row * row.transpose();
                atb += row * (potential[u] - potential[v]);
            }
            // The fit also honours the zero normal derivative at boundary vertices of the patch.
            for &u in patch.iter().chain(std::iter::once(&v)).filter(|&&u| mesh.is_boundary(u)) {
                let d = (z[u] - z[v]) / scale;
                let nrm = z[u] / z[u].norm();
                let row = Vector5::new(
                    nrm.re,
                    nrm.im,
                    2.0 * d.re * nrm.re,
                    d.im * nrm.re + d.re * nrm.im,
                    2.0 * d.im * nrm.im,
                );
                ata += row * row.transpose();
            }
            let c = ata.cholesky().map(|ch| ch.solve(&atb)).unwrap_or_else(Vector5::zeros);
            let mut g = Complex64::new(c[0], c[1]) / scale;
            if mesh.is_boundary(v) {
                let normal = z[v] / z[v].norm();
                g -= normal * (g * normal.conj()).re;
            }
            [g.re, g.im]
        })
        .collect()
}

pub fn solve_neumann_poisson(mesh: &DiskFEMesh, mu: &ElementDensity, nu: &ElementDensity) -> Result<FlowField> {
    let rhs: Vec<f64> = mu.vertex_values.iter().zip(&nu.vertex_values).map(|(m, n)| m - n).collect();
    solve_poisson_vertex_rhs(mesh, &rhs)
}
