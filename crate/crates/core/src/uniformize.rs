//! Flattening of disk-type meshes onto the unit disk and the induced area densities.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_obj;
use crate::linalg::{conjugate_gradient, CgOptions, CsrMatrix};
use crate::locate::PlanarLocator;
use crate::mesh::TriangleMesh;
use crate::mobius::DISK_TOL;

/// Planar image of a mesh in the closed unit disk with per-face area density.
///
/// `face_density[f] = area3d[f] / area2d[f]`, so integrating the density over the
/// disk recovers surface area.
#[derive(Debug, Clone)]
pub struct DiskParam {
    planar_coords: Vec<Complex64>,
    face_density: Vec<f64>,
    face_area_3d: Vec<f64>,
    boundary: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    locator: PlanarLocator,
}

pub fn signed_area(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    0.5 * ((b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re))
}

fn cot_weights(mesh: &TriangleMesh) -> Vec<(usize, usize, f64)> {
    let v = mesh.vertices();
    let mut out = Vec::with_capacity(mesh.num_faces() * 3);
    for f in mesh.faces() {
        for k in 0..3 {
            let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let e1 = v[i] - v[o];
            let e2 = v[j] - v[o];
            let cot = e1.dot(&e2) / e1.cross(&e2).norm();
            out.push((i, j, 0.5 * cot));
        }
    }
    out
}

/// Harmonic map with cotangent weights, boundary on the unit circle by arclength.
pub fn flatten_to_disk(mesh: &TriangleMesh) -> Result<DiskParam> {
    let n = mesh.num_vertices();
    let verts = mesh.vertices();
    let boundary_loop = mesh.boundary_loop();
    let mut coords = vec![Complex64::new(0.0, 0.0); n];

    let nb = boundary_loop.len();
    let mut cumulative = Vec::with_capacity(nb);
    let mut total = 0.0;
    for k in 0..nb {
        cumulative.push(total);
        total += (verts[boundary_loop[(k + 1) % nb]] - verts[boundary_loop[k]]).norm();
    }
    for (k, &v) in boundary_loop.iter().enumerate() {
        coords[v] = Complex64::from_polar(1.0, TAU * cumulative[k] / total);
    }

    let boundary = mesh.boundary_flags();
    let mut interior_index = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if !boundary[v] {
            interior_index[v] = interior.len();
            interior.push(v);
        }
    }

    if !interior.is_empty() {
        let mut triplets = Vec::new();
        let mut rhs_x = vec![0.0; interior.len()];
        let mut rhs_y = vec![0.0; interior.len()];
        for (i, j, w) in cot_weights(mesh) {
            for (a, b) in [(i, j), (j, i)] {
                if boundary[a] {
                    continue;
                }
                let ia = interior_index[a];
                triplets.push((ia, ia, w));
                if boundary[b] {
                    rhs_x[ia] += w * coords[b].re;
                    rhs_y[ia] += w * coords[b].im;
                } else {
                    triplets.push((ia, interior_index[b], -w));
                }
            }
        }
        let lap = CsrMatrix::from_triplets(interior.len(), triplets);
        let opts = CgOptions { rel_tol: 1e-13, ..Default::default() };
        let x = conjugate_gradient(&lap, &rhs_x, None, opts)?;
        let y = conjugate_gradient(&lap, &rhs_y, None, opts)?;
        for (k, &v) in interior.iter().enumerate() {
            coords[v] = Complex64::new(x[k], y[k]);
        }
    }

    let flipped = mesh
        .faces()
        .iter()
        .filter(|f| !(signed_area(coords[f[0]], coords[f[1]], coords[f[2]]) > 0.0))
        .count();
    if flipped > 0 {
        return Err(Error::NonBijectiveFlattening(flipped));
    }
    Ok(DiskParam::from_parts(coords, mesh.faces().to_vec(), mesh.face_areas(), boundary))
}

impl DiskParam {
    fn from_parts(coords: Vec<Complex64>, faces: Vec<[usize; 3]>, face_area_3d: Vec<f64>, boundary: Vec<bool>) -> Self {
        let face_density = faces
            .iter()
            .zip(&face_area_3d)
            .map(|(f, &a3)| a3 / signed_area(coords[f[0]], coords[f[1]], coords[f[2]]).abs())
            .collect();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); coords.len()];
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !neighbors[a].contains(&b) {
                    neighbors[a].push(b);
                }
                if !neighbors[b].contains(&a) {
                    neighbors[b].push(a);
                }
            }
        }
        let locator = PlanarLocator::new(coords.clone(), faces);
        Self { planar_coords: coords, face_density, face_area_3d, boundary, neighbors, locator }
    }

    /// Same triangulation pushed through a planar map; densities are recomputed
    /// so that they still integrate to the surface area.
    pub fn transformed(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let coords = self.planar_coords.iter().map(|&z| f(z)).collect();
        Self::from_parts(coords, self.locator.faces().to_vec(), self.face_area_3d.clone(), self.boundary.clone())
    }

    pub fn planar_coords(&self) -> &[Complex64] {
        &self.planar_coords
    }

    pub fn face_density(&self) -> &[f64] {
        &self.face_density
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        self.locator.faces()
    }

    pub fn face_area_2d(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces()[f];
        signed_area(self.planar_coords[a], self.planar_coords[b], self.planar_coords[c])
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn locator(&self) -> &PlanarLocator {
        &self.locator
    }

    /// Number of faces with non-positive planar area.
    pub fn flipped_faces(&self) -> usize {
        (0..self.faces().len()).filter(|&f| !(self.face_area_2d(f) > 0.0)).count()
    }

    /// `sum_f density_f * area2d_f`; equals the surface area.
    pub fn total_mass(&self) -> f64 {
        (0..self.faces().len()).map(|f| self.face_density[f] * self.face_area_2d(f).abs()).sum()
    }

    /// Piecewise-constant density at `z`.
    pub fn conformal_density_at(&self, z: Complex64) -> Result<f64> {
        if z.norm() > 1.0 + DISK_TOL {
            return Err(Error::InvalidArgument(format!("point ({}, {}) outside the unit disk", z.re, z.im)));
        }
        Ok(self.face_density[self.locator.locate(z).face])
    }

    /// Area-weighted average of incident face densities at each vertex.
    pub fn vertex_density(&self) -> Vec<f64> {
        let n = self.planar_coords.len();
        let mut mass = vec![0.0; n];
        let mut area = vec![0.0; n];
        for (fi, f) in self.faces().iter().enumerate() {
            let a2 = self.face_area_2d(fi).abs();
            for &v in f {
                mass[v] += self.face_density[fi] * a2;
                area[v] += a2;
            }
        }
        mass.iter().zip(&area).map(|(m, a)| m / a).collect()
    }

    /// `(1 - |z|^2)^2 * density` per vertex; zero on the boundary.
    pub fn hyperbolic_density(&self) -> Vec<f64> {
        self.vertex_density()
            .iter()
            .enumerate()
            .map(|(v, &mu)| {
                if self.boundary[v] {
                    0.0
                } else {
                    (1.0 - self.planar_coords[v].norm_sqr()).powi(2) * mu
                }
            })
            .collect()
    }

    /// One pass of vertex-area weighted averaging over closed 1-rings.
    pub fn smooth(&self, field: &[f64]) -> Vec<f64> {
        let n = self.planar_coords.len();
        let mut vertex_area = vec![0.0; n];
        for (fi, f) in self.faces().iter().enumerate() {
            let a = self.face_area_2d(fi).abs() / 3.0;
            for &v in f {
                vertex_area[v] += a;
            }
        }
        (0..n)
            .map(|v| {
                let mut num = vertex_area[v] * field[v];
                let mut den = vertex_area[v];
                for &u in &self.neighbors[v] {
                    num += vertex_area[u] * field[u];
                    den += vertex_area[u];
                }
                num / den
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Repr<'a> {
            coords: Vec<[f64; 2]>,
            faces: &'a [[usize; 3]],
            face_density: &'a [f64],
        }
        let repr = Repr {
            coords: self.planar_coords.iter().map(|z| [z.re, z.im]).collect(),
            faces: self.faces(),
            face_density: &self.face_density,
        };
        Ok(serde_json::to_string(&repr)?)
    }

    /// Writes the surface with the planar coordinates as texture coordinates.
    pub fn write_obj_with_uv<W: Write>(&self, mesh: &TriangleMesh, out: W) -> Result<()> {
        let uv: Vec<[f64; 2]> = self.planar_coords.iter().map(|z| [z.re, z.im]).collect();
        write_obj(mesh, Some(&uv), out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub vertex: usize,
    pub position: Complex64,
    pub kind: ExtremumKind,
    pub value: f64,
}

/// Interior density extrema sorted by deviation from the median, largest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSet {
    pub extrema: Vec<Extremum>,
}

impl ExtremaSet {
    pub fn len(&self) -> usize {
        self.extrema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extrema.is_empty()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.extrema.iter().map(|e| e.position).collect()
    }

    /// Strict 1-ring extrema of `field` at interior vertices.
    pub fn from_field(param: &DiskParam, field: &[f64], max_extrema: usize) -> Self {
        let mut sorted = field.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if sorted.is_empty() { 0.0 } else { sorted[sorted.len() / 2] };
        let mut extrema = Vec::new();
        for v in 0..field.len() {
            if param.is_boundary(v) || param.neighbors(v).is_empty() {
                continue;
            }
            let nb = param.neighbors(v);
            let kind = if nb.iter().all(|&u| field[v] > field[u]) {
                ExtremumKind::Max
            } else if nb.iter().all(|&u| field[v] < field[u]) {
                ExtremumKind::Min
            } else {
                continue;
            };
            extrema.push(Extremum { vertex: v, position: param.planar_coords[v], kind, value: field[v] });
        }
        extrema.sort_by(|a, b| {
            (b.value - median).abs().total_cmp(&(a.value - median).abs()).then(a.vertex.cmp(&b.vertex))
        });
        extrema.truncate(max_extrema);
        Self { extrema }
    }
}

/// Extrema of the smoothed hyperbolic density.
pub fn find_extrema(param: &DiskParam, max_extrema: usize) -> ExtremaSet {
    let field = param.smooth(&param.hyperbolic_density());
    ExtremaSet::from_field(param, &field, max_extrema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn flat_disk_has_uniform_density() {
        let m = synth::height_field(10, |_, _| 0.0).normalize_area().unwrap();
        let p = flatten_to_disk(&m).unwrap();
        let d = p.face_density();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!(d.iter().all(|x| (x - mean).abs() / mean < 0.05));
        assert!((p.total_mass() - 1.0).abs() < 1e-9);
        assert_eq!(p.flipped_faces(), 0);
    }

    #[test]
    fn boundary_on_circle_and_zero_hyperbolic_density() {
        let m = synth::bumps_surface(8, &[synth::Bump::new(0.2, 0.0, 0.4, 0.3)]);
        let p = flatten_to_disk(&m).unwrap();
        let h = p.hyperbolic_density();
        for &v in m.boundary_loop() {
            assert!((p.planar_coords()[v].norm() - 1.0).abs() < 1e-12);
            assert_eq!(h[v], 0.0);
        }
    }

    #[test]
    fn density_lookup() {
        let m = synth::bumps_surface(6, &[synth::Bump::new(0.0, 0.0, 0.3, 0.3)]).normalize_area().unwrap();
        let p = flatten_to_disk(&m).unwrap();
        for f in [0usize, 17, 60] {
            let [a, b, c] = p.faces()[f];
            let z = (p.planar_coords()[a] + p.planar_coords()[b] + p.planar_coords()[c]) / 3.0;
            assert_eq!(p.conformal_density_at(z).unwrap(), p.face_density()[f]);
        }
        assert!(p.conformal_density_at(Complex64::new(1.0, 0.0)).is_ok());
        assert!(p.conformal_density_at(Complex64::new(1.1, 0.0)).is_err());
    }

    #[test]
    fn constant_field_has_no_extrema() {
        let m = synth::height_field(5, |_, _| 0.0);
        let p = flatten_to_disk(&m).unwrap();
        let field = vec![2.0; m.num_vertices()];
        assert!(ExtremaSet::from_field(&p, &field, 8).is_empty());
    }

    #[test]
    fn single_triangle_flattens() {
        let m = synth::grid_mesh(2, 2, 1.0);
        let p = flatten_to_disk(&m).unwrap();
        assert_eq!(p.flipped_faces(), 0);
        assert!(find_extrema(&p, 8).is_empty());
    }
}
