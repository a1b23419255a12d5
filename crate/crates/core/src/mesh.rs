//! Embedded triangle meshes of disk topology.

use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative area below which a face is treated as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-14;

/// A consistently oriented 2-manifold triangle mesh with exactly one boundary loop.
///
/// Construction validates all topological invariants, so every `TriangleMesh`
/// in circulation is a disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    boundary_loop: Vec<usize>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if faces.is_empty() {
            return Err(Error::NotDisk("mesh has no faces".into()));
        }
        let mut used = vec![false; n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::InvalidArgument(format!(
                        "face {fi} references vertex {v} but only {n} vertices exist"
                    )));
                }
                used[v] = true;
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(fi));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::NonManifold(format!("vertex {v} is not referenced by any face")));
        }

        let scale = bbox_diagonal(&vertices).powi(2);
        for (fi, f) in faces.iter().enumerate() {
            let a = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if !(a > DEGENERATE_REL_AREA * scale) {
                return Err(Error::DegenerateFace(fi));
            }
        }

        let boundary_loop = check_topology(n, &faces)?;
        Ok(Self { vertices, faces, boundary_loop })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Boundary vertices in the order induced by face orientation.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        let mut edges = HashSet::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn face_barycenter(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Surface-measure centroid: exact integral of x over the piecewise-linear surface.
    pub fn centroid(&self) -> Vec3 {
        let mut acc = Vec3::zeros();
        let mut area = 0.0;
        for f in 0..self.faces.len() {
            let a = self.face_area(f);
            acc += self.face_barycenter(f) * a;
            area += a;
        }
        acc / area
    }

    /// Recenters at the surface centroid and scales uniformly to unit area.
    pub fn normalize_area(&self) -> Result<Self> {
        let area = self.total_area();
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::ZeroArea);
        }
        let c = self.centroid();
        let s = area.sqrt().recip();
        Ok(self.map_vertices(|p| (p - c) * s))
    }

    /// Applies `f` to every vertex, keeping connectivity.
    ///
    /// The caller is responsible for not collapsing faces.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
            boundary_loop: self.boundary_loop.clone(),
        }
    }

    /// Same surface with every face winding reversed (and hence the boundary loop).
    pub fn flip_orientation(&self) -> Self {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        let mut boundary_loop: Vec<usize> = self.boundary_loop.clone();
        boundary_loop[1..].reverse();
        Self { vertices: self.vertices.clone(), faces, boundary_loop }
    }

    /// Per-vertex neighbor lists with Euclidean edge lengths.
    pub fn edge_graph(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let len = (self.vertices[a] - self.vertices[b]).norm();
                if !adj[a].iter().any(|&(n, _)| n == b) {
                    adj[a].push((b, len));
                }
                if !adj[b].iter().any(|&(n, _)| n == a) {
                    adj[b].push((a, len));
                }
            }
        }
        adj
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_graph()
            .iter()
            .flat_map(|n| n.iter().map(|&(_, l)| l))
            .fold(0.0, f64::max)
    }

    /// Per-vertex flags, true on the boundary loop.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for &v in &self.boundary_loop {
            flags[v] = true;
        }
        flags
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn bbox_diagonal(vertices: &[Vec3]) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}

/// Checks manifoldness, orientation and disk topology; returns the boundary loop.
fn check_topology(n: usize, faces: &[[usize; 3]]) -> Result<Vec<usize>> {
    let mut directed: HashSet<(usize, usize)> = HashSet::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let e = (f[k], f[(k + 1) % 3]);
            if !directed.insert(e) {
                return Err(Error::NonManifold(format!(
                    "directed edge ({}, {}) repeated at face {fi}: inconsistent orientation or edge shared by more than two faces",
                    e.0, e.1
                )));
            }
        }
    }

    // One-ring link of each vertex must be a single path or a single cycle.
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for f in faces {
        for k in 0..3 {
            link[f[k]].push((f[(k + 1) % 3], f[(k + 2) % 3]));
        }
    }
    for (v, edges) in link.iter().enumerate() {
        let next: HashMap<usize, usize> = edges.iter().copied().collect();
        let targets: HashSet<usize> = edges.iter().map(|e| e.1).collect();
        let start = edges
            .iter()
            .map(|e| e.0)
            .find(|s| !targets.contains(s))
            .unwrap_or(edges[0].0);
        let mut cur = start;
        let mut steps = 0;
        while let Some(&nx) = next.get(&cur) {
            steps += 1;
            cur = nx;
            if cur == start || steps > edges.len() {
                break;
            }
        }
        if steps != edges.len() {
            return Err(Error::NonManifold(format!("vertex {v} is not a manifold vertex")));
        }
    }

    let mut boundary_next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) && boundary_next.insert(a, b).is_some() {
            return Err(Error::NonManifold(format!("boundary pinches at vertex {a}")));
        }
    }
    if boundary_next.is_empty() {
        return Err(Error::NotDisk("surface has no boundary".into()));
    }
    let start = *boundary_next.keys().min().unwrap();
    let mut boundary = vec![start];
    let mut cur = boundary_next[&start];
    while cur != start {
        boundary.push(cur);
        cur = *boundary_next
            .get(&cur)
            .ok_or_else(|| Error::NonManifold(format!("open boundary chain at vertex {cur}")))?;
        if boundary.len() > boundary_next.len() {
            return Err(Error::NonManifold("boundary does not close".into()));
        }
    }
    if boundary.len() != boundary_next.len() {
        return Err(Error::NotDisk("more than one boundary loop".into()));
    }

    let undirected = directed.iter().filter(|&&(a, b)| a < b || !directed.contains(&(b, a))).count();
    let chi = n as i64 - undirected as i64 + faces.len() as i64;
    if chi != 1 {
        return Err(Error::NotDisk(format!("Euler characteristic is {chi}, expected 1")));
    }

    // Connectivity: a disk plus a closed torus also has chi = 1 and one boundary.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &directed {
        adj[a].push(b);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    if count != n {
        return Err(Error::NotDisk("mesh is not connected".into()));
    }
    Ok(boundary)
}
