//! Edge-graph geodesics, farthest point sampling and rectangle-rule integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra that only relaxes vertices whose distance improves.
///
/// `dist` holds current distances (infinity when unreached) and is updated in place;
/// `label[v]` is set to `tag` wherever the new sources win.
fn relax_from(
    graph: &[Vec<(usize, f64)>],
    sources: &[usize],
    tag: usize,
    dist: &mut [f64],
    label: &mut [usize],
) {
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        label[s] = tag;
        heap.push(HeapItem { dist: 0.0, vertex: s });
    }
    while let Some(HeapItem { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in &graph[v] {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                label[u] = tag;
                heap.push(HeapItem { dist: nd, vertex: u });
            }
        }
    }
}

/// Shortest-path distances on the edge graph from `source` to every vertex.
pub fn geodesic_distances(mesh: &TriangleMesh, source: usize) -> Result<Vec<f64>> {
    if source >= mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!("vertex {source} out of range")));
    }
    let graph = mesh.edge_graph();
    let mut dist = vec![f64::INFINITY; mesh.num_vertices()];
    let mut label = vec![0; mesh.num_vertices()];
    relax_from(&graph, &[source], 0, &mut dist, &mut label);
    Ok(dist)
}

/// Edge-graph geodesic distance between two vertices; an upper bound on the surface geodesic.
pub fn geodesic_distance(mesh: &TriangleMesh, a: usize, b: usize) -> Result<f64> {
    if b >= mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!("vertex {b} out of range")));
    }
    let d = geodesic_distances(mesh, a)?[b];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NotDisk("mesh is disconnected".into()))
    }
}

/// Integration samples on a mesh: vertex indices with the areas of their cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSet {
    pub sample_indices: Vec<usize>,
    pub voronoi_areas: Vec<f64>,
    pub fill_distance: f64,
    /// Number of vertices of the mesh the set was built on.
    pub num_mesh_vertices: usize,
}

impl SamplingSet {
    pub fn len(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indices.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.voronoi_areas.iter().sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn check(&self, mesh: &TriangleMesh) -> Result<()> {
        if self.num_mesh_vertices != mesh.num_vertices()
            || self.sample_indices.iter().any(|&i| i >= mesh.num_vertices())
            || self.voronoi_areas.len() != self.sample_indices.len()
        {
            return Err(Error::InvalidArgument("sampling set does not belong to this mesh".into()));
        }
        Ok(())
    }
}

/// Greedy farthest point sampling seeded at `seed_vertex`.
///
/// Each face's area is split in thirds among the cells owning its corners,
/// which keeps every cell area strictly positive.
pub fn farthest_point_sample(mesh: &TriangleMesh, count: usize, seed_vertex: usize) -> Result<SamplingSet> {
    let n = mesh.num_vertices();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!("sample count {count} outside 1..={n}")));
    }
    if seed_vertex >= n {
        return Err(Error::InvalidArgument(format!("seed vertex {seed_vertex} out of range")));
    }
    let graph = mesh.edge_graph();
    let mut dist = vec![f64::INFINITY; n];
    let mut label = vec![usize::MAX; n];
    let mut samples = Vec::with_capacity(count);
    let mut next = seed_vertex;
    loop {
        samples.push(next);
        relax_from(&graph, &[next], samples.len() - 1, &mut dist, &mut label);
        if samples.len() == count {
            break;
        }
        // ties broken by lowest index for determinism
        next = (0..n).fold(0, |best, v| if dist[v] > dist[best] { v } else { best });
    }
    let fill_distance = dist.iter().copied().fold(0.0, f64::max);
    if !fill_distance.is_finite() {
        return Err(Error::NotDisk("mesh is disconnected".into()));
    }

    let mut voronoi_areas = vec![0.0; count];
    for (f, face) in mesh.faces().iter().enumerate() {
        let third = mesh.face_area(f) / 3.0;
        for &v in face {
            voronoi_areas[label[v]] += third;
        }
    }
    Ok(SamplingSet {
        sample_indices: samples,
        voronoi_areas,
        // All vertices sampled: every vertex is its own nearest sample.
        fill_distance: if count == n { mesh.max_edge_length() * 0.5 } else { fill_distance },
        num_mesh_vertices: n,
    })
}

/// Rectangle rule: sum of `f(q_l) * area_l` over the samples.
pub fn integrate<T, F>(mesh: &TriangleMesh, samples: &SamplingSet, f: F) -> Result<T>
where
    T: Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(usize) -> T,
{
    samples.check(mesh)?;
    let mut terms = samples.sample_indices.iter().zip(&samples.voronoi_areas).map(|(&q, &a)| f(q) * a);
    let first = terms.next().ok_or_else(|| Error::InvalidArgument("empty sampling set".into()))?;
    Ok(terms.fold(first, |acc, t| acc + t))
}
