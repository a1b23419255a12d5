//! Synthetic disk-type surfaces for tests, benchmarks and the CLI demo suite.

use std::f64::consts::PI;

use crate::mesh::{TriangleMesh, Vec3};

/// Planar triangulation of the unit disk by concentric rings.
///
/// Ring `i` (1..=n) has `6 i` vertices at radius `i / n`; vertex 0 is the center.
/// The outermost ring lies exactly on the unit circle.
pub fn ring_disk(n_rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    assert!(n_rings >= 1);
    let mut pts = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for i in 1..=n_rings {
        ring_start.push(pts.len());
        let r = i as f64 / n_rings as f64;
        let count = 6 * i;
        for j in 0..count {
            let a = 2.0 * PI * j as f64 / count as f64;
            pts.push([r * a.cos(), r * a.sin()]);
        }
    }
    let mut faces = Vec::with_capacity(6 * n_rings * n_rings);
    for k in 0..6 {
        faces.push([0, 1 + k, 1 + (k + 1) % 6]);
    }
    for i in 1..n_rings {
        let (sa, na) = (ring_start[i], 6 * i);
        let (sb, nb) = (ring_start[i + 1], 6 * (i + 1));
        let (mut j, mut k) = (0, 0);
        while j < na || k < nb {
            let next_a = (j + 1) as f64 / na as f64;
            let next_b = (k + 1) as f64 / nb as f64;
            let a = sa + j % na;
            let b = sb + k % nb;
            if k < nb && (j >= na || next_b <= next_a) {
                faces.push([a, b, sb + (k + 1) % nb]);
                k += 1;
            } else {
                faces.push([a, b, sa + (j + 1) % na]);
                j += 1;
            }
        }
    }
    (pts, faces)
}

/// Number of vertices produced by [`ring_disk`].
pub fn ring_disk_vertex_count(n_rings: usize) -> usize {
    1 + 3 * n_rings * (n_rings + 1)
}

/// Regular grid on `[0, side]^2` with `nx * ny` vertices.
pub fn grid_mesh(nx: usize, ny: usize, side: f64) -> TriangleMesh {
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push(Vec3::new(
                side * i as f64 / (nx - 1) as f64,
                side * j as f64 / (ny - 1) as f64,
                0.0,
            ));
        }
    }
    let mut f = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            f.push([a, a + 1, a + nx + 1]);
            f.push([a, a + nx + 1, a + nx]);
        }
    }
    TriangleMesh::new(v, f).expect("grid mesh is a valid disk")
}

/// Gaussian bump `height * exp(-|p - center|^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub height: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(cx: f64, cy: f64, height: f64, width: f64) -> Self {
        Self { center: [cx, cy], height, width }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        self.height * (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp()
    }
}

/// Graph of `height(x, y)` over the ring disk.
pub fn height_field(n_rings: usize, height: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    let (pts, faces) = ring_disk(n_rings);
    let v = pts.iter().map(|&[x, y]| Vec3::new(x, y, height(x, y))).collect();
    TriangleMesh::new(v, faces).expect("height field over a disk is a valid disk")
}

pub fn bumps_surface(n_rings: usize, bumps: &[Bump]) -> TriangleMesh {
    height_field(n_rings, |x, y| bumps.iter().map(|b| b.eval(x, y)).sum())
}

/// Spherical cap of polar half-angle `max_angle` (radians) on the unit sphere.
pub fn spherical_cap(n_rings: usize, max_angle: f64) -> TriangleMesh {
    let (pts, faces) = ring_disk(n_rings);
    let v = pts
        .iter()
        .map(|&[x, y]| {
            let r = (x * x + y * y).sqrt();
            let phi = y.atan2(x);
            let a = r * max_angle;
            Vec3::new(a.sin() * phi.cos(), a.sin() * phi.sin(), a.cos())
        })
        .collect();
    TriangleMesh::new(v, faces).expect("spherical cap is a valid disk")
}

/// A fixed collection of ten smooth, mutually distinct disk surfaces.
pub fn synthetic_suite(n_rings: usize) -> Vec<(String, TriangleMesh)> {
    let mut out = vec![
        ("one_bump".to_string(), bumps_surface(n_rings, &[Bump::new(0.2, 0.1, 0.5, 0.25)])),
        (
            "two_bumps".to_string(),
            bumps_surface(n_rings, &[Bump::new(-0.35, 0.0, 0.45, 0.2), Bump::new(0.35, 0.1, 0.3, 0.2)]),
        ),
        (
            "three_bumps".to_string(),
            bumps_surface(
                n_rings,
                &[Bump::new(-0.3, -0.3, 0.35, 0.18), Bump::new(0.35, -0.2, 0.3, 0.2), Bump::new(0.0, 0.4, 0.4, 0.22)],
            ),
        ),
        ("cap".to_string(), spherical_cap(n_rings, 1.0)),
        (
            "saddle".to_string(),
            height_field(n_rings, |x, y| 0.35 * (x * x - y * y) + 0.25 * Bump::new(0.3, 0.3, 1.0, 0.2).eval(x, y)),
        ),
        (
            "ridge".to_string(),
            height_field(n_rings, |x, y| 0.3 * (-(y - 0.2 * x).powi(2) / 0.05).exp() + 0.1 * x),
        ),
        (
            "dimple".to_string(),
            bumps_surface(n_rings, &[Bump::new(0.1, -0.2, -0.45, 0.25), Bump::new(-0.4, 0.3, 0.2, 0.15)]),
        ),
        (
            "wave".to_string(),
            height_field(n_rings, |x, y| 0.12 * (2.5 * x).sin() * (2.0 * y + 0.3).cos()),
        ),
    ];
    let cap = spherical_cap(n_rings, 0.7);
    out.push((
        "bumpy_cap".to_string(),
        cap.map_vertices(|p| p + Vec3::new(0.0, 0.0, Bump::new(0.25, 0.0, 0.25, 0.15).eval(p.x, p.y))),
    ));
    out.push((
        "tilted_bump".to_string(),
        bumps_surface(n_rings, &[Bump::new(-0.1, 0.3, 0.6, 0.3), Bump::new(0.4, -0.35, 0.15, 0.12)]),
    ));
    out
}
