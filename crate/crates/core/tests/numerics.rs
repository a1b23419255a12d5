use std::f64::consts::PI;

use num_complex::Complex64;
use surfdist::mobius::{MobiusTransform, Orientation};
use surfdist::moser::{build_disk_mesh, solve_poisson_vertex_rhs};
use surfdist::sampling::{farthest_point_sample, geodesic_distances, integrate};
use surfdist::synth::{bumps_surface, grid_mesh, Bump};
use surfdist::TriangleMesh;

/// `u = r^2 - r^4 / 2` has zero normal derivative on the unit circle.
fn exact_u(z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    r2 - r2 * r2 / 2.0
}

fn poisson_errors(h: f64) -> (f64, f64) {
    let mesh = build_disk_mesh(h).unwrap();
    let rhs: Vec<f64> = mesh.vertices().iter().map(|z| 4.0 - 8.0 * z.norm_sqr()).collect();
    let field = solve_poisson_vertex_rhs(&mesh, &rhs).unwrap();

    let mean = |vals: &dyn Fn(usize) -> f64| {
        let total: f64 = mesh.face_areas().iter().sum();
        mesh.faces()
            .iter()
            .zip(mesh.face_areas())
            .map(|(f, a)| a * f.iter().map(|&v| vals(v)).sum::<f64>() / 3.0)
            .sum::<f64>()
            / total
    };
    let z = mesh.vertices();
    let shift = mean(&|v| field.potential[v]) - mean(&|v| exact_u(z[v]));
    let value_err = mean(&|v| (field.potential[v] - shift - exact_u(z[v])).powi(2)).sqrt();
    let grad_err = (0..z.len())
        .map(|v| {
            let exact = z[v] * (2.0 - 2.0 * z[v].norm_sqr());
            (field.vertex_velocity(v) - exact).norm()
        })
        .fold(0.0, f64::max);
    (value_err, grad_err)
}

#[test]
fn neumann_poisson_converges_quadratically() {
    let levels: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| poisson_errors(h)).collect();
    for w in levels.windows(2) {
        let value_order = (w[0].0 / w[1].0).log2();
        let grad_order = (w[0].1 / w[1].1).log2();
        assert!(value_order > 1.8, "value order {value_order} from {levels:?}");
        assert!(grad_order > 0.8, "gradient order {grad_order} from {levels:?}");
    }
    assert!(levels[2].0 < 1e-4);
}

/// All-pairs shortest paths over the face edges, independent of the mesh adjacency code.
fn floyd_warshall(mesh: &TriangleMesh) -> Vec<Vec<f64>> {
    let n = mesh.num_vertices();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let len = (mesh.vertices()[a] - mesh.vertices()[b]).norm();
            d[a][b] = d[a][b].min(len);
            d[b][a] = d[b][a].min(len);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn bumpy_grid() -> TriangleMesh {
    grid_mesh(7, 6, 1.0).map_vertices(|p| {
        let mut q = *p;
        q.z = 0.3 * (3.0 * p.x).sin() * (2.0 * p.y).cos();
        q
    })
}

#[test]
fn geodesics_match_brute_force() {
    let mesh = bumpy_grid();
    let all = floyd_warshall(&mesh);
    for s in [0, 5, mesh.num_vertices() / 2, mesh.num_vertices() - 1] {
        let d = geodesic_distances(&mesh, s).unwrap();
        for (a, b) in d.iter().zip(&all[s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn farthest_point_sampling_matches_brute_force() {
    let mesh = bumpy_grid();
    let all = floyd_warshall(&mesh);
    let n = mesh.num_vertices();
    let count = 12;
    let set = farthest_point_sample(&mesh, count, 3).unwrap();

    let mut chosen = vec![3];
    let mut min_d: Vec<f64> = all[3].clone();
    while chosen.len() < count {
        let mut best = 0;
        for v in 1..n {
            if min_d[v] > min_d[best] {
                best = v;
            }
        }
        chosen.push(best);
        for v in 0..n {
            min_d[v] = min_d[v].min(all[best][v]);
        }
    }
    assert_eq!(set.sample_indices, chosen);
    let fill = min_d.iter().copied().fold(0.0, f64::max);
    assert!((set.fill_distance - fill).abs() < 1e-12);
    assert!((set.total_area() - mesh.total_area()).abs() < 1e-12);
    assert!(set.voronoi_areas.iter().all(|&a| a > 0.0));
}

#[test]
fn rectangle_rule_integrates_linear_functions_better_with_more_samples() {
    let mesh = bumps_surface(12, &[Bump::new(0.1, -0.2, 0.4, 0.35)]).normalize_area().unwrap();
    let exact: f64 = (0..mesh.num_faces()).map(|f| mesh.face_area(f) * mesh.face_barycenter(f).z).sum();
    let err = |l: usize| {
        let s = farthest_point_sample(&mesh, l, 0).unwrap();
        let v: f64 = integrate(&mesh, &s, |v| mesh.vertices()[v].z).unwrap();
        (v - exact).abs()
    };
    assert!(err(mesh.num_vertices()) < 1e-12);
    assert!(err(200) < err(20));
}

/// Midpoint rule in polar coordinates over the unit disk.
fn disk_integral(f: impl Fn(Complex64) -> f64) -> f64 {
    let (nr, nt) = (1500, 512);
    let (dr, dt) = (1.0 / nr as f64, 2.0 * PI / nt as f64);
    let mut sum = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..nt {
            let t = (j as f64 + 0.5) * dt;
            sum += f(Complex64::from_polar(r, t)) * r;
        }
    }
    sum * dr * dt
}

#[test]
fn mobius_maps_preserve_disk_area() {
    for (a, theta, o) in [
        (Complex64::new(0.0, 0.0), 0.3, Orientation::Preserving),
        (Complex64::new(0.3, -0.2), 1.1, Orientation::Preserving),
        (Complex64::new(-0.5, 0.1), 4.0, Orientation::Reversing),
    ] {
        let m = MobiusTransform::new(theta, a, o).unwrap();
        let area = disk_integral(|z| m.derivative_modulus_sq(z));
        assert!((area - PI).abs() < 1e-5, "area {area} for a = {a}");
    }
}

#[test]
fn mobius_derivative_matches_finite_differences() {
    let m = MobiusTransform::new(0.7, Complex64::new(0.4, 0.25), Orientation::Preserving).unwrap();
    let eps = 1e-6;
    for z in [Complex64::new(0.1, 0.2), Complex64::new(-0.6, 0.3), Complex64::new(0.0, -0.9)] {
        let d = (m.apply(z + eps) - m.apply(z - eps)) / (2.0 * eps);
        assert!((d.norm_sqr() - m.derivative_modulus_sq(z)).abs() < 1e-6);
    }
}
