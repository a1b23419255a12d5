//! Exit criteria. Run with `cargo test --test acceptance`; prints one line per
//! criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surfdist::moser::{build_disk_mesh, flow_point, moser_map, resample_density, solve_neumann_poisson, MoserMap};
use surfdist::pipeline::{
    best_correspondence, conformal_distortion, distance_matrix, fe_mesh_for, PairContext, PreparedSurface,
    RunConfig,
};
use surfdist::procrustes::{discrete_procrustes, optimal_rigid, PointSequence};
use surfdist::sampling::{farthest_point_sample, integrate};
use surfdist::synth::{bumps_surface, synthetic_suite, Bump};
use surfdist::tps::{ChiProfile, ZetaMap};
use surfdist::{continuous_procrustes, RigidMotion, TriangleMesh, Vec3};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let q = Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}

const MIRROR: Matrix3<f64> = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);

fn rigid_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut worst_u, mut worst_res): (f64, f64) = (0.0, 0.0);
    let mut reflections = 0;
    for k in 0..100 {
        let mut u0 = random_rotation(&mut rng);
        if k % 2 == 1 {
            u0 *= MIRROR;
            reflections += 1;
        }
        let t0 = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let truth = RigidMotion::new(u0, t0);
        let x = PointSequence::uniform(random_cloud(&mut rng, 50)).unwrap();
        let y = x.map(|p| truth.apply(p));
        let fit = optimal_rigid(&x, &y).unwrap();
        worst_u = worst_u.max((fit.motion.rotation - u0).norm());
        worst_res = worst_res.max(fit.residual);
    }
    let t = start.elapsed();
    outcome(
        worst_u < 1e-8 && worst_res < 1e-10 && within(t, 1.0),
        format!("max |U*-U0|_F {worst_u:.2e}, max residual {worst_res:.2e}, {reflections} reflections, {:.3}s", t.as_secs_f64()),
    )
}

fn discrete_metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let (mut asym, mut violation): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let n = 12;
        let [x, y, z] = [0, 1, 2].map(|_| PointSequence::uniform(random_cloud(&mut rng, n)).unwrap());
        let d = |a: &PointSequence, b: &PointSequence| discrete_procrustes(a, b).unwrap().distance;
        let (dxy, dyx, dyz, dxz) = (d(&x, &y), d(&y, &x), d(&y, &z), d(&x, &z));
        asym = asym.max((dxy - dyx).abs());
        violation = violation.max(dxz - dxy - dyz);
    }
    let t = start.elapsed();
    outcome(
        asym <= 1e-9 && violation <= 1e-9 && within(t, 5.0),
        format!("max asymmetry {asym:.2e}, max triangle excess {violation:.2e}, {:.3}s", t.as_secs_f64()),
    )
}

fn congruence_gives_zero() -> Outcome {
    let suite = synthetic_suite(25);
    let picks = ["one_bump", "two_bumps", "three_bumps", "dimple", "tilted_bump"];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = RunConfig::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, name) in picks.iter().enumerate() {
        let mesh = &suite.iter().find(|(n, _)| n == name).unwrap().1;
        let reflect = k == picks.len() - 1;
        let mut r = random_rotation(&mut rng);
        if reflect {
            r *= MIRROR;
        }
        let t = Vector3::new(0.7, -0.3, 1.1);
        let mut moved = mesh.map_vertices(|p| r * p + t);
        if reflect {
            moved = moved.flip_orientation();
        }
        let start = Instant::now();
        let map = continuous_procrustes(mesh, &moved, &cfg).unwrap();
        let elapsed = start.elapsed();
        // Both surfaces are centered by normalization, so the expected motion is `r` with no translation.
        let angle = map.rigid_motion.angle_to(&RigidMotion::new(r, Vector3::zeros()));
        let shift = map.rigid_motion.translation.norm();
        let ok = map.dpc_value < 0.05
            && angle.is_some_and(|a| a.to_degrees() < 5.0)
            && shift < 0.02
            && map.candidate.is_reversing() == reflect
            && within(elapsed, 120.0);
        pass &= ok;
        notes.push(format!(
            "{name}{}: d {:.1e} angle {} shift {:.1e} {:.0}s",
            if reflect { " (mirror)" } else { "" },
            map.dpc_value,
            angle.map_or("orientation mismatch".to_string(), |a| format!("{:.2e}deg", a.to_degrees())),
            shift,
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, notes.join("; "))
}

/// Smooth density pairs on the unit disk.
fn manufactured_mu(z: Complex64) -> f64 {
    1.0 / PI + 0.1 * z.re
}

fn manufactured_nu(z: Complex64) -> f64 {
    1.0 / PI - 0.1 * z.re
}

fn stress_mu(z: Complex64) -> f64 {
    1.0 + 0.5 * z.re + 0.2 * z.im * z.im
}

fn stress_nu(z: Complex64) -> f64 {
    1.0 + 0.3 * (3.0 * z.norm_sqr()).cos() - 0.3 * z.im
}

fn moser_levels(mu: fn(Complex64) -> f64, nu: fn(Complex64) -> f64) -> Vec<(f64, usize, MoserMap, Duration)> {
    [(0.12, 8), (0.06, 16), (0.03, 32)]
        .into_iter()
        .map(|(h, n)| {
            let start = Instant::now();
            let mesh = build_disk_mesh(h).unwrap();
            let m = resample_density(&mesh, mu, 1e-3);
            let v = resample_density(&mesh, nu, 1e-3);
            let map = moser_map(&m, &v, &mesh, n).unwrap();
            (h, n, map, start.elapsed())
        })
        .collect()
}

fn describe_levels(levels: &[(f64, usize, MoserMap, Duration)]) -> String {
    levels
        .iter()
        .map(|(h, n, m, t)| {
            format!(
                "h {h} n {n}: r_AP {:.2}% drift {:.2}% {:.1}s",
                100.0 * m.area_residual,
                100.0 * m.lambda_drift,
                t.as_secs_f64()
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn levels_pass(levels: &[(f64, usize, MoserMap, Duration)]) -> bool {
    let finest = &levels[levels.len() - 1].2;
    let decreasing = levels.windows(2).all(|w| w[1].2.area_residual < w[0].2.area_residual && w[1].2.lambda_drift < w[0].2.lambda_drift);
    let timely = levels.iter().all(|l| within(l.3, 60.0));
    finest.area_residual < 0.05 && finest.lambda_drift < 0.05 && decreasing && timely
}

fn moser_correctness() -> (Outcome, String) {
    let levels = moser_levels(manufactured_mu, manufactured_nu);

    let mesh = build_disk_mesh(0.03).unwrap();
    let mu = resample_density(&mesh, stress_mu, 1e-3);
    let same = moser_map(&mu, &mu.clone(), &mesh, 32).unwrap();
    let moved = mesh.vertices().iter().zip(&same.images).map(|(z, w)| (z - w).norm()).fold(0.0, f64::max);
    let identity_ok = moved < 1e-10 && same.area_residual < 1e-10;

    let stress = moser_levels(stress_mu, stress_nu);
    let stress_line = format!(
        "stronger pair (not gated): {}; r_AP < 5% {}",
        describe_levels(&stress),
        if stress[2].2.area_residual < 0.05 { "met" } else { "not met" }
    );
    (
        outcome(
            levels_pass(&levels) && identity_ok,
            format!("{}; mu = nu moves vertices by {moved:.1e}", describe_levels(&levels)),
        ),
        stress_line,
    )
}

fn boundary_invariance() -> Outcome {
    let mesh = build_disk_mesh(0.05).unwrap();
    let mu = resample_density(&mesh, stress_mu, 1e-3);
    let nu = resample_density(&mesh, stress_nu, 1e-3);
    let field = solve_neumann_poisson(&mesh, &mu, &nu).unwrap();
    let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, 0.0);
    let mut max_shift: f64 = 0.0;
    for k in 0..200 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.37) / 200.0);
        let w = flow_point(&mesh, &field, &mu, &nu, z, 32).unwrap();
        lo = lo.min(w.norm());
        hi = hi.max(w.norm());
        max_shift = max_shift.max((w - z).norm());
    }
    outcome(
        lo >= 1.0 - 1e-6 && hi <= 1.0,
        format!("|Phi_1| in [{lo:.15}, {hi:.15}], largest boundary displacement {max_shift:.3}"),
    )
}

/// Degree-5 seven-point rule on every face of the piecewise-linear surface.
fn face_quadrature(mesh: &TriangleMesh, f: impl Fn(&Vec3) -> f64) -> f64 {
    let a1 = 0.059_715_871_789_770;
    let b1 = 0.470_142_064_105_115;
    let a2 = 0.797_426_985_353_087;
    let b2 = 0.101_286_507_323_456;
    let w0 = 0.225;
    let w1 = 0.132_394_152_788_506;
    let w2 = 0.125_939_180_544_827;
    let mut rule = vec![([1.0 / 3.0; 3], w0)];
    for (a, b, w) in [(a1, b1, w1), (a2, b2, w2)] {
        rule.push(([a, b, b], w));
        rule.push(([b, a, b], w));
        rule.push(([b, b, a], w));
    }
    let v = mesh.vertices();
    (0..mesh.num_faces())
        .map(|fi| {
            let [i, j, k] = mesh.faces()[fi];
            let s: f64 = rule.iter().map(|(l, w)| w * f(&(v[i] * l[0] + v[j] * l[1] + v[k] * l[2]))).sum();
            s * mesh.face_area(fi)
        })
        .sum()
}

fn rectangle_rule_convergence() -> Outcome {
    let mesh = bumps_surface(25, &[Bump::new(0.2, 0.1, 0.5, 0.25), Bump::new(-0.35, -0.2, 0.3, 0.2)])
        .normalize_area()
        .unwrap();
    let f = |p: &Vec3| (1.3 * p.x).exp() * (2.0 * p.y).cos() + 2.0 * p.z;
    let exact = face_quadrature(&mesh, f);
    let mut pts = Vec::new();
    for l in [50, 100, 200, 400] {
        let s = farthest_point_sample(&mesh, l, 0).unwrap();
        let approx: f64 = integrate(&mesh, &s, |v| f(&mesh.vertices()[v])).unwrap();
        pts.push((s.fill_distance, (approx - exact).abs()));
    }
    let k = pts.iter().map(|(x, y)| x * y).sum::<f64>() / pts.iter().map(|(x, _)| x * x).sum::<f64>();
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - k * x).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|(_, y)| y * y).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let listing = pts.iter().map(|(x, y)| format!("({x:.3}, {y:.2e})")).collect::<Vec<_>>().join(" ");
    outcome(r2 > 0.9, format!("slope {k:.3e}, R^2 {r2:.3}; (fill distance, |error|): {listing}"))
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &p in &idx[i..=j] {
                r[p] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var_a: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    let var_b: f64 = rb.iter().map(|y| (y - mean).powi(2)).sum();
    cov / (var_a * var_b).sqrt()
}

fn distortion_trend() -> Outcome {
    let base = [Bump::new(0.2, 0.1, 0.5, 0.25)];
    let cfg = RunConfig::default();
    let fe = fe_mesh_for(&cfg).unwrap();
    let m = PreparedSurface::new("M", &bumps_surface(25, &base), &cfg).unwrap();
    let start = Instant::now();
    let (mut dpc, mut dist) = (Vec::new(), Vec::new());
    for s in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let mut bumps = base.to_vec();
        bumps.push(Bump::new(-0.35, -0.25, s, 0.2));
        let n = PreparedSurface::new("N", &bumps_surface(25, &bumps), &cfg).unwrap();
        let ctx = PairContext::new(&m, &n, &cfg, fe.as_ref());
        let map = best_correspondence(&ctx).unwrap();
        let report = conformal_distortion(&ctx, map.candidate);
        dpc.push(map.dpc_value);
        dist.push(report.max);
    }
    let rho = spearman(&dpc, &dist);
    let listing = dpc.iter().zip(&dist).map(|(d, k)| format!("({d:.3}, {k:.2})")).collect::<Vec<_>>().join(" ");
    outcome(
        rho > 0.9,
        format!("Spearman rho {rho:.3}; (d, max distortion): {listing}; {:.0}s", start.elapsed().as_secs_f64()),
    )
}

fn tps_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_fit: f64 = 0.0;
    let mut max_radius: f64 = 0.0;
    let mut fits = 0;
    for _ in 0..20 {
        let n = rng.gen_range(3..9);
        let mut pairs: Vec<(Complex64, Complex64)> = Vec::new();
        while pairs.len() < n {
            let p = Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..2.0 * PI));
            if pairs.iter().any(|(q, _)| (p - q).norm() < 0.1) {
                continue;
            }
            let d = Complex64::from_polar(rng.gen_range(0.0..0.2), rng.gen_range(0.0..2.0 * PI));
            let q = p + d;
            pairs.push((p, if q.norm() < 0.95 { q } else { p }));
        }
        let zeta = ZetaMap::fit(&pairs, ChiProfile::Atanh).unwrap();
        fits += 1;
        for &(p, q) in &pairs {
            worst_fit = worst_fit.max((zeta.apply(p) - q).norm());
        }
        for _ in 0..500 {
            let z = Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
            max_radius = max_radius.max(zeta.apply(z).norm());
        }
    }
    outcome(
        worst_fit < 1e-8 && max_radius <= 1.0,
        format!("{fits} warps, control residual {worst_fit:.2e}, largest image radius over 10^4 points {max_radius:.15}"),
    )
}

fn matrix_throughput() -> Outcome {
    let suite = synthetic_suite(25);
    let vertices = suite[0].1.num_vertices();
    let start = Instant::now();
    let m = distance_matrix(&suite, &RunConfig::default()).unwrap();
    let t = start.elapsed();
    let n = m.len();
    let nan = m.values.iter().flatten().filter(|v| v.is_nan()).count();
    let symmetric = (0..n).all(|i| (0..n).all(|j| m.get(i, j).to_bits() == m.get(j, i).to_bits()));
    let threads = rayon::current_num_threads();
    outcome(
        n == 10 && nan == 0 && symmetric && within(t, 1800.0),
        format!("{n}x{n} over {vertices}-vertex meshes in {:.1}s on {threads} thread(s), {nan} NaN, symmetric {symmetric}", t.as_secs_f64()),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut report = |k: usize, name: &str, o: Outcome| {
        if !o.pass {
            failed += 1;
        }
        println!("criterion {k} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "rigid recovery", rigid_recovery());
    report(2, "discrete metric axioms", discrete_metric_axioms());
    report(3, "congruent copies", congruence_gives_zero());
    let (moser, stress) = moser_correctness();
    report(4, "area-preserving flow", moser);
    println!("  {stress}");
    report(5, "boundary invariance", boundary_invariance());
    report(6, "rectangle rule", rectangle_rule_convergence());
    report(7, "distortion trend", distortion_trend());
    report(8, "warp exactness", tps_exactness());
    report(9, "matrix throughput", matrix_throughput());
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
