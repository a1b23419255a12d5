//! Candidate enumeration, staged correspondence maps and best-candidate selection.

mod config;
mod export;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{RunConfig, Stage};
pub use export::{DistanceMatrix, PairSummary};

use crate::error::{Error, Result};
use crate::mesh::{TriangleMesh, Vec3};
use crate::mobius::{candidate_set, CandidateAnchor, MobiusTransform};
use crate::moser::{build_disk_mesh, moser_map, resample_density, DiskFEMesh, ElementDensity, MoserMap};
use crate::procrustes::{weighted_energy, EnergyResult, RigidMotion};
use crate::sampling::{farthest_point_sample, SamplingSet};
use crate::tps::{mutually_closest_pairs, ZetaMap};
use crate::uniformize::{find_extrema, flatten_to_disk, DiskParam, ExtremaSet};

/// Extrema beyond this radius are not used as spline controls.
const MAX_CONTROL_RADIUS: f64 = 0.99;
/// Image points further than this from the target triangulation are flagged as clamped.
const CLAMP_TOL: f64 = 1e-6;
const GOLDEN_ITERATIONS: usize = 24;

/// A normalized surface with everything the search needs, computed once.
#[derive(Debug, Clone)]
pub struct PreparedSurface {
    pub name: String,
    pub mesh: TriangleMesh,
    pub param: DiskParam,
    pub extrema: ExtremaSet,
    pub samples: SamplingSet,
    pub sample_planar: Vec<Complex64>,
}

impl PreparedSurface {
    pub fn new(name: impl Into<String>, mesh: &TriangleMesh, cfg: &RunConfig) -> Result<Self> {
        let mesh = mesh.normalize_area()?;
        let param = flatten_to_disk(&mesh)?;
        let extrema = find_extrema(&param, cfg.max_extrema);
        let count = cfg.samples.min(mesh.num_vertices());
        let samples = farthest_point_sample(&mesh, count, cfg.seed_vertex.min(mesh.num_vertices() - 1))?;
        let sample_planar = samples.sample_indices.iter().map(|&i| param.planar_coords()[i]).collect();
        Ok(Self { name: name.into(), mesh, param, extrema, samples, sample_planar })
    }

    /// Lifts a planar point to the surface through the flattening.
    fn lift(&self, w: Complex64) -> (usize, [f64; 3], Vec3, f64) {
        let loc = self.param.locator().locate(w);
        let p = self.param.locator().interpolate(&loc, self.mesh.vertices());
        (loc.face, loc.bary, p, loc.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Samples on the first surface, images on the second.
    Forward,
    /// Samples on the second surface, images on the first.
    Reverse,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageFlags {
    pub tps_applied: bool,
    pub tps_pairs: usize,
    /// Faces of the source flattening folded by the warp; reported, not rejected.
    pub tps_flipped_faces: usize,
    pub moser_applied: bool,
    pub moser_area_residual: Option<f64>,
    /// Why a requested stage was skipped, if it was.
    pub skipped: Vec<String>,
    pub degenerate: bool,
    pub clamped_images: usize,
    /// Candidates were anchored at the disk centers because a surface had no extrema.
    pub fallback_candidates: bool,
}

/// A sampled correspondence with its Procrustes energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    pub source: String,
    pub target: String,
    pub direction: Direction,
    pub sample_indices: Vec<usize>,
    pub sample_points: Vec<[f64; 3]>,
    pub sample_areas: Vec<f64>,
    /// Face of the target containing each image, with barycentric coordinates.
    pub image_faces: Vec<usize>,
    pub image_bary: Vec<[f64; 3]>,
    pub image_points: Vec<[f64; 3]>,
    pub candidate: MobiusTransform,
    pub anchor: Option<CandidateAnchor>,
    pub dpc_value: f64,
    pub rigid_motion: RigidMotion,
    pub stage_flags: StageFlags,
}

fn to_arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn to_vec(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl CorrespondenceMap {
    pub fn len(&self) -> usize {
        self.sample_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_points.is_empty()
    }

    /// Procrustes energy of the stored samples and images.
    pub fn recompute_energy(&self) -> Result<EnergyResult> {
        weighted_energy(
            self.sample_points.iter().map(to_vec).collect(),
            self.image_points.iter().map(to_vec).collect(),
            self.sample_areas.clone(),
        )
    }

    /// `|R q_l - C q_l|` per sample.
    pub fn residuals(&self) -> Vec<f64> {
        self.sample_points
            .iter()
            .zip(&self.image_points)
            .map(|(q, c)| (self.rigid_motion.apply(&to_vec(q)) - to_vec(c)).norm())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Source, target and the target density resampled for the Moser stage.
pub struct PairContext<'a> {
    pub source: &'a PreparedSurface,
    pub target: &'a PreparedSurface,
    pub cfg: &'a RunConfig,
    moser: Option<(&'a DiskFEMesh, ElementDensity)>,
}

impl<'a> PairContext<'a> {
    pub fn new(
        source: &'a PreparedSurface,
        target: &'a PreparedSurface,
        cfg: &'a RunConfig,
        fe: Option<&'a DiskFEMesh>,
    ) -> Self {
        let moser = fe.filter(|_| cfg.has_stage(Stage::Moser)).map(|fe| {
            let param = &target.param;
            let nu = resample_density(fe, |w| param.face_density()[param.locator().locate(w).face], cfg.eps_floor);
            (fe, nu)
        });
        Self { source, target, cfg, moser }
    }
}

/// `phi o zeta o m` in disk coordinates.
pub struct StagedMap<'a> {
    pub mobius: MobiusTransform,
    pub zeta: Option<ZetaMap>,
    pub moser: Option<(MoserMap, &'a DiskFEMesh)>,
    pub flags: StageFlags,
}

impl StagedMap<'_> {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let mut w = self.mobius.apply(z);
        if let Some(zeta) = &self.zeta {
            w = zeta.apply(w);
        }
        if let Some((map, fe)) = &self.moser {
            w = map.eval(fe, w);
        }
        w
    }
}

pub fn build_staged_map<'a>(ctx: &PairContext<'a>, m: MobiusTransform, stages: &[Stage]) -> StagedMap<'a> {
    let cfg = ctx.cfg;
    let mut flags = StageFlags::default();
    let mut zeta = None;
    if stages.contains(&Stage::Tps) {
        let src: Vec<Complex64> = ctx
            .source
            .extrema
            .positions()
            .into_iter()
            .map(|p| m.apply(p))
            .filter(|p| p.norm() <= MAX_CONTROL_RADIUS)
            .collect();
        let dst: Vec<Complex64> =
            ctx.target.extrema.positions().into_iter().filter(|q| q.norm() <= MAX_CONTROL_RADIUS).collect();
        match mutually_closest_pairs(&src, &dst) {
            Ok(pairs) if pairs.len() >= 2 => {
                flags.tps_pairs = pairs.len();
                match ZetaMap::fit(&pairs, cfg.chi_profile) {
                    Ok(z) => {
                        let pushed: Vec<Complex64> = ctx.source.param.planar_coords().iter().map(|&p| m.apply(p)).collect();
                        let faces = if m.is_reversing() {
                            ctx.source.param.faces().iter().map(|&[a, b, c]| [a, c, b]).collect()
                        } else {
                            ctx.source.param.faces().to_vec()
                        };
                        flags.tps_flipped_faces = z.flipped_faces(&pushed, &faces);
                        zeta = Some(z);
                        flags.tps_applied = true;
                    }
                    Err(e) => flags.skipped.push(format!("tps: {e}")),
                }
            }
            Ok(pairs) => flags.skipped.push(format!("tps: only {} mutual pairs", pairs.len())),
            Err(e) => flags.skipped.push(format!("tps: {e}")),
        }
    }

    let mut moser = None;
    if stages.contains(&Stage::Moser) {
        if let Some((fe, nu)) = &ctx.moser {
            let pushed = ctx.source.param.transformed(|z| match &zeta {
                Some(zt) => zt.apply(m.apply(z)),
                None => m.apply(z),
            });
            let mu = resample_density(fe, |w| pushed.face_density()[pushed.locator().locate(w).face], cfg.eps_floor);
            match moser_map(&mu, nu, fe, cfg.n_steps) {
                Ok(map) => {
                    flags.moser_applied = true;
                    flags.moser_area_residual = Some(map.area_residual);
                    moser = Some((map, *fe));
                }
                Err(e) => flags.skipped.push(format!("moser: {e}")),
            }
        }
    }
    StagedMap { mobius: m, zeta, moser, flags }
}

/// Builds the staged map for `m`, pushes the samples through it and evaluates the energy.
pub fn evaluate_candidate(ctx: &PairContext<'_>, m: MobiusTransform, stages: &[Stage]) -> Result<CorrespondenceMap> {
    let staged = build_staged_map(ctx, m, stages);
    let mut flags = staged.flags.clone();
    let n = ctx.source.samples.len();
    let mut image_faces = Vec::with_capacity(n);
    let mut image_bary = Vec::with_capacity(n);
    let mut images = Vec::with_capacity(n);
    for &z in &ctx.source.sample_planar {
        let (face, bary, p, offset) = ctx.target.lift(staged.apply(z));
        if offset > CLAMP_TOL {
            flags.clamped_images += 1;
        }
        image_faces.push(face);
        image_bary.push(bary);
        images.push(p);
    }
    let points: Vec<Vec3> = ctx.source.samples.sample_indices.iter().map(|&i| ctx.source.mesh.vertices()[i]).collect();
    let energy = weighted_energy(points.clone(), images.clone(), ctx.source.samples.voronoi_areas.clone())?;
    flags.degenerate = energy.degenerate;
    Ok(CorrespondenceMap {
        source: ctx.source.name.clone(),
        target: ctx.target.name.clone(),
        direction: Direction::Forward,
        sample_indices: ctx.source.samples.sample_indices.clone(),
        sample_points: points.iter().map(to_arr).collect(),
        sample_areas: ctx.source.samples.voronoi_areas.clone(),
        image_faces,
        image_bary,
        image_points: images.iter().map(to_arr).collect(),
        candidate: m,
        anchor: None,
        dpc_value: energy.dpc,
        rigid_motion: energy.motion,
        stage_flags: flags,
    })
}

fn mobius_energy(ctx: &PairContext<'_>, m: MobiusTransform) -> f64 {
    evaluate_candidate(ctx, m, &[Stage::Mobius]).map_or(f64::INFINITY, |c| c.dpc_value)
}

/// Golden-section search of the angle around a screened candidate.
fn refine_angle(ctx: &PairContext<'_>, anchor: CandidateAnchor, m: MobiusTransform) -> (MobiusTransform, CandidateAnchor) {
    let half_width = std::f64::consts::TAU / ctx.cfg.angles as f64;
    let build = |angle: f64| MobiusTransform::from_point_angle(anchor.p, anchor.q, angle, m.orientation()).ok();
    let eval = |angle: f64| build(angle).map_or(f64::INFINITY, |mm| mobius_energy(ctx, mm));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (anchor.angle - half_width, anchor.angle + half_width);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2);
        }
    }
    let angle = if f1 <= f2 { x1 } else { x2 };
    match build(angle) {
        Some(refined) if mobius_energy(ctx, refined) < mobius_energy(ctx, m) => {
            (refined, CandidateAnchor { angle, ..anchor })
        }
        _ => (m, anchor),
    }
}

/// Screens every Moebius candidate, stages the best few and returns the minimizer.
pub fn best_correspondence(ctx: &PairContext<'_>) -> Result<CorrespondenceMap> {
    let cfg = ctx.cfg;
    let set = candidate_set(&ctx.source.extrema, &ctx.target.extrema, cfg.angles)?;
    debug!(
        "{} -> {}: {} candidates from {}x{} extrema",
        ctx.source.name,
        ctx.target.name,
        set.candidates.len(),
        ctx.source.extrema.len(),
        ctx.target.extrema.len()
    );
    let screened: Vec<f64> = set.candidates.par_iter().map(|&m| mobius_energy(ctx, m)).collect();
    let mut order: Vec<usize> = (0..screened.len()).collect();
    order.sort_by(|&a, &b| screened[a].total_cmp(&screened[b]).then(a.cmp(&b)));
    order.truncate(cfg.screen_keep);

    let mut kept: Vec<(MobiusTransform, CandidateAnchor)> =
        order.iter().map(|&i| (set.candidates[i], set.anchors[i])).collect();
    if cfg.refine_theta {
        kept = kept.into_par_iter().map(|(m, a)| {
            let (m2, a2) = refine_angle(ctx, a, m);
            (m2, a2)
        }).collect();
    }

    let evaluated: Vec<Result<CorrespondenceMap>> = kept
        .par_iter()
        .map(|&(m, anchor)| {
            let mut c = evaluate_candidate(ctx, m, &cfg.stages)?;
            c.anchor = Some(anchor);
            Ok(c)
        })
        .collect();
    let mut best: Option<CorrespondenceMap> = None;
    let mut first_err = None;
    for r in evaluated {
        match r {
            Ok(c) => {
                if best.as_ref().is_none_or(|b| c.dpc_value < b.dpc_value) {
                    best = Some(c);
                }
            }
            Err(e) => {
                warn!("candidate evaluation failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| first_err.unwrap_or_else(|| Error::InvalidArgument("no candidates".into())))?;
    best.stage_flags.fallback_candidates = set.fallback;
    Ok(best)
}

/// Disk mesh for the Moser stage, if the configuration uses it.
pub fn fe_mesh_for(cfg: &RunConfig) -> Result<Option<DiskFEMesh>> {
    if cfg.has_stage(Stage::Moser) {
        Ok(Some(build_disk_mesh(cfg.fe_h)?))
    } else {
        Ok(None)
    }
}

/// Best correspondence between two prepared surfaces, both directions when symmetrizing.
pub fn continuous_procrustes_prepared(
    a: &PreparedSurface,
    b: &PreparedSurface,
    cfg: &RunConfig,
    fe: Option<&DiskFEMesh>,
) -> Result<CorrespondenceMap> {
    let forward = best_correspondence(&PairContext::new(a, b, cfg, fe))?;
    if !cfg.symmetrize {
        return Ok(forward);
    }
    let mut reverse = best_correspondence(&PairContext::new(b, a, cfg, fe))?;
    reverse.direction = Direction::Reverse;
    Ok(if reverse.dpc_value < forward.dpc_value { reverse } else { forward })
}

/// Approximate continuous Procrustes distance between two disk-type surfaces.
pub fn continuous_procrustes(m: &TriangleMesh, n: &TriangleMesh, cfg: &RunConfig) -> Result<CorrespondenceMap> {
    cfg.validate()?;
    let a = PreparedSurface::new("M", m, cfg)?;
    let b = PreparedSurface::new("N", n, cfg)?;
    let fe = fe_mesh_for(cfg)?;
    continuous_procrustes_prepared(&a, &b, cfg, fe.as_ref())
}

/// All pairwise distances; per-pair failures become NaN instead of aborting.
pub fn distance_matrix(meshes: &[(String, TriangleMesh)], cfg: &RunConfig) -> Result<DistanceMatrix> {
    cfg.validate()?;
    if meshes.len() < 2 {
        return Err(Error::InvalidArgument("distance matrix needs at least two meshes".into()));
    }
    let fe = fe_mesh_for(cfg)?;
    let prepared: Vec<std::result::Result<PreparedSurface, String>> = meshes
        .par_iter()
        .map(|(name, mesh)| PreparedSurface::new(name.clone(), mesh, cfg).map_err(|e| e.to_string()))
        .collect();
    let n = meshes.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let summaries: Vec<PairSummary> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let result = match (&prepared[i], &prepared[j]) {
                (Ok(a), Ok(b)) => continuous_procrustes_prepared(a, b, cfg, fe.as_ref()).map_err(|e| e.to_string()),
                (Err(e), _) => Err(format!("{}: {e}", meshes[i].0)),
                (_, Err(e)) => Err(format!("{}: {e}", meshes[j].0)),
            };
            if let Err(e) = &result {
                warn!("pair ({}, {}) failed: {e}", meshes[i].0, meshes[j].0);
            }
            PairSummary::new(i, j, result)
        })
        .collect();
    let mut values = vec![vec![0.0; n]; n];
    for s in &summaries {
        values[s.i][s.j] = s.dpc;
        values[s.j][s.i] = s.dpc;
    }
    Ok(DistanceMatrix { names: meshes.iter().map(|m| m.0.clone()).collect(), values, pairs: summaries })
}

/// Ratio of the singular values of the differential of the correspondence, per face of the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub per_face: Vec<f64>,
    pub max: f64,
    /// Area-weighted mean.
    pub mean: f64,
}

/// Conformal distortion of the staged map for candidate `m`, evaluated on every source vertex.
pub fn conformal_distortion(ctx: &PairContext<'_>, m: MobiusTransform) -> DistortionReport {
    let staged = build_staged_map(ctx, m, &ctx.cfg.stages);
    let src = &ctx.source.mesh;
    let images: Vec<Vec3> =
        ctx.source.param.planar_coords().iter().map(|&z| ctx.target.lift(staged.apply(z)).2).collect();
    let mut per_face = Vec::with_capacity(src.num_faces());
    let (mut acc, mut area) = (0.0, 0.0);
    for (f, &[a, b, c]) in src.faces().iter().enumerate() {
        let v = src.vertices();
        let d = triangle_map_distortion([v[a], v[b], v[c]], [images[a], images[b], images[c]]);
        per_face.push(d);
        let w = src.face_area(f);
        if d.is_finite() {
            acc += w * d;
            area += w;
        }
    }
    let max = per_face.iter().copied().fold(0.0, f64::max);
    DistortionReport { per_face, max, mean: acc / area }
}

/// `sigma_max / sigma_min` of the affine map between two triangles in their own planes.
pub fn triangle_map_distortion(from: [Vec3; 3], to: [Vec3; 3]) -> f64 {
    let frame = |t: [Vec3; 3]| -> Option<nalgebra::Matrix2<f64>> {
        let e1 = t[1] - t[0];
        let e2 = t[2] - t[0];
        let u = e1.try_normalize(1e-300)?;
        let n = e1.cross(&e2);
        let w = n.cross(&e1).try_normalize(1e-300)?;
        Some(nalgebra::Matrix2::new(e1.dot(&u), e2.dot(&u), e1.dot(&w), e2.dot(&w)))
    };
    let (Some(s), Some(t)) = (frame(from), frame(to)) else {
        return f64::INFINITY;
    };
    let Some(s_inv) = s.try_inverse() else {
        return f64::INFINITY;
    };
    let sv = (t * s_inv).singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn small_cfg() -> RunConfig {
        RunConfig { samples: 64, angles: 8, max_extrema: 3, fe_h: 0.15, n_steps: 8, screen_keep: 2, ..Default::default() }
    }

    #[test]
    fn mobius_only_identity_is_exact() {
        let m = synth::bumps_surface(8, &[synth::Bump::new(0.2, 0.1, 0.4, 0.3)]);
        let cfg = small_cfg().mobius_only();
        let p = PreparedSurface::new("m", &m, &cfg).unwrap();
        let ctx = PairContext::new(&p, &p, &cfg, None);
        let c = evaluate_candidate(&ctx, MobiusTransform::identity(), &cfg.stages).unwrap();
        assert!(c.dpc_value < 1e-6, "{}", c.dpc_value);
        assert_eq!(c.len(), 64);
        let re = c.recompute_energy().unwrap();
        assert!((re.dpc - c.dpc_value).abs() < 1e-10);
    }

    #[test]
    fn full_stages_identity_is_small() {
        let m = synth::bumps_surface(8, &[synth::Bump::new(0.2, 0.1, 0.4, 0.3)]);
        let cfg = small_cfg();
        let p = PreparedSurface::new("m", &m, &cfg).unwrap();
        let fe = fe_mesh_for(&cfg).unwrap();
        let ctx = PairContext::new(&p, &p, &cfg, fe.as_ref());
        let c = evaluate_candidate(&ctx, MobiusTransform::identity(), &cfg.stages).unwrap();
        assert!(c.dpc_value < 0.05, "{}", c.dpc_value);
        assert!(c.stage_flags.moser_applied);
    }

    #[test]
    fn barycentric_images_are_convex() {
        let m = synth::bumps_surface(6, &[synth::Bump::new(0.0, 0.3, 0.3, 0.3)]);
        let n = synth::bumps_surface(6, &[synth::Bump::new(0.1, -0.2, 0.5, 0.25)]);
        let c = continuous_procrustes(&m, &n, &small_cfg()).unwrap();
        for b in &c.image_bary {
            assert!(b.iter().all(|&x| x >= -1e-9));
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((c.recompute_energy().unwrap().dpc - c.dpc_value).abs() < 1e-10);
    }

    #[test]
    fn triangle_distortion_of_similarity_is_one() {
        let a = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let b = a.map(|p| Vec3::new(-p.y, p.x, 0.3) * 2.0);
        assert!((triangle_map_distortion(a, b) - 1.0).abs() < 1e-12);
        let stretched = a.map(|p| Vec3::new(3.0 * p.x, p.y, 0.0));
        assert!((triangle_map_distortion(a, stretched) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_needs_two_meshes() {
        let m = synth::bumps_surface(4, &[]);
        assert!(distance_matrix(&[("a".into(), m)], &small_cfg()).is_err());
    }
}
