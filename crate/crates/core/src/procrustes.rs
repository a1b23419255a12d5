//! Procrustes distances and closed-form optimal rigid motions (reflections allowed).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{TriangleMesh, Vec3};
use crate::sampling::SamplingSet;

/// Relative singular-value threshold below which the cross-covariance is treated as rank deficient.
const DEGENERATE_SV_RATIO: f64 = 1e-10;

/// `x -> U x + t` with `U` orthogonal (det +1 or -1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "MotionRepr", from = "MotionRepr")]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct MotionRepr {
    /// Row-major 3x3.
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl From<RigidMotion> for MotionRepr {
    fn from(m: RigidMotion) -> Self {
        let mut rotation = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                rotation[3 * r + c] = m.rotation[(r, c)];
            }
        }
        Self { rotation, translation: [m.translation.x, m.translation.y, m.translation.z] }
    }
}

impl From<MotionRepr> for RigidMotion {
    fn from(r: MotionRepr) -> Self {
        Self {
            rotation: Matrix3::from_row_slice(&r.rotation),
            translation: Vector3::from_column_slice(&r.translation),
        }
    }
}

impl RigidMotion {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }

    pub fn is_reflection(&self) -> bool {
        self.determinant() < 0.0
    }

    /// Angle in radians of the rotation `U_self^T U_other`; `None` when the orientations differ.
    pub fn angle_to(&self, other: &Self) -> Option<f64> {
        if self.is_reflection() != other.is_reflection() {
            return None;
        }
        let r = self.rotation.transpose() * other.rotation;
        Some(((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos())
    }

    /// Largest deviation of `U^T U` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max()
    }
}

/// Ordered points with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSequence {
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

impl PointSequence {
    pub fn uniform(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point sequence is empty".into()));
        }
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Ok(Self { points, weights })
    }

    /// Weights are rescaled to sum to one.
    pub fn weighted(points: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point sequence is empty".into()));
        }
        if weights.len() != points.len() {
            return Err(Error::LengthMismatch { expected: points.len(), got: weights.len() });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        self.points.iter().zip(&self.weights).fold(Vec3::zeros(), |acc, (p, &w)| acc + p * w)
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self { points: self.points.iter().map(f).collect(), weights: self.weights.clone() }
    }
}

/// `[sum_i w_i |x_i - centroid|^2]^(1/2)`.
pub fn centroid_size(x: &PointSequence) -> Result<f64> {
    let c = x.centroid();
    let s = x.points.iter().zip(&x.weights).map(|(p, &w)| w * (p - c).norm_squared()).sum::<f64>().sqrt();
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::ZeroCentroidSize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFit {
    pub motion: RigidMotion,
    /// Weighted sum of squared residuals `sum_i w_i |R x_i - y_i|^2`.
    pub residual: f64,
    /// The cross-covariance was rank deficient, so the optimum is not unique.
    pub degenerate: bool,
}

fn check_pair(x: &PointSequence, y: &PointSequence) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.weights.iter().zip(&y.weights).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::InvalidArgument("weights of the two sequences differ".into()));
    }
    Ok(())
}

/// Minimizes `sum_i w_i |U x_i + t - y_i|^2` over orthogonal `U` and translations `t`.
pub fn optimal_rigid(x: &PointSequence, y: &PointSequence) -> Result<RigidFit> {
    check_pair(x, y)?;
    let xc = x.centroid();
    let yc = y.centroid();
    let mut cov = Matrix3::zeros();
    for ((p, q), &w) in x.points.iter().zip(&y.points).zip(&x.weights) {
        cov += (p - xc) * (q - yc).transpose() * w;
    }
    let (rotation, degenerate) = orthogonal_from_covariance(&cov);
    let translation = yc - rotation * xc;
    let motion = RigidMotion { rotation, translation };
    let residual = x
        .points
        .iter()
        .zip(&y.points)
        .zip(&x.weights)
        .map(|((p, q), &w)| w * (motion.apply(p) - q).norm_squared())
        .sum();
    Ok(RigidFit { motion, residual, degenerate })
}

/// `U = W Q^T` from the SVD `cov = Q S W^T`.
fn orthogonal_from_covariance(cov: &Matrix3<f64>) -> (Matrix3<f64>, bool) {
    let svd = cov.svd(true, true);
    let q = svd.u.expect("requested U");
    let wt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let degenerate = smin <= DEGENERATE_SV_RATIO * smax.max(f64::MIN_POSITIVE);
    (wt.transpose() * q.transpose(), degenerate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcrustesResult {
    pub distance: f64,
    /// Optimal motion between the size-normalized, centered sequences.
    pub motion: RigidMotion,
    pub degenerate: bool,
}

/// Classical Procrustes distance between size-normalized sequences.
///
/// With uniform weights this is `min_R (sum_i |R x_i / S_X - y_i / S_Y|^2)^(1/2)`.
pub fn discrete_procrustes(x: &PointSequence, y: &PointSequence) -> Result<ProcrustesResult> {
    check_pair(x, y)?;
    let (sx, sy) = (centroid_size(x)?, centroid_size(y)?);
    let (cx, cy) = (x.centroid(), y.centroid());
    let xn = x.map(|p| (p - cx) / sx);
    let yn = y.map(|p| (p - cy) / sy);
    let fit = optimal_rigid(&xn, &yn)?;
    let distance = (x.len() as f64 * fit.residual).max(0.0).sqrt();
    Ok(ProcrustesResult { distance, motion: fit.motion, degenerate: fit.degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    pub dpc: f64,
    pub motion: RigidMotion,
    pub degenerate: bool,
}

/// Continuous Procrustes energy `inf_R (int_M |R x - C x|^2)^(1/2)` by the rectangle rule.
///
/// `images[l]` is the image under the correspondence of sample `l`.
pub fn procrustes_energy(mesh: &TriangleMesh, samples: &SamplingSet, images: &[Vec3]) -> Result<EnergyResult> {
    if images.len() != samples.len() {
        return Err(Error::LengthMismatch { expected: samples.len(), got: images.len() });
    }
    let pts = samples.sample_indices.iter().map(|&i| mesh.vertices()[i]).collect();
    weighted_energy(pts, images.to_vec(), samples.voronoi_areas.clone())
}

/// Same as [`procrustes_energy`] with explicit source points and cell areas.
pub fn weighted_energy(points: Vec<Vec3>, images: Vec<Vec3>, areas: Vec<f64>) -> Result<EnergyResult> {
    let total: f64 = areas.iter().sum();
    let x = PointSequence::weighted(points, areas.clone())?;
    let y = PointSequence::weighted(images, areas)?;
    let fit = optimal_rigid(&x, &y)?;
    Ok(EnergyResult { dpc: (total * fit.residual).max(0.0).sqrt(), motion: fit.motion, degenerate: fit.degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn seq(pts: &[[f64; 3]]) -> PointSequence {
        PointSequence::uniform(pts.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect()).unwrap()
    }

    #[test]
    fn centroid_size_of_two_points() {
        let x = seq(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        assert!((centroid_size(&x).unwrap() - 1.0).abs() < 1e-15);
        let y = x.map(|p| p * 3.0 + Vec3::new(5.0, 1.0, 0.0));
        assert!((centroid_size(&y).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn coincident_points_have_no_size() {
        let x = seq(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]);
        assert!(matches!(centroid_size(&x), Err(Error::ZeroCentroidSize)));
    }

    #[test]
    fn identity_fit() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let fit = optimal_rigid(&x, &x).unwrap();
        assert!((fit.motion.rotation - Matrix3::identity()).norm() < 1e-12);
        assert!(fit.residual < 1e-24);
        assert!(!fit.degenerate);
    }

    #[test]
    fn mirror_fit_has_negative_determinant() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.2, 0.0], [0.3, 1.0, 0.1], [0.1, 0.4, 1.0]]);
        let y = x.map(|p| Vec3::new(-p.x, p.y, p.z));
        let fit = optimal_rigid(&x, &y).unwrap();
        assert!(fit.motion.determinant() < 0.0);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn planar_points_flag_degenerate() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        let fit = optimal_rigid(&x, &x).unwrap();
        assert!(fit.degenerate);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn rotated_triangle_distance_zero() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let y = x.map(|p| r * p);
        assert!(discrete_procrustes(&x, &y).unwrap().distance < 1e-7);
    }

    #[test]
    fn similarity_image_distance_zero() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.3, 0.0], [0.2, 1.0, 0.5], [0.4, 0.1, 1.0]]);
        let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let y = x.map(|p| r * p * 2.5 + Vec3::new(1.0, -4.0, 2.0));
        assert!(discrete_procrustes(&x, &y).unwrap().distance < 1e-7);
    }

    #[test]
    fn mismatched_lengths() {
        let x = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let y = seq(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(matches!(optimal_rigid(&x, &y), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn motion_json_is_row_major() {
        let m = RigidMotion::new(Matrix3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0), Vector3::new(10.0, 11.0, 12.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rotation":[1.0,2.0,3.0,4.0,5.0,6.0,7.0,8.0,9.0],"translation":[10.0,11.0,12.0]}"#);
        let back: RigidMotion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn motion_inverse_roundtrip() {
        let r = Rotation3::from_euler_angles(0.1, 0.7, -0.4).into_inner();
        let m = RigidMotion::new(r, Vector3::new(1.0, 2.0, 3.0));
        let p = Vec3::new(0.3, -0.2, 5.0);
        assert!((m.inverse().apply(&m.apply(&p)) - p).norm() < 1e-12);
        assert!(m.orthogonality_error() < 1e-12);
    }
}
