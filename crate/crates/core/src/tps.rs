//! Thin-plate spline warps of the disk, sandwiched by a radial change of coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobius::hyperbolic_distance;

/// Largest acceptable singular-value ratio of the interpolation system.
pub const MAX_CONDITION: f64 = 1e12;

/// Radial profile of the disk-to-plane coordinate change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiProfile {
    /// `atanh(|z|) z / |z|`: the disk onto the whole plane.
    #[default]
    Atanh,
    /// `atan(|z|) z / |z|`: the disk onto the disk of radius pi/4.
    Atan,
}

const ATAN_CLAMP: f64 = 1.0 - 1e-9;

fn radial(z: Complex64, f: impl Fn(f64) -> f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return z;
    }
    z * (f(r) / r)
}

pub fn chi(z: Complex64, profile: ChiProfile) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidArgument(format!("chi is undefined at |z| = {}", z.norm())));
    }
    Ok(match profile {
        ChiProfile::Atanh => radial(z, f64::atanh),
        ChiProfile::Atan => radial(z, f64::atan),
    })
}

pub fn chi_inv(w: Complex64, profile: ChiProfile) -> Complex64 {
    match profile {
        ChiProfile::Atanh => radial(w, f64::tanh),
        ChiProfile::Atan => radial(w, |r| {
            if r >= std::f64::consts::FRAC_PI_2 {
                ATAN_CLAMP
            } else {
                r.tan().min(ATAN_CLAMP)
            }
        }),
    }
}

/// Pairs `(p, q)` that are each other's unique hyperbolic nearest neighbor.
pub fn mutually_closest_pairs(src: &[Complex64], dst: &[Complex64]) -> Result<Vec<(Complex64, Complex64)>> {
    let mut dist = vec![vec![0.0; dst.len()]; src.len()];
    for (i, &p) in src.iter().enumerate() {
        for (j, &q) in dst.iter().enumerate() {
            dist[i][j] = hyperbolic_distance(p, q)?;
        }
    }
    let mut pairs = Vec::new();
    for i in 0..src.len() {
        let Some(j) = unique_argmin((0..dst.len()).map(|j| dist[i][j])) else { continue };
        if unique_argmin((0..src.len()).map(|k| dist[k][j])) == Some(i) {
            pairs.push((src[i], dst[j]));
        }
    }
    Ok(pairs)
}

fn unique_argmin(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (i, v) in values.enumerate() {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if v < b => {
                best = Some((i, v));
                tied = false;
            }
            Some((_, b)) if v == b => tied = true,
            _ => {}
        }
    }
    if tied {
        None
    } else {
        best.map(|(i, _)| i)
    }
}

/// `r^2 log r` with the removable singularity filled in.
pub fn kernel(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

/// `a0 + a1 z + a2 conj(z) + sum_i b_i U(|z - P_i|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsMap {
    pub control_src: Vec<Complex64>,
    pub control_dst: Vec<Complex64>,
    pub affine: [Complex64; 3],
    pub kernel_weights: Vec<Complex64>,
}

impl TpsMap {
    pub fn identity() -> Self {
        Self {
            control_src: Vec::new(),
            control_dst: Vec::new(),
            affine: [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            kernel_weights: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kernel_weights.iter().all(|b| b.norm() == 0.0)
            && self.affine[0].norm() == 0.0
            && self.affine[1] == Complex64::new(1.0, 0.0)
            && self.affine[2].norm() == 0.0
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let [a0, a1, a2] = self.affine;
        let mut w = a0 + a1 * z + a2 * z.conj();
        for (p, b) in self.control_src.iter().zip(&self.kernel_weights) {
            w += b * kernel((z - p).norm());
        }
        w
    }
}

/// Interpolating thin-plate spline with `TPS(P_j) = Q_j`.
///
/// Fewer than three controls cannot pin down the affine part, so one control
/// gives a translation and two give a similarity.
pub fn fit_tps(pairs: &[(Complex64, Complex64)]) -> Result<TpsMap> {
    let n = pairs.len();
    let src: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<Complex64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n {
        for j in 0..i {
            if (src[i] - src[j]).norm() < 1e-12 {
                return Err(Error::SingularSystem(format!("coincident control points {j} and {i}")));
            }
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut map = TpsMap { control_src: src.clone(), control_dst: dst.clone(), ..TpsMap::identity() };
    match n {
        0 => return Ok(TpsMap::identity()),
        1 => {
            map.affine = [dst[0] - src[0], one, zero];
            map.kernel_weights = vec![zero];
            return Ok(map);
        }
        2 => {
            let a1 = (dst[1] - dst[0]) / (src[1] - src[0]);
            map.affine = [dst[0] - a1 * src[0], a1, zero];
            map.kernel_weights = vec![zero; 2];
            return Ok(map);
        }
        _ => {}
    }

    // Real system in the basis [1, x, y]; real and imaginary parts share the matrix.
    let size = n + 3;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = kernel((src[i] - src[j]).norm());
        }
        let poly = [1.0, src[i].re, src[i].im];
        for (k, &v) in poly.iter().enumerate() {
            a[(i, n + k)] = v;
            a[(n + k, i)] = v;
        }
    }
    let sv = a.clone().singular_values();
    let smin = sv.min();
    let cond = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditionedTps(cond));
    }
    let mut rhs_re = DVector::<f64>::zeros(size);
    let mut rhs_im = DVector::<f64>::zeros(size);
    for i in 0..n {
        rhs_re[i] = dst[i].re;
        rhs_im[i] = dst[i].im;
    }
    let lu = a.lu();
    let sol_re = lu.solve(&rhs_re).ok_or_else(|| Error::SingularSystem("TPS system".into()))?;
    let sol_im = lu.solve(&rhs_im).ok_or_else(|| Error::SingularSystem("TPS system".into()))?;
    let coef = |k: usize| Complex64::new(sol_re[k], sol_im[k]);
    map.kernel_weights = (0..n).map(coef).collect();
    let (c0, cx, cy) = (coef(n), coef(n + 1), coef(n + 2));
    let i = Complex64::new(0.0, 1.0);
    map.affine = [c0, (cx - i * cy) * 0.5, (cx + i * cy) * 0.5];
    Ok(map)
}

/// `chi^-1 o TPS o chi`, a warp of the closed disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaMap {
    pub tps: TpsMap,
    pub profile: ChiProfile,
}

/// Radius at which boundary points are evaluated.
const EDGE_RADIUS: f64 = 1.0 - 1e-12;

impl ZetaMap {
    pub fn identity(profile: ChiProfile) -> Self {
        Self { tps: TpsMap::identity(), profile }
    }

    /// Fits the TPS between `chi(p_j)` and `chi(q_j)`.
    pub fn fit(pairs: &[(Complex64, Complex64)], profile: ChiProfile) -> Result<Self> {
        let mapped = pairs
            .iter()
            .map(|&(p, q)| Ok((chi(p, profile)?, chi(q, profile)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tps: fit_tps(&mapped)?, profile })
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        if self.tps.is_identity() {
            return z;
        }
        let r = z.norm();
        let z = if r >= EDGE_RADIUS { z * (EDGE_RADIUS / r) } else { z };
        let w = chi(z, self.profile).expect("radius clamped inside the disk");
        chi_inv(self.tps.eval(w), self.profile)
    }

    /// Faces of a counter-clockwise triangulation that the warp folds or collapses.
    pub fn flipped_faces(&self, points: &[Complex64], faces: &[[usize; 3]]) -> usize {
        if self.tps.is_identity() {
            return 0;
        }
        let img: Vec<Complex64> = points.iter().map(|&z| self.apply(z)).collect();
        faces
            .iter()
            .filter(|&&[a, b, c]| {
                let (u, v) = (img[b] - img[a], img[c] - img[a]);
                !(u.re * v.im - u.im * v.re > 0.0)
            })
            .count()
    }
}
