//! Automorphisms of the unit disk: `m(z) = e^{i theta} (z - a) / (1 - conj(a) z)`,
//! optionally precomposed with complex conjugation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uniformize::ExtremaSet;

/// Slack allowed beyond the closed unit disk for inputs.
pub const DISK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn compose(self, other: Self) -> Self {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTransform {
    theta: f64,
    a: Complex64,
    orientation: Orientation,
}

/// 2x2 complex matrix acting by linear fractional transformation.
type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

fn mat_conj(x: &Mat2) -> Mat2 {
    [[x[0][0].conj(), x[0][1].conj()], [x[1][0].conj(), x[1][1].conj()]]
}

fn mat_inv(x: &Mat2) -> Mat2 {
    // Scale is irrelevant for a linear fractional map.
    [[x[1][1], -x[0][1]], [-x[1][0], x[0][0]]]
}

impl MobiusTransform {
    pub fn new(theta: f64, a: Complex64, orientation: Orientation) -> Result<Self> {
        if !(a.norm() < 1.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("Moebius parameter |a| = {} must be < 1", a.norm())));
        }
        Ok(Self { theta: theta.rem_euclid(TAU), a, orientation })
    }

    pub fn identity() -> Self {
        Self { theta: 0.0, a: Complex64::new(0.0, 0.0), orientation: Orientation::Preserving }
    }

    pub fn conjugation() -> Self {
        Self { theta: 0.0, a: Complex64::new(0.0, 0.0), orientation: Orientation::Reversing }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn is_reversing(&self) -> bool {
        self.orientation == Orientation::Reversing
    }

    fn matrix(&self) -> Mat2 {
        let e = Complex64::from_polar(1.0, self.theta);
        [[e, -e * self.a], [-self.a.conj(), Complex64::new(1.0, 0.0)]]
    }

    fn from_matrix(m: &Mat2, orientation: Orientation) -> Self {
        let d = m[1][1];
        let e = m[0][0] / d;
        let a = -(m[1][0] / d).conj();
        Self { theta: e.arg().rem_euclid(TAU), a, orientation }
    }

    /// Evaluates the map; reversing maps conjugate their argument first.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let z = if self.is_reversing() { z.conj() } else { z };
        Complex64::from_polar(1.0, self.theta) * (z - self.a) / (Complex64::new(1.0, 0.0) - z * self.a.conj())
    }

    /// `|m'(z)|^2 = ((1 - |a|^2) / |1 - z conj(a)|^2)^2`; the area Jacobian of the map.
    pub fn derivative_modulus_sq(&self, z: Complex64) -> f64 {
        let z = if self.is_reversing() { z.conj() } else { z };
        let num = 1.0 - self.a.norm_sqr();
        let den = (Complex64::new(1.0, 0.0) - z * self.a.conj()).norm_sqr();
        (num / den).powi(2)
    }

    /// `self` after `other`: `z -> self(other(z))`.
    pub fn compose(&self, other: &Self) -> Self {
        let rhs = if self.is_reversing() { mat_conj(&other.matrix()) } else { other.matrix() };
        Self::from_matrix(&mat_mul(&self.matrix(), &rhs), self.orientation.compose(other.orientation))
    }

    pub fn inverse(&self) -> Self {
        let inv = mat_inv(&self.matrix());
        match self.orientation {
            Orientation::Preserving => Self::from_matrix(&inv, Orientation::Preserving),
            Orientation::Reversing => Self::from_matrix(&mat_conj(&inv), Orientation::Reversing),
        }
    }

    /// The map with `m(p) = q` whose derivative at `p` has argument `theta`
    /// (for reversing maps, the derivative of the preserving part at `conj(p)`).
    ///
    /// Realized as rotation by `theta` followed by the hyperbolic translation
    /// carrying the rotated point onto `q`.
    pub fn from_point_angle(p: Complex64, q: Complex64, theta: f64, orientation: Orientation) -> Result<Self> {
        if !(p.norm() < 1.0) || !(q.norm() < 1.0) {
            return Err(Error::InvalidArgument("anchor points must lie in the open unit disk".into()));
        }
        let p = match orientation {
            Orientation::Preserving => p,
            Orientation::Reversing => p.conj(),
        };
        let u = Complex64::from_polar(1.0, theta) * p;
        let rotate = Self { theta: theta.rem_euclid(TAU), a: Complex64::new(0.0, 0.0), orientation: Orientation::Preserving };
        // phi_u(z) = (z - u) / (1 - conj(u) z) sends u to 0; its inverse with q sends 0 to q.
        let to_origin = Self { theta: 0.0, a: u, orientation: Orientation::Preserving };
        let from_origin = Self { theta: 0.0, a: q, orientation: Orientation::Preserving }.inverse();
        let m = from_origin.compose(&to_origin).compose(&rotate);
        Ok(match orientation {
            Orientation::Preserving => m,
            Orientation::Reversing => m.compose(&Self::conjugation()),
        })
    }

    /// Distance in `(theta, Re a, Im a)` with theta measured on the circle; infinite across orientations.
    pub fn parameter_distance(&self, other: &Self) -> f64 {
        if self.orientation != other.orientation {
            return f64::INFINITY;
        }
        let dt = (self.theta - other.theta).rem_euclid(TAU);
        let dt = dt.min(TAU - dt);
        dt.max((self.a.re - other.a.re).abs()).max((self.a.im - other.a.im).abs())
    }
}

/// `atanh |(p - q) / (1 - p conj(q))|`.
pub fn hyperbolic_distance(p: Complex64, q: Complex64) -> Result<f64> {
    if !(p.norm() < 1.0) || !(q.norm() < 1.0) {
        return Err(Error::InvalidArgument("hyperbolic distance needs points inside the unit disk".into()));
    }
    let r = ((p - q) / (Complex64::new(1.0, 0.0) - p * q.conj())).norm();
    Ok(r.min(1.0 - f64::EPSILON).atanh())
}

/// The extrema pair and angle a candidate was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateAnchor {
    pub p: Complex64,
    pub q: Complex64,
    pub angle: f64,
}

#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub candidates: Vec<MobiusTransform>,
    /// `anchors[i]` generated `candidates[i]`.
    pub anchors: Vec<CandidateAnchor>,
    /// No extrema on one side; candidates anchored at the disk centers.
    pub fallback: bool,
}

/// Tolerance for merging near-identical candidates.
pub const DEDUP_TOL: f64 = 1e-8;

/// All maps `m(p) = q` over extrema pairs, `K` equispaced angles and both orientations.
pub fn candidate_set(from: &ExtremaSet, to: &ExtremaSet, k: usize) -> Result<CandidateSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one angular sample".into()));
    }
    let origin = [Complex64::new(0.0, 0.0)];
    let fallback = from.is_empty() || to.is_empty();
    let ps: Vec<Complex64> = if fallback { origin.to_vec() } else { from.positions() };
    let qs: Vec<Complex64> = if fallback { origin.to_vec() } else { to.positions() };
    let mut out: Vec<MobiusTransform> = Vec::with_capacity(2 * ps.len() * qs.len() * k);
    let mut anchors = Vec::with_capacity(out.capacity());
    for orientation in [Orientation::Preserving, Orientation::Reversing] {
        for &p in &ps {
            for &q in &qs {
                for j in 0..k {
                    let theta = TAU * j as f64 / k as f64;
                    let m = MobiusTransform::from_point_angle(p, q, theta, orientation)?;
                    if !out.iter().any(|c| c.parameter_distance(&m) <= DEDUP_TOL) {
                        out.push(m);
                        anchors.push(CandidateAnchor { p, q, angle: theta });
                    }
                }
            }
        }
    }
    Ok(CandidateSet { candidates: out, anchors, fallback })
}
