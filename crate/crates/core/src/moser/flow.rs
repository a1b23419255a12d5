use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fem::{solve_neumann_poisson, DiskFEMesh, ElementDensity, FlowField};
use crate::error::{Error, Result};
use crate::mobius::DISK_TOL;
use crate::uniformize::signed_area;

/// Largest step-count multiplier tried before giving up on a folded map.
const MAX_STEP_DOUBLINGS: u32 = 3;

/// Pulls a point back onto the closed disk along its ray.
fn onto_circle(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return z;
    }
    let w = z / r;
    if w.norm() > 1.0 {
        w * (1.0 - f64::EPSILON)
    } else {
        w
    }
}

/// How the velocity and densities are evaluated between mesh nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowInterpolation {
    /// Recovered vertex gradients and vertex densities, interpolated linearly.
    #[default]
    Linear,
    /// Element gradient and midpoint densities of the containing element.
    PiecewiseConstant,
}

/// The time-dependent flow of one density onto another on a fixed mesh.
#[derive(Debug, Clone, Copy)]
pub struct MoserFlow<'a> {
    pub mesh: &'a DiskFEMesh,
    pub field: &'a FlowField,
    pub mu: &'a ElementDensity,
    pub nu: &'a ElementDensity,
    pub interpolation: FlowInterpolation,
}

impl<'a> MoserFlow<'a> {
    pub fn new(mesh: &'a DiskFEMesh, field: &'a FlowField, mu: &'a ElementDensity, nu: &'a ElementDensity) -> Self {
        Self { mesh, field, mu, nu, interpolation: FlowInterpolation::Linear }
    }

    pub fn with_interpolation(self, interpolation: FlowInterpolation) -> Self {
        Self { interpolation, ..self }
    }

    /// `v(z) / (t nu(z) + (1 - t) mu(z))`; points outside the disk use the field at their radial projection.
    pub fn velocity(&self, t: f64, z: Complex64) -> Complex64 {
        let loc = self.mesh.locator().locate(onto_circle_if_outside(z));
        if self.interpolation == FlowInterpolation::PiecewiseConstant {
            let e = loc.face;
            return self.field.velocity(e) / (t * self.nu.values[e] + (1.0 - t) * self.mu.values[e]);
        }
        let face = self.mesh.faces()[loc.face];
        let mut v = Complex64::new(0.0, 0.0);
        let mut density = 0.0;
        for (k, &i) in face.iter().enumerate() {
            v += self.field.vertex_velocity(i) * loc.bary[k];
            density += loc.bary[k] * (t * self.nu.vertex_values[i] + (1.0 - t) * self.mu.vertex_values[i]);
        }
        v / density
    }

    fn density_at(&self, t: f64, z: Complex64) -> f64 {
        match self.interpolation {
            FlowInterpolation::Linear => t * self.nu.interpolate(self.mesh, z) + (1.0 - t) * self.mu.interpolate(self.mesh, z),
            FlowInterpolation::PiecewiseConstant => {
                let e = self.mesh.element_at(z);
                t * self.nu.values[e] + (1.0 - t) * self.mu.values[e]
            }
        }
    }

    /// Density at time 0 per element, the reference for `lambda`.
    fn initial_density(&self) -> Vec<f64> {
        match self.interpolation {
            FlowInterpolation::Linear => self
                .mesh
                .faces()
                .iter()
                .map(|f| f.iter().map(|&v| self.mu.vertex_values[v]).sum::<f64>() / 3.0)
                .collect(),
            FlowInterpolation::PiecewiseConstant => self.mu.values.clone(),
        }
    }

    fn boundary_velocity(&self, t: f64, z: Complex64) -> Complex64 {
        let v = self.velocity(t, z);
        let n = z / z.norm();
        v - n * (v * n.conj()).re
    }

    fn rk4_step(&self, t: f64, dt: f64, z: Complex64, on_boundary: bool) -> Complex64 {
        let f = |t: f64, z: Complex64| {
            if on_boundary {
                self.boundary_velocity(t, z)
            } else {
                self.velocity(t, z)
            }
        };
        let k1 = f(t, z);
        let k2 = f(t + 0.5 * dt, z + k1 * (0.5 * dt));
        let k3 = f(t + 0.5 * dt, z + k2 * (0.5 * dt));
        let k4 = f(t + dt, z + k3 * dt);
        let next = z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if on_boundary || next.norm() > 1.0 {
            onto_circle(next)
        } else {
            next
        }
    }

    /// `Phi_1(z0)` by `n_steps` RK4 steps. Points starting on the unit circle stay on it.
    pub fn flow(&self, z0: Complex64, n_steps: usize) -> Complex64 {
        if self.field.is_zero() {
            return z0;
        }
        let on_boundary = z0.norm() >= 1.0 - DISK_TOL;
        let dt = 1.0 / n_steps as f64;
        let mut z = if on_boundary { onto_circle(z0) } else { z0 };
        for k in 0..n_steps {
            z = self.rk4_step(k as f64 * dt, dt, z, on_boundary);
        }
        z
    }

    /// `lambda(t, e) = det(grad Phi_t) (t nu + (1 - t) mu)(Phi_t)` per element.
    fn lambda(&self, t: f64, images: &[Complex64]) -> Vec<f64> {
        let areas = self.mesh.face_areas();
        self.mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(f, &[a, b, c])| {
                let det = signed_area(images[a], images[b], images[c]) / areas[f];
                det * self.density_at(t, (images[a] + images[b] + images[c]) / 3.0)
            })
            .collect()
    }
}

pub fn flow_point(
    mesh: &DiskFEMesh,
    field: &FlowField,
    mu: &ElementDensity,
    nu: &ElementDensity,
    z0: Complex64,
    n_steps: usize,
) -> Result<Complex64> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    if z0.norm() > 1.0 + DISK_TOL {
        return Err(Error::InvalidArgument(format!("start point ({}, {}) outside the disk", z0.re, z0.im)));
    }
    Ok(MoserFlow::new(mesh, field, mu, nu).flow(z0, n_steps))
}

/// Images of every mesh vertex under `phi = Phi_1` with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserMap {
    pub images: Vec<Complex64>,
    /// `max_e |nu(phi) det(grad phi) - mu| / mu`.
    pub area_residual: f64,
    /// Largest area-weighted mean relative change of `lambda(t, .)` from `lambda(0, .) = mu`.
    pub lambda_drift: f64,
    pub n_steps: usize,
}

impl MoserMap {
    /// Evaluates `phi` at an arbitrary point by linear interpolation of vertex images.
    pub fn eval(&self, mesh: &DiskFEMesh, z: Complex64) -> Complex64 {
        let loc = mesh.locator().locate(z);
        onto_circle_if_outside(mesh.locator().interpolate(&loc, &self.images))
    }
}

fn onto_circle_if_outside(z: Complex64) -> Complex64 {
    if z.norm() > 1.0 {
        onto_circle(z)
    } else {
        z
    }
}

pub fn moser_map(mu: &ElementDensity, nu: &ElementDensity, mesh: &DiskFEMesh, n_steps: usize) -> Result<MoserMap> {
    moser_map_with(mu, nu, mesh, n_steps, FlowInterpolation::default())
}

pub fn moser_map_with(
    mu: &ElementDensity,
    nu: &ElementDensity,
    mesh: &DiskFEMesh,
    n_steps: usize,
    interpolation: FlowInterpolation,
) -> Result<MoserMap> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    let nf = mesh.faces().len();
    if mu.values.len() != nf || nu.values.len() != nf {
        return Err(Error::LengthMismatch { expected: nf, got: mu.values.len().min(nu.values.len()) });
    }
    let field = solve_neumann_poisson(mesh, mu, nu)?;
    let flow = MoserFlow::new(mesh, &field, mu, nu).with_interpolation(interpolation);
    let mut steps = n_steps;
    for _ in 0..=MAX_STEP_DOUBLINGS {
        let images = mesh.vertices().to_vec();
        let on_boundary: Vec<bool> = (0..images.len()).map(|v| mesh.is_boundary(v)).collect();
        let (images, drift) = if field.is_zero() {
            (images, 0.0)
        } else {
            integrate_all(&flow, images, &on_boundary, steps)
        };
        let flipped = mesh.faces().iter().any(|&[a, b, c]| !(signed_area(images[a], images[b], images[c]) > 0.0));
        if flipped {
            steps *= 2;
            continue;
        }
        let mu0 = flow.initial_density();
        let area_residual =
            flow.lambda(1.0, &images).iter().zip(&mu0).map(|(l, m)| (l - m).abs() / m).fold(0.0, f64::max);
        return Ok(MoserMap { images, area_residual, lambda_drift: drift, n_steps: steps });
    }
    Err(Error::FlippedElement { n_steps: steps / 2 })
}

fn integrate_all(
    flow: &MoserFlow<'_>,
    mut images: Vec<Complex64>,
    on_boundary: &[bool],
    n_steps: usize,
) -> (Vec<Complex64>, f64) {
    let dt = 1.0 / n_steps as f64;
    let checkpoint = (n_steps / 4).max(1);
    let areas = flow.mesh.face_areas();
    let total: f64 = areas.iter().sum();
    let mu0 = flow.initial_density();
    let mut drift: f64 = 0.0;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        for (z, &b) in images.iter_mut().zip(on_boundary) {
            *z = flow.rk4_step(t, dt, *z, b);
        }
        if (k + 1) % checkpoint == 0 || k + 1 == n_steps {
            let lambda = flow.lambda((k + 1) as f64 * dt, &images);
            let mean_dev = lambda
                .iter()
                .zip(&mu0)
                .zip(areas)
                .map(|((l, m), a)| a * (l - m).abs() / m)
                .sum::<f64>()
                / total;
            drift = drift.max(mean_dev);
        }
    }
    (images, drift)
}
