//! Point location in planar triangulations through a uniform bucket grid.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub face: usize,
    pub bary: [f64; 3],
    /// True when the query was outside every triangle and got clamped to the nearest one.
    pub clamped: bool,
    /// Distance from the query to the located point (0 unless clamped).
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct PlanarLocator {
    points: Vec<Complex64>,
    faces: Vec<[usize; 3]>,
    lo: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

const INSIDE_TOL: f64 = 1e-12;

pub fn barycentric(p: Complex64, a: Complex64, b: Complex64, c: Complex64) -> [f64; 3] {
    let det = (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re);
    let l1 = ((b.re - p.re) * (c.im - p.im) - (b.im - p.im) * (c.re - p.re)) / det;
    let l2 = ((c.re - p.re) * (a.im - p.im) - (c.im - p.im) * (a.re - p.re)) / det;
    [l1, l2, 1.0 - l1 - l2]
}

fn closest_on_segment(p: Complex64, a: Complex64, b: Complex64) -> (f64, f64) {
    let d = b - a;
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    ((p - (a + d * t)).norm(), t)
}

impl PlanarLocator {
    pub fn new(points: Vec<Complex64>, faces: Vec<[usize; 3]>) -> Self {
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &points {
            lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let w = (hi.re - lo.re).max(1e-12);
        let h = (hi.im - lo.im).max(1e-12);
        let target = (faces.len() as f64).sqrt().max(1.0);
        let cell = (w.max(h) / target).max(1e-12);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut loc = Self { points, faces, lo, cell, nx, ny, buckets: Vec::new() };
        for (fi, f) in loc.faces.iter().enumerate() {
            let ps = f.map(|v| loc.points[v]);
            let (x0, y0) = loc.cell_of(Complex64::new(
                ps.iter().map(|p| p.re).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p.im).fold(f64::INFINITY, f64::min),
            ));
            let (x1, y1) = loc.cell_of(Complex64::new(
                ps.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max),
                ps.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max),
            ));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    buckets[y * nx + x].push(fi as u32);
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    fn cell_of(&self, p: Complex64) -> (usize, usize) {
        let x = ((p.re - self.lo.re) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let y = ((p.im - self.lo.im) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (x, y)
    }

    fn face_bary(&self, f: usize, p: Complex64) -> [f64; 3] {
        let [a, b, c] = self.faces[f];
        barycentric(p, self.points[a], self.points[b], self.points[c])
    }

    /// Distance from `p` to face `f` and the barycentric coordinates of the closest point.
    fn closest_in_face(&self, f: usize, p: Complex64) -> (f64, [f64; 3]) {
        let bary = self.face_bary(f, p);
        if bary.iter().all(|&l| l >= 0.0) {
            return (0.0, bary);
        }
        let idx = self.faces[f];
        let mut best = (f64::INFINITY, [0.0; 3]);
        for k in 0..3 {
            let (i, j) = (k, (k + 1) % 3);
            let (d, t) = closest_on_segment(p, self.points[idx[i]], self.points[idx[j]]);
            if d < best.0 {
                let mut b = [0.0; 3];
                b[i] = 1.0 - t;
                b[j] = t;
                best = (d, b);
            }
        }
        best
    }

    /// Finds the triangle containing `p`, or the nearest one if none does.
    pub fn locate(&self, p: Complex64) -> Location {
        let (cx, cy) = self.cell_of(p);
        for &f in &self.buckets[cy * self.nx + cx] {
            let bary = self.face_bary(f as usize, p);
            if bary.iter().all(|&l| l >= -INSIDE_TOL) {
                return Location { face: f as usize, bary, clamped: false, offset: 0.0 };
            }
        }
        self.nearest(p, cx, cy)
    }

    fn nearest(&self, p: Complex64, cx: usize, cy: usize) -> Location {
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        let max_ring = self.nx.max(self.ny);
        let mut ring = 0usize;
        loop {
            let x0 = cx.saturating_sub(ring);
            let y0 = cy.saturating_sub(ring);
            let x1 = (cx + ring).min(self.nx - 1);
            let y1 = (cy + ring).min(self.ny - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if x != x0 && x != x1 && y != y0 && y != y1 {
                        continue;
                    }
                    if ring > 0 && x.abs_diff(cx) < ring && y.abs_diff(cy) < ring {
                        continue;
                    }
                    for &f in &self.buckets[y * self.nx + x] {
                        let (d, b) = self.closest_in_face(f as usize, p);
                        if best.is_none_or(|(bd, _, _)| d < bd) {
                            best = Some((d, f as usize, b));
                        }
                    }
                }
            }
            if let Some((d, _, _)) = best {
                // Everything in rings beyond this one is at least ring * cell away (minus the query's in-cell offset).
                if d <= (ring as f64) * self.cell || ring >= max_ring {
                    break;
                }
            } else if ring >= max_ring {
                break;
            }
            ring += 1;
        }
        let (d, face, bary) = best.expect("triangulation has at least one face");
        Location { face, bary, clamped: d > 0.0, offset: d }
    }

    /// Interpolates per-vertex values at a location.
    pub fn interpolate<T>(&self, loc: &Location, values: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let [a, b, c] = self.faces[loc.face];
        values[a] * loc.bary[0] + values[b] * loc.bary[1] + values[c] * loc.bary[2]
    }
}
