use serde::{Deserialize, Serialize};

use crate::geom::{Point, Vector};

/// Minimum accepted ray parameter; hits closer to the origin are ignored.
pub const PARAMETRIC_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point,
    /// Unit direction.
    pub direction: Vector,
}

impl Ray {
    pub fn new(origin: Point, direction: Vector) -> Self {
        Self { origin, direction }
    }

    pub fn at(&self, t: f64) -> Point {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub point: Point,
    /// Distance along the ray in cm.
    pub distance: f64,
    pub triangle: usize,
}

/// Watertight ray/triangle test (Woop, Benthin and Wald).
///
/// The ray is sheared so that it points along the local +z axis and the
/// triangle is tested with 2D edge functions. Hits on shared edges and
/// vertices are reported by at least one of the adjacent triangles, never
/// by none. Returns the ray parameter `t` when
/// `PARAMETRIC_EPSILON <= t <= t_max`.
pub fn intersect_triangle(ray: &Ray, tri: &[Point; 3], t_max: f64) -> Option<f64> {
    let d = ray.direction;
    let kz = d.iamax();
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if d[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sx = d[kx] / d[kz];
    let sy = d[ky] / d[kz];
    let sz = 1.0 / d[kz];

    let a = tri[0] - ray.origin;
    let b = tri[1] - ray.origin;
    let c = tri[2] - ray.origin;

    let ax = a[kx] - sx * a[kz];
    let ay = a[ky] - sy * a[kz];
    let bx = b[kx] - sx * b[kz];
    let by = b[ky] - sy * b[kz];
    let cx = c[kx] - sx * c[kz];
    let cy = c[ky] - sy * c[kz];

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;

    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + v + w;
    if det == 0.0 {
        return None;
    }
    let az = sz * a[kz];
    let bz = sz * b[kz];
    let cz = sz * c[kz];
    let t = (u * az + v * bz + w * cz) / det;
    (t >= PARAMETRIC_EPSILON && t <= t_max).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tri() -> [Point; 3] {
        [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn hits_interior() {
        let ray = Ray::new(Point::new(0.25, 0.25, -5.0), Vector::z());
        let t = intersect_triangle(&ray, &unit_tri(), 100.0).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn respects_t_max_and_backfacing_direction() {
        let tri = unit_tri();
        assert!(intersect_triangle(&Ray::new(Point::new(0.25, 0.25, -5.0), Vector::z()), &tri, 4.0).is_none());
        assert!(intersect_triangle(&Ray::new(Point::new(0.25, 0.25, -5.0), -Vector::z()), &tri, 100.0).is_none());
        // both windings are hit
        let flipped = [tri[0], tri[2], tri[1]];
        assert!(intersect_triangle(&Ray::new(Point::new(0.25, 0.25, 5.0), -Vector::z()), &flipped, 100.0).is_some());
    }

    #[test]
    fn shared_edge_is_hit_by_a_neighbor() {
        // two triangles sharing the diagonal of the unit square
        let t0 = [Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(1.0, 1.0, 0.0)];
        let t1 = [Point::new(0.0, 0.0, 0.0), Point::new(1.0, 1.0, 0.0), Point::new(0.0, 1.0, 0.0)];
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let ray = Ray::new(Point::new(s, s, -1.0), Vector::z());
            let hit0 = intersect_triangle(&ray, &t0, 10.0).is_some();
            let hit1 = intersect_triangle(&ray, &t1, 10.0).is_some();
            assert!(hit0 || hit1, "gap at s = {s}");
        }
    }

    #[test]
    fn coplanar_ray_misses() {
        let ray = Ray::new(Point::new(-1.0, 0.25, 0.0), Vector::x());
        assert!(intersect_triangle(&ray, &unit_tri(), 10.0).is_none());
    }
}
