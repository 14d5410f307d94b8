//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use girthkit::calib::RigidTransform;
use girthkit::geom::{Point, Vector};
use girthkit::mesh::{intersect_triangle, Ray, TriangleMesh};
use girthkit::synth::{VirtualCamera, MAX_RANGE_CM};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Ray from a random point in a cube of half-size `spread`, aimed at a
/// random point near the origin.
pub fn random_ray(rng: &mut ChaCha8Rng, spread: f64) -> Ray {
    let origin = Point::new(
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
        rng.random_range(-spread..spread),
    );
    let target = Point::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    Ray::new(origin, (target - origin).normalize())
}

/// Nearest hit by scanning every triangle; ties go to the lowest index.
pub fn nearest_hit(mesh: &TriangleMesh, ray: &Ray, t_max: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for t in 0..mesh.triangles().len() {
        if let Some(d) = intersect_triangle(ray, &mesh.triangle(t), t_max) {
            if best.is_none_or(|(bd, bt)| d < bd || (d == bd && t < bt)) {
                best = Some((d, t));
            }
        }
    }
    best
}

/// Per-pixel depth of `mesh` placed at `pose`, built from the pinhole model
/// and cast against every triangle of the posed mesh.
pub fn depth_oracle(mesh: &TriangleMesh, pose: &RigidTransform, camera: &VirtualCamera) -> Vec<Option<f64>> {
    let world: Vec<[Point; 3]> = (0..mesh.triangles().len())
        .map(|t| mesh.triangle(t).map(|p| pose.apply_point(&p)))
        .collect();
    let posed = TriangleMesh::new(
        world.iter().flatten().copied().collect(),
        (0..world.len() as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect(),
    )
    .unwrap();
    let k = &camera.intrinsics;
    let eye = Point::from(*camera.pose.translation());
    (0..k.pixel_count())
        .map(|i| {
            let (u, v) = ((i % k.width as usize) as f64, (i / k.width as usize) as f64);
            let local = Vector::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0).normalize();
            let ray = Ray::new(eye, camera.pose.apply_vector(&local));
            nearest_hit(&posed, &ray, MAX_RANGE_CM).map(|(d, _)| d * local.z)
        })
        .collect()
}

/// Shoelace area of a planar polygon, in 2D coordinates of its plane.
pub fn shoelace(points: &[Point], normal: &Vector) -> f64 {
    let helper = if normal.x.abs() < 0.9 { Vector::x() } else { Vector::y() };
    let u = normal.cross(&helper).normalize();
    let v = normal.cross(&u);
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.coords.dot(&u), p.coords.dot(&v))).collect();
    let n = xy.len();
    // u × v = normal, so counter-clockwise about the normal is positive
    (0..n)
        .map(|i| {
            let (a, b) = (xy[i], xy[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        / 2.0
}
