mod common;

use std::f64::consts::{PI, TAU};

use girthkit::cloud::PointCloud;
use girthkit::geom::{Point, Vector};
use girthkit::mesh::{
    load_mesh, raycast_brute_force, save_mesh, slice_mesh, Bvh, MeshFormat, PlyEncoding, Ray,
    RayHit, TriangleMesh,
};
use girthkit::probes::{measure_section, CircleProbe, Radius};
use girthkit::synth::{gen_shape, ShapeSpec};
use girthkit::Error;
use proptest::prelude::*;
use common::{nearest_hit, random_ray};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_same(hit: Option<RayHit>, want: Option<(f64, usize)>) {
    match (hit, want) {
        (None, None) => {}
        (Some(h), Some((d, t))) => {
            assert_eq!(h.triangle, t);
            assert!((h.distance - d).abs() <= 1e-9 * d.max(1.0));
        }
        other => panic!("hit mismatch: {other:?}"),
    }
}

#[test]
fn bvh_matches_brute_force_on_cylinder() {
    let mesh = gen_shape(&ShapeSpec::cylinder(25.0, 50.0).with_segments(256)).unwrap();
    let bvh = Bvh::build(mesh.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut hits = 0;
    for _ in 0..1000 {
        let ray = random_ray(&mut rng, 100.0);
        let h = bvh.raycast(&ray, 500.0);
        hits += h.is_some() as usize;
        assert_same(h, nearest_hit(&mesh, &ray, 500.0));
        assert_eq!(h, raycast_brute_force(&mesh, &ray, 500.0));
    }
    assert!(hits > 500, "{hits}");
}

#[test]
fn ray_into_cube_face() {
    let bvh = Bvh::build(gen_shape(&ShapeSpec::cube(15.0)).unwrap()).unwrap();
    let hit = bvh.raycast(&Ray::new(Point::new(0.0, 0.0, -100.0), Vector::z()), 1e3).unwrap();
    assert!((hit.point - Point::new(0.0, 0.0, -7.5)).norm() < 1e-12);
    assert!((hit.distance - 92.5).abs() < 1e-12);
    assert!(bvh.raycast(&Ray::new(Point::new(0.0, 0.0, -100.0), -Vector::z()), 1e3).is_none());
}

#[test]
fn grazing_rays_match_the_oracle() {
    let mesh = gen_shape(&ShapeSpec::cube(15.0)).unwrap();
    let bvh = Bvh::build(mesh.clone()).unwrap();
    // along the top face plane, along a face diagonal and along an edge
    let rays = [
        Ray::new(Point::new(-50.0, 0.0, 7.5), Vector::x()),
        Ray::new(Point::new(-50.0, -50.0, 7.5), Vector::new(1.0, 1.0, 0.0).normalize()),
        Ray::new(Point::new(-50.0, 7.5, 7.5), Vector::x()),
        Ray::new(Point::new(7.5, 7.5, -50.0), Vector::z()),
    ];
    for ray in rays {
        let first = bvh.raycast(&ray, 1e3);
        assert_same(first, nearest_hit(&mesh, &ray, 1e3));
        assert_eq!(first, bvh.raycast(&ray, 1e3));
    }
}

#[test]
fn binary_ply_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.ply");
    let mesh = gen_shape(&ShapeSpec::cylinder(7.3, 11.1).with_segments(64)).unwrap();
    save_mesh(&mesh, &path, MeshFormat::Ply(PlyEncoding::BinaryLittleEndian)).unwrap();
    let back = load_mesh(&path, MeshFormat::Ply(PlyEncoding::BinaryLittleEndian)).unwrap();
    assert_eq!(back.triangles(), mesh.triangles());
    assert_eq!(back.vertices(), mesh.vertices());
}

#[test]
fn ascii_ply_and_obj_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_shape(&ShapeSpec::sphere(12.345).with_segments(32)).unwrap();
    for (name, format) in [("s.ply", MeshFormat::Ply(PlyEncoding::Ascii)), ("s.obj", MeshFormat::Obj)] {
        let path = dir.path().join(name);
        save_mesh(&mesh, &path, format).unwrap();
        let back = load_mesh(&path, format).unwrap();
        assert_eq!(back.triangles(), mesh.triangles(), "{name}");
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            assert!((a - b).abs().max() <= 1e-5, "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn unwritable_path_is_io_error() {
    let mesh = gen_shape(&ShapeSpec::cube(15.0)).unwrap();
    let r = save_mesh(&mesh, "/nonexistent-dir/cube.ply", MeshFormat::Ply(PlyEncoding::Ascii));
    assert!(matches!(r, Err(Error::Io { .. })), "{r:?}");
    let r = load_mesh("/nonexistent-dir/cube.ply", MeshFormat::Ply(PlyEncoding::Ascii));
    assert!(matches!(r, Err(Error::Io { .. })), "{r:?}");
}

fn cylinder_surface_cloud(radius: f64, height: f64) -> PointCloud {
    let mut pts = Vec::new();
    for i in 0..240 {
        let z = -height / 2.0 + height * (i as f64 + 0.5) / 240.0;
        for k in 0..360 {
            let a = TAU * (k as f64 + 0.37 * (i % 3) as f64) / 360.0;
            pts.push(Point::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    PointCloud::unorganized(pts)
}

fn cube_surface_cloud(side: f64) -> PointCloud {
    let h = side / 2.0;
    let n = 120;
    let mut pts = Vec::new();
    let s = |i: usize| -h + side * (i as f64 + 0.5) / n as f64;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (s(i), s(j));
            pts.extend([
                Point::new(h, a, b),
                Point::new(-h, a, b),
                Point::new(a, h, b),
                Point::new(a, -h, b),
                Point::new(a, b, h),
                Point::new(a, b, -h),
            ]);
        }
    }
    PointCloud::unorganized(pts)
}

fn mid_section(mesh: TriangleMesh) -> (f64, f64) {
    let bvh = Bvh::build(mesh).unwrap();
    let probe = CircleProbe::new(Point::new(0.0, 0.0, 0.1), Vector::z()).with_radius(Radius::Auto);
    let m = measure_section(&bvh, &probe).unwrap();
    (m.perimeter, m.area)
}

#[test]
fn sliced_cylinder_keeps_its_girth() {
    let mesh = slice_mesh(&cylinder_surface_cloud(10.0, 60.0), 1.0, &Vector::z()).unwrap();
    assert!(mesh.is_watertight());
    let (perimeter, _) = mid_section(mesh);
    let rel = (perimeter - TAU * 10.0).abs() / (TAU * 10.0);
    assert!(rel < 0.02, "perimeter {perimeter}");
}

#[test]
fn sliced_cube_keeps_its_area() {
    let mesh = slice_mesh(&cube_surface_cloud(20.0), 1.0, &Vector::z()).unwrap();
    let (_, area) = mid_section(mesh);
    assert!((area - 400.0).abs() / 400.0 < 0.03, "area {area}");
}

#[test]
fn sliced_contours_are_angle_ordered() {
    let mesh = slice_mesh(&cylinder_surface_cloud(10.0, 20.0), 1.0, &Vector::z()).unwrap();
    let mut by_height: Vec<(i64, Vec<Point>)> = Vec::new();
    for p in mesh.vertices() {
        let key = (p.z * 1e6).round() as i64;
        match by_height.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ring)) => ring.push(*p),
            None => by_height.push((key, vec![*p])),
        }
    }
    assert_eq!(by_height.len(), 20);
    for (_, ring) in &by_height {
        // the last vertex of a band is its centroid
        let (contour, centroid) = ring.split_at(ring.len() - 1);
        assert!(centroid[0].xy().coords.norm() < 1e-6);
        let angles: Vec<f64> = contour.iter().map(|p| p.y.atan2(p.x)).collect();
        assert!(angles.windows(2).all(|w| w[0] < w[1]));
        assert!(angles[angles.len() - 1] - angles[0] < TAU);
    }
}

#[test]
fn single_band_is_insufficient() {
    let pts = (0..50).map(|k| {
        let a = TAU * k as f64 / 50.0;
        Point::new(a.cos(), a.sin(), 0.2)
    });
    let r = slice_mesh(&PointCloud::unorganized(pts.collect()), 1.0, &Vector::z());
    assert!(matches!(r, Err(Error::InsufficientPoints(_))), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bvh_matches_brute_force(seed in 0u64..1_000_000, kind in 0usize..4, segments in 16usize..200) {
        let spec = match kind {
            0 => ShapeSpec::cylinder(20.0, 30.0),
            1 => ShapeSpec::cone(15.0, 40.0),
            2 => ShapeSpec::sphere(18.0),
            _ => ShapeSpec::cube(25.0),
        }
        .with_segments(segments);
        let mesh = gen_shape(&spec).unwrap();
        let bvh = Bvh::build(mesh.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let ray = random_ray(&mut rng, 80.0);
            let t_max = rng.random_range(1.0..200.0);
            assert_same(bvh.raycast(&ray, t_max), nearest_hit(&mesh, &ray, t_max));
        }
    }

    #[test]
    fn sliced_cylinder_area_tracks_radius(radius in 3.0f64..30.0) {
        let mesh = slice_mesh(&cylinder_surface_cloud(radius, 20.0), 2.0, &Vector::z()).unwrap();
        let (_, area) = mid_section(mesh);
        prop_assert!((area - PI * radius * radius).abs() / (PI * radius * radius) < 0.02);
    }
}
