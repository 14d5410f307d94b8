use std::f64::consts::{PI, TAU};

use girthkit::calib::RigidTransform;
use girthkit::geom::{Point, Vector};
use girthkit::mesh::Bvh;
use girthkit::probes::{
    autofit_radius, measure_report, measure_section, measure_volume, pivot_area, CircleProbe, CylinderProbe,
    PerimeterClosure, Radius,
};
use girthkit::synth::{gen_shape, ShapeSpec};
use girthkit::Error;
use proptest::prelude::*;

fn bvh(spec: ShapeSpec) -> Bvh {
    Bvh::build(gen_shape(&spec).unwrap()).unwrap()
}

fn horizontal(z: f64) -> CircleProbe {
    CircleProbe::new(Point::new(0.0, 0.0, z), Vector::z())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

#[test]
fn autofit_cube_reaches_the_corner() {
    let r = autofit_radius(&bvh(ShapeSpec::cube(15.0)), &Point::origin(), &Vector::z()).unwrap();
    assert!((r - 1.2 * 7.5 * 2f64.sqrt()).abs() < 1e-9, "{r}");
}

#[test]
fn autofit_sphere_is_twelve() {
    let r = autofit_radius(&bvh(ShapeSpec::sphere(10.0)), &Point::origin(), &Vector::z()).unwrap();
    assert!((r - 12.0).abs() < 1e-9, "{r}");
}

#[test]
fn autofit_falls_back_to_bounding_sphere() {
    let mesh = gen_shape(&ShapeSpec::cube(15.0)).unwrap();
    let (c, radius) = mesh.bounding_sphere().unwrap();
    let tree = Bvh::build(mesh).unwrap();
    let center = Point::new(40.0, 0.0, 100.0);
    let r = autofit_radius(&tree, &center, &Vector::z()).unwrap();
    let offset = ((c.x - 40.0).powi(2) + c.y.powi(2)).sqrt();
    assert!((r - 1.2 * (offset + radius)).abs() < 1e-9);
}

#[test]
fn cube_section_at_ten_thousand_rays() {
    let m = measure_section(&bvh(ShapeSpec::cube(15.0)), &horizontal(0.0)).unwrap();
    assert!((m.perimeter - 59.99).abs() <= 0.03, "perimeter {}", m.perimeter);
    assert!((m.area - 225.03).abs() <= 0.5, "area {}", m.area);
    assert_eq!(m.rays_fired, 10_000);
    assert_eq!(m.rays_missed, 0);
}

#[test]
fn cube_section_at_one_hundred_rays_underestimates() {
    let m = measure_section(&bvh(ShapeSpec::cube(15.0)), &horizontal(0.0).with_rays(100)).unwrap();
    // inscribed polygon through 100 boundary points
    assert!(m.perimeter < 60.0);
    assert!(rel(m.perimeter, 60.0) < 0.03, "{}", m.perimeter);
}

#[test]
fn open_polyline_drops_the_closing_segment() {
    let tree = bvh(ShapeSpec::cube(15.0));
    let closed = measure_section(&tree, &horizontal(0.0).with_rays(100)).unwrap();
    let open = measure_section(&tree, &horizontal(0.0).with_rays(100).with_closure(PerimeterClosure::Open)).unwrap();
    let closing = (closed.hits[0] - closed.hits[closed.hits.len() - 1]).norm();
    assert!((closed.perimeter - open.perimeter - closing).abs() < 1e-12);
    assert!((open.perimeter - 58.47).abs() < 0.05, "{}", open.perimeter);
    assert_eq!(open.area, closed.area);
}

#[test]
fn probe_above_mesh_has_no_section() {
    let r = measure_section(&bvh(ShapeSpec::cube(15.0)), &horizontal(20.0).with_radius(Radius::Fixed(20.0)));
    assert!(matches!(r, Err(Error::NoSection { hits: 0 })));
}

#[test]
fn too_few_rays_is_invalid() {
    let r = measure_section(&bvh(ShapeSpec::cube(15.0)), &horizontal(0.0).with_rays(4));
    assert!(matches!(r, Err(Error::InvalidParam(_))));
}

#[test]
fn cylinder_section_matches_circle() {
    let r = 200.0 / TAU;
    let m = measure_section(&bvh(ShapeSpec::cylinder(r, 50.0)), &horizontal(0.0).with_rays(1000)).unwrap();
    assert!(rel(m.perimeter, 200.0) < 3e-3, "{}", m.perimeter);
    assert!(rel(m.area, 100.0 * 100.0 / PI) < 3e-3, "{}", m.area);
}

#[test]
fn cube_volume_with_unit_slices() {
    let probe = CylinderProbe::new(horizontal(7.5), 15.0);
    let v = measure_volume(&bvh(ShapeSpec::cube(15.0)), &probe).unwrap();
    assert_eq!(v.slice_areas.len(), 15);
    assert!((v.volume - 3375.15).abs() <= 17.0, "{}", v.volume);
}

#[test]
fn cylinder_volume() {
    let probe = CylinderProbe::new(horizontal(25.0), 50.0);
    let v = measure_volume(&bvh(ShapeSpec::cylinder(25.0, 50.0)), &probe).unwrap();
    assert!(rel(v.volume, 98_174.77) < 0.01, "{}", v.volume);
}

#[test]
fn short_cylinder_is_one_partial_slab() {
    let tree = bvh(ShapeSpec::cube(15.0));
    let probe = CylinderProbe::new(horizontal(1.0), 0.4);
    let v = measure_volume(&tree, &probe).unwrap();
    assert_eq!(v.slice_areas.len(), 1);
    let s = v.slice_areas[0];
    assert!((s.offset_cm - 0.2).abs() < 1e-12 && (s.thickness_cm - 0.4).abs() < 1e-12);
    assert!((v.volume - s.area_cm2 * 0.4).abs() < 1e-9);
}

#[test]
fn slab_count_is_ceiling_of_height_over_step() {
    let tree = bvh(ShapeSpec::cylinder(10.0, 20.0));
    let probe = CylinderProbe::new(horizontal(10.0), 7.5).with_slice_step(2.0);
    let v = measure_volume(&tree, &probe).unwrap();
    let offsets: Vec<f64> = v.slice_areas.iter().map(|s| s.offset_cm).collect();
    assert_eq!(offsets, vec![1.0, 3.0, 5.0, 6.75]);
    let sum: f64 = v.slice_areas.iter().map(|s| s.area_cm2 * s.thickness_cm).sum();
    assert_eq!(sum, v.volume);
}

#[test]
fn empty_slices_contribute_nothing() {
    let tree = bvh(ShapeSpec::cube(10.0));
    // top circle 5 cm above the cube
    let probe = CylinderProbe::new(horizontal(10.0).with_radius(Radius::Fixed(12.0)), 10.0);
    let v = measure_volume(&tree, &probe).unwrap();
    assert!(v.slice_areas[..5].iter().all(|s| s.area_cm2 == 0.0));
    assert!(rel(v.volume, 500.0) < 0.01);
    let above = CylinderProbe::new(horizontal(30.0).with_radius(Radius::Fixed(12.0)), 5.0);
    assert!(matches!(measure_volume(&tree, &above), Err(Error::NoSection { .. })));
}

#[test]
fn hits_lie_on_the_probe_plane() {
    let tree = bvh(ShapeSpec::cone(25.0, 50.0));
    let normal = Vector::new(0.3, -0.2, 1.0).normalize();
    let probe = CircleProbe::new(Point::new(1.0, 2.0, 3.0), normal).with_rays(2000);
    let m = measure_section(&tree, &probe).unwrap();
    for h in &m.hits {
        assert!((h - probe.center).dot(&normal).abs() < 1e-6);
    }
}

#[test]
fn measurement_is_deterministic() {
    let tree = bvh(ShapeSpec::sphere(10.0));
    let probe = horizontal(2.5).with_rays(5000);
    let a = serde_json::to_string(&measure_section(&tree, &probe).unwrap()).unwrap();
    let b = serde_json::to_string(&measure_section(&tree, &probe).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_carries_volume_fields_only_when_requested() {
    let tree = bvh(ShapeSpec::cube(15.0));
    let section = serde_json::to_value(measure_report(&tree, &horizontal(0.0), None).unwrap()).unwrap();
    assert!(section.get("volume_cm3").is_none() && section.get("slice_areas").is_none());
    for key in ["probe", "perimeter_cm", "area_cm2", "rays_fired", "rays_missed", "hits"] {
        assert!(section.get(key).is_some(), "{key}");
    }
    assert_eq!(section["probe"]["radius"], "auto");
    let full = serde_json::to_value(measure_report(&tree, &horizontal(7.4), Some((14.8, 1.0))).unwrap()).unwrap();
    assert!(full["volume_cm3"].as_f64().unwrap() > 3000.0);
    assert_eq!(full["slice_areas"].as_array().unwrap().len(), 15);
}

#[test]
fn inscribed_polygon_bound_on_convex_sections() {
    for spec in [ShapeSpec::cube(50.0), ShapeSpec::cylinder(25.0, 50.0), ShapeSpec::pyramid(30.0, 30.0)] {
        let tree = bvh(spec);
        for rays in [100, 1000, 10_000] {
            let m = measure_section(&tree, &horizontal(0.0).with_rays(rays)).unwrap();
            assert!(m.perimeter <= spec.perimeter(0.0) * (1.0 + 1e-12), "{} at {rays}", spec.name());
        }
    }
}

fn shoelace(points: &[Point], u: &Vector, v: &Vector) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a.coords.dot(u) * b.coords.dot(v) - b.coords.dot(u) * a.coords.dot(v)
        })
        .sum::<f64>()
        / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rigid_motion_preserves_measurements(
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..TAU,
        shift in prop::array::uniform3(-50.0f64..50.0),
        which in 0usize..3,
    ) {
        let axis = Vector::from(axis);
        prop_assume!(axis.norm() > 0.1);
        let spec = [ShapeSpec::cube(15.0), ShapeSpec::cone(25.0, 50.0), ShapeSpec::sphere(10.0)][which];
        let mesh = gen_shape(&spec).unwrap();
        let g = RigidTransform::from_axis_angle(&axis, angle, Vector::from(shift));
        let moved = mesh.map_vertices(|p| g.apply_point(p), |n| g.apply_vector(n)).unwrap();
        let probe = CircleProbe::new(Point::new(0.5, -0.3, 1.0), Vector::z()).with_rays(720);
        let (u, _) = probe.basis();
        let moved_probe = CircleProbe::new(g.apply_point(&probe.center), g.apply_vector(&probe.normal))
            .with_rays(720)
            .with_reference(g.apply_vector(&u));

        let a = measure_section(&Bvh::build(mesh.clone()).unwrap(), &probe).unwrap();
        let b = measure_section(&Bvh::build(moved.clone()).unwrap(), &moved_probe).unwrap();
        prop_assert!(rel(b.perimeter, a.perimeter) < 1e-6);
        prop_assert!(rel(b.area, a.area) < 1e-6);

        let height = spec.height() / 2.0;
        let va = measure_volume(&Bvh::build(mesh).unwrap(), &CylinderProbe::new(probe.clone(), height)).unwrap();
        let vb = measure_volume(&Bvh::build(moved).unwrap(), &CylinderProbe::new(moved_probe, height)).unwrap();
        prop_assert!(rel(vb.volume, va.volume) < 1e-6);
    }

    #[test]
    fn pivot_area_equals_shoelace(
        radii in prop::collection::vec(1.0f64..10.0, 3..60),
        pivot in prop::array::uniform2(-20.0f64..20.0),
        tilt in prop::array::uniform3(-1.0f64..1.0),
    ) {
        // star-shaped polygon around the origin, on a tilted plane
        let normal = (Vector::z() + Vector::from(tilt) * 0.5).normalize();
        let probe = CircleProbe::new(Point::origin(), normal);
        let (u, v) = probe.basis();
        let n = radii.len();
        let points: Vec<Point> = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = TAU * i as f64 / n as f64;
                Point::from((u * a.cos() + v * a.sin()) * *r)
            })
            .collect();
        let pivot = Point::from(u * pivot[0] + v * pivot[1]);
        let a = pivot_area(&points, &pivot, &normal);
        let s = shoelace(&points, &u, &v);
        prop_assert!((a - s).abs() <= 1e-9 * s.abs());
    }
}
