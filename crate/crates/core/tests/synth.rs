mod common;

use std::collections::HashMap;

use common::depth_oracle;

use girthkit::calib::RigidTransform;
use girthkit::camera::Intrinsics;
use girthkit::cloud::PointCloud;
use girthkit::geom::Vector;
use girthkit::mesh::TriangleMesh;
use girthkit::synth::{camera_heights, gen_shape, rig_preset_with_world, simulate_depth, Scene, ShapeSpec, VirtualCamera};
use proptest::prelude::*;

/// Divergence-theorem volume, summed independently of the mesh helpers.
fn tetra_volume(mesh: &TriangleMesh) -> f64 {
    mesh.triangles()
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| mesh.vertices()[i as usize].coords);
            a.dot(&b.cross(&c)) / 6.0
        })
        .sum()
}

fn edges_shared_twice(mesh: &TriangleMesh) -> bool {
    let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
    for t in mesh.triangles() {
        for i in 0..3 {
            *directed.entry((t[i], t[(i + 1) % 3])).or_default() += 1;
        }
    }
    directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

#[test]
fn cube_fifteen_volume() {
    let spec = ShapeSpec::cube(15.0);
    let mesh = gen_shape(&spec).unwrap();
    assert_eq!(mesh.triangles().len(), 12);
    assert!((tetra_volume(&mesh) - 3375.00).abs() < 1e-9);
    assert!((spec.volume() - 3375.00).abs() < 1e-9);
}

#[test]
fn cylinder_volume_matches_table_value() {
    let mesh = gen_shape(&ShapeSpec::cylinder(25.0, 50.0).with_segments(512)).unwrap();
    let rel = (tetra_volume(&mesh) - 98_174.77).abs() / 98_174.77;
    assert!(rel < 5e-4, "{rel}");
    assert!((ShapeSpec::cylinder(25.0, 50.0).volume() - 98_174.77).abs() < 0.005);
}

#[test]
fn cone_analytic_volume() {
    assert!((ShapeSpec::cone(25.0, 50.0).volume() - 32_724.92).abs() < 0.005);
}

#[test]
fn every_shape_is_watertight_at_default_density() {
    for spec in [
        ShapeSpec::cube(15.0),
        ShapeSpec::cube(50.0),
        ShapeSpec::cylinder(25.0, 50.0),
        ShapeSpec::cone(25.0, 50.0),
        ShapeSpec::pyramid(30.0, 30.0),
        ShapeSpec::sphere(10.0),
    ] {
        let mesh = gen_shape(&spec).unwrap();
        let rel = (tetra_volume(&mesh) - spec.volume()).abs() / spec.volume();
        assert!(rel <= 1e-3, "{}: {rel}", spec.name());
        assert!(edges_shared_twice(&mesh), "{}", spec.name());
    }
}

fn depths(cloud: &PointCloud) -> Vec<Option<f64>> {
    (0..cloud.len()).map(|i| cloud.is_valid(i).then(|| cloud.points[i].z)).collect()
}

#[test]
fn noiseless_depth_equals_per_pixel_raycast() {
    let cube = gen_shape(&ShapeSpec::cube(30.0)).unwrap();
    let pose = RigidTransform::from_axis_angle(&Vector::new(1.0, 2.0, 0.5), 0.7, Vector::new(4.0, -3.0, 120.0));
    let camera = VirtualCamera::new(Intrinsics::default().scaled(0.25), RigidTransform::identity());
    let cloud = simulate_depth(&Scene::single(&cube, pose).unwrap(), &camera).unwrap();
    let oracle = depth_oracle(&cube, &pose, &camera);
    assert!(oracle.iter().filter(|d| d.is_some()).count() > 500);
    for (got, want) in depths(&cloud).iter().zip(&oracle) {
        match (got, want) {
            (None, None) => {}
            (Some(g), Some(w)) => assert_eq!(g, w),
            other => panic!("validity differs: {other:?}"),
        }
    }
}

#[test]
fn noise_is_axial_and_seeded() {
    let cube = gen_shape(&ShapeSpec::cube(40.0)).unwrap();
    let scene = Scene::single(&cube, RigidTransform::translation_only(Vector::new(0.0, 0.0, 120.0))).unwrap();
    let base = VirtualCamera::new(Intrinsics::default().scaled(0.25), RigidTransform::identity());
    let clean = simulate_depth(&scene, &base).unwrap();
    let noisy = simulate_depth(&scene, &base.clone().with_noise(0.3, 17)).unwrap();
    let again = simulate_depth(&scene, &base.clone().with_noise(0.3, 17)).unwrap();
    assert_eq!(format!("{:?}", noisy.points), format!("{:?}", again.points));
    let mut residuals = Vec::new();
    for i in clean.valid_indices() {
        let (c, n) = (clean.points[i], noisy.points[i]);
        // the noisy point stays on the pixel ray
        assert!(c.coords.normalize().cross(&n.coords.normalize()).norm() < 1e-9);
        residuals.push(n.z - c.z);
    }
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    assert!((rms - 0.3).abs() < 0.03, "{rms}");
}

#[test]
fn presets_place_cameras_at_level_heights() {
    let (rig, world) = rig_preset_with_world("13cam").unwrap();
    let heights = camera_heights(&rig, &world);
    let expected = [220.0, 220.0, 180.0, 180.0, 180.0, 180.0, 120.0, 72.0, 72.0, 41.0, 41.0, 41.0, 41.0];
    for ((id, h), want) in heights.iter().zip(expected) {
        assert!((h - want).abs() < 1e-9, "camera {id}: {h}");
    }
    for c in &rig.cameras {
        let eye = world.compose(&c.extrinsic).translation().xy().norm();
        assert!((eye - 90.0).abs() < 1e-9);
    }
    let (rig8, world8) = rig_preset_with_world("8cam").unwrap();
    let ids: Vec<u32> = rig8.ids();
    assert_eq!(ids, vec![3, 4, 5, 6, 10, 11, 12, 13]);
    assert!(camera_heights(&rig8, &world8).iter().all(|(_, h)| *h == 180.0 || *h == 41.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_volume_tracks_analytic(
        kind in 0usize..5,
        a in 2.0f64..60.0,
        b in 2.0f64..60.0,
    ) {
        let spec = match kind {
            0 => ShapeSpec::cube(a),
            1 => ShapeSpec::cylinder(a, b),
            2 => ShapeSpec::cone(a, b),
            3 => ShapeSpec::pyramid(a, b),
            _ => ShapeSpec::sphere(a),
        };
        let mesh = gen_shape(&spec).unwrap();
        let rel = (tetra_volume(&mesh) - spec.volume()).abs() / spec.volume();
        prop_assert!(rel <= 1e-3, "{}: {rel}", spec.name());
        prop_assert!(edges_shared_twice(&mesh));
    }
}
