use std::f64::consts::TAU;

use girthkit::calib::{CameraRig, RigidTransform};
use girthkit::cloud::{FilterConfig, PointCloud};
use girthkit::geom::{Point, Vector};
use girthkit::mesh::Bvh;
use girthkit::pipeline::{fuse_scans, reconstruct, DEFAULT_BAND_HEIGHT_CM};
use girthkit::probes::{measure_section, CircleProbe, Radius};
use girthkit::synth::{gen_shape, rig_preset_with_world, simulate_depth, Scene, ShapeSpec, VirtualCamera};

fn scan(rig: &CameraRig, world: &RigidTransform, sigma: f64, seed: u64) -> Vec<(u32, PointCloud)> {
    let cylinder = gen_shape(&ShapeSpec::cylinder(10.0, 60.0)).unwrap();
    let scene = Scene::single(&cylinder, RigidTransform::translation_only(Vector::new(0.0, 0.0, 110.0))).unwrap();
    rig.cameras
        .iter()
        .map(|c| {
            let camera = VirtualCamera::new(c.intrinsics, world.compose(&c.extrinsic)).with_noise(sigma, seed ^ c.id as u64);
            (c.id, simulate_depth(&scene, &camera).unwrap())
        })
        .collect()
}

#[test]
fn scanned_cylinder_girth() {
    let (rig, world) = rig_preset_with_world("8cam").unwrap();
    let fused = fuse_scans(&scan(&rig, &world, 0.1, 7), &rig, &FilterConfig::default()).unwrap();
    let mesh = reconstruct(&fused, &rig, DEFAULT_BAND_HEIGHT_CM).unwrap();
    let bvh = Bvh::build(mesh).unwrap();
    let to_reference = world.inverse();
    let center = to_reference.apply_point(&Point::new(0.0, 0.0, 110.0));
    let probe = CircleProbe::new(center, rig.vertical_axis().unwrap()).with_radius(Radius::Auto);
    let m = measure_section(&bvh, &probe).unwrap();
    let rel = (m.perimeter - TAU * 10.0).abs() / (TAU * 10.0);
    assert!(rel < 0.02, "perimeter {} ({rel})", m.perimeter);
}
