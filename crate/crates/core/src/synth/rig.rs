use std::f64::consts::FRAC_PI_2;

use super::look_at;
use crate::calib::{CameraRig, RigCamera, RigidTransform};
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Horizontal distance from each mast to the subject axis, cm.
pub const MAST_DISTANCE_CM: f64 = 90.0;
/// Height of the point on the subject axis every camera looks at, cm.
pub const AIM_HEIGHT_CM: f64 = 110.0;
pub const PRESETS: [&str; 2] = ["13cam", "8cam"];

/// `(row, height cm, [(camera id, mast)])`, top level first.
const LEVELS: [(u32, f64, &[(u32, u32)]); 5] = [
    (0, 220.0, &[(1, 0), (2, 2)]),
    (1, 180.0, &[(3, 0), (4, 1), (5, 2), (6, 3)]),
    (2, 120.0, &[(7, 1)]),
    (3, 72.0, &[(8, 1), (9, 3)]),
    (4, 41.0, &[(10, 0), (11, 1), (12, 2), (13, 3)]),
];

/// World pose of a camera on `mast` at `height`. The world frame has its
/// origin on the floor at the subject axis and +z up; mast `m` stands at
/// azimuth `m · 90°`.
pub fn mast_camera_pose(mast: u32, height: f64) -> RigidTransform {
    let azimuth = mast as f64 * FRAC_PI_2;
    let eye = Point::new(MAST_DISTANCE_CM * azimuth.cos(), MAST_DISTANCE_CM * azimuth.sin(), height);
    look_at(&eye, &Point::new(0.0, 0.0, AIM_HEIGHT_CM), &Vector::z()).expect("mast cameras look inward")
}

/// Preset rig and the world pose of its reference camera.
pub fn rig_preset_with_world(name: &str) -> Result<(CameraRig, RigidTransform)> {
    let keep: &[u32] = match name {
        "13cam" => &[0, 1, 2, 3, 4],
        "8cam" => &[1, 4],
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    let mut placed: Vec<(u32, u32, u32, RigidTransform)> = Vec::new();
    for (row, height, cameras) in LEVELS.iter().filter(|(row, _, _)| keep.contains(row)) {
        for &(id, mast) in cameras.iter() {
            placed.push((id, *row, mast, mast_camera_pose(mast, *height)));
        }
    }
    placed.sort_by_key(|c| c.0);
    let world_from_reference = placed[0].3;
    let reference_from_world = world_from_reference.inverse();
    let cameras = placed
        .iter()
        .enumerate()
        .map(|(i, &(id, row, mast, world_pose))| RigCamera {
            id,
            row,
            mast,
            intrinsics: Intrinsics::default(),
            extrinsic: if i == 0 {
                RigidTransform::identity()
            } else {
                reference_from_world.compose(&world_pose)
            },
        })
        .collect();
    Ok((CameraRig::new(placed[0].0, cameras)?, world_from_reference))
}

pub fn rig_preset(name: &str) -> Result<CameraRig> {
    rig_preset_with_world(name).map(|(rig, _)| rig)
}

/// World height of every camera in a preset rig.
pub fn camera_heights(rig: &CameraRig, world_from_reference: &RigidTransform) -> Vec<(u32, f64)> {
    rig.cameras
        .iter()
        .map(|c| (c.id, world_from_reference.compose(&c.extrinsic).translation().z))
        .collect()
}
