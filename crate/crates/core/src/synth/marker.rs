use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{gen_shape, simulate_depth, Scene, ShapeSpec, VirtualCamera};
use crate::calib::{CameraRig, CaptureSet, RigidTransform};
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Every visible face must be seen at least this far from edge-on
/// (cosine between the face normal and the direction to the camera).
const MIN_FACE_COSINE: f64 = 0.25;
const CANDIDATES_PER_PLACEMENT: usize = 4000;
const IMAGE_MARGIN_PX: f64 = 8.0;

/// World poses for `count` marker placements. Each placement is chosen
/// among random candidates to cover the camera pairs calibration needs
/// (cameras sharing a row or a mast) that have fewer than three common
/// views so far, where a camera "views" a placement when it sees three
/// faces well inside its image.
pub fn marker_poses(
    rig: &CameraRig,
    world_from_reference: &RigidTransform,
    edge_length: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<RigidTransform>> {
    let cameras: Vec<(RigidTransform, crate::camera::Intrinsics)> = rig
        .cameras
        .iter()
        .map(|c| (world_from_reference.compose(&c.extrinsic), c.intrinsics))
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for a in 0..rig.cameras.len() {
        for b in a + 1..rig.cameras.len() {
            let (ca, cb) = (&rig.cameras[a], &rig.cameras[b]);
            if ca.row == cb.row || ca.mast == cb.mast {
                pairs.push((a, b));
            }
        }
    }
    let mut covered = vec![0usize; pairs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poses = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<(f64, RigidTransform, Vec<bool>)> = None;
        for _ in 0..CANDIDATES_PER_PLACEMENT {
            let center = Vector::new(
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
                rng.random_range(60.0..170.0),
            );
            let yaw = 45f64.to_radians() + rng.random_range(-10f64..10.0).to_radians();
            let pose = RigidTransform::from_axis_angle(&Vector::z(), yaw, center);
            let sees: Vec<bool> = cameras.iter().map(|(cam, k)| sees_three_faces(&pose, edge_length, cam, k)).collect();
            let gain: f64 = pairs
                .iter()
                .zip(&covered)
                .filter(|((a, b), _)| sees[*a] && sees[*b])
                .map(|(_, &c)| 3usize.saturating_sub(c) as f64 + 0.01)
                .sum::<f64>()
                + 1e-3 * sees.iter().filter(|&&s| s).count() as f64;
            if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                best = Some((gain, pose, sees));
            }
        }
        let (gain, pose, sees) = best.expect("at least one candidate");
        if gain <= 0.0 {
            return Err(Error::InvalidParam("no marker placement is visible to the rig".into()));
        }
        for ((a, b), c) in pairs.iter().zip(covered.iter_mut()) {
            if sees[*a] && sees[*b] {
                *c += 1;
            }
        }
        poses.push(pose);
    }
    Ok(poses)
}

fn sees_three_faces(
    cube: &RigidTransform,
    edge: f64,
    camera: &RigidTransform,
    k: &crate::camera::Intrinsics,
) -> bool {
    let eye = Point::from(*camera.translation());
    let half = edge / 2.0;
    let mut visible = 0;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut local = Vector::zeros();
            local[axis] = sign;
            let normal = cube.apply_vector(&local);
            let face_center = cube.apply_point(&Point::from(local * half));
            let cos = (eye - face_center).normalize().dot(&normal);
            if cos >= MIN_FACE_COSINE {
                visible += 1;
            } else if cos > 0.0 {
                return false;
            }
        }
    }
    if visible != 3 {
        return false;
    }
    let to_camera = camera.inverse();
    (0..8).all(|i| {
        let s = |bit: usize| if i & bit != 0 { half } else { -half };
        let p = to_camera.apply_point(&cube.apply_point(&Point::new(s(1), s(2), s(4))));
        if p.z <= 0.0 {
            return false;
        }
        let u = k.fx * p.x / p.z + k.cx;
        let v = k.fy * p.y / p.z + k.cy;
        u >= IMAGE_MARGIN_PX
            && v >= IMAGE_MARGIN_PX
            && u <= k.width as f64 - 1.0 - IMAGE_MARGIN_PX
            && v <= k.height as f64 - 1.0 - IMAGE_MARGIN_PX
    })
}

/// Renders the marker at each pose from every camera of the rig. Noise
/// streams are derived from `seed`, the position and the camera id.
pub fn simulate_marker_captures(
    rig: &CameraRig,
    world_from_reference: &RigidTransform,
    poses: &[RigidTransform],
    edge_length: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<CaptureSet> {
    let cube = gen_shape(&ShapeSpec::cube(edge_length))?;
    let jobs: Vec<(usize, u32)> = (0..poses.len())
        .flat_map(|k| rig.cameras.iter().map(move |c| (k, c.id)))
        .collect();
    let clouds = jobs
        .par_iter()
        .map(|&(k, id)| {
            let camera = rig.camera(id)?;
            let scene = Scene::single(&cube, poses[k])?;
            let stream = seed ^ ((k as u64) << 40) ^ ((id as u64) << 20);
            let virtual_camera = VirtualCamera::new(camera.intrinsics, world_from_reference.compose(&camera.extrinsic))
                .with_noise(noise_sigma, stream);
            simulate_depth(&scene, &virtual_camera)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = CaptureSet::new();
    for (&(k, id), cloud) in jobs.iter().zip(clouds) {
        set.insert(k, id, cloud)?;
    }
    Ok(set)
}
