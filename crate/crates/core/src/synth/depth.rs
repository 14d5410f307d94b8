use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::calib::RigidTransform;
use crate::camera::Intrinsics;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::mesh::{Bvh, Ray, TriangleMesh};

/// Meshes placed in the world frame, merged into one ray-query index.
pub struct Scene {
    bvh: Bvh,
}

impl Scene {
    pub fn new(objects: &[(&TriangleMesh, RigidTransform)]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (mesh, pose) in objects {
            let base = vertices.len() as u32;
            vertices.extend(mesh.vertices().iter().map(|p| pose.apply_point(p)));
            triangles.extend(mesh.triangles().iter().map(|t| t.map(|i| i + base)));
        }
        Ok(Scene {
            bvh: Bvh::build(TriangleMesh::new(vertices, triangles)?)?,
        })
    }

    pub fn single(mesh: &TriangleMesh, pose: RigidTransform) -> Result<Self> {
        Self::new(&[(mesh, pose)])
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }
}

/// Pinhole depth sensor. The pose maps camera coordinates (x right, y down,
/// z forward) to world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCamera {
    pub intrinsics: Intrinsics,
    pub pose: RigidTransform,
    /// Standard deviation of the depth noise, cm.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl VirtualCamera {
    pub fn new(intrinsics: Intrinsics, pose: RigidTransform) -> Self {
        VirtualCamera {
            intrinsics,
            pose,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    /// World-frame ray through the center of pixel `(u, v)` and that ray's
    /// unit direction in the camera frame.
    pub fn pixel_ray(&self, u: u32, v: u32) -> (Ray, Vector) {
        let local = self.intrinsics.pixel_ray(u, v).normalize();
        let origin = Point::from(*self.pose.translation());
        (Ray::new(origin, self.pose.apply_vector(&local)), local)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParam(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

/// Far limit of simulated rays, cm.
pub const MAX_RANGE_CM: f64 = 1.0e4;

/// Seed of the noise stream for one pixel (SplitMix64 finalizer).
fn pixel_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders an organized cloud in the camera frame. Each pixel's depth is the
/// nearest hit along its ray plus Gaussian noise on `z`; misses are invalid.
pub fn simulate_depth(scene: &Scene, camera: &VirtualCamera) -> Result<PointCloud> {
    camera.validate()?;
    let k = &camera.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let noise = (camera.noise_sigma > 0.0).then(|| Normal::new(0.0, camera.noise_sigma).unwrap());
    let points: Vec<Point> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (u, v) = ((i % w) as u32, (i / w) as u32);
            let (ray, local) = camera.pixel_ray(u, v);
            let Some(hit) = scene.bvh.raycast(&ray, MAX_RANGE_CM) else {
                return PointCloud::INVALID;
            };
            let mut z = hit.distance * local.z;
            if let Some(noise) = &noise {
                let mut rng = ChaCha8Rng::seed_from_u64(pixel_seed(camera.seed, i as u64));
                z += noise.sample(&mut rng);
            }
            if z <= 0.0 {
                return PointCloud::INVALID;
            }
            Point::from(k.pixel_ray(u, v) * z)
        })
        .collect();
    PointCloud::organized(w, h, points)
}

/// Camera pose at `eye` looking at `target`, with image "up" toward `up`.
pub fn look_at(eye: &Point, target: &Point, up: &Vector) -> Result<RigidTransform> {
    let forward = (target - eye).try_normalize(1e-12).ok_or_else(|| {
        Error::InvalidParam("camera eye and target coincide".into())
    })?;
    let right = forward
        .cross(up)
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidParam("up vector is parallel to the viewing direction".into()))?;
    let down = forward.cross(&right);
    let rotation = nalgebra::Matrix3::from_columns(&[right, down, forward]);
    RigidTransform::new(rotation, eye.coords)
}
