//! Scan-to-mesh chain: per-view filtering, fusion into the rig reference
//! frame and meshing by axial slicing.

use rayon::prelude::*;

use crate::calib::{fuse, CameraRig};
use crate::cloud::{bilateral_filter, estimate_normals, median_filter, sor_filter, truncate_depth, FilterConfig, PointCloud};
use crate::error::{Error, Result};
use crate::mesh::{slice_mesh, TriangleMesh};

/// Band height used by [`reconstruct`] unless configured otherwise, cm.
pub const DEFAULT_BAND_HEIGHT_CM: f64 = 1.0;

/// Filters one organized camera-frame view: truncate, median, bilateral,
/// statistical outlier removal, then normals oriented toward the sensor.
pub fn preprocess(cloud: &PointCloud, config: &FilterConfig) -> Result<PointCloud> {
    config.validate()?;
    if !cloud.is_organized() {
        return Err(Error::NotOrganized);
    }
    let c = truncate_depth(cloud, config.z_max_cm)?;
    let c = median_filter(&c, config.median_window)?;
    let c = bilateral_filter(&c, config.bilateral_sigma_s_px, config.bilateral_sigma_r_cm)?;
    let c = sor_filter(&c, config.sor_k, config.sor_stddev_mult)?;
    let viewpoint = c.sensor_origin;
    Ok(estimate_normals(&c, config.normals_k, &viewpoint)?.cloud)
}

/// Preprocesses every view and fuses the results into the reference frame.
pub fn fuse_scans(scans: &[(u32, PointCloud)], rig: &CameraRig, config: &FilterConfig) -> Result<PointCloud> {
    let filtered = scans
        .par_iter()
        .map(|(id, cloud)| {
            rig.camera(*id)?;
            Ok((*id, preprocess(cloud, config)?))
        })
        .collect::<Result<Vec<_>>>()?;
    fuse(&filtered, rig)
}

/// Meshes a fused cloud by slicing it along the rig's vertical axis.
pub fn reconstruct(fused: &PointCloud, rig: &CameraRig, band_height: f64) -> Result<TriangleMesh> {
    let axis = rig
        .vertical_axis()
        .ok_or_else(|| Error::InvalidParam("rig has no mast spanning two rows; vertical axis unknown".into()))?;
    slice_mesh(fused, band_height, &axis)
}
