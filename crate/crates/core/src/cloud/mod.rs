//! Point clouds and the depth pre-processing chain: depth truncation,
//! median, bilateral and statistical-outlier filters, and normal estimation.

mod filters;
mod io;
mod knn;
pub(crate) mod normals;

pub use filters::{bilateral_filter, median_filter, sor_filter, truncate_depth, FilterConfig};
pub use io::{load_cloud_ply, load_organized_raw, save_cloud_ply, save_organized_raw, RawHeader};
pub use knn::KdTree;
pub use normals::{estimate_normals, NormalEstimate};

use crate::calib::RigidTransform;
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Pixel grid of an organized cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

/// 3D points in centimeters, optionally laid out on the sensor's pixel grid.
///
/// Organized clouds keep one slot per pixel. Slots without a measurement hold
/// [`PointCloud::INVALID`] (all-NaN coordinates), and so do their normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub normals: Option<Vec<Vector>>,
    pub grid: Option<GridDims>,
    pub sensor_origin: Point,
}

impl PointCloud {
    pub const INVALID: Point = Point::new(f64::NAN, f64::NAN, f64::NAN);

    pub fn unorganized(points: Vec<Point>) -> Self {
        Self {
            points,
            normals: None,
            grid: None,
            sensor_origin: Point::origin(),
        }
    }

    pub fn organized(width: usize, height: usize, points: Vec<Point>) -> Result<Self> {
        if width * height != points.len() {
            return Err(Error::InvalidParam(format!(
                "grid {width}x{height} does not match {} slots",
                points.len()
            )));
        }
        Ok(Self {
            points,
            normals: None,
            grid: Some(GridDims { width, height }),
            sensor_origin: Point::origin(),
        })
    }

    pub fn with_sensor_origin(mut self, origin: Point) -> Self {
        self.sensor_origin = origin;
        self
    }

    pub fn with_normals(mut self, normals: Vec<Vector>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::InvalidParam("normals must parallel points".into()));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_organized(&self) -> bool {
        self.grid.is_some()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.points[index].x.is_finite()
    }

    pub fn valid_count(&self) -> usize {
        (0..self.points.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Indices of slots holding a measurement.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| self.is_valid(i)).collect()
    }

    /// Depth of a slot: its `z` offset from the sensor origin.
    pub fn depth(&self, index: usize) -> f64 {
        self.points[index].z - self.sensor_origin.z
    }

    /// Keeps only valid slots. The grid layout is dropped.
    pub fn compacted(&self) -> PointCloud {
        let keep = self.valid_indices();
        PointCloud {
            points: keep.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| keep.iter().map(|&i| n[i]).collect()),
            grid: None,
            sensor_origin: self.sensor_origin,
        }
    }

    /// Applies a rigid motion to points, normals and the sensor origin.
    /// Invalid slots stay invalid and the grid layout is kept.
    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply_point(p)).collect(),
            normals: self.normals.as_ref().map(|n| n.iter().map(|v| t.apply_vector(v)).collect()),
            grid: self.grid,
            sensor_origin: t.apply_point(&self.sensor_origin),
        }
    }

    /// Removes (unorganized) or invalidates (organized) the given slots.
    pub(crate) fn without(&self, remove: &[bool]) -> PointCloud {
        if self.is_organized() {
            let mut out = self.clone();
            for (i, &r) in remove.iter().enumerate() {
                if r {
                    out.points[i] = Self::INVALID;
                    if let Some(n) = out.normals.as_mut() {
                        n[i] = Vector::repeat(f64::NAN);
                    }
                }
            }
            out
        } else {
            let keep: Vec<usize> = (0..self.points.len()).filter(|&i| !remove[i]).collect();
            PointCloud {
                points: keep.iter().map(|&i| self.points[i]).collect(),
                normals: self.normals.as_ref().map(|n| keep.iter().map(|&i| n[i]).collect()),
                grid: None,
                sensor_origin: self.sensor_origin,
            }
        }
    }

    pub(crate) fn require_grid(&self) -> Result<GridDims> {
        self.grid.ok_or(Error::NotOrganized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn organized_requires_matching_slots() {
        assert!(PointCloud::organized(2, 2, vec![Point::origin(); 3]).is_err());
        let c = PointCloud::organized(2, 1, vec![Point::origin(), PointCloud::INVALID]).unwrap();
        assert_eq!(c.valid_count(), 1);
        assert_eq!(c.compacted().len(), 1);
    }
}
