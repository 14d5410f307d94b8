//! Cube-marker fitting: the three visible faces of a cube of known edge
//! length are segmented by normal direction, regressed as mutually
//! orthogonal planes and refined by point reassignment. The cube center is
//! the calibration correspondence.

use std::collections::HashMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::RigidTransform;
use crate::cloud::normals::pca_normal;
use crate::cloud::{estimate_normals, PointCloud};
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

pub const DEFAULT_EDGE_LENGTH_CM: f64 = 30.0;
pub const DEFAULT_VIEW_SCORE_LAMBDA: f64 = 0.1;

const MIN_POINTS: usize = 300;
const MIN_CLUSTER_FRACTION: f64 = 0.05;
const MAX_ITERATIONS: usize = 50;
const CONVERGED_FRACTION: f64 = 0.001;
const NONCONVERGENT_RESIDUAL_CM: f64 = 1.0;
/// Face directions closer than 60° are treated as the same face.
const MAX_AXIS_COSINE: f64 = 0.5;
const NORMALS_K: usize = 30;
const KMEANS_ITERATIONS: usize = 20;
const HISTOGRAM_STEPS: f64 = 8.0;

/// Fitted cube marker. Plane `j` is `normals[j] · p = offsets[j]`, with the
/// normal pointing out of the cube (toward the sensor).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeMarkerModel {
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
    pub center: Point,
    pub edge_length: f64,
    pub visible_plane_count: usize,
    /// RMS point-to-assigned-plane distance, cm.
    pub residual_rms: f64,
    pub iterations: usize,
}

impl CubeMarkerModel {
    pub fn transformed(&self, t: &RigidTransform) -> CubeMarkerModel {
        let normals: Vec<Vector> = self.normals.iter().map(|n| t.apply_vector(n)).collect();
        let offsets = self
            .offsets
            .iter()
            .zip(&normals)
            .map(|(d, n)| d + n.dot(t.translation()))
            .collect();
        CubeMarkerModel {
            normals,
            offsets,
            center: t.apply_point(&self.center),
            ..self.clone()
        }
    }

    /// Largest `|n_i · n_j|` over distinct plane pairs.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.normals.len() {
            for j in i + 1..self.normals.len() {
                worst = worst.max(self.normals[i].dot(&self.normals[j]).abs());
            }
        }
        worst
    }
}

/// Seeds for spherical k-means: the most populated direction bins that are
/// pairwise far apart.
fn histogram_seeds(normals: &[Vector]) -> Vec<Vector> {
    let mut bins: HashMap<[i32; 3], (usize, Vector)> = HashMap::new();
    for n in normals {
        let key = [
            (n.x * HISTOGRAM_STEPS).round() as i32,
            (n.y * HISTOGRAM_STEPS).round() as i32,
            (n.z * HISTOGRAM_STEPS).round() as i32,
        ];
        let e = bins.entry(key).or_insert((0, Vector::zeros()));
        e.0 += 1;
        e.1 += n;
    }
    let mut ranked: Vec<([i32; 3], usize, Vector)> = bins.into_iter().map(|(k, (c, s))| (k, c, s)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut seeds: Vec<Vector> = Vec::with_capacity(3);
    for (_, _, sum) in ranked {
        let dir = sum.normalize();
        if seeds.iter().all(|s| s.dot(&dir).abs() < MAX_AXIS_COSINE) {
            seeds.push(dir);
            if seeds.len() == 3 {
                break;
            }
        }
    }
    seeds
}

fn nearest_center(n: &Vector, centers: &[Vector]) -> usize {
    let mut best = 0;
    for (j, c) in centers.iter().enumerate().skip(1) {
        if c.dot(n) > centers[best].dot(n) {
            best = j;
        }
    }
    best
}

fn spherical_kmeans(normals: &[Vector], mut centers: Vec<Vector>) -> (Vec<Vector>, Vec<usize>) {
    let mut labels = vec![usize::MAX; normals.len()];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (label, n) in labels.iter_mut().zip(normals) {
            let j = nearest_center(n, &centers);
            changed |= *label != j;
            *label = j;
        }
        let mut sums = vec![Vector::zeros(); centers.len()];
        for (n, &l) in normals.iter().zip(&labels) {
            sums[l] += n;
        }
        for (c, s) in centers.iter_mut().zip(sums) {
            if s.norm() > 0.0 {
                *c = s.normalize();
            }
        }
        if !changed {
            break;
        }
    }
    (centers, labels)
}

struct PlaneFit {
    normals: [Vector; 3],
    offsets: [f64; 3],
}

impl PlaneFit {
    fn distance(&self, j: usize, p: &Point) -> f64 {
        self.normals[j].dot(&p.coords) - self.offsets[j]
    }

    fn nearest(&self, p: &Point) -> usize {
        (0..3)
            .min_by(|&a, &b| self.distance(a, p).abs().total_cmp(&self.distance(b, p).abs()))
            .unwrap()
    }
}

/// Per-cluster PCA planes, projected onto the nearest orthonormal frame, with
/// offsets refit for the projected normals.
fn regress(points: &[Point], labels: &[usize], orientation: &[Vector]) -> Result<PlaneFit> {
    let min_count = (MIN_CLUSTER_FRACTION * points.len() as f64).ceil() as usize;
    let mut rows = Matrix3::zeros();
    for j in 0..3 {
        let members: Vec<&Point> = points.iter().zip(labels).filter(|(_, &l)| l == j).map(|(p, _)| p).collect();
        if members.len() < min_count.max(3) {
            return Err(Error::InvalidCapture(format!(
                "face {j} has {} of {} points after reassignment",
                members.len(),
                points.len()
            )));
        }
        let (mut n, _) = pca_normal(members.iter().copied());
        if n.dot(&orientation[j]) < 0.0 {
            n = -n;
        }
        rows.set_row(j, &n.transpose());
    }
    let svd = rows.svd(true, true);
    let frame = svd.u.unwrap() * svd.v_t.unwrap();
    let normals: [Vector; 3] = std::array::from_fn(|j| frame.row(j).transpose());
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for (p, &l) in points.iter().zip(labels) {
        sums[l] += normals[l].dot(&p.coords);
        counts[l] += 1;
    }
    let offsets = std::array::from_fn(|j| sums[j] / counts[j] as f64);
    Ok(PlaneFit { normals, offsets })
}

/// Fits a cube marker of known edge length to a capture of its three
/// visible faces. Normals are estimated (toward the sensor origin) when the
/// cloud carries none.
pub fn fit_cube_marker(cloud: &PointCloud, edge_length: f64) -> Result<CubeMarkerModel> {
    if !(edge_length > 0.0) {
        return Err(Error::InvalidParam(format!("edge length must be positive, got {edge_length}")));
    }
    let compact = cloud.compacted();
    let n = compact.len();
    if n < MIN_POINTS {
        return Err(Error::InvalidCapture(format!("{n} valid points, need {MIN_POINTS}")));
    }
    let with_normals = match &compact.normals {
        Some(normals) if normals.iter().all(|v| v.iter().all(|c| c.is_finite())) => compact,
        _ => estimate_normals(&compact, NORMALS_K, &cloud.sensor_origin)?.cloud,
    };
    let points = &with_normals.points;
    let normals = with_normals.normals.as_ref().unwrap();

    let seeds = histogram_seeds(normals);
    if seeds.len() < 3 {
        return Err(Error::InvalidCapture(format!("{} distinct face orientations, need 3", seeds.len())));
    }
    let (centers, labels) = spherical_kmeans(normals, seeds);
    let mut counts = [0usize; 3];
    for &l in &labels {
        counts[l] += 1;
    }
    let min_count = (MIN_CLUSTER_FRACTION * n as f64).ceil() as usize;
    let surviving = counts.iter().filter(|&&c| c >= min_count).count();
    if surviving < 3 {
        return Err(Error::InvalidCapture(format!("{surviving} planar patches with at least 5% of points, need 3")));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            if centers[i].dot(&centers[j]).abs() > MAX_AXIS_COSINE {
                return Err(Error::InvalidCapture("planar patches are not mutually orthogonal".into()));
            }
        }
    }

    let mut labels = labels;
    let mut fit = regress(points, &labels, &centers)?;
    let mut iterations = 1;
    loop {
        let reassigned: Vec<usize> = points.iter().map(|p| fit.nearest(p)).collect();
        let moved = reassigned.iter().zip(&labels).filter(|(a, b)| a != b).count();
        labels = reassigned;
        if moved == 0 {
            break;
        }
        fit = regress(points, &labels, &centers)?;
        if moved as f64 <= CONVERGED_FRACTION * n as f64 {
            break;
        }
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            let residual = residual_rms(points, &labels, &fit);
            if residual > NONCONVERGENT_RESIDUAL_CM {
                return Err(Error::NonConvergent {
                    iterations: MAX_ITERATIONS,
                    residual_cm: residual,
                });
            }
            log::warn!("cube fit hit the iteration cap with residual {residual:.3} cm");
            iterations = MAX_ITERATIONS;
            break;
        }
    }

    let half = edge_length / 2.0;
    let center = Point::from((0..3).map(|j| fit.normals[j] * (fit.offsets[j] - half)).sum::<Vector>());
    Ok(CubeMarkerModel {
        normals: fit.normals.to_vec(),
        offsets: fit.offsets.to_vec(),
        center,
        edge_length,
        visible_plane_count: 3,
        residual_rms: residual_rms(points, &labels, &fit),
        iterations,
    })
}

fn residual_rms(points: &[Point], labels: &[usize], fit: &PlaneFit) -> f64 {
    let sum: f64 = points.iter().zip(labels).map(|(p, &l)| fit.distance(l, p).powi(2)).sum();
    (sum / points.len() as f64).sqrt()
}

/// Disagreement between two marker fits expressed in one frame: the mean
/// angle between matched face axes plus `lambda` times the center distance.
/// Faces are matched as unsigned axes under the best permutation, so views
/// of opposite faces still pair up.
pub fn score_view_pair_weighted(a: &CubeMarkerModel, b: &CubeMarkerModel, lambda: f64) -> f64 {
    const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let angle = |x: &Vector, y: &Vector| x.dot(y).abs().min(1.0).acos();
    let k = a.normals.len().min(b.normals.len());
    let mean_angle = if k == 0 {
        0.0
    } else {
        PERMUTATIONS
            .iter()
            .filter(|p| p[..k].iter().all(|&j| j < b.normals.len()))
            .map(|p| (0..k).map(|i| angle(&a.normals[i], &b.normals[p[i]])).sum::<f64>() / k as f64)
            .fold(f64::INFINITY, f64::min)
    };
    mean_angle + lambda * (a.center - b.center).norm()
}

pub fn score_view_pair(a: &CubeMarkerModel, b: &CubeMarkerModel) -> f64 {
    score_view_pair_weighted(a, b, DEFAULT_VIEW_SCORE_LAMBDA)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(normals: [Vector; 3], center: Point) -> CubeMarkerModel {
        CubeMarkerModel {
            offsets: normals.iter().map(|n| n.dot(&center.coords) + 15.0).collect(),
            normals: normals.to_vec(),
            center,
            edge_length: 30.0,
            visible_plane_count: 3,
            residual_rms: 0.0,
            iterations: 1,
        }
    }

    #[test]
    fn identical_models_score_zero() {
        let m = model([Vector::x(), Vector::y(), Vector::z()], Point::new(1.0, 2.0, 3.0));
        assert_eq!(score_view_pair(&m, &m), 0.0);
    }

    #[test]
    fn opposite_faces_match_as_axes() {
        let a = model([Vector::x(), Vector::y(), Vector::z()], Point::origin());
        let b = model([-Vector::y(), Vector::z(), -Vector::x()], Point::origin());
        assert!(score_view_pair(&a, &b) < 1e-12);
    }

    #[test]
    fn center_offset_is_weighted() {
        let a = model([Vector::x(), Vector::y(), Vector::z()], Point::origin());
        let b = model([Vector::x(), Vector::y(), Vector::z()], Point::new(0.0, 2.0, 0.0));
        assert!((score_view_pair(&a, &b) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn transform_keeps_planes_through_points() {
        let m = model([Vector::x(), Vector::y(), Vector::z()], Point::new(1.0, 2.0, 3.0));
        let t = RigidTransform::from_axis_angle(&Vector::new(1.0, 1.0, 0.0), 0.3, Vector::new(3.0, 0.0, -2.0));
        let face_point = m.center + m.normals[0] * 15.0;
        let moved = m.transformed(&t);
        let p = t.apply_point(&face_point);
        assert!((moved.normals[0].dot(&p.coords) - moved.offsets[0]).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_invalid() {
        let cloud = PointCloud::unorganized(vec![Point::origin(); 10]);
        assert!(matches!(fit_cube_marker(&cloud, 30.0), Err(Error::InvalidCapture(_))));
    }
}
