//! Band slicer: a lightweight surface from a point cloud of a roughly
//! star-shaped object (torso, limb, phantom) stacked along an axis.
//!
//! Points are binned into bands along the axis. Each band becomes one closed
//! contour: points are grouped into angular sectors about the band centroid
//! and each non-empty sector contributes its mean position. Consecutive
//! bands are stitched into triangle strips by merging the two contours in
//! angular order, and the ends of every stitched run are capped with fans.

use std::f64::consts::{PI, TAU};

use super::TriangleMesh;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::{plane_basis, Point, Vector};

/// Maximum number of contour points per band.
pub const SLICE_CONTOUR_CAP: usize = 128;

struct Contour {
    /// Radial angle about the band centroid, strictly increasing in (-π, π].
    angles: Vec<f64>,
    first_vertex: u32,
    centroid_vertex: u32,
}

impl Contour {
    fn len(&self) -> usize {
        self.angles.len()
    }

    /// Angle of the i-th point, unwrapped past the end of the contour.
    fn unwrapped(&self, i: usize) -> f64 {
        let n = self.len();
        self.angles[i % n] + TAU * (i / n) as f64
    }

    fn vertex(&self, i: usize) -> u32 {
        self.first_vertex + (i % self.len()) as u32
    }
}

pub fn slice_mesh(cloud: &PointCloud, band_height: f64, axis: &Vector) -> Result<TriangleMesh> {
    if !(band_height > 0.0) {
        return Err(Error::InvalidParam(format!("band height must be positive, got {band_height}")));
    }
    if !(axis.norm() > 0.0) || !axis.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParam("slice axis must be a non-zero vector".into()));
    }
    let axis = axis.normalize();
    let (u, v) = plane_basis(&axis);
    let projected: Vec<(f64, f64, f64)> = cloud
        .valid_indices()
        .into_iter()
        .map(|i| {
            let p = cloud.points[i].coords;
            (p.dot(&axis), p.dot(&u), p.dot(&v))
        })
        .collect();
    if projected.len() < 6 {
        return Err(Error::InsufficientPoints(format!(
            "{} points cannot form two bands",
            projected.len()
        )));
    }
    let s_min = projected.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let s_max = projected.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let band_count = (((s_max - s_min) / band_height).floor() as usize + 1).max(1);
    let mut bands: Vec<Vec<(f64, f64)>> = vec![Vec::new(); band_count];
    for &(s, x, y) in &projected {
        let b = (((s - s_min) / band_height).floor() as usize).min(band_count - 1);
        bands[b].push((x, y));
    }

    let mut vertices: Vec<Point> = Vec::new();
    let mut contours: Vec<Option<Contour>> = Vec::with_capacity(band_count);
    for (b, pts) in bands.iter().enumerate() {
        let height = s_min + (b as f64 + 0.5) * band_height;
        contours.push(band_contour(pts, height, &axis, &u, &v, &mut vertices));
    }

    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut stitched_pairs = 0;
    let mut b = 0;
    while b < band_count {
        // find the next run of consecutive populated bands
        if contours[b].is_none() {
            b += 1;
            continue;
        }
        let start = b;
        while b + 1 < band_count && contours[b + 1].is_some() {
            b += 1;
        }
        let end = b;
        b += 1;
        if end == start {
            continue;
        }
        for k in start..end {
            stitch(contours[k].as_ref().unwrap(), contours[k + 1].as_ref().unwrap(), &mut triangles);
            stitched_pairs += 1;
        }
        cap(contours[start].as_ref().unwrap(), true, &mut triangles);
        cap(contours[end].as_ref().unwrap(), false, &mut triangles);
    }
    if stitched_pairs == 0 {
        return Err(Error::InsufficientPoints(
            "need at least two adjacent bands with 3 or more contour points".into(),
        ));
    }
    TriangleMesh::new(vertices, triangles)
}

/// Decimated, angle-ordered contour of one band; `None` when degenerate.
fn band_contour(
    pts: &[(f64, f64)],
    height: f64,
    axis: &Vector,
    u: &Vector,
    v: &Vector,
    vertices: &mut Vec<Point>,
) -> Option<Contour> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sums = vec![(0.0, 0.0, 0usize); SLICE_CONTOUR_CAP];
    for &(x, y) in pts {
        let a = (y - cy).atan2(x - cx);
        let sector = (((a + PI) / TAU * SLICE_CONTOUR_CAP as f64) as usize).min(SLICE_CONTOUR_CAP - 1);
        let s = &mut sums[sector];
        s.0 += x;
        s.1 += y;
        s.2 += 1;
    }
    let mut means: Vec<(f64, f64, f64)> = sums
        .iter()
        .filter(|s| s.2 > 0)
        .map(|&(x, y, c)| {
            let (x, y) = (x / c as f64, y / c as f64);
            ((y - cy).atan2(x - cx), x, y)
        })
        .collect();
    // sector means can straddle a boundary; re-sort by their own angle
    means.sort_by(|a, b| a.0.total_cmp(&b.0));
    means.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
    if means.len() < 3 {
        return None;
    }
    let first_vertex = vertices.len() as u32;
    let to_world = |x: f64, y: f64| Point::from(u * x + v * y + axis * height);
    for &(_, x, y) in &means {
        vertices.push(to_world(x, y));
    }
    let centroid_vertex = vertices.len() as u32;
    vertices.push(to_world(cx, cy));
    Some(Contour {
        angles: means.iter().map(|m| m.0).collect(),
        first_vertex,
        centroid_vertex,
    })
}

/// Triangle strip between a lower and an upper contour, advancing along
/// whichever contour has the nearer next angle.
fn stitch(lower: &Contour, upper: &Contour, triangles: &mut Vec<[u32; 3]>) {
    let (n, m) = (lower.len(), upper.len());
    // align the upper start with the lower start angle
    let offset = (0..m)
        .min_by(|&a, &b| {
            angular_gap(upper.angles[a], lower.angles[0]).total_cmp(&angular_gap(upper.angles[b], lower.angles[0]))
        })
        .unwrap();
    let shift = ((upper.angles[offset] - lower.angles[0]) / TAU).round() * TAU;
    let upper_angle = |j: usize| upper.unwrapped(offset + j) - shift;
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let advance_lower = if i == n {
            false
        } else if j == m {
            true
        } else {
            lower.unwrapped(i + 1) <= upper_angle(j + 1)
        };
        if advance_lower {
            triangles.push([lower.vertex(i), lower.vertex(i + 1), upper.vertex(offset + j)]);
            i += 1;
        } else {
            triangles.push([lower.vertex(i), upper.vertex(offset + j + 1), upper.vertex(offset + j)]);
            j += 1;
        }
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn cap(contour: &Contour, bottom: bool, triangles: &mut Vec<[u32; 3]>) {
    let c = contour.centroid_vertex;
    for i in 0..contour.len() {
        let (a, b) = (contour.vertex(i), contour.vertex(i + 1));
        triangles.push(if bottom { [c, b, a] } else { [c, a, b] });
    }
}
