use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KdTree, PointCloud};
use crate::error::{Error, Result};
use crate::geom::Point;

/// Parameters of the pre-processing chain, applied in the order
/// truncate → median → bilateral → SOR → normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub z_max_cm: f64,
    pub median_window: usize,
    pub bilateral_sigma_s_px: f64,
    pub bilateral_sigma_r_cm: f64,
    pub sor_k: usize,
    pub sor_stddev_mult: f64,
    pub normals_k: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            z_max_cm: 250.0,
            median_window: 5,
            bilateral_sigma_s_px: 3.0,
            bilateral_sigma_r_cm: 2.0,
            sor_k: 50,
            sor_stddev_mult: 1.0,
            normals_k: 30,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.to_string()));
        if !(self.z_max_cm > 0.0) {
            return bad("z_max_cm must be positive");
        }
        if self.median_window < 3 || self.median_window % 2 == 0 {
            return bad("median_window must be odd and >= 3");
        }
        if !(self.bilateral_sigma_s_px > 0.0) || !(self.bilateral_sigma_r_cm > 0.0) {
            return bad("bilateral sigmas must be positive");
        }
        if self.sor_k < 1 || !(self.sor_stddev_mult > 0.0) {
            return bad("sor_k must be >= 1 and sor_stddev_mult positive");
        }
        if self.normals_k < 3 {
            return bad("normals_k must be >= 3");
        }
        Ok(())
    }
}

/// Drops points deeper than `z_max` (organized clouds: invalidates the slot).
pub fn truncate_depth(cloud: &PointCloud, z_max: f64) -> Result<PointCloud> {
    if !(z_max > 0.0) {
        return Err(Error::InvalidParam(format!("z_max must be positive, got {z_max}")));
    }
    let remove: Vec<bool> = (0..cloud.len())
        .map(|i| cloud.is_valid(i) && cloud.depth(i) > z_max)
        .collect();
    Ok(cloud.without(&remove))
}

/// Moves a point along its pixel ray (through the sensor origin) to a new depth.
fn reproject(origin: &Point, p: &Point, depth: f64) -> Point {
    let offset = p - origin;
    origin + offset * (depth / offset.z)
}

/// Replaces each valid depth by the median of the valid depths in its
/// `window`×`window` neighbourhood.
pub fn median_filter(cloud: &PointCloud, window: usize) -> Result<PointCloud> {
    let grid = cloud.require_grid()?;
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidParam(format!("median window must be odd and >= 3, got {window}")));
    }
    let r = (window / 2) as isize;
    let (w, h) = (grid.width as isize, grid.height as isize);
    let points: Vec<Point> = (0..cloud.len())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(window * window),
            |depths, i| {
                if !cloud.is_valid(i) {
                    return PointCloud::INVALID;
                }
                let (x, y) = ((i % grid.width) as isize, (i / grid.width) as isize);
                depths.clear();
                for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                    for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                        let j = (yy * w + xx) as usize;
                        if cloud.is_valid(j) {
                            depths.push(cloud.depth(j));
                        }
                    }
                }
                depths.sort_by(f64::total_cmp);
                let n = depths.len();
                let median = if n % 2 == 1 {
                    depths[n / 2]
                } else {
                    0.5 * (depths[n / 2 - 1] + depths[n / 2])
                };
                reproject(&cloud.sensor_origin, &cloud.points[i], median)
            },
        )
        .collect();
    Ok(PointCloud { points, ..cloud.clone() })
}

/// Edge-preserving depth smoothing with spatial (pixels) and range (cm)
/// Gaussian kernels; the window radius is `ceil(3 sigma_s)`.
pub fn bilateral_filter(cloud: &PointCloud, sigma_s: f64, sigma_r: f64) -> Result<PointCloud> {
    let grid = cloud.require_grid()?;
    if !(sigma_s > 0.0) || !(sigma_r > 0.0) {
        return Err(Error::InvalidParam(format!(
            "bilateral sigmas must be positive, got {sigma_s} px and {sigma_r} cm"
        )));
    }
    let r = (3.0 * sigma_s).ceil() as isize;
    let (w, h) = (grid.width as isize, grid.height as isize);
    let inv_s = 1.0 / (2.0 * sigma_s * sigma_s);
    let inv_r = 1.0 / (2.0 * sigma_r * sigma_r);
    let points: Vec<Point> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            if !cloud.is_valid(i) {
                return PointCloud::INVALID;
            }
            let (x, y) = ((i % grid.width) as isize, (i / grid.width) as isize);
            let d0 = cloud.depth(i);
            let (mut num, mut den) = (0.0, 0.0);
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                    let j = (yy * w + xx) as usize;
                    if !cloud.is_valid(j) {
                        continue;
                    }
                    let d = cloud.depth(j);
                    let ds = ((xx - x).pow(2) + (yy - y).pow(2)) as f64;
                    let wgt = (-ds * inv_s - (d0 - d).powi(2) * inv_r).exp();
                    num += wgt * d;
                    den += wgt;
                }
            }
            // the center pixel always contributes weight 1
            reproject(&cloud.sensor_origin, &cloud.points[i], num / den)
        })
        .collect();
    Ok(PointCloud { points, ..cloud.clone() })
}

/// Mean distance from every valid point to its `k` nearest neighbours.
pub(crate) fn mean_knn_distances(cloud: &PointCloud, valid: &[usize], k: usize) -> Vec<f64> {
    let tree = KdTree::new(&cloud.points, Some(valid.to_vec()));
    valid
        .par_iter()
        .map(|&i| {
            let nn = tree.nearest(&cloud.points[i], k, Some(i));
            nn.iter().map(|(d2, _)| d2.sqrt()).sum::<f64>() / nn.len() as f64
        })
        .collect()
}

/// Statistical outlier removal: drops points whose mean k-NN distance
/// exceeds `mean + stddev_mult * stddev` of that statistic over the cloud.
pub fn sor_filter(cloud: &PointCloud, k: usize, stddev_mult: f64) -> Result<PointCloud> {
    let valid = cloud.valid_indices();
    if k < 1 || k >= valid.len() {
        return Err(Error::InvalidParam(format!(
            "SOR needs 1 <= k < point count ({} points, k = {k})",
            valid.len()
        )));
    }
    if !(stddev_mult > 0.0) {
        return Err(Error::InvalidParam(format!("stddev_mult must be positive, got {stddev_mult}")));
    }
    let stats = mean_knn_distances(cloud, &valid, k);
    let n = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / n;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    // relative slack absorbs rounding when the statistic has zero variance
    let threshold = mean + stddev_mult * var.sqrt() + 1e-9 * mean;
    let mut remove = vec![false; cloud.len()];
    for (&i, &s) in valid.iter().zip(&stats) {
        remove[i] = s > threshold;
    }
    Ok(cloud.without(&remove))
}
