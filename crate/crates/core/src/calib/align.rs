//! Rigid alignment of corresponded point sets.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RigidTransform;
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

pub const DEFAULT_INLIER_THRESHOLD_CM: f64 = 1.0;
pub const DEFAULT_RANSAC_ITERATIONS: usize = 500;

/// Ratio of the two largest covariance eigenvalues below which a point set is
/// treated as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

fn centroid(points: &[Point]) -> Point {
    Point::from(points.iter().map(|p| p.coords).sum::<Vector>() / points.len() as f64)
}

fn check_spread(points: &[Point], c: &Point, label: &str) -> Result<()> {
    let cov = points.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p - c;
        acc + d * d.transpose()
    });
    let mut eig = SymmetricEigen::new(cov).eigenvalues.as_slice().to_vec();
    eig.sort_by(|a, b| b.total_cmp(a));
    if !(eig[0] > 0.0) || eig[1] <= COLLINEAR_RATIO * eig[0] {
        return Err(Error::DegenerateConfiguration(format!("{label} points are coincident or collinear")));
    }
    Ok(())
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]` (Kabsch).
pub fn procrustes(src: &[Point], dst: &[Point]) -> Result<RigidTransform> {
    if src.len() != dst.len() {
        return Err(Error::InvalidParam(format!(
            "correspondence counts differ ({} vs {})",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!("{} correspondences, need 3", src.len())));
    }
    let (cs, cd) = (centroid(src), centroid(dst));
    check_spread(src, &cs, "source")?;
    check_spread(dst, &cd, "target")?;
    let h = src.iter().zip(dst).fold(Matrix3::zeros(), |acc, (s, d)| acc + (s - cs) * (d - cd).transpose());
    let svd = h.svd(true, true);
    let (u, v) = (svd.u.unwrap(), svd.v_t.unwrap().transpose());
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        // flip the axis of the smallest singular value
        let smallest = svd.singular_values.imin();
        correction[(smallest, smallest)] = -1.0;
    }
    let rotation = v * correction * u.transpose();
    let translation = cd.coords - rotation * cs.coords;
    RigidTransform::new(rotation, translation)
}

fn inliers(t: &RigidTransform, src: &[Point], dst: &[Point], threshold: f64) -> Vec<usize> {
    (0..src.len())
        .filter(|&i| (t.apply_point(&src[i]) - dst[i]).norm() <= threshold)
        .collect()
}

/// RANSAC over 3-point Procrustes fits. Returns the transform refit on the
/// largest consensus set, with that set in ascending index order.
pub fn ransac_align(
    src: &[Point],
    dst: &[Point],
    inlier_threshold: f64,
    iterations: usize,
    seed: u64,
) -> Result<(RigidTransform, Vec<usize>)> {
    if src.len() != dst.len() {
        return Err(Error::InvalidParam(format!(
            "correspondence counts differ ({} vs {})",
            src.len(),
            dst.len()
        )));
    }
    if !(inlier_threshold > 0.0) {
        return Err(Error::InvalidParam(format!("inlier threshold must be positive, got {inlier_threshold}")));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::NoConsensus { best: n });
    }
    let mut best: Vec<usize> = Vec::new();
    for iteration in 0..iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(iteration as u64);
        let sample = rand::seq::index::sample(&mut rng, n, 3).into_vec();
        let s: Vec<Point> = sample.iter().map(|&i| src[i]).collect();
        let d: Vec<Point> = sample.iter().map(|&i| dst[i]).collect();
        let Ok(t) = procrustes(&s, &d) else { continue };
        let consensus = inliers(&t, src, dst, inlier_threshold);
        if consensus.len() > best.len() {
            best = consensus;
            if best.len() == n {
                break;
            }
        }
    }
    if best.len() < 3 {
        return Err(Error::NoConsensus { best: best.len() });
    }
    let s: Vec<Point> = best.iter().map(|&i| src[i]).collect();
    let d: Vec<Point> = best.iter().map(|&i| dst[i]).collect();
    Ok((procrustes(&s, &d)?, best))
}
