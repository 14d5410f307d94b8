use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use super::{KdTree, PointCloud};
use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

/// Output of [`estimate_normals`].
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    /// Input cloud with normals attached (NaN for invalid slots).
    pub cloud: PointCloud,
    /// Slots whose neighbourhood was rank deficient (collinear or
    /// coincident); their normal is an arbitrary vector perpendicular to the
    /// neighbourhood's principal direction.
    pub low_confidence: Vec<usize>,
}

/// Plane normal of a neighbourhood: the eigenvector of the covariance with
/// the smallest eigenvalue. The second value reports rank deficiency.
pub(crate) fn pca_normal<'a>(points: impl Iterator<Item = &'a Point> + Clone) -> (Vector, bool) {
    let n = points.clone().count() as f64;
    let centroid = points.clone().fold(Vector::zeros(), |acc, p| acc + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let normal = eig.eigenvectors.column(idx[0]).into_owned().normalize();
    let largest = eig.eigenvalues[idx[2]].max(0.0);
    let middle = eig.eigenvalues[idx[1]].max(0.0);
    (normal, middle <= 1e-12 * largest.max(f64::MIN_POSITIVE))
}

/// PCA normals over the `k` nearest points (the point itself included),
/// flipped so that `normal · (viewpoint - point) >= 0`.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Point) -> Result<NormalEstimate> {
    let valid = cloud.valid_indices();
    if k < 3 || valid.len() <= k {
        return Err(Error::InvalidParam(format!(
            "normal estimation needs 3 <= k < point count ({} points, k = {k})",
            valid.len()
        )));
    }
    let tree = KdTree::new(&cloud.points, Some(valid.clone()));
    let estimates: Vec<(Vector, bool)> = valid
        .par_iter()
        .map(|&i| {
            let p = &cloud.points[i];
            let nn = tree.nearest(p, k, None);
            let (mut normal, deficient) = pca_normal(nn.iter().map(|&(_, j)| &cloud.points[j]));
            if normal.dot(&(viewpoint - p)) < 0.0 {
                normal = -normal;
            }
            (normal, deficient)
        })
        .collect();
    let mut normals = vec![Vector::repeat(f64::NAN); cloud.len()];
    let mut low_confidence = Vec::new();
    for (&i, &(n, deficient)) in valid.iter().zip(&estimates) {
        normals[i] = n;
        if deficient {
            low_confidence.push(i);
        }
    }
    let mut out = cloud.clone();
    out.normals = Some(normals);
    Ok(NormalEstimate { cloud: out, low_confidence })
}
