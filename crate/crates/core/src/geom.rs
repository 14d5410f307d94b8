//! Small geometric helpers shared across modules.

use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

/// Deterministic orthonormal in-plane basis `(u, v)` for a unit normal, with
/// `u × v = normal`.
///
/// For the three coordinate axes the basis is the cyclic pair
/// (`+z` gives `(+x, +y)`), so probe angles line up with axis-aligned meshes.
pub fn plane_basis(normal: &Vector) -> (Vector, Vector) {
    let helper = if normal.x.abs() < 0.9 { Vector::x() } else { Vector::y() };
    let u = (helper - normal * helper.dot(normal)).normalize();
    let v = normal.cross(&u);
    (u, v)
}

/// Basis using a caller-supplied in-plane reference direction. The reference
/// is projected onto the plane; falls back to [`plane_basis`] when it is
/// (nearly) parallel to the normal.
pub fn plane_basis_with_reference(normal: &Vector, reference: &Vector) -> (Vector, Vector) {
    let projected = reference - normal * reference.dot(normal);
    if projected.norm() < 1e-9 {
        return plane_basis(normal);
    }
    let u = projected.normalize();
    (u, normal.cross(&u))
}

pub fn is_unit(v: &Vector, tolerance: f64) -> bool {
    (v.norm() - 1.0).abs() <= tolerance
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Parses a comma-separated `x,y,z` triplet of finite numbers.
pub fn parse_triplet(text: &str) -> Option<[f64; 3]> {
    let mut parts = text.split(',').map(|s| s.trim().parse::<f64>());
    let out = [parts.next()?.ok()?, parts.next()?.ok()?, parts.next()?.ok()?];
    if parts.next().is_some() || !out.iter().all(|c| c.is_finite()) {
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_for_z_is_xy() {
        let (u, v) = plane_basis(&Vector::z());
        assert_eq!(u, Vector::x());
        assert_eq!(v, Vector::y());
    }

    #[test]
    fn basis_is_orthonormal_and_right_handed() {
        for n in [Vector::x(), Vector::y(), Vector::new(1.0, 2.0, -3.0).normalize()] {
            let (u, v) = plane_basis(&n);
            assert!((u.norm() - 1.0).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(u.dot(&n).abs() < 1e-12 && v.dot(&n).abs() < 1e-12);
            assert!((u.cross(&v) - n).norm() < 1e-12);
        }
    }

    #[test]
    fn triplets() {
        assert_eq!(parse_triplet("1, 2,3.5"), Some([1.0, 2.0, 3.5]));
        assert_eq!(parse_triplet("1,2"), None);
        assert_eq!(parse_triplet("1,2,3,4"), None);
        assert_eq!(parse_triplet("a,2,3"), None);
    }
}
