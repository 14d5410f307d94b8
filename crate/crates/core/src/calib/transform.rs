use nalgebra::{Matrix3, Rotation3, Unit};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// Rigid motion `p ↦ R·p + t`, lengths in cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector::zeros(),
        }
    }

    /// Checks `RᵀR = I` and `det R = 1` within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector) -> Result<Self> {
        if !rotation.iter().all(|c| c.is_finite()) || !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParam("transform entries must be finite".into()));
        }
        let gram_error = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det_error = (rotation.determinant() - 1.0).abs();
        if gram_error > ORTHONORMAL_TOLERANCE || det_error > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidParam(format!(
                "rotation is not proper orthonormal (|RᵀR − I| = {gram_error:.3e}, |det − 1| = {det_error:.3e})"
            )));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn from_rotation(rotation: &Rotation3<f64>, translation: Vector) -> Self {
        RigidTransform {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: &Vector, angle: f64, translation: Vector) -> Self {
        Self::from_rotation(&Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle), translation)
    }

    pub fn translation_only(translation: Vector) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn apply_point(&self, p: &Point) -> Point {
        Point::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector) -> Vector {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Angle in radians of the relative rotation `selfᵀ·other`.
    pub fn rotation_angle_to(&self, other: &RigidTransform) -> f64 {
        let relative = self.rotation.transpose() * other.rotation;
        ((relative.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn translation_distance_to(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub fn is_identity(&self, tolerance: f64) -> bool {
        (self.rotation - Matrix3::identity()).abs().max() <= tolerance && self.translation.norm() <= tolerance
    }
}

#[derive(Serialize, Deserialize)]
struct RawTransform {
    rotation: [f64; 9],
    translation_cm: [f64; 3],
}

impl From<&RigidTransform> for RawTransform {
    fn from(t: &RigidTransform) -> Self {
        let r = &t.rotation;
        RawTransform {
            rotation: [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ],
            translation_cm: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TryFrom<RawTransform> for RigidTransform {
    type Error = Error;

    fn try_from(raw: RawTransform) -> Result<Self> {
        RigidTransform::new(Matrix3::from_row_slice(&raw.rotation), Vector::from(raw.translation_cm))
    }
}

/// Serialized as `{rotation: [9 numbers, row-major], translation_cm: [x, y, z]}`.
impl Serialize for RigidTransform {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawTransform::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawTransform::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}
