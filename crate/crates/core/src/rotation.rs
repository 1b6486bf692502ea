//! 3D rotations stored canonically as unit quaternions, convertible to matrix
//! and rotation-vector (axis-angle) form, plus the geodesic metric.

use nalgebra::{Matrix3, Quaternion, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RotationError {
    #[error("quaternion norm {norm} too far from 1 (tolerance {tolerance})")]
    NonUnitQuaternion { norm: f64, tolerance: f64 },
    #[error("quaternion has non-finite components")]
    NonFinite,
}

/// A rotation of 3D space. The quaternion is kept unit-norm by every
/// constructor and operation.
#[derive(Debug, Clone, Copy)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    /// Builds from w-first quaternion components. Components within
    /// `tolerance` of unit norm are renormalized; anything further is an
    /// error rather than a silent rescale.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64, tolerance: f64) -> Result<Self, RotationError> {
        let q = Quaternion::new(w, x, y, z);
        if !(q.w.is_finite() && q.i.is_finite() && q.j.is_finite() && q.k.is_finite()) {
            return Err(RotationError::NonFinite);
        }
        let norm = q.norm();
        if (norm - 1.0).abs() > tolerance {
            return Err(RotationError::NonUnitQuaternion { norm, tolerance });
        }
        Ok(Rotation(UnitQuaternion::from_quaternion(q)))
    }

    /// Quaternion components, w first. Inverse of `from_wxyz`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Rotation of `angle` radians about `axis`. The axis is normalized here;
    /// callers must not pass a zero vector.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Rotation(UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle))
    }

    /// Builds from a rotation vector (axis scaled by angle in radians).
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        Rotation(UnitQuaternion::from_scaled_axis(*v))
    }

    /// Rotation vector (axis times angle, angle in [0, π]).
    pub fn rotation_vector(&self) -> Vector3<f64> {
        self.0.scaled_axis()
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        *self.0.to_rotation_matrix().matrix()
    }

    /// `self` followed locally by `other`: the matrix product self·other.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(UnitQuaternion::new_normalize((self.0 * other.0).into_inner()))
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        self.0.angle()
    }

    /// Unit rotation axis, or None for an (near-)identity rotation where the
    /// axis is undefined.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        self.0.axis().map(|a| a.into_inner())
    }

    /// Angle of the relative rotation self⁻¹·other, computed from the
    /// relative quaternion with atan2. Well conditioned at tiny angles,
    /// unlike the trace-based metric, so suited to near-equality checks.
    pub fn relative_angle(&self, other: &Rotation) -> f64 {
        let rel = self.0.inverse() * other.0;
        let q = rel.quaternion();
        let v = Vector3::new(q.i, q.j, q.k).norm();
        2.0 * v.atan2(q.w.abs())
    }

}

/// Angular distance in radians between two rotations:
/// arccos(clamp((trace(AᵀB) − 1)/2, −1, 1)), symmetric, in [0, π].
pub fn geodesic_distance(a: &Rotation, b: &Rotation) -> f64 {
    let m = a.to_matrix().transpose() * b.to_matrix();
    let c = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}
