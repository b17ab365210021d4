//! Rigid transforms and the quaternion view used for grasp scoring.
//!
//! Rotations are stored as 3×3 matrices. Quaternions exist only as a
//! sign-canonical view (`w ≥ 0`) so that dot products between two
//! orientations are well defined under the double cover.

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

const ORTHONORMAL_TOL: f64 = 1e-6;

/// Pose of a frame `b` expressed in frame `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// Serialized as `[x, y, z, qw, qx, qy, qz]`.
impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 7]>::deserialize(d)?;
        Pose::from_array(v).map_err(serde::de::Error::custom)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_axis_angle(axis: &Unit<Vector3<f64>>, angle: f64) -> Self {
        Self {
            rotation: Rotation3::from_axis_angle(axis, angle).into_inner(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from `[x, y, z, qw, qx, qy, qz]`. The quaternion is normalized.
    pub fn from_array(v: [f64; 7]) -> Result<Self, GeometryError> {
        let q = UnitQuaternion::new(v[3], v[4], v[5], v[6])?;
        Ok(Self {
            rotation: q.to_rotation(),
            translation: Vector3::new(v[0], v[1], v[2]),
        })
    }

    /// `[x, y, z, qw, qx, qy, qz]` with a canonical quaternion.
    pub fn to_array(&self) -> [f64; 7] {
        let q = UnitQuaternion::from_rotation_unchecked(&self.rotation);
        let t = self.translation;
        [t.x, t.y, t.z, q.w, q.x, q.y, q.z]
    }

    /// `self · other`: the pose of `other`'s frame expressed through `self`.
    #[inline]
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Pose {
        Pose {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    /// Position distance and rotation angle between two poses.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        (
            (self.translation - other.translation).norm(),
            rotation_angle(&(self.rotation.transpose() * other.rotation)),
        )
    }

    /// Projects the rotation back onto SO(3).
    pub fn orthonormalized(&self) -> Pose {
        Pose {
            rotation: orthonormalize(&self.rotation),
            translation: self.translation,
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        is_rotation(&self.rotation, tol) && self.translation.iter().all(|v| v.is_finite())
    }
}

/// Angle in `[0, π]` of a rotation matrix.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    rotation_vector(r).norm()
}

/// Axis-angle vector `θ·k` of a rotation matrix.
pub fn rotation_vector(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    if angle < 1e-7 {
        return skew * 0.5;
    }
    if std::f64::consts::PI - angle > 1e-4 {
        return skew * (angle / (2.0 * angle.sin()));
    }
    // near π the skew part vanishes; recover the axis from the symmetric part
    let b = (r + Matrix3::identity()) * 0.5;
    let diag = Vector3::new(b[(0, 0)], b[(1, 1)], b[(2, 2)]);
    let i = diag.imax();
    let mut axis = b.column(i).into_owned();
    axis /= axis.norm().max(1e-300);
    if axis.dot(&skew) < 0.0 {
        axis = -axis;
    }
    axis * angle
}

pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    let err = (r.transpose() * r - Matrix3::identity()).norm();
    err <= tol && (r.determinant() - 1.0).abs() <= tol
}

/// Nearest rotation via Gram–Schmidt on the columns.
pub fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let x = r.column(0).normalize();
    let y = (r.column(1) - x * x.dot(&r.column(1))).normalize();
    let z = x.cross(&y);
    Matrix3::from_columns(&[x, y, z])
}

/// Sign-canonical unit quaternion `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Normalizes and canonicalizes the given components.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeometryError::DegenerateQuaternion);
        }
        Ok(Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
        .canonicalize())
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// `w ≥ 0`; for `w == 0` the first nonzero of `(x, y, z)` is made positive.
    pub fn canonicalize(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            self.negate()
        } else {
            self
        }
    }

    pub fn negate(self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Rejects matrices that are not proper rotations.
    pub fn from_rotation(r: &Matrix3<f64>) -> Result<Self, GeometryError> {
        if !r.iter().all(|v| v.is_finite()) || !is_rotation(r, ORTHONORMAL_TOL) {
            return Err(GeometryError::NotOrthonormal);
        }
        Ok(Self::from_rotation_unchecked(r))
    }

    /// Shepperd's method, choosing the largest diagonal pivot.
    pub(crate) fn from_rotation_unchecked(r: &Matrix3<f64>) -> Self {
        let trace = r.trace();
        let (w, x, y, z);
        if trace > r[(0, 0)] && trace > r[(1, 1)] && trace > r[(2, 2)] {
            let s = (1.0 + trace).sqrt() * 2.0;
            w = 0.25 * s;
            x = (r[(2, 1)] - r[(1, 2)]) / s;
            y = (r[(0, 2)] - r[(2, 0)]) / s;
            z = (r[(1, 0)] - r[(0, 1)]) / s;
        } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
            let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
            w = (r[(2, 1)] - r[(1, 2)]) / s;
            x = 0.25 * s;
            y = (r[(0, 1)] + r[(1, 0)]) / s;
            z = (r[(0, 2)] + r[(2, 0)]) / s;
        } else if r[(1, 1)] > r[(2, 2)] {
            let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
            w = (r[(0, 2)] - r[(2, 0)]) / s;
            x = (r[(0, 1)] + r[(1, 0)]) / s;
            y = 0.25 * s;
            z = (r[(1, 2)] + r[(2, 1)]) / s;
        } else {
            let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
            w = (r[(1, 0)] - r[(0, 1)]) / s;
            x = (r[(0, 2)] + r[(2, 0)]) / s;
            y = (r[(1, 2)] + r[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
        .canonicalize()
    }

    pub fn to_rotation(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        (self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z).clamp(-1.0, 1.0)
    }
}

/// Inner product of two canonical quaternions.
pub fn quat_dot(a: &UnitQuaternion, b: &UnitQuaternion) -> f64 {
    a.dot(b)
}

/// Unit vector orthogonal to `v` (deterministic choice).
pub fn any_orthogonal(v: &Vector3<f64>) -> Vector3<f64> {
    let helper = if v.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    v.cross(&helper).normalize()
}
