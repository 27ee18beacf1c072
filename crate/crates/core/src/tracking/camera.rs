//! Pinhole camera with a +z forward, x right, y down convention:
//! pixel = `(fx X / Z + cx, fy Y / Z + cy)` in camera coordinates.

use serde::{Deserialize, Serialize};

use super::TrackingError;
use crate::ids::PlaneId;
use crate::math::{Pose, Quat, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Image size in pixels, used for normalized screen coordinates.
    pub width: u32,
    pub height: u32,
    /// Maps camera coordinates to world coordinates.
    pub pose: Pose,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel::centered(640, 480, 500.0)
    }
}

impl CameraModel {
    /// Principal point at the image center, identity pose.
    pub fn centered(width: u32, height: u32, focal: f64) -> Self {
        Self {
            fx: focal,
            fy: focal,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
            pose: Pose::IDENTITY,
        }
    }

    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(TrackingError::InvalidCamera(format!("focal lengths must be positive, got {} {}", self.fx, self.fy)));
        }
        if (self.pose.rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(TrackingError::InvalidCamera("pose rotation is not a unit quaternion".into()));
        }
        Ok(())
    }

    pub fn position(&self) -> Vec3 {
        self.pose.translation
    }

    /// Camera-frame direction through `(x, y)`, with z = 1.
    pub fn camera_ray(&self, x: f64, y: f64) -> Vec3 {
        Vec3::new((x - self.cx) / self.fx, (y - self.cy) / self.fy, 1.0)
    }

    /// World-frame unit direction through pixel `(x, y)`.
    pub fn world_ray(&self, x: f64, y: f64) -> Vec3 {
        self.pose.rotation.rotate(self.camera_ray(x, y)).normalized().expect("z component is 1")
    }

    /// World point at z-depth `depth` (camera frame) behind pixel `(x, y)`.
    pub fn unproject(&self, x: f64, y: f64, depth: f64) -> Vec3 {
        self.pose.transform_point(self.camera_ray(x, y) * depth)
    }

    /// Pixel of a world point, `None` when it is not in front of the camera.
    pub fn project(&self, world: Vec3) -> Option<(f64, f64)> {
        let c = self.pose.rotation.conjugate().rotate(world - self.pose.translation);
        (c.z > 0.0).then(|| (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Plane {
    pub plane_id: PlaneId,
    pub origin: Vec3,
    pub normal: Vec3,
    pub basis1: Vec3,
    pub basis2: Vec3,
}

impl Plane {
    /// Builds an orthonormal in-plane basis from `normal`.
    pub fn from_origin_normal(plane_id: impl Into<PlaneId>, origin: Vec3, normal: Vec3) -> Result<Self, TrackingError> {
        let n = normal.normalized().ok_or_else(|| TrackingError::InvalidPlane("zero normal".into()))?;
        let helper = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        let b1 = helper.cross(n).normalized().expect("helper not parallel to normal");
        let b2 = n.cross(b1);
        Ok(Self { plane_id: plane_id.into(), origin, normal: n, basis1: b1, basis2: b2 })
    }

    pub fn validate(&self) -> Result<(), TrackingError> {
        let vs = [self.basis1, self.basis2, self.normal];
        for (i, a) in vs.iter().enumerate() {
            if (a.dot(*a) - 1.0).abs() > 1e-9 {
                return Err(TrackingError::InvalidPlane(format!("{}: axis {i} is not unit length", self.plane_id)));
            }
            for b in &vs[i + 1..] {
                if a.dot(*b).abs() > 1e-9 {
                    return Err(TrackingError::InvalidPlane(format!("{}: axes are not orthogonal", self.plane_id)));
                }
            }
        }
        Ok(())
    }

    /// Signed distance of `p` from the plane along the normal.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal)
    }

    /// `origin + u * basis1 + v * basis2 + height * normal`.
    pub fn point_at(&self, u: f64, v: f64, height: f64) -> Vec3 {
        self.origin + self.basis1 * u + self.basis2 * v + self.normal * height
    }

    /// Orientation whose x, y, z axes are `basis1`, `basis2`, `normal`.
    pub fn orientation(&self) -> Quat {
        Quat::from_basis(self.basis1, self.basis2, self.normal)
    }
}

/// Intersects the camera ray through `pixel` with `plane`.
pub fn lift_to_plane(camera: &CameraModel, plane: &Plane, pixel: (f64, f64)) -> Result<Vec3, TrackingError> {
    let origin = camera.position();
    let dir = camera.world_ray(pixel.0, pixel.1);
    let denom = dir.dot(plane.normal);
    if denom.abs() < 1e-9 {
        return Err(TrackingError::RayParallel);
    }
    let t = (plane.origin - origin).dot(plane.normal) / denom;
    if t <= 0.0 {
        return Err(TrackingError::BehindCamera);
    }
    Ok(origin + dir * t)
}
