//! Pinhole camera over the ground plane `z = 0`.
//!
//! Camera frame: x right, y down, z forward. `pose` maps camera
//! coordinates to world coordinates; its rotation block holds the camera
//! axes as columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traj::{Pose2D, Vec2};

type Vec3 = [f64; 3];

const ORTHO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Camera-to-world transform, row-major.
    pub pose: [[f64; 4]; 4],
}

/// Result of projecting a ground point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Pixel { u: f64, v: f64 },
    OutsideVisible,
}

impl Projection {
    /// Nearest pixel `(column, row)`.
    pub fn nearest(&self) -> Option<(u32, u32)> {
        match *self {
            Projection::Pixel { u, v } => Some((u.round() as u32, v.round() as u32)),
            Projection::OutsideVisible => None,
        }
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl CameraModel {
    /// Camera mounted at `height` above the agent, yawed to its heading and
    /// pitched down by `tilt` radians.
    pub fn mounted(agent: &Pose2D, height: f64, tilt: f64, intrinsics: &Intrinsics) -> Result<Self> {
        let yaw = agent.heading();
        let forward = [tilt.cos() * yaw.cos(), tilt.cos() * yaw.sin(), -tilt.sin()];
        let right = [yaw.sin(), -yaw.cos(), 0.0];
        let down = cross(forward, right);
        let t = [agent.position.x, agent.position.y, height];
        let mut pose = [[0.0; 4]; 4];
        for r in 0..3 {
            pose[r] = [right[r], down[r], forward[r], t[r]];
        }
        pose[3] = [0.0, 0.0, 0.0, 1.0];
        let cam = CameraModel {
            fx: intrinsics.fx,
            fy: intrinsics.fy,
            cx: intrinsics.cx,
            cy: intrinsics.cy,
            width: intrinsics.width,
            height: intrinsics.height,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.fx, self.fy, self.cx, self.cy].iter().chain(self.pose.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("camera parameters".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::Config("camera needs positive focal lengths and image size".into()));
        }
        if self.pose[3] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::Config("camera pose bottom row must be 0 0 0 1".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(self.axis(i), self.axis(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                if (d - expected).abs() > ORTHO_TOLERANCE {
                    return Err(Error::Config("camera rotation is not orthonormal".into()));
                }
            }
        }
        let det = dot(cross(self.axis(0), self.axis(1)), self.axis(2));
        if (det - 1.0).abs() > ORTHO_TOLERANCE {
            return Err(Error::Config("camera rotation has determinant -1".into()));
        }
        Ok(())
    }

    /// Column `i` of the rotation block: camera axis `i` in world coordinates.
    fn axis(&self, i: usize) -> Vec3 {
        [self.pose[0][i], self.pose[1][i], self.pose[2][i]]
    }

    pub fn center(&self) -> Vec3 {
        [self.pose[0][3], self.pose[1][3], self.pose[2][3]]
    }

    fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= -0.5 && v >= -0.5 && u < self.width as f64 - 0.5 && v < self.height as f64 - 0.5
    }

    /// Projects the ground point `(x, y, 0)`.
    pub fn project(&self, x: Vec2) -> Projection {
        let c = self.center();
        let d = [x.x - c[0], x.y - c[1], -c[2]];
        let p = [dot(self.axis(0), d), dot(self.axis(1), d), dot(self.axis(2), d)];
        if !(p[2] > 0.0) {
            return Projection::OutsideVisible;
        }
        let u = self.fx * p[0] / p[2] + self.cx;
        let v = self.fy * p[1] / p[2] + self.cy;
        if self.in_bounds(u, v) {
            Projection::Pixel { u, v }
        } else {
            Projection::OutsideVisible
        }
    }

    /// Intersects the ray through pixel `(u, v)` with the ground plane.
    pub fn back_project(&self, u: f64, v: f64) -> Option<Vec2> {
        let ray_cam = [(u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0];
        let ray = [
            self.pose[0][0] * ray_cam[0] + self.pose[0][1] * ray_cam[1] + self.pose[0][2] * ray_cam[2],
            self.pose[1][0] * ray_cam[0] + self.pose[1][1] * ray_cam[1] + self.pose[1][2] * ray_cam[2],
            self.pose[2][0] * ray_cam[0] + self.pose[2][1] * ray_cam[1] + self.pose[2][2] * ray_cam[2],
        ];
        let c = self.center();
        // Rays that are level, rising, or start below the ground never meet it
        // in front of the camera.
        if !(ray[2] < 0.0) || !(c[2] > 0.0) {
            return None;
        }
        let s = -c[2] / ray[2];
        Some(Vec2::new(c[0] + s * ray[0], c[1] + s * ray[1]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("camera serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cam: CameraModel = serde_json::from_str(text).map_err(|e| Error::format("camera", e.to_string()))?;
        cam.validate()?;
        Ok(cam)
    }
}

/// Intrinsic parameters shared by every synthetic camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Intrinsics { fx: 40.0, fy: 40.0, cx: 63.5, cy: 47.5, width: 128, height: 96 }
    }
}
