//! Trajectory representations and frame transforms.
//!
//! The world frame is a fixed right-handed 2-D frame with headings measured
//! counter-clockwise from +x. Every trajectory carries its sampling period so
//! that mismatched sequences are caught where they are combined.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling period of every log and prediction, in seconds.
pub const DT: f64 = 0.5;

/// Tolerance used when asserting that two sampling periods agree.
pub const DT_TOLERANCE: f64 = 1e-9;

/// A 2-D vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateInput(format!("time step must be positive, got {dt}")))
    }
}

fn check_points(points: &[Vec2], what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::DegenerateInput(format!("{what} is empty")));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Asserts that two sampling periods agree within [`DT_TOLERANCE`].
pub fn ensure_same_dt(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= DT_TOLERANCE {
        Ok(())
    } else {
        Err(Error::TimeStepMismatch(a, b))
    }
}

/// Time-ordered absolute positions at a fixed sampling period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    positions: Vec<Vec2>,
    dt: f64,
}

impl Trajectory {
    pub fn new(positions: Vec<Vec2>, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        check_points(&positions, "trajectory")?;
        Ok(Trajectory { positions, dt })
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn first(&self) -> Vec2 {
        self.positions[0]
    }

    pub fn last(&self) -> Vec2 {
        self.positions[self.positions.len() - 1]
    }

    /// Sub-trajectory over `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Trajectory> {
        let positions = self
            .positions
            .get(range.clone())
            .ok_or_else(|| Error::DegenerateInput(format!("slice {range:?} out of bounds")))?;
        Trajectory::new(positions.to_vec(), self.dt)
    }

    /// Concatenates two trajectories sampled at the same period.
    pub fn concat(&self, other: &Trajectory) -> Result<Trajectory> {
        ensure_same_dt(self.dt, other.dt)?;
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        Trajectory::new(positions, self.dt)
    }

    /// Applies a rigid motion (rotation about the origin, then translation).
    pub fn rigid_transform(&self, rotation: f64, translation: Vec2) -> Trajectory {
        Trajectory { positions: self.positions.iter().map(|p| p.rotate(rotation) + translation).collect(), dt: self.dt }
    }
}

/// Consecutive displacements at a fixed sampling period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeTrajectory {
    displacements: Vec<Vec2>,
    dt: f64,
}

impl RelativeTrajectory {
    pub fn new(displacements: Vec<Vec2>, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        check_points(&displacements, "relative trajectory")?;
        Ok(RelativeTrajectory { displacements, dt })
    }

    pub fn displacements(&self) -> &[Vec2] {
        &self.displacements
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    /// Rotates every displacement by `angle`.
    pub fn rotated(&self, angle: f64) -> RelativeTrajectory {
        RelativeTrajectory { displacements: self.displacements.iter().map(|d| d.rotate(angle)).collect(), dt: self.dt }
    }

    /// Flattened `[dx0, dy0, dx1, dy1, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.displacements.iter().flat_map(|d| [d.x, d.y]).collect()
    }

    pub fn from_flat(flat: &[f64], dt: f64) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::DegenerateInput(format!("flat displacement list has odd length {}", flat.len())));
        }
        let displacements = flat.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
        RelativeTrajectory::new(displacements, dt)
    }
}

/// Position and heading of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub position: Vec2,
    heading: f64,
}

impl Pose2D {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Pose2D { position, heading: normalize_angle(heading) }
    }

    /// Heading in (-pi, pi].
    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// Maps a point expressed in this pose's local frame to the world frame.
    pub fn to_world(&self, local: Vec2) -> Vec2 {
        local.rotate(self.heading) + self.position
    }

    /// Maps a world point into this pose's local frame.
    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.position).rotate(-self.heading)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

pub fn to_relative(traj: &Trajectory) -> Result<RelativeTrajectory> {
    if traj.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least 2 positions to difference, got {}", traj.len())));
    }
    let displacements = traj.positions.windows(2).map(|w| w[1] - w[0]).collect();
    RelativeTrajectory::new(displacements, traj.dt)
}

/// Accumulates displacements starting from `origin`; the origin itself is not
/// part of the output.
pub fn to_absolute(rel: &RelativeTrajectory, origin: Vec2) -> Result<Trajectory> {
    if rel.is_empty() {
        return Err(Error::DegenerateInput("empty relative trajectory".into()));
    }
    let mut cursor = origin;
    let positions = rel
        .displacements
        .iter()
        .map(|d| {
            cursor += *d;
            cursor
        })
        .collect();
    Trajectory::new(positions, rel.dt)
}

/// Maps displacements expressed in the agent's heading-aligned frame into
/// world positions starting at the agent's position.
pub fn transform_to_world(rel_local: &RelativeTrajectory, agent: &Pose2D) -> Result<Trajectory> {
    to_absolute(&rel_local.rotated(agent.heading), agent.position)
}
