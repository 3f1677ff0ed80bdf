//! Camera pose, stereo rig and scripted camera paths.

use std::fmt;
use std::str::FromStr;

use crate::error::RenderError;
use crate::math::{Quat, Vec3};

/// Largest tolerated deviation of a pose quaternion's norm from 1.
pub const UNIT_QUAT_TOLERANCE: f64 = 1e-6;

/// Camera position (meters) and orientation for one frame.
///
/// The orientation maps camera-local axes to world space: +X is right,
/// +Y is up and the camera looks down -Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quat) -> Result<Self, RenderError> {
        let n = orientation.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_QUAT_TOLERANCE {
            return Err(RenderError::Parameter(format!("orientation norm {n} is not unit")));
        }
        Ok(Pose { position, orientation })
    }

    /// Accepts any non-zero quaternion, re-normalizing it only when it is
    /// outside the unit tolerance so that already-valid poses keep their bits.
    pub fn renormalized(position: Vec3, orientation: Quat) -> Self {
        let n = orientation.norm();
        let orientation = if (n - 1.0).abs() > UNIT_QUAT_TOLERANCE {
            orientation.normalized()
        } else {
            orientation
        };
        Pose { position, orientation }
    }

    pub fn looking_at(position: Vec3, target: Vec3) -> Self {
        let forward = (target - position).normalized();
        let mut right = forward.cross(Vec3::Y);
        if right.length() < 1e-6 {
            right = forward.cross(Vec3::Z);
        }
        let right = right.normalized();
        let up = right.cross(forward);
        Pose { position, orientation: Quat::from_basis(right, up, -forward) }
    }

    pub fn right(&self) -> Vec3 {
        self.orientation.rotate(Vec3::X)
    }

    pub fn up(&self) -> Vec3 {
        self.orientation.rotate(Vec3::Y)
    }

    pub fn forward(&self) -> Vec3 {
        -self.orientation.rotate(Vec3::Z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    Left = 0,
    Right = 1,
}

impl Eye {
    pub const BOTH: [Eye; 2] = [Eye::Left, Eye::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_u8(v: u8) -> Option<Eye> {
        match v {
            0 => Some(Eye::Left),
            1 => Some(Eye::Right),
            _ => None,
        }
    }
}

/// Stereo camera optics shared by both eyes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    /// Eye separation in meters.
    pub ipd: f32,
    /// Horizontal field of view per eye, in degrees.
    pub horizontal_fov: f32,
    /// Near clip distance in meters.
    pub near: f32,
}

impl Default for CameraRig {
    fn default() -> Self {
        CameraRig { ipd: 0.064, horizontal_fov: 90.0, near: 0.1 }
    }
}

impl CameraRig {
    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.ipd >= 0.0 && self.ipd.is_finite()) {
            return Err(RenderError::Parameter(format!("ipd {} must be >= 0", self.ipd)));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < 180.0) {
            return Err(RenderError::Parameter(format!(
                "horizontal fov {} must be in (0, 180)",
                self.horizontal_fov
            )));
        }
        if !(self.near >= 0.0 && self.near.is_finite()) {
            return Err(RenderError::Parameter(format!("near {} must be >= 0", self.near)));
        }
        Ok(())
    }

    /// World-space position of `eye` for a head pose.
    pub fn eye_position(&self, pose: &Pose, eye: Eye) -> Vec3 {
        let half = self.ipd * 0.5;
        let offset = match eye {
            Eye::Left => -half,
            Eye::Right => half,
        };
        pose.position + pose.right() * offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PathId {
    /// Circle around `center` at constant height, always facing the center.
    #[default]
    Orbit = 0,
    /// Straight sweep past the center, facing it.
    Dolly = 1,
}

impl PathId {
    pub fn from_u8(v: u8) -> Option<PathId> {
        match v {
            0 => Some(PathId::Orbit),
            1 => Some(PathId::Dolly),
            _ => None,
        }
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathId::Orbit => "orbit",
            PathId::Dolly => "dolly",
        })
    }
}

impl FromStr for PathId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orbit" => Ok(PathId::Orbit),
            "dolly" => Ok(PathId::Dolly),
            other => Err(format!("unknown camera path `{other}` (expected orbit or dolly)")),
        }
    }
}

/// Scripted camera trajectory sampled once per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPath {
    pub path_id: PathId,
    pub center: Vec3,
    pub radius: f32,
    pub height: f32,
    pub frame_count: u64,
}

impl CameraPath {
    pub fn orbit(center: Vec3, radius: f32, height: f32, frame_count: u64) -> Self {
        CameraPath { path_id: PathId::Orbit, center, radius, height, frame_count }
    }

    /// The default trajectory used for a given path kind and length.
    pub fn preset(path_id: PathId, frame_count: u64) -> Self {
        CameraPath {
            path_id,
            center: Vec3::new(0.0, 0.6, 0.0),
            radius: 6.0,
            height: 1.2,
            frame_count,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.frame_count < 1 {
            return Err(RenderError::Parameter("camera path needs at least one frame".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(RenderError::Parameter(format!("path radius {} must be > 0", self.radius)));
        }
        Ok(())
    }
}

/// Pose of the camera at `frame_id` along `path`.
pub fn pose_at(path: &CameraPath, frame_id: u64) -> Result<Pose, RenderError> {
    path.validate()?;
    if frame_id >= path.frame_count {
        return Err(RenderError::FrameOutOfRange { frame_id, frame_count: path.frame_count });
    }
    let c = [path.center.x, path.center.y, path.center.z].map(f64::from);
    let r = f64::from(path.radius);
    let h = f64::from(path.height);
    let offset = match path.path_id {
        PathId::Orbit => {
            let theta = std::f64::consts::TAU * frame_id as f64 / path.frame_count as f64;
            [r * theta.cos(), h, r * theta.sin()]
        }
        PathId::Dolly => {
            let t = if path.frame_count > 1 {
                frame_id as f64 / (path.frame_count - 1) as f64
            } else {
                0.5
            };
            [r * (2.0 * t - 1.0), h, r]
        }
    };
    let position = Vec3::new(
        (c[0] + offset[0]) as f32,
        (c[1] + offset[1]) as f32,
        (c[2] + offset[2]) as f32,
    );
    Ok(Pose::looking_at(position, path.center))
}
