//! Negotiated session parameters.

use splitfov_core::wire::{HelloMsg, PROTOCOL_VERSION};
use splitfov_core::{CameraPath, CameraRig, CodecId, PartitionSpec, PathId, SceneConfig, SceneId};

use crate::error::SessionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub spec: PartitionSpec,
    pub codec: CodecId,
    pub scene: SceneId,
    pub path: PathId,
    pub frames: u64,
    pub rig: CameraRig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            spec: PartitionSpec::default(),
            codec: CodecId::default(),
            scene: SceneId::default(),
            path: PathId::default(),
            frames: 1000,
            rig: CameraRig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        self.spec.validate()?;
        self.rig.validate()?;
        for (name, v) in [
            ("frame width", self.spec.full_w),
            ("frame height", self.spec.full_h),
            ("fovea width", self.spec.fov_w),
            ("fovea height", self.spec.fov_h),
        ] {
            if v > u32::from(u16::MAX) {
                return Err(SessionError::Config(format!("{name} {v} does not fit the wire format")));
            }
        }
        if self.spec.full_w % 2 != 0 {
            return Err(SessionError::Config(format!("frame width {} must be even", self.spec.full_w)));
        }
        if self.frames > u64::from(u32::MAX) {
            return Err(SessionError::Config(format!("frame count {} does not fit the wire format", self.frames)));
        }
        Ok(())
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig::new(self.scene)
    }

    /// The camera path; a zero-frame session still has a well-formed path.
    pub fn camera_path(&self) -> CameraPath {
        CameraPath::preset(self.path, self.frames.max(1))
    }

    pub fn hello(&self) -> HelloMsg {
        HelloMsg {
            protocol_version: PROTOCOL_VERSION,
            full_w: self.spec.full_w as u16,
            full_h: self.spec.full_h as u16,
            fov_w: self.spec.fov_w as u16,
            fov_h: self.spec.fov_h as u16,
            periph_scale: self.spec.periph_scale,
            codec: self.codec as u8,
            scene_id: self.scene as u8,
            path_id: self.path as u8,
            frame_count: self.frames as u32,
        }
    }

    /// Reads a peer's Hello; the rig is not negotiated and is taken from `rig`.
    pub fn from_hello(h: &HelloMsg, rig: CameraRig) -> Result<Self, SessionError> {
        if h.protocol_version != PROTOCOL_VERSION {
            return Err(SessionError::VersionMismatch { local: PROTOCOL_VERSION, peer: h.protocol_version });
        }
        let bad = |what: &str, v: u8| SessionError::Protocol(format!("unknown {what} id {v}"));
        let cfg = SessionConfig {
            spec: h.partition(),
            codec: CodecId::from_u8(h.codec).ok_or_else(|| bad("codec", h.codec))?,
            scene: SceneId::from_u8(h.scene_id).ok_or_else(|| bad("scene", h.scene_id))?,
            path: PathId::from_u8(h.path_id).ok_or_else(|| bad("path", h.path_id))?,
            frames: u64::from(h.frame_count),
            rig,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rays cast per frame by a client that renders only the periphery.
    pub fn split_client_rays(&self) -> Result<u64, SessionError> {
        let (w, h) = self.spec.reduced_dims()?;
        Ok(u64::from(w) * u64::from(h))
    }

    /// Rays cast per frame by the server: both foveae.
    pub fn server_rays(&self) -> u64 {
        2 * u64::from(self.spec.fov_w) * u64::from(self.spec.fov_h)
    }

    /// Rays cast per frame when one device renders everything.
    pub fn native_rays(&self) -> Result<u64, SessionError> {
        Ok(self.split_client_rays()? + self.server_rays())
    }
}
