//! Building blocks for foveated split rendering: a deterministic CPU
//! raycaster, the image-space partition between server fovea and client
//! periphery, a lossless subframe codec, the session wire format, and the
//! latency statistics used to evaluate runs.

pub mod camera;
pub mod codec;
pub mod error;
pub mod image;
pub mod math;
pub mod metrics;
pub mod partition;
pub mod render;
pub mod scene;
pub mod wire;

pub use camera::{pose_at, CameraPath, CameraRig, Eye, PathId, Pose};
pub use codec::{CodecError, CodecId};
pub use error::{GeometryError, RenderError};
pub use image::{Image, Rect};
pub use metrics::{ClientFrameRecord, ServerFrameTiming, Summary};
pub use partition::{PartitionSpec, Violation, Violations};
pub use render::{render_region, render_scaled};
pub use scene::{SceneConfig, SceneId};
pub use wire::{Message, WireError};
