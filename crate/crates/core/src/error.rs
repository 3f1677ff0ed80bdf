use thiserror::Error;

use crate::image::Rect;

/// Image and rectangle shape errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("image dimensions {width}x{height} are empty or too large")]
    EmptyImage { width: u32, height: u32 },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("rect {rect:?} does not fit within {width}x{height}")]
    OutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("{what}: expected {}x{}, got {}x{}", expected.0, expected.1, actual.0, actual.1)]
    DimensionMismatch { what: &'static str, expected: (u32, u32), actual: (u32, u32) },
}

/// Invalid argument passed to a rendering or camera operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("frame {frame_id} is outside a path of {frame_count} frames")]
    FrameOutOfRange { frame_id: u64, frame_count: u64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
