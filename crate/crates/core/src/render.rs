//! Deterministic per-pixel raycast renderer.
//!
//! Every output pixel is the shading of exactly one primary ray cast through a
//! continuous sample position in an eye's viewport. Full-rate pixels sample at
//! their centers, `(px + 0.5, py + 0.5)`, so rendering a sub-rectangle yields
//! the same bytes as cropping a full-frame render. Reduced-rate buffers sample
//! at `((i + 0.5) / scale, (j + 0.5) / scale)` in stereo-frame coordinates.

use crate::camera::{CameraRig, Eye, Pose};
use crate::error::{GeometryError, RenderError};
use crate::image::{Image, Rect};
use crate::math::Vec3;
use crate::scene::{Scene, SceneConfig};

/// Per-eye view parameters, precomputed once per render call.
struct EyeView {
    origin: Vec3,
    right: Vec3,
    up: Vec3,
    forward: Vec3,
    tan_half_x: f32,
    tan_half_y: f32,
    inv_w: f32,
    inv_h: f32,
    near: f32,
}

impl EyeView {
    fn new(rig: &CameraRig, pose: &Pose, eye: Eye, eye_w: u32, eye_h: u32) -> EyeView {
        let tan_half_x = (f64::from(rig.horizontal_fov).to_radians() * 0.5).tan() as f32;
        EyeView {
            origin: rig.eye_position(pose, eye),
            right: pose.right(),
            up: pose.up(),
            forward: pose.forward(),
            tan_half_x,
            tan_half_y: tan_half_x * (eye_h as f32 / eye_w as f32),
            inv_w: 1.0 / eye_w as f32,
            inv_h: 1.0 / eye_h as f32,
            near: rig.near,
        }
    }

    /// Shades the sample at continuous per-eye coordinates (`sx`, `sy`).
    fn sample(&self, scene: &Scene, sx: f32, sy: f32) -> [u8; 3] {
        let ndc_x = (2.0 * sx * self.inv_w - 1.0) * self.tan_half_x;
        let ndc_y = (1.0 - 2.0 * sy * self.inv_h) * self.tan_half_y;
        let dir = (self.right * ndc_x + self.up * ndc_y + self.forward).normalized();
        scene.shade(self.origin, dir, self.forward, self.near)
    }
}

/// Renders `region` of one eye's `full_eye_dims` viewport at the full sampling rate.
pub fn render_region(
    scene: &SceneConfig,
    rig: &CameraRig,
    pose: &Pose,
    eye: Eye,
    full_eye_dims: (u32, u32),
    region: Rect,
) -> Result<Image, RenderError> {
    rig.validate()?;
    let (eye_w, eye_h) = full_eye_dims;
    if eye_w == 0 || eye_h == 0 {
        return Err(GeometryError::EmptyImage { width: eye_w, height: eye_h }.into());
    }
    if !region.fits_within(eye_w, eye_h) {
        return Err(GeometryError::OutOfBounds { rect: region, width: eye_w, height: eye_h }.into());
    }
    let built = Scene::build(scene);
    let view = EyeView::new(rig, pose, eye, eye_w, eye_h);
    let mut pixels = Vec::with_capacity(region.area() as usize * 3);
    for py in region.y..region.y + region.h {
        let sy = py as f32 + 0.5;
        for px in region.x..region.x + region.w {
            let sx = px as f32 + 0.5;
            pixels.extend_from_slice(&view.sample(&built, sx, sy));
        }
    }
    Ok(Image::from_raw(region.w, region.h, pixels)?)
}

/// Renders one full eye viewport at the full sampling rate.
pub fn render_eye(
    scene: &SceneConfig,
    rig: &CameraRig,
    pose: &Pose,
    eye: Eye,
    eye_dims: (u32, u32),
) -> Result<Image, RenderError> {
    render_region(scene, rig, pose, eye, eye_dims, Rect::full(eye_dims.0, eye_dims.1))
}

/// Renders both eyes side by side at the full sampling rate.
pub fn render_stereo(
    scene: &SceneConfig,
    rig: &CameraRig,
    pose: &Pose,
    eye_pair_dims: (u32, u32),
) -> Result<Image, RenderError> {
    let eye_dims = (eye_pair_dims.0 / 2, eye_pair_dims.1);
    let left = render_eye(scene, rig, pose, Eye::Left, eye_dims)?;
    let right = render_eye(scene, rig, pose, Eye::Right, eye_dims)?;
    Ok(Image::side_by_side(&left, &right)?)
}

/// Output size of a reduced-rate buffer: each side rounded, then clamped to >= 1.
pub fn scaled_dims(dims: (u32, u32), scale: f32) -> (u32, u32) {
    let side = |v: u32| ((f64::from(v) * f64::from(scale)).round() as u32).max(1);
    (side(dims.0), side(dims.1))
}

/// Renders the full side-by-side stereo frame into a buffer of
/// `scaled_dims(eye_pair_dims, scale)` pixels. `eye_pair_dims.0` is split
/// evenly between the eyes.
pub fn render_scaled(
    scene: &SceneConfig,
    rig: &CameraRig,
    pose: &Pose,
    eye_pair_dims: (u32, u32),
    scale: f32,
) -> Result<Image, RenderError> {
    rig.validate()?;
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(RenderError::Parameter(format!("scale {scale} must be in (0, 1]")));
    }
    let (full_w, full_h) = eye_pair_dims;
    let eye_w = full_w / 2;
    if eye_w == 0 || full_h == 0 || full_w % 2 != 0 {
        return Err(RenderError::Parameter(format!(
            "stereo frame {full_w}x{full_h} must have an even width of at least 2"
        )));
    }
    let (rw, rh) = scaled_dims(eye_pair_dims, scale);
    let built = Scene::build(scene);
    let views = [
        EyeView::new(rig, pose, Eye::Left, eye_w, full_h),
        EyeView::new(rig, pose, Eye::Right, eye_w, full_h),
    ];
    let eye_w_f = eye_w as f32;
    let mut pixels = Vec::with_capacity(rw as usize * rh as usize * 3);
    for j in 0..rh {
        let sy = (j as f32 + 0.5) / scale;
        for i in 0..rw {
            let fx = (i as f32 + 0.5) / scale;
            let rgb = if fx < eye_w_f {
                views[0].sample(&built, fx, sy)
            } else {
                views[1].sample(&built, fx - eye_w_f, sy)
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    Ok(Image::from_raw(rw, rh, pixels)?)
}
