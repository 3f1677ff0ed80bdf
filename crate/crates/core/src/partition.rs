//! Image-space split of a stereo frame into centered foveal rectangles
//! (rendered remotely at full rate) and a reduced-rate peripheral buffer.

use std::fmt;

use thiserror::Error;

use crate::camera::Eye;
use crate::image::Rect;
use crate::render::scaled_dims;

/// Geometry of the split for a side-by-side stereo frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub full_w: u32,
    pub full_h: u32,
    pub eye_w: u32,
    pub eye_h: u32,
    pub fov_w: u32,
    pub fov_h: u32,
    /// Sampling-rate ratio of the peripheral buffer, in (0, 1].
    pub periph_scale: f32,
}

impl Default for PartitionSpec {
    /// 2400x1080 stereo frame, 512x360 fovea per eye, 1440x648 periphery.
    fn default() -> Self {
        PartitionSpec::new(2400, 1080, 512, 360, 0.6)
    }
}

impl PartitionSpec {
    /// Builds a spec from stereo-frame and fovea dimensions; the eye viewport
    /// is the left or right half of the frame.
    pub fn new(full_w: u32, full_h: u32, fov_w: u32, fov_h: u32, periph_scale: f32) -> Self {
        PartitionSpec { full_w, full_h, eye_w: full_w / 2, eye_h: full_h, fov_w, fov_h, periph_scale }
    }

    /// Small configuration with the default proportions, cheap enough for tests.
    pub fn desk() -> Self {
        PartitionSpec::new(600, 270, 128, 90, 0.6)
    }

    pub fn eye_dims(&self) -> (u32, u32) {
        (self.eye_w, self.eye_h)
    }

    pub fn full_dims(&self) -> (u32, u32) {
        (self.full_w, self.full_h)
    }

    pub fn fovea_dims(&self) -> (u32, u32) {
        (self.fov_w, self.fov_h)
    }

    pub fn validate(&self) -> Result<(), Violations> {
        let v = violations(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Violations(v))
        }
    }

    /// Centered foveal rectangle in per-eye coordinates; odd remainders
    /// floor toward the top-left. Both eyes share the same per-eye rectangle.
    pub fn foveal_rect(&self, _eye: Eye) -> Result<Rect, Violations> {
        self.validate()?;
        Ok(Rect::new((self.eye_w - self.fov_w) / 2, (self.eye_h - self.fov_h) / 2, self.fov_w, self.fov_h))
    }

    /// The foveal rectangle in stereo-frame coordinates (right eye shifted by `eye_w`).
    pub fn foveal_rect_stereo(&self, eye: Eye) -> Result<Rect, Violations> {
        let mut r = self.foveal_rect(eye)?;
        if eye == Eye::Right {
            r.x += self.eye_w;
        }
        Ok(r)
    }

    pub fn reduced_dims(&self) -> Result<(u32, u32), Violations> {
        self.validate()?;
        Ok(scaled_dims(self.full_dims(), self.periph_scale))
    }
}

/// One violated constraint of a [`PartitionSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    ZeroDimension(&'static str),
    StereoWidth,
    EyeHeight,
    FovealWidth,
    FovealHeight,
    PeripheralScale,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension(name) => write!(f, "{name} must be at least 1"),
            Violation::StereoWidth => f.write_str("full width must be exactly twice the eye width"),
            Violation::EyeHeight => f.write_str("eye height must equal the full height"),
            Violation::FovealWidth => f.write_str("foveal width exceeds eye width"),
            Violation::FovealHeight => f.write_str("foveal height exceeds eye height"),
            Violation::PeripheralScale => f.write_str("peripheral scale must be in (0, 1]"),
        }
    }
}

/// Every constraint a spec violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid partition: ")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every invariant, returning all violations rather than the first.
pub fn violations(spec: &PartitionSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for (name, v) in [
        ("full width", spec.full_w),
        ("full height", spec.full_h),
        ("eye width", spec.eye_w),
        ("eye height", spec.eye_h),
        ("foveal width", spec.fov_w),
        ("foveal height", spec.fov_h),
    ] {
        if v == 0 {
            out.push(Violation::ZeroDimension(name));
        }
    }
    if spec.full_w as u64 != 2 * spec.eye_w as u64 {
        out.push(Violation::StereoWidth);
    }
    if spec.eye_h != spec.full_h {
        out.push(Violation::EyeHeight);
    }
    if spec.fov_w > spec.eye_w {
        out.push(Violation::FovealWidth);
    }
    if spec.fov_h > spec.eye_h {
        out.push(Violation::FovealHeight);
    }
    if !(spec.periph_scale > 0.0 && spec.periph_scale <= 1.0) {
        out.push(Violation::PeripheralScale);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PartitionSpec {
        PartitionSpec {
            full_w: 2400,
            full_h: 1080,
            eye_w: 1200,
            eye_h: 1080,
            fov_w: 512,
            fov_h: 360,
            periph_scale: 0.6,
        }
    }

    #[test]
    fn default_spec_is_valid() {
        assert_eq!(reference(), PartitionSpec::default());
        assert!(reference().validate().is_ok());
    }

    #[test]
    fn centered_fovea() {
        let s = reference();
        assert_eq!(s.foveal_rect(Eye::Left).unwrap(), Rect::new(344, 360, 512, 360));
        assert_eq!(s.foveal_rect(Eye::Right).unwrap(), Rect::new(344, 360, 512, 360));
        assert_eq!(s.foveal_rect_stereo(Eye::Left).unwrap(), Rect::new(344, 360, 512, 360));
        assert_eq!(s.foveal_rect_stereo(Eye::Right).unwrap(), Rect::new(1544, 360, 512, 360));
    }

    #[test]
    fn full_cover_fovea() {
        let s = PartitionSpec { fov_w: 1200, fov_h: 1080, ..reference() };
        assert_eq!(s.foveal_rect(Eye::Left).unwrap(), Rect::new(0, 0, 1200, 1080));
    }

    #[test]
    fn odd_remainder_floors_top_left() {
        let s = PartitionSpec::new(20, 9, 3, 4, 1.0);
        let r = s.foveal_rect(Eye::Left).unwrap();
        assert_eq!((r.x, r.y), (3, 2));
        // left margin 3, right margin 4; top 2, bottom 3
    }

    #[test]
    fn reduced_dims_examples() {
        assert_eq!(reference().reduced_dims().unwrap(), (1440, 648));
        assert_eq!(PartitionSpec { periph_scale: 1.0, ..reference() }.reduced_dims().unwrap(), (2400, 1080));
        let tiny = PartitionSpec::new(10, 10, 1, 1, 0.05);
        assert_eq!(tiny.reduced_dims().unwrap(), (1, 1));
    }

    #[test]
    fn foveal_width_violation() {
        let s = PartitionSpec { fov_w: 1300, ..reference() };
        let err = s.validate().unwrap_err();
        assert_eq!(err.0, vec![Violation::FovealWidth]);
        assert_eq!(Violation::FovealWidth.to_string(), "foveal width exceeds eye width");
    }

    #[test]
    fn zero_scale_violation() {
        let err = PartitionSpec { periph_scale: 0.0, ..reference() }.validate().unwrap_err();
        assert_eq!(err.0, vec![Violation::PeripheralScale]);
    }

    #[test]
    fn reports_every_violation() {
        let s = PartitionSpec {
            full_w: 2401,
            full_h: 1080,
            eye_w: 1200,
            eye_h: 1000,
            fov_w: 1300,
            fov_h: 2000,
            periph_scale: 1.5,
        };
        let err = s.validate().unwrap_err();
        assert_eq!(
            err.0,
            vec![
                Violation::StereoWidth,
                Violation::EyeHeight,
                Violation::FovealWidth,
                Violation::FovealHeight,
                Violation::PeripheralScale
            ]
        );
        assert!(s.foveal_rect(Eye::Left).is_err());
        assert!(s.reduced_dims().is_err());
    }
}
