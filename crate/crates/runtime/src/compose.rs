//! Upsampling the reduced periphery and compositing the foveae over it.

use splitfov_core::error::GeometryError;
use splitfov_core::{Eye, Image, PartitionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Upsample {
    #[default]
    Nearest,
    Bilinear,
}

fn check_target(reduced: &Image, full: (u32, u32)) -> Result<(), GeometryError> {
    if full.0 == 0 || full.1 == 0 {
        return Err(GeometryError::EmptyImage { width: full.0, height: full.1 });
    }
    if reduced.width() > full.0 || reduced.height() > full.1 {
        return Err(GeometryError::DimensionMismatch {
            what: "upsample target",
            expected: reduced.dims(),
            actual: full,
        });
    }
    Ok(())
}

/// Output pixel (x, y) copies reduced pixel (floor(x * rw / W), floor(y * rh / H)).
pub fn upsample_nearest(reduced: &Image, full: (u32, u32)) -> Result<Image, GeometryError> {
    check_target(reduced, full)?;
    let (rw, rh) = reduced.dims();
    let (w, h) = full;
    let cols: Vec<usize> = (0..w).map(|x| (u64::from(x) * u64::from(rw) / u64::from(w)) as usize * 3).collect();
    let src = reduced.as_bytes();
    let mut out = Vec::with_capacity(w as usize * h as usize * 3);
    let mut row = Vec::with_capacity(w as usize * 3);
    let mut last_sy = u32::MAX;
    for y in 0..h {
        let sy = (u64::from(y) * u64::from(rh) / u64::from(h)) as u32;
        if sy != last_sy {
            row.clear();
            let src_row = &src[sy as usize * rw as usize * 3..][..rw as usize * 3];
            for &c in &cols {
                row.extend_from_slice(&src_row[c..c + 3]);
            }
            last_sy = sy;
        }
        out.extend_from_slice(&row);
    }
    Image::from_raw(w, h, out)
}

/// Center-aligned bilinear filter with edge clamping.
pub fn upsample_bilinear(reduced: &Image, full: (u32, u32)) -> Result<Image, GeometryError> {
    check_target(reduced, full)?;
    let (rw, rh) = reduced.dims();
    let (w, h) = full;
    let taps = |n: u32, rn: u32| -> Vec<(u32, u32, f32)> {
        (0..n)
            .map(|i| {
                let s = ((i as f32 + 0.5) * rn as f32 / n as f32 - 0.5).clamp(0.0, (rn - 1) as f32);
                let i0 = s.floor() as u32;
                (i0, (i0 + 1).min(rn - 1), s - i0 as f32)
            })
            .collect()
    };
    let xs = taps(w, rw);
    let ys = taps(h, rh);
    let mut out = Image::new(w, h, [0; 3])?;
    for (y, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (x, &(x0, x1, fx)) in xs.iter().enumerate() {
            let (a, b, c, d) = (reduced.pixel(x0, y0), reduced.pixel(x1, y0), reduced.pixel(x0, y1), reduced.pixel(x1, y1));
            let mut px = [0u8; 3];
            for k in 0..3 {
                let top = a[k] as f32 * (1.0 - fx) + b[k] as f32 * fx;
                let bot = c[k] as f32 * (1.0 - fx) + d[k] as f32 * fx;
                px[k] = (top * (1.0 - fy) + bot * fy + 0.5).clamp(0.0, 255.0) as u8;
            }
            out.set_pixel(x as u32, y as u32, px);
        }
    }
    Ok(out)
}

pub fn upsample(reduced: &Image, full: (u32, u32), mode: Upsample) -> Result<Image, GeometryError> {
    match mode {
        Upsample::Nearest => upsample_nearest(reduced, full),
        Upsample::Bilinear => upsample_bilinear(reduced, full),
    }
}

/// Overwrites each eye's foveal rect of the full-size periphery with its fovea.
pub fn merge(periphery: &Image, foveae: &[Image; 2], spec: &PartitionSpec) -> Result<Image, GeometryError> {
    if periphery.dims() != spec.full_dims() {
        return Err(GeometryError::DimensionMismatch {
            what: "periphery",
            expected: spec.full_dims(),
            actual: periphery.dims(),
        });
    }
    let mut out = periphery.clone();
    for eye in Eye::BOTH {
        let fovea = &foveae[eye.index()];
        if fovea.dims() != spec.fovea_dims() {
            return Err(GeometryError::DimensionMismatch {
                what: "fovea",
                expected: spec.fovea_dims(),
                actual: fovea.dims(),
            });
        }
        let r = spec.foveal_rect_stereo(eye).map_err(|_| GeometryError::DimensionMismatch {
            what: "foveal rect",
            expected: spec.eye_dims(),
            actual: spec.fovea_dims(),
        })?;
        out.blit(fovea, r.x, r.y)?;
    }
    Ok(out)
}

/// Upsamples the reduced periphery and merges the foveae into a display frame.
pub fn compose(reduced: &Image, foveae: &[Image; 2], spec: &PartitionSpec, mode: Upsample) -> Result<Image, GeometryError> {
    if let Ok(dims) = spec.reduced_dims() {
        if reduced.dims() != dims {
            return Err(GeometryError::DimensionMismatch { what: "reduced periphery", expected: dims, actual: reduced.dims() });
        }
    }
    merge(&upsample(reduced, spec.full_dims(), mode)?, foveae, spec)
}
