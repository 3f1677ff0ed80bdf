//! RGB8 framebuffers, rectangles and binary PPM export.

use std::io::{self, BufRead, Write};

use crate::error::GeometryError;

/// Axis-aligned pixel rectangle with a top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub const fn full(w: u32, h: u32) -> Self {
        Rect { x: 0, y: 0, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    /// True when the rectangle is non-empty and lies inside a `w` x `h` frame.
    pub fn fits_within(&self, w: u32, h: u32) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= w as u64 && self.bottom() <= h as u64
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && py >= self.y && (px as u64) < self.right() && (py as u64) < self.bottom()
    }
}

/// Dense row-major RGB8 image, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Image {
    /// Solid-color image.
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Result<Self, GeometryError> {
        let len = byte_len(width, height)?;
        let mut pixels = Vec::with_capacity(len);
        for _ in 0..len / 3 {
            pixels.extend_from_slice(&fill);
        }
        Ok(Image { width, height, pixels })
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, GeometryError> {
        let len = byte_len(width, height)?;
        if pixels.len() != len {
            return Err(GeometryError::BufferLength { expected: len, actual: pixels.len() });
        }
        Ok(Image { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let stride = self.width as usize * 3;
        let start = y as usize * stride;
        &self.pixels[start..start + stride]
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn crop(&self, rect: Rect) -> Result<Image, GeometryError> {
        if !rect.fits_within(self.width, self.height) {
            return Err(GeometryError::OutOfBounds { rect, width: self.width, height: self.height });
        }
        let mut pixels = Vec::with_capacity(rect.area() as usize * 3);
        let (x0, x1) = (rect.x as usize * 3, rect.right() as usize * 3);
        for y in rect.y..rect.y + rect.h {
            pixels.extend_from_slice(&self.row(y)[x0..x1]);
        }
        Ok(Image { width: rect.w, height: rect.h, pixels })
    }

    /// Copies `src` into this image with its top-left corner at (`x`, `y`).
    pub fn blit(&mut self, src: &Image, x: u32, y: u32) -> Result<(), GeometryError> {
        let rect = Rect::new(x, y, src.width, src.height);
        if !rect.fits_within(self.width, self.height) {
            return Err(GeometryError::OutOfBounds { rect, width: self.width, height: self.height });
        }
        let stride = self.width as usize * 3;
        let row_len = src.width as usize * 3;
        for sy in 0..src.height {
            let dst = (y + sy) as usize * stride + x as usize * 3;
            self.pixels[dst..dst + row_len].copy_from_slice(src.row(sy));
        }
        Ok(())
    }

    /// Places `left` and `right` next to each other. Heights must match.
    pub fn side_by_side(left: &Image, right: &Image) -> Result<Image, GeometryError> {
        if left.height != right.height {
            return Err(GeometryError::DimensionMismatch {
                what: "stereo halves",
                expected: (left.width, left.height),
                actual: (right.width, right.height),
            });
        }
        let mut out = Image::new(left.width + right.width, left.height, [0; 3])?;
        out.blit(left, 0, 0)?;
        out.blit(right, left.width, 0)?;
        Ok(out)
    }

    /// Binary PPM (P6, maxval 255).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() + 20);
        self.write_ppm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_ppm<R: BufRead>(mut input: R) -> io::Result<Image> {
        let mut fields = Vec::with_capacity(4);
        let mut token = Vec::new();
        // Header: magic, width, height, maxval separated by whitespace; '#' starts a comment.
        while fields.len() < 4 {
            let mut byte = [0u8; 1];
            input.read_exact(&mut byte)?;
            match byte[0] {
                b'#' if token.is_empty() => {
                    let mut skip = Vec::new();
                    input.read_until(b'\n', &mut skip)?;
                }
                c if c.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        fields.push(String::from_utf8_lossy(&token).into_owned());
                        token.clear();
                    }
                }
                c => token.push(c),
            }
        }
        let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        if fields[0] != "P6" {
            return Err(bad("not a binary PPM"));
        }
        let width: u32 = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = fields[2].parse().map_err(|_| bad("bad height"))?;
        if fields[3] != "255" {
            return Err(bad("only maxval 255 is supported"));
        }
        let len = byte_len(width, height).map_err(|e| bad(&e.to_string()))?;
        let mut pixels = vec![0u8; len];
        input.read_exact(&mut pixels)?;
        Ok(Image { width, height, pixels })
    }
}

fn byte_len(width: u32, height: u32) -> Result<usize, GeometryError> {
    if width == 0 || height == 0 {
        return Err(GeometryError::EmptyImage { width, height });
    }
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(3))
        .ok_or(GeometryError::EmptyImage { width, height })
}
