//! Lossless intra-frame codecs for foveal subframes.
//!
//! `PredDeflate` replaces every byte with its difference (mod 256) from the
//! same channel of a predictor pixel, then compresses the residuals as a raw
//! DEFLATE stream (RFC 1951, no zlib wrapper). The predictor is the left
//! neighbour, except for the first pixel of a row which uses the pixel above;
//! the top-left pixel is predicted as zero. Decoding needs only the codec id
//! and the image dimensions.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use flate2::write::DeflateEncoder;
use flate2::{Compression, Decompress, FlushDecompress, Status};
use thiserror::Error;

use crate::image::Image;

/// Codec identifier. Values are wire-visible and must never change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CodecId {
    Raw = 0,
    #[default]
    PredDeflate = 1,
}

impl CodecId {
    pub fn from_u8(v: u8) -> Option<CodecId> {
        match v {
            0 => Some(CodecId::Raw),
            1 => Some(CodecId::PredDeflate),
            _ => None,
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodecId::Raw => "raw",
            CodecId::PredDeflate => "pred-deflate",
        })
    }
}

impl FromStr for CodecId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(CodecId::Raw),
            "pred-deflate" | "pred_deflate" => Ok(CodecId::PredDeflate),
            other => Err(format!("unknown codec `{other}` (expected raw or pred-deflate)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid dimensions {width}x{height}")]
    Dimensions { width: u32, height: u32 },
    #[error("payload is {actual} bytes, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("compressed stream ended before the image was complete")]
    Truncated,
    #[error("compressed stream decodes to more than {expected} bytes")]
    Overlong { expected: usize },
    #[error("{0} trailing bytes after the compressed stream")]
    TrailingData(usize),
    #[error("corrupt compressed stream: {0}")]
    Corrupt(String),
}

pub fn encode(codec: CodecId, img: &Image) -> Vec<u8> {
    match codec {
        CodecId::Raw => img.as_bytes().to_vec(),
        CodecId::PredDeflate => {
            let residuals = predict(img.as_bytes(), img.width() as usize);
            let mut enc = DeflateEncoder::new(Vec::with_capacity(residuals.len() / 4), Compression::default());
            enc.write_all(&residuals).expect("in-memory deflate cannot fail");
            enc.finish().expect("in-memory deflate cannot fail")
        }
    }
}

pub fn decode(codec: CodecId, data: &[u8], width: u32, height: u32) -> Result<Image, CodecError> {
    let expected = expected_len(width, height)?;
    let pixels = match codec {
        CodecId::Raw => {
            if data.len() != expected {
                return Err(CodecError::Length { expected, actual: data.len() });
            }
            data.to_vec()
        }
        CodecId::PredDeflate => {
            let mut residuals = inflate_exact(data, expected)?;
            unpredict(&mut residuals, width as usize);
            residuals
        }
    };
    Image::from_raw(width, height, pixels).map_err(|_| CodecError::Dimensions { width, height })
}

fn expected_len(width: u32, height: u32) -> Result<usize, CodecError> {
    if width == 0 || height == 0 {
        return Err(CodecError::Dimensions { width, height });
    }
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(3))
        .ok_or(CodecError::Dimensions { width, height })
}

/// Inflates `data`, requiring exactly `expected` output bytes, a terminated
/// final block, and no bytes after it.
fn inflate_exact(data: &[u8], expected: usize) -> Result<Vec<u8>, CodecError> {
    let mut inflater = Decompress::new(false);
    // One spare byte detects streams that decode to too much data.
    let mut out = vec![0u8; expected + 1];
    loop {
        let in_pos = inflater.total_in() as usize;
        let out_pos = inflater.total_out() as usize;
        let status = inflater
            .decompress(&data[in_pos..], &mut out[out_pos..], FlushDecompress::Finish)
            .map_err(|e| CodecError::Corrupt(e.to_string()))?;
        let produced = inflater.total_out() as usize;
        if produced > expected {
            return Err(CodecError::Overlong { expected });
        }
        match status {
            Status::StreamEnd => break,
            Status::Ok | Status::BufError => {
                let progressed = inflater.total_in() as usize != in_pos || produced != out_pos;
                if !progressed {
                    return Err(CodecError::Truncated);
                }
            }
        }
    }
    let consumed = inflater.total_in() as usize;
    if consumed != data.len() {
        return Err(CodecError::TrailingData(data.len() - consumed));
    }
    let produced = inflater.total_out() as usize;
    if produced != expected {
        return Err(CodecError::Length { expected, actual: produced });
    }
    out.truncate(expected);
    Ok(out)
}

/// Residuals of `pixels` (row-major RGB8, `width` pixels per row).
pub fn predict(pixels: &[u8], width: usize) -> Vec<u8> {
    let stride = width * 3;
    let mut out = vec![0u8; pixels.len()];
    for (i, (&cur, res)) in pixels.iter().zip(out.iter_mut()).enumerate() {
        *res = cur.wrapping_sub(predictor(pixels, i, stride));
    }
    out
}

/// Inverse of [`predict`], in place.
pub fn unpredict(residuals: &mut [u8], width: usize) {
    let stride = width * 3;
    for i in 0..residuals.len() {
        let pred = predictor(residuals, i, stride);
        residuals[i] = residuals[i].wrapping_add(pred);
    }
}

/// Predicted value of byte `i`; only reads bytes before `i`.
#[inline]
fn predictor(buf: &[u8], i: usize, stride: usize) -> u8 {
    if i % stride >= 3 {
        buf[i - 3]
    } else if i >= stride {
        buf[i - stride]
    } else {
        0
    }
}
