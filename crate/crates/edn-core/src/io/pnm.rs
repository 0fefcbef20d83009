//! Binary netpbm IO: P6 (RGB) and P5 (gray), 8-bit, maxval 255 only.
//! Parse errors carry the byte offset they were detected at.

use crate::error::{EdnError, Result};
use crate::layers::upsample_bilinear;
use crate::metrics::{GtMask, SaliencyMap};
use crate::tensor::Tensor4;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Raw 8-bit netpbm payload; `channels` is 1 (P5) or 3 (P6).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub w: usize,
    pub h: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_separators(&mut self) -> Result<()> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => return Ok(()),
                None => {
                    return Err(EdnError::format(
                        self.pos as u64,
                        "unexpected end of file in header",
                    ))
                }
            }
        }
    }

    fn read_int(&mut self) -> Result<usize> {
        self.skip_separators()?;
        let start = self.pos;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_digit() {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(EdnError::format(start as u64, "expected an integer"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| EdnError::format(start as u64, "integer out of range"))
    }
}

fn parse_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(EdnError::format(
                0,
                "bad magic: expected binary `P5` or `P6`",
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let w = cur.read_int()?;
    let h = cur.read_int()?;
    let maxval_at = {
        cur.skip_separators()?;
        cur.pos
    };
    let maxval = cur.read_int()?;
    if maxval != 255 {
        return Err(EdnError::format(
            maxval_at as u64,
            format!("maxval must be 255, got {maxval}"),
        ));
    }
    if w == 0 || h == 0 {
        return Err(EdnError::format(2, "image dims must be >= 1"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(EdnError::format(
                cur.pos as u64,
                "expected single whitespace before payload",
            ))
        }
    }
    let expect = w * h * channels;
    let payload = &bytes[cur.pos.min(bytes.len())..];
    if payload.len() < expect {
        return Err(EdnError::format(
            bytes.len() as u64,
            format!(
                "truncated payload: expected {expect} bytes, found {}",
                payload.len()
            ),
        ));
    }
    if payload.len() > expect {
        return Err(EdnError::format(
            (cur.pos + expect) as u64,
            format!("{} trailing bytes after payload", payload.len() - expect),
        ));
    }
    Ok(PnmImage {
        w,
        h,
        channels,
        data: payload.to_vec(),
    })
}

pub fn read_pnm(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path)?;
    parse_pnm(&bytes)
}

pub fn write_pgm(path: &Path, w: usize, h: usize, data: &[u8]) -> Result<()> {
    if data.len() != w * h {
        return Err(EdnError::dimension(format!(
            "pgm payload {} does not match {w}x{h}",
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(data.len() + 32);
    write!(out, "P5\n{w} {h}\n255\n")?;
    out.extend_from_slice(data);
    fs::write(path, out)?;
    Ok(())
}

pub fn write_ppm(path: &Path, w: usize, h: usize, data: &[u8]) -> Result<()> {
    if data.len() != w * h * 3 {
        return Err(EdnError::dimension(format!(
            "ppm payload {} does not match {w}x{h}x3",
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(data.len() + 32);
    write!(out, "P6\n{w} {h}\n255\n")?;
    out.extend_from_slice(data);
    fs::write(path, out)?;
    Ok(())
}

/// Load a P6 image as a `(1, 3, side, side)` tensor: bytes scaled to [0,1],
/// then bilinearly resized to the network input side.
pub fn load_image_ppm(path: &Path, side: usize) -> Result<Tensor4> {
    let img = read_pnm(path)?;
    if img.channels != 3 {
        return Err(EdnError::format(0, "expected P6 (RGB) image"));
    }
    // Interleaved RGB rows to planar NCHW.
    let plane = img.h * img.w;
    let mut data = vec![0.0f32; 3 * plane];
    for j in 0..plane {
        for c in 0..3 {
            data[c * plane + j] = img.data[j * 3 + c] as f32 / 255.0;
        }
    }
    let t = Tensor4::new(1, 3, img.h, img.w, data)?;
    upsample_bilinear(&t, side, side)
}

/// Load a P5 map as real values in [0,1].
pub fn load_map_pgm(path: &Path) -> Result<SaliencyMap> {
    let img = read_pnm(path)?;
    if img.channels != 1 {
        return Err(EdnError::format(0, "expected P5 (gray) image"));
    }
    SaliencyMap::new(
        img.h,
        img.w,
        img.data.iter().map(|&b| b as f32 / 255.0).collect(),
    )
}

/// Load a P5 mask, binarized at byte >= 128.
pub fn load_mask_pgm(path: &Path) -> Result<GtMask> {
    let img = read_pnm(path)?;
    if img.channels != 1 {
        return Err(EdnError::format(0, "expected P5 (gray) mask"));
    }
    GtMask::new(img.h, img.w, img.data.iter().map(|&b| b >= 128).collect())
}

/// Quantize to bytes with round(v * 255) (half away from zero) and write P5.
pub fn save_map_pgm(map: &SaliencyMap, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = map
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    write_pgm(path, map.w(), map.h(), &bytes)
}
