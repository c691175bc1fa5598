//! Binary PPM (P6, maxval 255) reader and writer.
//!
//! The parser is strict about the one genuinely ambiguous spot in the
//! format: after the maxval token exactly one whitespace byte separates the
//! header from the raster, and a comment there is rejected rather than
//! guessed at. Comments are fine between the earlier header tokens.

use std::io::{Read, Write};

use crate::error::{Result, SrotError};

use super::RgbImage;

pub fn write_ppm(img: &RgbImage, mut out: impl Write) -> Result<()> {
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.bytes())?;
    Ok(())
}

pub fn read_ppm(mut input: impl Read) -> Result<RgbImage> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < 2 || &data[0..2] != b"P6" {
        return Err(SrotError::Format("not a P6 PPM file".into()));
    }
    let mut at = 2usize;
    let width = read_header_int(&data, &mut at)?;
    let height = read_header_int(&data, &mut at)?;
    let maxval = read_header_int(&data, &mut at)?;
    if maxval != 255 {
        return Err(SrotError::Format(format!(
            "unsupported maxval {maxval}, expected 255"
        )));
    }
    // exactly one whitespace byte after maxval, then the raster
    match data.get(at) {
        Some(b) if b.is_ascii_whitespace() => at += 1,
        Some(b'#') => {
            return Err(SrotError::Format(
                "comment between maxval and raster is ambiguous; rejected".into(),
            ))
        }
        _ => return Err(SrotError::Format("missing whitespace after maxval".into())),
    }
    let expected = 3usize
        .checked_mul(width)
        .and_then(|x| x.checked_mul(height))
        .ok_or_else(|| SrotError::Format("image dimensions overflow".into()))?;
    let raster = &data[at..];
    if raster.len() != expected {
        return Err(SrotError::Format(format!(
            "raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    RgbImage::new(width, height, raster.to_vec())
}

/// Next unsigned integer token, skipping whitespace and `#` comments.
fn read_header_int(data: &[u8], at: &mut usize) -> Result<usize> {
    loop {
        match data.get(*at) {
            Some(b) if b.is_ascii_whitespace() => *at += 1,
            Some(b'#') => {
                while let Some(b) = data.get(*at) {
                    *at += 1;
                    if *b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(SrotError::Format("malformed PPM header".into())),
        }
    }
    let mut value = 0usize;
    let mut any = false;
    while let Some(b) = data.get(*at) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(usize::from(b - b'0')))
            .ok_or_else(|| SrotError::Format("header integer overflow".into()))?;
        any = true;
        *at += 1;
    }
    if !any {
        return Err(SrotError::Format("expected integer in PPM header".into()));
    }
    Ok(value)
}
