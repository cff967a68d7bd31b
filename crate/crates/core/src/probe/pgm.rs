use super::GrayImage;
use crate::error::{Error, Result};

/// Reads the whitespace-separated header fields of a PNM file, skipping
/// `#` comments. Returns the fields and the offset just past the single
/// whitespace byte that ends the header.
fn header_fields(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut fields = Vec::with_capacity(count);
    let mut pos = 0;
    while fields.len() < count {
        match bytes.get(pos) {
            None => return Err(Error::Format("PGM header ends early".into())),
            Some(b'#') => {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(_) => {
                let start = pos;
                while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                    pos += 1;
                }
                fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
            }
        }
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((fields, pos + 1)),
        _ => Err(Error::Format(
            "PGM header must end with one whitespace byte".into(),
        )),
    }
}

fn number(field: &str, what: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::Format(format!("PGM {what} {field:?} is not a number")))
}

/// Parses a binary (`P5`) PGM with at most 8-bit samples.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(m) if m[0] == b'P' && m[1].is_ascii_digit() => {
            return Err(Error::Unsupported(format!(
                "only binary P5 PGM is supported, got {}",
                String::from_utf8_lossy(m)
            )))
        }
        _ => return Err(Error::Format("not a PGM file".into())),
    }
    let (fields, start) = header_fields(&bytes[2..], 3)?;
    let start = start + 2;
    let width = number(&fields[0], "width")?;
    let height = number(&fields[1], "height")?;
    let maxval = number(&fields[2], "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("PGM size {width}x{height} is empty")));
    }
    if maxval == 0 {
        return Err(Error::Format("PGM maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::Unsupported(format!("16-bit PGM (maxval {maxval})")));
    }
    let n = width * height;
    let payload = &bytes[start..];
    if payload.len() < n {
        return Err(Error::Format(format!(
            "PGM payload truncated: need {n} bytes, have {}",
            payload.len()
        )));
    }
    GrayImage::new(width, height, payload[..n].to_vec())
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
