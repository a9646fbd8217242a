//! Netpbm greyscale images (P2 ASCII and P5 binary).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Decoded image: values in `[0, maxval]` on a unit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub field: Field,
    pub maxval: u16,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' && self.data[self.pos] != b'\r' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Unsigned decimal token preceded by whitespace or comments, with its
    /// start offset.
    fn number(&mut self, what: &str) -> Result<(usize, u64)> {
        self.skip_space();
        let start = self.pos;
        let mut v: u64 = 0;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            v = v
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(self.data[self.pos] - b'0')))
                .ok_or_else(|| Error::parse(start, format!("{what} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.data.len() {
                Error::parse(start, format!("unexpected end of data, expected {what}"))
            } else {
                Error::parse(start, format!("expected {what}"))
            });
        }
        if self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() && self.data[self.pos] != b'#' {
            return Err(Error::parse(self.pos, format!("malformed {what}")));
        }
        Ok((start, v))
    }
}

/// Parses a P2 or P5 image. Errors carry the byte offset of the problem.
pub fn parse_pgm(data: &[u8]) -> Result<PgmImage> {
    if data.len() < 2 || data[0] != b'P' || !(data[1] == b'2' || data[1] == b'5') {
        return Err(Error::parse(0, "not a P2 or P5 greymap"));
    }
    let binary = data[1] == b'5';
    let mut cur = Cursor { data, pos: 2 };
    if cur.pos < data.len() && !data[cur.pos].is_ascii_whitespace() && data[cur.pos] != b'#' {
        return Err(Error::parse(2, "missing whitespace after magic number"));
    }
    let (wpos, width) = cur.number("width")?;
    let (_, height) = cur.number("height")?;
    let (mpos, maxval) = cur.number("maxval")?;
    if width < 2 || height < 2 {
        return Err(Error::parse(wpos, format!("image must be at least 2x2, got {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(mpos, format!("maxval must be in 1..=65535, got {maxval}")));
    }
    let n = width
        .checked_mul(height)
        .filter(|&n| n <= (1 << 32))
        .ok_or_else(|| Error::parse(wpos, "image dimensions overflow"))? as usize;
    let mut values = Vec::with_capacity(n.min(data.len()));
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= data.len() {
            return Err(Error::parse(cur.pos, "unexpected end of data before raster"));
        }
        let start = cur.pos + 1;
        let bytes = if maxval < 256 { 1 } else { 2 };
        let need = n
            .checked_mul(bytes)
            .ok_or_else(|| Error::parse(wpos, "image dimensions overflow"))?;
        if data.len() - start < need {
            return Err(Error::parse(
                data.len(),
                format!("truncated raster: expected {need} bytes, found {}", data.len() - start),
            ));
        }
        for k in 0..n {
            let off = start + k * bytes;
            let v = if bytes == 1 {
                u64::from(data[off])
            } else {
                u64::from(u16::from_be_bytes([data[off], data[off + 1]]))
            };
            if v > maxval {
                return Err(Error::parse(off, format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as f64);
        }
    } else {
        for _ in 0..n {
            let (at, v) = cur.number("sample")?;
            if v > maxval {
                return Err(Error::parse(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            values.push(v as f64);
        }
    }
    let field = Field::new(&[width as usize, height as usize], 1.0, values)?;
    Ok(PgmImage {
        field,
        maxval: maxval as u16,
    })
}

/// Encodes a 2D field, clamping to `[0, maxval]` and rounding to the
/// nearest integer.
pub fn encode_pgm(field: &Field, maxval: u16, binary: bool) -> Result<Vec<u8>> {
    if field.ndim() != 2 {
        return Err(Error::Usage(format!("PGM output needs a 2D field, got {} axes", field.ndim())));
    }
    if maxval == 0 {
        return Err(Error::param("maxval must be positive"));
    }
    let (w, h) = (field.nx(), field.ny());
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    let quantise = |v: f64| v.clamp(0.0, f64::from(maxval)).round() as u16;
    if binary {
        for &v in field.values() {
            let q = quantise(v);
            if maxval < 256 {
                out.push(q as u8);
            } else {
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    } else {
        for row in field.values().chunks(w) {
            let line: Vec<String> = row.iter().map(|&v| quantise(v).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    parse_pgm(&fs::read(path)?)
}

/// Writes a binary (P5) image.
pub fn write_pgm(field: &Field, maxval: u16, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(field, maxval, true)?)?;
    Ok(())
}
