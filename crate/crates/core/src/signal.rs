//! Plain-text 1D signals: whitespace-separated decimal numbers, `#` starts a
//! comment that runs to the end of the line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Parses a signal sampled on a grid of spacing `h`. Errors carry the byte
/// offset of the offending token.
pub fn parse_signal(data: &[u8], h: f64) -> Result<Field> {
    let text = std::str::from_utf8(data).map_err(|e| Error::parse(e.valid_up_to(), "invalid UTF-8"))?;
    let mut values = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.split('#').next().unwrap_or("");
        let mut rest = body;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            let token = &tail[..len];
            let at = offset + (body.len() - rest.len()) + start;
            let v: f64 = token
                .parse()
                .map_err(|_| Error::parse(at, format!("not a number: {token:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(at, format!("non-finite sample {token:?}")));
            }
            values.push(v);
            rest = &tail[len..];
        }
        offset += line.len();
    }
    if values.len() < 2 {
        return Err(Error::parse(data.len(), format!("a signal needs at least 2 samples, found {}", values.len())));
    }
    Field::new(&[values.len()], h, values)
}

/// One sample per line, shortest round-trip representation.
pub fn encode_signal(field: &Field) -> Result<String> {
    if field.ndim() != 1 {
        return Err(Error::Usage(format!("signal output needs a 1D field, got {} axes", field.ndim())));
    }
    let mut out = String::with_capacity(field.len() * 12);
    for v in field.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    Ok(out)
}

pub fn read_signal(path: impl AsRef<Path>, h: f64) -> Result<Field> {
    parse_signal(&fs::read(path)?, h)
}

pub fn write_signal(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_signal(field)?)?;
    Ok(())
}
