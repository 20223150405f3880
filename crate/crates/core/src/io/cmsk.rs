use std::path::Path;

use super::{put_header, put_u32, Cursor};
use crate::error::{Error, Result};
use crate::recovery::Mask;

pub const CMSK_MAGIC: &[u8; 4] = b"CMSK";

/// `magic, u32 version, u32 h, u32 w`, then one byte (0 or 1) per bin in
/// row-major unshifted FFT order.
pub fn encode_cmsk(mask: &Mask) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + mask.bits().len());
    put_header(&mut out, CMSK_MAGIC);
    put_u32(&mut out, mask.height(), "height")?;
    put_u32(&mut out, mask.width(), "width")?;
    out.extend(mask.bits().iter().map(|&b| b as u8));
    Ok(out)
}

pub fn decode_cmsk(bytes: &[u8]) -> Result<Mask> {
    let mut cur = Cursor::new(bytes);
    cur.header(CMSK_MAGIC)?;
    let h = cur.dim("height")?;
    let w = cur.dim("width")?;
    let start = cur.offset();
    let n = h.checked_mul(w).ok_or_else(|| Error::format(start, "mask dimensions overflow"))?;
    let raw = cur.take(n, "mask bits")?;
    let mut bits = Vec::with_capacity(n);
    for (i, &b) in raw.iter().enumerate() {
        match b {
            0 => bits.push(false),
            1 => bits.push(true),
            other => return Err(Error::format(start + i, format!("mask byte {other} is not 0 or 1"))),
        }
    }
    cur.finish()?;
    Mask::new(h, w, bits)
}

pub fn write_cmsk(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    std::fs::write(path, encode_cmsk(mask)?)?;
    Ok(())
}

pub fn read_cmsk(path: impl AsRef<Path>) -> Result<Mask> {
    decode_cmsk(&std::fs::read(path)?)
}
