use std::path::Path;

use num_complex::Complex64;

use super::{put_header, put_u32, Cursor};
use crate::error::{Error, Result};
use crate::numerics::{Domain, Image};

pub const CIMG_MAGIC: &[u8; 4] = b"CIMG";

const DTYPE_REAL: u8 = 0;
const DTYPE_COMPLEX: u8 = 1;

/// `magic, u32 version, u32 h, u32 w, u8 dtype`, then row-major `f64`
/// samples; dtype 0 stores real parts only, dtype 1 interleaves `(re, im)`.
/// Images with an identically zero imaginary part are written as dtype 0.
pub fn encode_cimg(img: &Image) -> Result<Vec<u8>> {
    let real = img.is_real();
    let per = if real { 8 } else { 16 };
    let mut out = Vec::with_capacity(17 + per * img.len());
    put_header(&mut out, CIMG_MAGIC);
    put_u32(&mut out, img.height(), "height")?;
    put_u32(&mut out, img.width(), "width")?;
    out.push(if real { DTYPE_REAL } else { DTYPE_COMPLEX });
    for p in img.pixels() {
        out.extend_from_slice(&p.re.to_le_bytes());
        if !real {
            out.extend_from_slice(&p.im.to_le_bytes());
        }
    }
    Ok(out)
}

/// The file does not record a domain; the caller supplies it.
pub fn decode_cimg(bytes: &[u8], domain: Domain) -> Result<Image> {
    let mut cur = Cursor::new(bytes);
    cur.header(CIMG_MAGIC)?;
    let h = cur.dim("height")?;
    let w = cur.dim("width")?;
    let at = cur.offset();
    let dtype = cur.u8("dtype")?;
    let complex = match dtype {
        DTYPE_REAL => false,
        DTYPE_COMPLEX => true,
        other => return Err(Error::format(at, format!("unknown dtype {other}"))),
    };
    let n = h.checked_mul(w).ok_or_else(|| Error::format(at, "image dimensions overflow"))?;
    let mut px = Vec::with_capacity(n.min(bytes.len() / 8));
    for _ in 0..n {
        let at = cur.offset();
        let re = cur.f64("pixel")?;
        let im = if complex { cur.f64("pixel")? } else { 0.0 };
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::format(at, "non-finite pixel"));
        }
        px.push(Complex64::new(re, im));
    }
    cur.finish()?;
    Image::new(h, w, px, domain)
}

pub fn write_cimg(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    std::fs::write(path, encode_cimg(img)?)?;
    Ok(())
}

pub fn read_cimg(path: impl AsRef<Path>, domain: Domain) -> Result<Image> {
    decode_cimg(&std::fs::read(path)?, domain)
}
