//! On-disk formats: CIMG images, CMSK masks, BCDN models, metrics CSV and
//! the flat `key=value` run configuration.
//!
//! Every binary format is little-endian and starts with a four-byte magic
//! followed by a `u32` version.

mod cimg;
mod cmsk;
mod config;
mod metrics;
mod model;

pub use cimg::{decode_cimg, encode_cimg, read_cimg, write_cimg, CIMG_MAGIC};
pub use cmsk::{decode_cmsk, encode_cmsk, read_cmsk, write_cmsk, CMSK_MAGIC};
pub use config::{parse_config, read_config, RunConfig};
pub use metrics::{format_metrics_csv, parse_metrics_csv, read_metrics_csv, write_metrics_csv, MetricsRow};
pub use model::{deserialize_model, load_model, save_model, serialize_model, BCDN_MAGIC};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Byte cursor that reports the offset of whatever it fails to read.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> usize {
        self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::format(self.pos, format!("truncated while reading {what}"))),
        }
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(Error::format(
                0,
                format!("bad magic {:?}, expected {:?}", found, std::str::from_utf8(magic).unwrap_or("?")),
            ));
        }
        let at = self.offset();
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::format(at, format!("unsupported version {version}")));
        }
        Ok(())
    }

    pub(crate) fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.offset();
        let v = self.u32(what)?;
        if v == 0 {
            return Err(Error::format(at, format!("{what} must be positive")));
        }
        Ok(v as usize)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(self.pos, format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::InvalidInput(format!("{what} = {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub(crate) fn put_header(out: &mut Vec<u8>, magic: &[u8; 4]) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
}
