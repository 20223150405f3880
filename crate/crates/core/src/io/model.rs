use std::path::Path;

use num_complex::Complex64;

use super::{put_header, put_u32, Cursor};
use crate::error::{Error, Result};
use crate::mapping::LayerMapping;
use crate::recovery::{ProblemKind, RecoveryModel};

pub const BCDN_MAGIC: &[u8; 4] = b"BCDN";

/// Header `magic, u32 version, u32 n_layers, u32 K, u32 R_h, u32 R_w,
/// u8 kind, f64 λ`; then per layer `K` thresholds followed by `K` filters of
/// `R_h·R_w` interleaved `(re, im)` pairs in row-major patch order.
pub fn serialize_model(model: &RecoveryModel) -> Result<Vec<u8>> {
    let r = model.patch_h() * model.patch_w();
    let k = model.n_filters();
    let mut out = Vec::with_capacity(33 + model.n_layers() * k * (8 + 16 * r));
    put_header(&mut out, BCDN_MAGIC);
    put_u32(&mut out, model.n_layers(), "n_layers")?;
    put_u32(&mut out, k, "K")?;
    put_u32(&mut out, model.patch_h(), "R_h")?;
    put_u32(&mut out, model.patch_w(), "R_w")?;
    out.push(model.kind().code());
    out.extend_from_slice(&model.lambda().to_le_bytes());
    for layer in model.layers() {
        for a in layer.thresholds() {
            out.extend_from_slice(&a.to_le_bytes());
        }
        for v in layer.filters() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn deserialize_model(bytes: &[u8]) -> Result<RecoveryModel> {
    let mut cur = Cursor::new(bytes);
    cur.header(BCDN_MAGIC)?;
    let n_layers = cur.u32("n_layers")? as usize;
    let k = cur.dim("K")?;
    let ph = cur.dim("R_h")?;
    let pw = cur.dim("R_w")?;
    let at = cur.offset();
    let kind = cur.u8("problem kind")?;
    let kind = ProblemKind::from_code(kind).ok_or_else(|| Error::format(at, format!("unknown problem kind {kind}")))?;
    let at = cur.offset();
    let lambda = cur.f64("lambda")?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::format(at, format!("lambda {lambda} is not positive")));
    }
    let r = ph.checked_mul(pw).ok_or_else(|| Error::format(at, "patch dimensions overflow"))?;
    let layer_bytes = k.saturating_mul(8 + 16 * r);
    if n_layers.saturating_mul(layer_bytes) > bytes.len() - cur.offset() {
        return Err(Error::format(bytes.len(), format!("truncated: {n_layers} layers declared")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let start = cur.offset();
        let thresholds = (0..k).map(|_| cur.f64("threshold")).collect::<Result<Vec<_>>>()?;
        let mut filters = Vec::with_capacity(k * r);
        for _ in 0..k * r {
            let re = cur.f64("filter")?;
            let im = cur.f64("filter")?;
            filters.push(Complex64::new(re, im));
        }
        let layer = LayerMapping::from_stored(ph, pw, filters, thresholds)
            .map_err(|e| Error::format(start, format!("invalid layer: {e}")))?;
        layers.push(layer);
    }
    cur.finish()?;
    RecoveryModel::new(kind, lambda, k, ph, pw, layers)
}

pub fn save_model(path: impl AsRef<Path>, model: &RecoveryModel) -> Result<()> {
    std::fs::write(path, serialize_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RecoveryModel> {
    deserialize_model(&std::fs::read(path)?)
}
