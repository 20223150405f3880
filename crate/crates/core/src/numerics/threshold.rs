use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex soft thresholding: shrinks the magnitude by `a` and keeps the
/// phase; anything inside the dead zone `|v| <= a` maps to zero.
pub fn soft_threshold(v: Complex64, a: f64) -> Result<Complex64> {
    if !(a >= 0.0) {
        return Err(Error::InvalidThreshold(a));
    }
    Ok(shrink(v, a))
}

/// Unchecked [`soft_threshold`] for inner loops.
#[inline]
pub(crate) fn shrink(v: Complex64, a: f64) -> Complex64 {
    let mag = v.norm();
    if mag > a {
        v - (v / mag) * a
    } else {
        Complex64::new(0.0, 0.0)
    }
}
