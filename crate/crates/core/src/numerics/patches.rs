//! Circular stride-1 patch extraction and its adjoint.

use num_complex::Complex64;

use super::image::{Domain, Image};
use crate::error::{Error, Result};

/// Column-major matrix whose columns are vectorised patches.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchMatrix {
    patch_len: usize,
    n_cols: usize,
    entries: Vec<Complex64>,
}

impl PatchMatrix {
    pub fn new(patch_len: usize, n_cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if patch_len == 0 || n_cols == 0 {
            return Err(Error::shape("patch matrix dimensions must be positive"));
        }
        if entries.len() != patch_len * n_cols {
            return Err(Error::shape(format!("{} entries for a {patch_len}x{n_cols} patch matrix", entries.len())));
        }
        Ok(Self { patch_len, n_cols, entries })
    }

    pub fn zeros(patch_len: usize, n_cols: usize) -> Result<Self> {
        Self::new(patch_len, n_cols, vec![Complex64::default(); patch_len * n_cols])
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.entries[n * self.patch_len..(n + 1) * self.patch_len]
    }

    #[inline]
    pub fn column_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.entries[n * self.patch_len..(n + 1) * self.patch_len]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks_exact(self.patch_len)
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Every top-left position of an `height x width` image, row-major.
pub fn all_positions(height: usize, width: usize) -> Vec<(usize, usize)> {
    (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).collect()
}

fn check_patch_dims(patch_h: usize, patch_w: usize, height: usize, width: usize) -> Result<()> {
    if patch_h == 0 || patch_w == 0 || patch_h > height || patch_w > width {
        return Err(Error::shape(format!("patch {patch_h}x{patch_w} does not fit image {height}x{width}")));
    }
    Ok(())
}

/// Column `n` holds the `patch_h x patch_w` window whose top-left corner is
/// `positions[n]`, read row-major with wrap-around at the borders.
pub fn extract_patches(
    img: &Image,
    patch_h: usize,
    patch_w: usize,
    positions: &[(usize, usize)],
) -> Result<PatchMatrix> {
    let (h, w) = img.dims();
    check_patch_dims(patch_h, patch_w, h, w)?;
    let r = patch_h * patch_w;
    if positions.is_empty() {
        return Err(Error::shape("no patch positions given"));
    }
    let mut pm = PatchMatrix::zeros(r, positions.len())?;
    let px = img.pixels();
    for (n, &(r0, c0)) in positions.iter().enumerate() {
        let col = pm.column_mut(n);
        for a in 0..patch_h {
            let row = (r0 + a) % h;
            for b in 0..patch_w {
                col[a * patch_w + b] = px[row * w + (c0 + b) % w];
            }
        }
    }
    Ok(pm)
}

/// Adjoint of [`extract_patches`]: scatter-adds each column back onto the
/// grid at its position.
pub fn aggregate_patches(
    pm: &PatchMatrix,
    positions: &[(usize, usize)],
    patch_h: usize,
    patch_w: usize,
    height: usize,
    width: usize,
) -> Result<Image> {
    check_patch_dims(patch_h, patch_w, height, width)?;
    if pm.patch_len() != patch_h * patch_w {
        return Err(Error::shape(format!("patch length {} does not match {patch_h}x{patch_w}", pm.patch_len())));
    }
    if pm.n_cols() != positions.len() {
        return Err(Error::shape(format!("{} columns but {} positions", pm.n_cols(), positions.len())));
    }
    let mut out = vec![Complex64::default(); height * width];
    for (col, &(r0, c0)) in pm.columns().zip(positions) {
        scatter_add(&mut out, col, r0, c0, patch_h, patch_w, height, width);
    }
    Ok(Image::from_parts(height, width, out, Domain::Spatial))
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn scatter_add(
    out: &mut [Complex64],
    patch: &[Complex64],
    r0: usize,
    c0: usize,
    patch_h: usize,
    patch_w: usize,
    height: usize,
    width: usize,
) {
    for a in 0..patch_h {
        let row = (r0 + a) % height;
        for b in 0..patch_w {
            out[row * width + (c0 + b) % width] += patch[a * patch_w + b];
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn gather(
    px: &[Complex64],
    buf: &mut [Complex64],
    r0: usize,
    c0: usize,
    patch_h: usize,
    patch_w: usize,
    height: usize,
    width: usize,
) {
    for a in 0..patch_h {
        let row = (r0 + a) % height;
        for b in 0..patch_w {
            buf[a * patch_w + b] = px[row * width + (c0 + b) % width];
        }
    }
}
