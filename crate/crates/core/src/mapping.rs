//! One layer of the identical encoding-decoding mapping.
//!
//! For every circular stride-1 patch `P_n x` the layer computes the
//! coefficients `d_k^H P_n x`, soft-thresholds them with `α_k`, synthesises
//! `Σ_k d_k T_{α_k}(·)` and scatters the result back:
//!
//! ```text
//! z = Σ_n P_nᵀ D T_α(D^H P_n x)
//! ```
//!
//! This is the same operator as summing, over filters, the correlation of
//! `x` with `conj(d_k)`, thresholding, and correlating with the 180°-rotated
//! filter. There is no overlap averaging in [`LayerMapping::apply`];
//! [`LayerMapping::apply_averaged`] divides by the patch length and is what
//! the recovery recursion uses.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{gather, scatter_add, shrink, Domain, Image};

/// Filters are accepted up to this much above unit norm and pulled back
/// onto the sphere.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerMapping {
    patch_h: usize,
    patch_w: usize,
    n_filters: usize,
    /// `R x K`, column-major: filter `k` is `filters[k*R..(k+1)*R]`.
    filters: Vec<Complex64>,
    thresholds: Vec<f64>,
}

impl LayerMapping {
    pub fn new(patch_h: usize, patch_w: usize, filters: Vec<Complex64>, thresholds: Vec<f64>) -> Result<Self> {
        let r = patch_h * patch_w;
        if r == 0 {
            return Err(Error::shape("patch dimensions must be positive"));
        }
        let k = thresholds.len();
        if k == 0 {
            return Err(Error::InvalidCount("a layer needs at least one filter".into()));
        }
        if filters.len() != r * k {
            return Err(Error::shape(format!("{} filter coefficients for {k} filters of length {r}", filters.len())));
        }
        if let Some(&a) = thresholds.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidThreshold(a));
        }
        if filters.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite filter coefficient".into()));
        }
        let mut layer = Self { patch_h, patch_w, n_filters: k, filters, thresholds };
        for idx in 0..k {
            let norm = norm(layer.filter(idx));
            if norm > 1.0 + NORM_TOLERANCE {
                return Err(Error::InvalidInput(format!("filter {idx} has norm {norm} > 1")));
            }
            if norm > 1.0 {
                layer.filter_mut(idx).iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(layer)
    }

    /// Rebuilds a stored layer without rescaling, so filters read back from
    /// disk keep their exact bits. Norms may exceed 1 by the same tolerance
    /// [`LayerMapping::new`] accepts.
    pub(crate) fn from_stored(
        patch_h: usize,
        patch_w: usize,
        filters: Vec<Complex64>,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        let checked = Self::new(patch_h, patch_w, filters.clone(), thresholds)?;
        Ok(Self { filters, ..checked })
    }

    /// First `k` atoms of the orthonormal 2-D DCT with every threshold set to `alpha`.
    pub fn dct(patch_h: usize, patch_w: usize, k: usize, alpha: f64) -> Result<Self> {
        let filters = init_dct_filters(patch_h, patch_w, k)?;
        Self::new(patch_h, patch_w, filters, vec![alpha; k])
    }

    pub fn patch_h(&self) -> usize {
        self.patch_h
    }

    pub fn patch_w(&self) -> usize {
        self.patch_w
    }

    pub fn patch_len(&self) -> usize {
        self.patch_h * self.patch_w
    }

    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn filters(&self) -> &[Complex64] {
        &self.filters
    }

    pub fn filter(&self, k: usize) -> &[Complex64] {
        let r = self.patch_len();
        &self.filters[k * r..(k + 1) * r]
    }

    pub(crate) fn filter_mut(&mut self, k: usize) -> &mut [Complex64] {
        let r = self.patch_len();
        &mut self.filters[k * r..(k + 1) * r]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub(crate) fn set_threshold(&mut self, k: usize, alpha: f64) {
        self.thresholds[k] = alpha;
    }

    /// Applies the layer exactly as written, without overlap averaging.
    pub fn apply(&self, x: &Image) -> Result<Image> {
        let (h, w) = x.dims();
        let (ph, pw) = (self.patch_h, self.patch_w);
        if ph > h || pw > w {
            return Err(Error::shape(format!("patch {ph}x{pw} larger than image {h}x{w}")));
        }
        let r = self.patch_len();
        let px = x.pixels();
        let mut out = vec![Complex64::default(); h * w];
        let mut patch = vec![Complex64::default(); r];
        let mut synth = vec![Complex64::default(); r];
        for r0 in 0..h {
            for c0 in 0..w {
                gather(px, &mut patch, r0, c0, ph, pw, h, w);
                synth.iter_mut().for_each(|s| *s = Complex64::default());
                for k in 0..self.n_filters {
                    let d = self.filter(k);
                    let coef: Complex64 = d.iter().zip(&patch).map(|(a, b)| a.conj() * b).sum();
                    let t = shrink(coef, self.thresholds[k]);
                    if t.re != 0.0 || t.im != 0.0 {
                        synth.iter_mut().zip(d).for_each(|(s, a)| *s += a * t);
                    }
                }
                scatter_add(&mut out, &synth, r0, c0, ph, pw, h, w);
            }
        }
        Ok(Image::from_parts(h, w, out, Domain::Spatial))
    }

    /// [`apply`](Self::apply) divided by the patch length, i.e. the average
    /// of the overlapping patch estimates.
    pub fn apply_averaged(&self, x: &Image) -> Result<Image> {
        Ok(self.apply(x)?.scale(1.0 / self.patch_len() as f64))
    }
}

/// Free-function form of [`LayerMapping::apply`].
pub fn apply_mapping(layer: &LayerMapping, x: &Image) -> Result<Image> {
    layer.apply(x)
}

/// The first `k` columns of the separable orthonormal DCT-II basis for
/// `patch_h x patch_w` patches, vectorised row-major. Column `j` is the atom
/// with vertical frequency `j / patch_w` and horizontal frequency `j % patch_w`.
pub fn init_dct_filters(patch_h: usize, patch_w: usize, k: usize) -> Result<Vec<Complex64>> {
    let r = patch_h * patch_w;
    if r == 0 {
        return Err(Error::shape("patch dimensions must be positive"));
    }
    if k == 0 || k > r {
        return Err(Error::InvalidCount(format!("{k} filters requested for patch length {r}")));
    }
    let basis = |n: usize, u: usize, a: usize| -> f64 {
        let s = if u == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        s * (PI * (2 * a + 1) as f64 * u as f64 / (2 * n) as f64).cos()
    };
    let mut out = Vec::with_capacity(r * k);
    for j in 0..k {
        let (u, v) = (j / patch_w, j % patch_w);
        for a in 0..patch_h {
            for b in 0..patch_w {
                out.push(Complex64::new(basis(patch_h, u, a) * basis(patch_w, v, b), 0.0));
            }
        }
    }
    Ok(out)
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
