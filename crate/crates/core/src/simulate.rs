//! Synthetic test problems: phantoms, white Gaussian noise, variable-density
//! Cartesian masks and k-space synthesis from a supersampled phantom.
//!
//! Phantom geometry lives in continuous coordinates on `[-1, 1]²`, so the
//! same seed rendered at two resolutions describes the same object. That is
//! what lets [`simulate_kspace`] sample a 3x finer rendering and avoid
//! generating data with the reconstruction's own discretisation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{fft2_raw, ifft2_raw, Domain, Image};
use crate::recovery::{ForwardProblem, Mask};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhantomKind {
    Ellipses,
    Blocks,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ellipse" | "ellipses" | "ellipse-phantom" => Ok(PhantomKind::Ellipses),
            "blocks" | "piecewise-constant-blocks" => Ok(PhantomKind::Blocks),
            other => Err(Error::Config(format!("unknown phantom kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub phantom: PhantomKind,
    pub height: usize,
    pub width: usize,
    /// Noise standard deviation per real component, on the phantom's scale.
    pub sigma: f64,
    pub rate: f64,
    pub center_fraction: f64,
    pub seed: u64,
    pub supersample: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            phantom: PhantomKind::Ellipses,
            height: 64,
            width: 64,
            sigma: 30.0 / 255.0,
            rate: 0.25,
            center_fraction: 0.3,
            seed: 0,
            supersample: 3,
        }
    }
}

/// Maps a noise level quoted for `[0, 255]` images onto a phantom whose
/// clean intensities peak at `peak`.
pub fn scale_sigma(sigma_natural: f64, peak: f64) -> f64 {
    sigma_natural / 255.0 * peak
}

struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
    value: f64,
}

impl Ellipse {
    fn contains(&self, u: f64, v: f64) -> bool {
        let (du, dv) = (u - self.cx, v - self.cy);
        let p = du * self.cos + dv * self.sin;
        let q = -du * self.sin + dv * self.cos;
        (p / self.a).powi(2) + (q / self.b).powi(2) <= 1.0
    }
}

/// Deterministic piecewise-constant phantom with values in `[0, 1]`.
pub fn gen_phantom(kind: PhantomKind, height: usize, width: usize, seed: u64) -> Result<Image> {
    if height < 8 || width < 8 {
        return Err(Error::shape(format!("phantoms need at least 8x8 pixels, got {height}x{width}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = |r: usize, c: usize| {
        ((c as f64 + 0.5) / width as f64 * 2.0 - 1.0, (r as f64 + 0.5) / height as f64 * 2.0 - 1.0)
    };
    let mut values = vec![0.0; height * width];
    match kind {
        PhantomKind::Ellipses => {
            let outer = Ellipse {
                cx: rng.random_range(-0.05..0.05),
                cy: rng.random_range(-0.05..0.05),
                a: rng.random_range(0.78..0.9),
                b: rng.random_range(0.68..0.82),
                cos: 1.0,
                sin: 0.0,
                value: rng.random_range(0.45..0.6),
            };
            let n_inner = rng.random_range(4..8);
            let inner: Vec<Ellipse> = (0..n_inner)
                .map(|_| {
                    let theta = rng.random_range(0.0..PI);
                    Ellipse {
                        cx: outer.cx + rng.random_range(-0.45..0.45),
                        cy: outer.cy + rng.random_range(-0.4..0.4),
                        a: rng.random_range(0.06..0.3),
                        b: rng.random_range(0.05..0.22),
                        cos: theta.cos(),
                        sin: theta.sin(),
                        value: rng.random_range(-0.3..0.45),
                    }
                })
                .collect();
            for r in 0..height {
                for c in 0..width {
                    let (u, v) = coords(r, c);
                    if !outer.contains(u, v) {
                        continue;
                    }
                    let mut val = outer.value;
                    for e in inner.iter().filter(|e| e.contains(u, v)) {
                        val += e.value;
                    }
                    values[r * width + c] = val.clamp(0.0, 1.0);
                }
            }
        }
        PhantomKind::Blocks => {
            let background = rng.random_range(0.0..0.15);
            values.iter_mut().for_each(|v| *v = background);
            let n_blocks = rng.random_range(6..11);
            for _ in 0..n_blocks {
                let (u0, v0) = (rng.random_range(-0.9..0.5), rng.random_range(-0.9..0.5));
                let (du, dv) = (rng.random_range(0.15..0.6), rng.random_range(0.15..0.6));
                let value = rng.random_range(0.2..1.0);
                for r in 0..height {
                    for c in 0..width {
                        let (u, v) = coords(r, c);
                        if u >= u0 && u < u0 + du && v >= v0 && v < v0 + dv {
                            values[r * width + c] = value;
                        }
                    }
                }
            }
        }
    }
    Image::from_real(height, width, &values)
}

/// [`gen_phantom`] magnitudes with a smooth low-order synthetic phase.
pub fn gen_phantom_complex(kind: PhantomKind, height: usize, width: usize, seed: u64) -> Result<Image> {
    let mag = gen_phantom(kind, height, width, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5048_4153_4531);
    let q = PI / 4.0;
    let coef: [f64; 4] = std::array::from_fn(|_| rng.random_range(-q..q));
    let mut px = Vec::with_capacity(height * width);
    for r in 0..height {
        let v = (r as f64 + 0.5) / height as f64 * 2.0 - 1.0;
        for c in 0..width {
            let u = (c as f64 + 0.5) / width as f64 * 2.0 - 1.0;
            let phase = coef[0] + coef[1] * u + coef[2] * v + coef[3] * u * v;
            px.push(Complex64::from_polar(mag.get(r, c).re, phase));
        }
    }
    Image::new(height, width, px, Domain::Spatial)
}

/// Adds i.i.d. `N(0, σ²)` noise to the real part, and to the imaginary part
/// too when `complex` is set.
pub fn add_awgn(img: &Image, sigma: f64, seed: u64, complex: bool) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("noise level must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = img
        .pixels()
        .iter()
        .map(|&p| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
            p + Complex64::new(re, im) * sigma
        })
        .collect();
    Image::new(img.height(), img.width(), px, img.domain())
}

/// Signed frequency of FFT bin `i` on an axis of length `n`.
fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n - n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Variable-density Cartesian mask with exactly `round(rate·h·w)` samples.
///
/// A fully sampled square of side `ceil(sqrt(center_fraction·rate·h·w))`
/// around DC (clipped to the grid) is kept; the rest are drawn without replacement with weight
/// `(1 + |k|/k0)^-2`, `k0 = max(h, w)/16`, `|k|` the distance from DC. The
/// mask is in unshifted FFT order.
pub fn gen_mask(height: usize, width: usize, rate: f64, center_fraction: f64, seed: u64) -> Result<Mask> {
    if height == 0 || width == 0 {
        return Err(Error::shape("mask dimensions must be positive"));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Config(format!("sampling rate must lie in (0, 1], got {rate}")));
    }
    if !(0.0..1.0).contains(&center_fraction) {
        return Err(Error::Config(format!("center fraction must lie in [0, 1), got {center_fraction}")));
    }
    let n = height * width;
    let budget = (rate * n as f64).round() as usize;
    if budget == 0 {
        return Err(Error::Config("sampling budget rounds to zero".into()));
    }
    let side = (center_fraction * rate * n as f64).sqrt().ceil() as usize;
    let (side_h, side_w) = (side.min(height), side.min(width));
    if side_h * side_w > budget {
        return Err(Error::Config(format!(
            "fully sampled centre of {side_h}x{side_w} does not fit the budget of {budget} samples"
        )));
    }
    let in_centre = |f: i64, s: usize| {
        let lo = -((s / 2) as i64);
        f >= lo && f < lo + s as i64
    };
    let mut bits = vec![false; n];
    for r in 0..height {
        let fr = signed_freq(r, height);
        for c in 0..width {
            if in_centre(fr, side_h) && in_centre(signed_freq(c, width), side_w) {
                bits[r * width + c] = true;
            }
        }
    }
    let k0 = height.max(width) as f64 / 16.0;
    let candidates: Vec<usize> = (0..n).filter(|&i| !bits[i]).collect();
    let weight = |j: usize| -> f64 {
        let i = candidates[j];
        let fr = signed_freq(i / width, height) as f64;
        let fc = signed_freq(i % width, width) as f64;
        (1.0 + (fr * fr + fc * fc).sqrt() / k0).powi(-2)
    };
    let extra = budget - side_h * side_w;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample_weighted(&mut rng, candidates.len(), weight, extra)
        .map_err(|e| Error::Config(format!("weighted sampling failed: {e}")))?;
    for j in picked {
        bits[candidates[j]] = true;
    }
    Mask::new(height, width, bits)
}

/// K-space of a supersampled phantom on a coarser grid.
///
/// Takes the unitary DFT of `phantom_hi`, keeps the central
/// `target_h x target_w` band, rescales it to the coarse grid's unitary
/// convention, zeroes bins outside `mask` and adds complex noise of standard
/// deviation `sigma` per component on the sampled bins.
pub fn simulate_kspace(
    phantom_hi: &Image,
    target_h: usize,
    target_w: usize,
    mask: &Mask,
    sigma: f64,
    seed: u64,
) -> Result<Image> {
    let (big_h, big_w) = phantom_hi.dims();
    if target_h == 0 || target_w == 0 || big_h % target_h != 0 || big_w % target_w != 0 {
        return Err(Error::shape(format!(
            "{big_h}x{big_w} phantom is not an integer multiple of {target_h}x{target_w}"
        )));
    }
    let (sh, sw) = (big_h / target_h, big_w / target_w);
    if sh != sw {
        return Err(Error::shape("supersampling factor must match on both axes"));
    }
    if mask.dims() != (target_h, target_w) {
        return Err(Error::shape("mask dimensions differ from the target grid"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("noise level must be non-negative, got {sigma}")));
    }
    let spectrum = fft2_raw(phantom_hi.pixels(), big_h, big_w);
    let scale = 1.0 / sh as f64;
    let wrap = |f: i64, n: usize| -> usize { f.rem_euclid(n as i64) as usize };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Complex64::default(); target_h * target_w];
    for r in 0..target_h {
        let fr = signed_freq(r, target_h);
        for c in 0..target_w {
            if !mask.get(r, c) {
                continue;
            }
            let fc = signed_freq(c, target_w);
            let mut v = spectrum[wrap(fr, big_h) * big_w + wrap(fc, big_w)] * scale;
            if sigma > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                v += Complex64::new(re, im) * sigma;
            }
            out[r * target_w + c] = v;
        }
    }
    Image::new(target_h, target_w, out, Domain::Frequency)
}

/// Clean phantom and noisy observation for denoising.
pub fn simulate_denoising(spec: &SimulationSpec) -> Result<(Image, ForwardProblem)> {
    let truth = gen_phantom(spec.phantom, spec.height, spec.width, spec.seed)?;
    let noisy = add_awgn(&truth, spec.sigma, spec.seed.wrapping_add(0x004E_4F49_5345), false)?;
    Ok((truth, ForwardProblem::denoising(noisy)?))
}

/// Fully sampled reference image and undersampled k-space, both taken from
/// a `supersample`-times finer rendering of the complex phantom.
///
/// The reference is the inverse DFT of the complete noise-free band, i.e.
/// what a fully sampled scan of the same object would give.
pub fn simulate_mri(spec: &SimulationSpec, mask: &Mask) -> Result<(Image, ForwardProblem)> {
    if spec.supersample == 0 {
        return Err(Error::Config("supersample factor must be at least 1".into()));
    }
    let hi =
        gen_phantom_complex(spec.phantom, spec.height * spec.supersample, spec.width * spec.supersample, spec.seed)?;
    let full = Mask::full(spec.height, spec.width)?;
    let band = simulate_kspace(&hi, spec.height, spec.width, &full, 0.0, 0)?;
    let truth =
        Image::from_parts(spec.height, spec.width, ifft2_raw(band.pixels(), spec.height, spec.width), Domain::Spatial);
    let kspace = simulate_kspace(&hi, spec.height, spec.width, mask, spec.sigma, spec.seed.wrapping_add(0x4B53_5043))?;
    Ok((truth, ForwardProblem::mri(kspace, mask.clone())?))
}
