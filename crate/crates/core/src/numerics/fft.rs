//! Unitary 2-D DFT. Both directions scale by `1/sqrt(h*w)` so that
//! `||F x|| = ||x||` and the inverse is the adjoint.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::image::{Domain, Image};
use crate::error::{Error, Result};

pub fn fft2_unitary(img: &Image) -> Result<Image> {
    if img.domain() != Domain::Spatial {
        return Err(Error::InvalidInput("forward FFT expects a spatial-domain image".into()));
    }
    let (h, w) = img.dims();
    Ok(Image::from_parts(h, w, fft2_raw(img.pixels(), h, w), Domain::Frequency))
}

pub fn ifft2_unitary(img: &Image) -> Result<Image> {
    if img.domain() != Domain::Frequency {
        return Err(Error::InvalidInput("inverse FFT expects a frequency-domain image".into()));
    }
    let (h, w) = img.dims();
    Ok(Image::from_parts(h, w, ifft2_raw(img.pixels(), h, w), Domain::Spatial))
}

pub(crate) fn fft2_raw(data: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    transform(data, h, w, FftDirection::Forward)
}

pub(crate) fn ifft2_raw(data: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    transform(data, h, w, FftDirection::Inverse)
}

fn transform(data: &[Complex64], h: usize, w: usize, direction: FftDirection) -> Vec<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut out = data.to_vec();

    // rows are contiguous
    planner.plan_fft(w, direction).process(&mut out);

    let col_fft = planner.plan_fft(h, direction);
    let mut column = vec![Complex64::default(); h];
    for c in 0..w {
        for r in 0..h {
            column[r] = out[r * w + c];
        }
        col_fft.process(&mut column);
        for r in 0..h {
            out[r * w + c] = column[r];
        }
    }

    let scale = 1.0 / ((h * w) as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = (0..h * w).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        Image::new(h, w, px, Domain::Spatial).unwrap()
    }

    #[test]
    fn constant_image_has_single_dc_bin() {
        let n = 6;
        let c = 2.5;
        let img = Image::from_real(n, n, &vec![c; n * n]).unwrap();
        let f = fft2_unitary(&img).unwrap();
        assert!((f.get(0, 0) - Complex64::new(c * n as f64, 0.0)).norm() < 1e-12);
        for (i, p) in f.pixels().iter().enumerate().skip(1) {
            assert!(p.norm() < 1e-12, "bin {i} = {p}");
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let img = random_image(8, 8, 1);
        let f = fft2_unitary(&img).unwrap();
        assert!((f.norm() - img.norm()).abs() < 1e-12);
        let back = ifft2_unitary(&f).unwrap();
        let err = back.sub(&img).unwrap().norm();
        assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn non_square_matches_direct_dft() {
        let (h, w) = (3, 5);
        let img = random_image(h, w, 2);
        let f = fft2_unitary(&img).unwrap();
        let scale = 1.0 / ((h * w) as f64).sqrt();
        for k in 0..h {
            for l in 0..w {
                let mut acc = Complex64::default();
                for r in 0..h {
                    for c in 0..w {
                        let phase =
                            -2.0 * std::f64::consts::PI * ((k * r) as f64 / h as f64 + (l * c) as f64 / w as f64);
                        acc += img.get(r, c) * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((f.get(k, l) - acc * scale).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_tags_are_enforced() {
        let img = random_image(4, 4, 3);
        assert!(ifft2_unitary(&img).is_err());
        let f = fft2_unitary(&img).unwrap();
        assert!(fft2_unitary(&f).is_err());
    }
}
