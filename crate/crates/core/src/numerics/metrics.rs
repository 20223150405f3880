use super::image::Image;
use crate::error::{Error, Result};

/// `20 log10(peak / RMSE)` with the RMSE taken over complex magnitudes of
/// the difference. Identical inputs give `f64::INFINITY`.
pub fn psnr(recon: &Image, reference: &Image, peak: f64) -> Result<f64> {
    recon.check_same_shape(reference)?;
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::InvalidInput(format!("PSNR peak must be positive, got {peak}")));
    }
    let sse: f64 = recon.pixels().iter().zip(reference.pixels()).map(|(a, b)| (a - b).norm_sqr()).sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let rmse = (sse / recon.len() as f64).sqrt();
    Ok(20.0 * (peak / rmse).log10())
}

/// PSNR with the peak taken as the largest magnitude in `reference`.
pub fn psnr_default_peak(recon: &Image, reference: &Image) -> Result<f64> {
    psnr(recon, reference, reference.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tenth_off_is_twenty_db() {
        let reference = Image::from_real(4, 4, &[1.0; 16]).unwrap();
        let recon = Image::from_real(4, 4, &[0.9; 16]).unwrap();
        assert!((psnr(&recon, &reference, 1.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn identical_is_infinite() {
        let reference = Image::from_real(2, 2, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(psnr(&reference, &reference, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mk = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            (0..35).map(|_| Complex64::new(rng.random(), rng.random())).collect()
        };
        let a = Image::new(5, 7, mk(&mut rng), crate::Domain::Spatial).unwrap();
        let b = Image::new(5, 7, mk(&mut rng), crate::Domain::Spatial).unwrap();
        let mut mse = 0.0;
        for i in 0..35 {
            let d = a.pixels()[i] - b.pixels()[i];
            mse += d.re * d.re + d.im * d.im;
        }
        mse /= 35.0;
        let expected = 10.0 * (1.7f64 * 1.7 / mse).log10();
        assert!((psnr(&a, &b, 1.7).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn bad_peak_and_shape() {
        let a = Image::from_real(2, 2, &[0.0; 4]).unwrap();
        let b = Image::from_real(1, 4, &[0.0; 4]).unwrap();
        assert!(psnr(&a, &a, 0.0).is_err());
        assert!(psnr(&a, &b, 1.0).is_err());
    }
}
