use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Spatial,
    Frequency,
}

/// A row-major 2-D grid of complex pixels.
///
/// Real-valued images are stored with zero imaginary parts. Every pixel is
/// finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<Complex64>,
    domain: Domain,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape(format!("image dimensions {height}x{width} must be positive")));
        }
        if pixels.len() != height * width {
            return Err(Error::shape(format!("{} pixels supplied for a {height}x{width} image", pixels.len())));
        }
        if let Some(pos) = pixels.iter().position(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite pixel at index {pos}")));
        }
        Ok(Self { height, width, pixels, domain })
    }

    pub fn zeros(height: usize, width: usize, domain: Domain) -> Result<Self> {
        Self::new(height, width, vec![Complex64::new(0.0, 0.0); height * width], domain)
    }

    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        let pixels = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(height, width, pixels, Domain::Spatial)
    }

    /// Builds an image without the finiteness scan. Callers guarantee the
    /// invariants, typically because the data came from another image.
    pub(crate) fn from_parts(height: usize, width: usize, pixels: Vec<Complex64>, domain: Domain) -> Self {
        debug_assert_eq!(pixels.len(), height * width);
        Self { height, width, pixels, domain }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<Complex64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.pixels[row * self.width + col]
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.pixels.iter().all(|p| p.im == 0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.pixels.iter().map(|p| p.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.pixels.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Image {
        self.map(|p| p * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Image {
        Image::from_parts(self.height, self.width, self.pixels.iter().map(|&p| f(p)).collect(), self.domain)
    }

    /// Element-wise combination of two same-shaped images; keeps `self`'s domain.
    pub fn zip_map(&self, other: &Image, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Image> {
        self.check_same_shape(other)?;
        let pixels = self.pixels.iter().zip(&other.pixels).map(|(&a, &b)| f(a, b)).collect();
        Ok(Image::from_parts(self.height, self.width, pixels, self.domain))
    }

    pub fn sub(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `Σ conj(a_n) b_n`.
    pub fn inner(&self, other: &Image) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self.pixels.iter().zip(&other.pixels).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::shape(format!(
                "image shapes differ: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| p.re).collect()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.pixels.iter().map(|p| p.norm()).collect()
    }
}
