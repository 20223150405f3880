//! The layer recursion: apply a trained mapping, then solve the data-fit
//! step `argmin_x f(x; y) + λ ||x - z||²` in closed form.
//!
//! Data-fit terms carry no ½ factor:
//!
//! * denoising: `f(x; y) = ||y - x||²`
//! * MRI: `f(x; y) = ||y - P_Ω F x||²` with `F` the unitary 2-D DFT.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mapping::LayerMapping;
use crate::numerics::{fft2_raw, ifft2_raw, psnr, Domain, Image};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Denoising,
    Mri,
}

impl ProblemKind {
    pub fn code(self) -> u8 {
        match self {
            ProblemKind::Denoising => 0,
            ProblemKind::Mri => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ProblemKind::Denoising),
            1 => Some(ProblemKind::Mri),
            _ => None,
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "denoise" | "denoising" => Ok(ProblemKind::Denoising),
            "mri" => Ok(ProblemKind::Mri),
            other => Err(Error::Config(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// Boolean k-space sampling pattern in unshifted FFT order (DC at `(0, 0)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(Error::shape(format!("{} mask entries for a {height}x{width} grid", bits.len())));
        }
        Ok(Self { height, width, bits })
    }

    pub fn full(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![true; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForwardProblem {
    Denoising { y: Image },
    Mri { y: Image, mask: Mask },
}

impl ForwardProblem {
    pub fn denoising(y: Image) -> Result<Self> {
        if y.domain() != Domain::Spatial {
            return Err(Error::InvalidInput("denoising measurement must be a spatial image".into()));
        }
        Ok(ForwardProblem::Denoising { y })
    }

    /// Entries of `y` outside the mask are zeroed.
    pub fn mri(y: Image, mask: Mask) -> Result<Self> {
        if y.dims() != mask.dims() {
            return Err(Error::shape(format!(
                "k-space {}x{} vs mask {}x{}",
                y.height(),
                y.width(),
                mask.height(),
                mask.width()
            )));
        }
        let (h, w) = y.dims();
        let pixels =
            y.pixels().iter().zip(mask.bits()).map(|(&v, &m)| if m { v } else { Complex64::default() }).collect();
        let y = Image::new(h, w, pixels, Domain::Frequency)?;
        Ok(ForwardProblem::Mri { y, mask })
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            ForwardProblem::Denoising { .. } => ProblemKind::Denoising,
            ForwardProblem::Mri { .. } => ProblemKind::Mri,
        }
    }

    pub fn measurement(&self) -> &Image {
        match self {
            ForwardProblem::Denoising { y } | ForwardProblem::Mri { y, .. } => y,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.measurement().dims()
    }

    /// `y` for denoising, the zero-filled inverse DFT for MRI.
    pub fn warm_start(&self) -> Image {
        match self {
            ForwardProblem::Denoising { y } => y.clone(),
            ForwardProblem::Mri { y, .. } => zero_filled(y),
        }
    }

    pub fn x_update(&self, z: &Image, lambda: f64) -> Result<Image> {
        match self {
            ForwardProblem::Denoising { y } => x_update_denoise(y, z, lambda),
            ForwardProblem::Mri { y, mask } => x_update_mri(y, mask, z, lambda),
        }
    }

    /// `f(x; y)`.
    pub fn data_fit(&self, x: &Image) -> Result<f64> {
        match self {
            ForwardProblem::Denoising { y } => Ok(y.sub(x)?.norm_sqr()),
            ForwardProblem::Mri { y, mask } => {
                y.check_same_shape(x)?;
                let (h, w) = x.dims();
                let fx = fft2_raw(x.pixels(), h, w);
                Ok(fx
                    .iter()
                    .zip(y.pixels())
                    .zip(mask.bits())
                    .filter(|(_, &m)| m)
                    .map(|((a, b), _)| (a - b).norm_sqr())
                    .sum())
            }
        }
    }

    /// Gradient (real-coordinate convention `∂/∂x_R + i ∂/∂x_I`) of
    /// `f(x; y) + λ ||x - z||²`.
    pub fn objective_gradient(&self, x: &Image, z: &Image, lambda: f64) -> Result<Image> {
        x.check_same_shape(z)?;
        let fit_grad = match self {
            ForwardProblem::Denoising { y } => x.sub(y)?.scale(2.0),
            ForwardProblem::Mri { y, mask } => {
                y.check_same_shape(x)?;
                let (h, w) = x.dims();
                let resid: Vec<Complex64> = fft2_raw(x.pixels(), h, w)
                    .iter()
                    .zip(y.pixels())
                    .zip(mask.bits())
                    .map(|((a, b), &m)| if m { a - b } else { Complex64::default() })
                    .collect();
                Image::from_parts(h, w, ifft2_raw(&resid, h, w), Domain::Spatial).scale(2.0)
            }
        };
        fit_grad.zip_map(&x.sub(z)?, |g, d| g + d * (2.0 * lambda))
    }
}

/// `F^H P_Ω^H y`.
pub fn zero_filled(kspace: &Image) -> Image {
    let (h, w) = kspace.dims();
    Image::from_parts(h, w, ifft2_raw(kspace.pixels(), h, w), Domain::Spatial)
}

/// `(y + λ z) / (1 + λ)`.
pub fn x_update_denoise(y: &Image, z: &Image, lambda: f64) -> Result<Image> {
    check_lambda(lambda)?;
    let inv = 1.0 / (1.0 + lambda);
    Ok(y.zip_map(z, |a, b| (a + b * lambda) * inv)?.with_domain(Domain::Spatial))
}

/// Solves `(F^H P_Ωᵀ P_Ω F + λ I) x = F^H P_Ωᵀ y + λ z` bin by bin in k-space.
pub fn x_update_mri(y: &Image, mask: &Mask, z: &Image, lambda: f64) -> Result<Image> {
    check_lambda(lambda)?;
    y.check_same_shape(z)?;
    if y.dims() != mask.dims() {
        return Err(Error::shape("mask and k-space dimensions differ"));
    }
    let (h, w) = z.dims();
    let inv = 1.0 / (1.0 + lambda);
    let spectrum: Vec<Complex64> = fft2_raw(z.pixels(), h, w)
        .into_iter()
        .zip(y.pixels())
        .zip(mask.bits())
        .map(|((zk, &yk), &m)| if m { (yk + zk * lambda) * inv } else { zk })
        .collect();
    Ok(Image::from_parts(h, w, ifft2_raw(&spectrum, h, w), Domain::Spatial))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be a finite non-negative number, got {lambda}")));
    }
    Ok(())
}

/// Ordered trained layers plus the coupling weight they were trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryModel {
    kind: ProblemKind,
    lambda: f64,
    n_filters: usize,
    patch_h: usize,
    patch_w: usize,
    layers: Vec<LayerMapping>,
}

impl RecoveryModel {
    pub fn new(
        kind: ProblemKind,
        lambda: f64,
        n_filters: usize,
        patch_h: usize,
        patch_w: usize,
        layers: Vec<LayerMapping>,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("model lambda must be positive, got {lambda}")));
        }
        if n_filters == 0 || patch_h == 0 || patch_w == 0 {
            return Err(Error::InvalidCount("model geometry must be positive".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if (layer.n_filters(), layer.patch_h(), layer.patch_w()) != (n_filters, patch_h, patch_w) {
                return Err(Error::shape(format!("layer {i} geometry differs from the model")));
            }
        }
        Ok(Self { kind, lambda, n_filters, patch_h, patch_w, layers })
    }

    /// Builds a model whose geometry is taken from the first layer.
    pub fn from_layers(kind: ProblemKind, lambda: f64, layers: Vec<LayerMapping>) -> Result<Self> {
        let first =
            layers.first().ok_or_else(|| Error::InvalidCount("cannot infer geometry of an empty model".into()))?;
        let (k, ph, pw) = (first.n_filters(), first.patch_h(), first.patch_w());
        Self::new(kind, lambda, k, ph, pw, layers)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn patch_h(&self) -> usize {
        self.patch_h
    }

    pub fn patch_w(&self) -> usize {
        self.patch_w
    }

    pub fn layers(&self) -> &[LayerMapping] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryTrace {
    /// `x(0), x(1), ..., x(N)`.
    pub iterates: Vec<Image>,
    /// Entry `i` is `f(x(i+1); y) + λ ||x(i+1) - z(i+1)||²`.
    pub layer_costs: Vec<f64>,
}

impl RecoveryTrace {
    pub fn final_image(&self) -> &Image {
        self.iterates.last().expect("trace always holds x(0)")
    }

    /// PSNR of every iterate, `x(0)` included.
    pub fn psnr_trace(&self, reference: &Image, peak: f64) -> Result<Vec<f64>> {
        self.iterates.iter().map(|x| psnr(x, reference, peak)).collect()
    }
}

/// Runs every layer of `model` on `problem`. `x0` defaults to
/// [`ForwardProblem::warm_start`].
pub fn recover(model: &RecoveryModel, problem: &ForwardProblem, x0: Option<&Image>) -> Result<RecoveryTrace> {
    if model.kind() != problem.kind() {
        return Err(Error::Config(format!(
            "model trained for {:?} cannot recover a {:?} problem",
            model.kind(),
            problem.kind()
        )));
    }
    let x0 = match x0 {
        Some(x) => {
            if x.dims() != problem.dims() {
                return Err(Error::shape("initial image and measurement dimensions differ"));
            }
            x.clone().with_domain(Domain::Spatial)
        }
        None => problem.warm_start(),
    };
    let mut iterates = vec![x0];
    let mut layer_costs = Vec::with_capacity(model.n_layers());
    for layer in model.layers() {
        let x = iterates.last().expect("non-empty");
        let z = layer.apply_averaged(x)?;
        let next = problem.x_update(&z, model.lambda())?;
        layer_costs.push(problem.data_fit(&next)? + model.lambda() * next.sub(&z)?.norm_sqr());
        iterates.push(next);
    }
    Ok(RecoveryTrace { iterates, layer_costs })
}
