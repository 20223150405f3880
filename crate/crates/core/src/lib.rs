//! Iterative image recovery with learned convolutional mappings whose encoder
//! and decoder share the same filters.
//!
//! The recovery scheme alternates two steps per layer:
//!
//! ```text
//! z(i+1) = Mapping(i+1)(x(i))
//! x(i+1) = argmin_x f(x; y) + λ ||x - z(i+1)||²
//! ```
//!
//! where each mapping is a sum over filters `d_k` of a soft-thresholded
//! encoder/decoder pair that shares the same filter on both sides. Mappings
//! are trained layer by layer with block coordinate descent over
//! `(d_k, α_k)` pairs; thresholds take backtracking subgradient steps and
//! filters are updated with a small ADMM loop whose filter step is a
//! unit-ball constrained quadratic program.
//!
//! Module map:
//!
//! * [`numerics`]: images, unitary FFT, circular patches, soft thresholding, PSNR.
//! * [`mapping`]: the layer mapping and DCT filter initialisation.
//! * [`training`]: layer-wise training (thresholds, ADMM filter update, QCQP).
//! * [`recovery`]: forward problems, x-updates and the layer recursion.
//! * [`simulate`]: phantoms, noise, sampling masks and k-space synthesis.
//! * [`io`]: CIMG/CMSK/BCDN binary formats, metrics CSV and config files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod mapping;
pub mod numerics;
pub mod recovery;
pub mod simulate;
pub mod training;

pub use error::{Error, Result};
pub use mapping::{init_dct_filters, LayerMapping};
pub use numerics::{
    aggregate_patches, extract_patches, fft2_unitary, ifft2_unitary, psnr, psnr_default_peak, soft_threshold, Domain,
    Image, PatchMatrix, C64,
};
pub use recovery::{
    recover, x_update_denoise, x_update_mri, ForwardProblem, Mask, ProblemKind, RecoveryModel, RecoveryTrace,
};
pub use training::{train_layer, train_network, TrainingConfig, TrainingSet};
