//! Complex 2-D arrays and the elementary operators everything else is built on.

mod fft;
mod image;
mod metrics;
mod patches;
mod threshold;

pub(crate) use fft::{fft2_raw, ifft2_raw};
pub use fft::{fft2_unitary, ifft2_unitary};
pub use image::{Domain, Image};
pub use metrics::{psnr, psnr_default_peak};
pub use patches::{aggregate_patches, all_positions, extract_patches, PatchMatrix};
pub(crate) use patches::{gather, scatter_add};
pub(crate) use threshold::shrink;
pub use threshold::soft_threshold;

pub use num_complex::Complex64 as C64;
