//! Shared fixtures for the criterion benches.

use bcdnet::{Domain, Image, C64};

/// Deterministic pseudo-random complex image (xorshift, no rand dependency).
pub fn test_image(h: usize, w: usize, seed: u64) -> Image {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let px = (0..h * w).map(|_| C64::new(next(), next())).collect();
    Image::new(h, w, px, Domain::Spatial).expect("finite pixels")
}
