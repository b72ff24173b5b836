//! Gray-mapped 16-QAM with unit average symbol energy.
//!
//! The two high bits pick the in-phase level and the two low bits the
//! quadrature level, each through the Gray sequence `00, 01, 11, 10` over
//! `{-3, -1, +1, +3} / √10`.

use crate::linalg::C64;

pub const QAM16_BITS: usize = 4;

/// `1/√10`: one amplitude step.
pub const QAM16_SCALE: f64 = 0.316_227_766_016_837_94;

/// Modulo period for 16-QAM THP: four amplitude steps per dimension.
pub const QAM16_TAU: f64 = 8.0 * QAM16_SCALE;

#[inline]
fn level(two_bits: u8) -> f64 {
    match two_bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

#[inline]
fn bits_of(x: f64) -> u8 {
    let u = x / QAM16_SCALE;
    if u < -2.0 {
        0b00
    } else if u < 0.0 {
        0b01
    } else if u < 2.0 {
        0b11
    } else {
        0b10
    }
}

/// Maps the low four bits of `bits` to a constellation point.
#[inline]
pub fn qam16_map(bits: u8) -> C64 {
    debug_assert!(bits < 16, "16-QAM takes 4 bits");
    C64::new(level(bits >> 2), level(bits)) * QAM16_SCALE
}

/// Nearest-point hard decision.
#[inline]
pub fn qam16_demap(z: C64) -> u8 {
    (bits_of(z.re) << 2) | bits_of(z.im)
}

pub fn constellation() -> [C64; 16] {
    std::array::from_fn(|b| qam16_map(b as u8))
}
