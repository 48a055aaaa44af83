//! Bit-level channel coding for the sidelink control and shared channels.
//!
//! Bits are `u8` values restricted to `0` and `1`. Soft bits are `f64` log-likelihood ratios,
//! positive meaning `0` is more likely.

pub mod conv;
pub mod crc;
pub mod interleave;
mod qpp_table;
pub mod rate_match;
pub mod scramble;
pub mod segment;
pub mod turbo;

pub use conv::{conv_decode, conv_encode, ConvCodeword};
pub use crc::{crc_attach, crc_check, crc_check_masked, crc_remainder, CrcKind};
pub use interleave::{channel_deinterleave, channel_interleave};
pub use rate_match::{conv_rate_match, conv_rate_recover, turbo_rate_match, turbo_rate_recover};
pub use scramble::{descramble_llrs, gold_sequence, scramble};
pub use segment::{desegment, segment_code_blocks, Segmentation};
pub use turbo::{qpp_interleaver, turbo_encode, TurboCodeword, TurboDecoder, TurboOutput};

use alloc::vec::Vec;

/// Largest LLR magnitude handed to decoders; keeps max-log arithmetic finite.
pub const LLR_CLAMP: f64 = 1.0e3;

/// Packs the low `width` bits of `value`, most significant first.
pub fn bits_from_u64(value: u64, width: usize) -> Vec<u8> {
    (0..width).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// Inverse of [`bits_from_u64`].
pub fn bits_to_u64(bits: &[u8]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// Sign slicer for soft bits.
pub fn hard_decision(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}

/// Maps a hard bit to a noiseless, saturated LLR.
pub fn bit_to_llr(bit: u8, magnitude: f64) -> f64 {
    if bit == 0 {
        magnitude
    } else {
        -magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack() {
        assert_eq!(bits_from_u64(0b1011, 4), [1, 0, 1, 1]);
        assert_eq!(bits_to_u64(&bits_from_u64(0xDEAD_BEEF, 32)), 0xDEAD_BEEF);
        assert_eq!(hard_decision(&[1.0, -0.5, 0.0]), [0, 1, 0]);
    }
}
