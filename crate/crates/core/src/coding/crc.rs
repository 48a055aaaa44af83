use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// CRC generator polynomials used on the sidelink.
///
/// `Crc16` protects the control message, `Crc24A` the transport block and `Crc24B` each code
/// block after segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrcKind {
    Crc16,
    Crc24A,
    Crc24B,
}

#[allow(clippy::len_without_is_empty)]
impl CrcKind {
    pub const fn len(self) -> usize {
        match self {
            CrcKind::Crc16 => 16,
            CrcKind::Crc24A | CrcKind::Crc24B => 24,
        }
    }

    /// Generator polynomial without the leading `D^len` term.
    pub const fn poly(self) -> u32 {
        match self {
            // D^16 + D^12 + D^5 + 1
            CrcKind::Crc16 => 0x1021,
            // D^24 + D^23 + D^18 + D^17 + D^14 + D^11 + D^10 + D^7 + D^6 + D^5 + D^4 + D^3 + D + 1
            CrcKind::Crc24A => 0x86_4CFB,
            // D^24 + D^23 + D^6 + D^5 + D + 1
            CrcKind::Crc24B => 0x80_0063,
        }
    }
}

/// Remainder of `bits(D) * D^len` modulo the generator, zero-initialised register.
pub fn crc_remainder(bits: &[u8], kind: CrcKind) -> u32 {
    let len = kind.len();
    let top = 1u32 << (len - 1);
    let mask = (1u32 << len) - 1;
    let mut reg = 0u32;
    for &b in bits {
        let feedback = ((reg & top) != 0) ^ (b & 1 == 1);
        reg = (reg << 1) & mask;
        if feedback {
            reg ^= kind.poly();
        }
    }
    reg
}

/// Appends parity bits so that the whole block divides the generator.
pub fn crc_attach(payload: &[u8], kind: CrcKind) -> Vec<u8> {
    let parity = crc_remainder(payload, kind);
    let mut out = Vec::with_capacity(payload.len() + kind.len());
    out.extend_from_slice(payload);
    out.extend((0..kind.len()).rev().map(|i| ((parity >> i) & 1) as u8));
    out
}

/// Checks a block carrying its parity in the last `kind.len()` bits.
pub fn crc_check(block: &[u8], kind: CrcKind) -> Result<bool> {
    crc_check_masked(block, kind, 0)
}

/// Like [`crc_check`], with the parity field XOR-ed by `mask` before the check.
pub fn crc_check_masked(block: &[u8], kind: CrcKind, mask: u32) -> Result<bool> {
    let len = kind.len();
    if block.len() <= len {
        return Err(invalid("block is not longer than its CRC"));
    }
    let (payload, parity_bits) = block.split_at(block.len() - len);
    let parity = parity_bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1)) ^ mask;
    Ok(crc_remainder(payload, kind) == parity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    /// Long division of `payload(D) * D^len` by the full generator, one bit at a time over a
    /// growing dividend.
    fn division_oracle(payload: &[u8], kind: CrcKind) -> Vec<u8> {
        let len = kind.len();
        let mut generator = vec![1u8];
        generator.extend((0..len).rev().map(|i| ((kind.poly() >> i) & 1) as u8));
        let mut dividend: Vec<u8> = payload.to_vec();
        dividend.extend(core::iter::repeat_n(0u8, len));
        for i in 0..payload.len() {
            if dividend[i] == 1 {
                for (j, g) in generator.iter().enumerate() {
                    dividend[i + j] ^= g;
                }
            }
        }
        dividend[payload.len()..].to_vec()
    }

    #[test]
    fn zero_payload_zero_parity() {
        let out = crc_attach(&[0u8; 32], CrcKind::Crc16);
        assert_eq!(out.len(), 48);
        assert!(out.iter().all(|&b| b == 0));
    }

    #[test]
    fn byte_one_matches_long_division() {
        let payload = [0u8, 0, 0, 0, 0, 0, 0, 1];
        for kind in [CrcKind::Crc16, CrcKind::Crc24A, CrcKind::Crc24B] {
            let out = crc_attach(&payload, kind);
            assert_eq!(&out[8..], division_oracle(&payload, kind).as_slice());
        }
        // For a single trailing one the remainder is the generator itself.
        let out = crc_attach(&payload, CrcKind::Crc16);
        assert_eq!(crate::coding::bits_to_u64(&out[8..]), 0x1021);
    }

    #[test]
    fn random_payloads_match_long_division() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..300);
            let payload: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            for kind in [CrcKind::Crc16, CrcKind::Crc24A, CrcKind::Crc24B] {
                let out = crc_attach(&payload, kind);
                assert_eq!(&out[n..], division_oracle(&payload, kind).as_slice());
                assert!(crc_check(&out, kind).unwrap());
            }
        }
    }

    #[test]
    fn every_single_bit_flip_detected() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let payload: Vec<u8> = (0..120).map(|_| rng.random_range(0..2)).collect();
        for kind in [CrcKind::Crc16, CrcKind::Crc24A, CrcKind::Crc24B] {
            let block = crc_attach(&payload, kind);
            for i in 0..block.len() {
                let mut bad = block.clone();
                bad[i] ^= 1;
                assert!(!crc_check(&bad, kind).unwrap(), "{kind:?} missed flip at {i}");
            }
        }
    }

    #[test]
    fn bursts_shorter_than_crc_detected() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let payload: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        for kind in [CrcKind::Crc16, CrcKind::Crc24A] {
            let block = crc_attach(&payload, kind);
            for burst in 1..=kind.len() {
                for start in 0..=(block.len() - burst) {
                    let mut bad = block.clone();
                    // Burst pattern: both ends flipped, interior random.
                    bad[start] ^= 1;
                    if burst > 1 {
                        bad[start + burst - 1] ^= 1;
                        for b in &mut bad[start + 1..start + burst - 1] {
                            *b ^= rng.random_range(0..2);
                        }
                    }
                    assert!(!crc_check(&bad, kind).unwrap());
                }
            }
        }
    }

    #[test]
    fn random_corruption_detected() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(6);
        let mut missed = 0;
        let trials = 10_000;
        for _ in 0..trials {
            let payload: Vec<u8> = (0..48).map(|_| rng.random_range(0..2)).collect();
            let mut block = crc_attach(&payload, CrcKind::Crc16);
            loop {
                let flips = rng.random_range(2..12);
                for _ in 0..flips {
                    let i = rng.random_range(0..block.len());
                    block[i] ^= 1;
                }
                if block != crc_attach(&payload, CrcKind::Crc16) {
                    break;
                }
            }
            if crc_check(&block, CrcKind::Crc16).unwrap() {
                missed += 1;
            }
        }
        let fail_rate = 1.0 - f64::from(missed) / f64::from(trials);
        assert!(fail_rate >= 0.9999, "fail rate {fail_rate}");
    }

    #[test]
    fn short_block_is_rejected() {
        assert!(crc_check(&[0u8; 16], CrcKind::Crc16).is_err());
        assert!(crc_check(&[0u8; 24], CrcKind::Crc24A).is_err());
    }

    #[test]
    fn mask_is_applied_to_parity() {
        let block = crc_attach(&[1, 0, 1, 1, 0, 1, 0, 0], CrcKind::Crc16);
        let mut masked = block.clone();
        for (b, m) in masked[8..].iter_mut().zip(crate::coding::bits_from_u64(0xA5A5, 16)) {
            *b ^= m;
        }
        assert!(!crc_check(&masked, CrcKind::Crc16).unwrap());
        assert!(crc_check_masked(&masked, CrcKind::Crc16, 0xA5A5).unwrap());
    }
}
