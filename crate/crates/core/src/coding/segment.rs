//! Transport-block segmentation into turbo code blocks.

use alloc::vec::Vec;

use super::crc::{crc_attach, CrcKind};
use super::turbo::{block_sizes, MAX_BLOCK_SIZE};
use crate::error::{invalid, Result};

/// Code-block layout for a transport block of a given length (CRC24A included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segmentation {
    pub input_len: usize,
    pub n_blocks: usize,
    pub k_plus: usize,
    pub k_minus: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    /// Zero filler bits prepended to the first block.
    pub filler: usize,
}

impl Segmentation {
    pub fn for_length(b: usize) -> Result<Self> {
        if b == 0 {
            return Err(invalid("empty transport block"));
        }
        let (n_blocks, b_prime) = if b <= MAX_BLOCK_SIZE {
            (1, b)
        } else {
            let l = CrcKind::Crc24B.len();
            let c = b.div_ceil(MAX_BLOCK_SIZE - l);
            (c, b + c * l)
        };
        let k_plus = block_sizes()
            .find(|&k| n_blocks * k >= b_prime)
            .ok_or_else(|| invalid("transport block too large"))?;
        let (k_minus, n_plus, n_minus) = if n_blocks == 1 {
            (0, 1, 0)
        } else {
            let k_minus = block_sizes().take_while(|&k| k < k_plus).last().unwrap_or(0);
            let delta = k_plus - k_minus;
            let n_minus = (n_blocks * k_plus - b_prime) / delta;
            (k_minus, n_blocks - n_minus, n_minus)
        };
        let filler = n_plus * k_plus + n_minus * k_minus - b_prime;
        Ok(Self { input_len: b, n_blocks, k_plus, k_minus, n_plus, n_minus, filler })
    }

    /// Whether each block carries its own CRC24B.
    pub fn has_block_crc(&self) -> bool {
        self.n_blocks > 1
    }

    /// Size of block `r`.
    pub fn block_size(&self, r: usize) -> usize {
        if r < self.n_minus {
            self.k_minus
        } else {
            self.k_plus
        }
    }
}

/// Splits a CRC24A-protected transport block into code blocks, filling the first block with
/// leading zero filler bits and appending CRC24B to every block when there is more than one.
pub fn segment_code_blocks(tb: &[u8]) -> Result<(Segmentation, Vec<Vec<u8>>)> {
    let seg = Segmentation::for_length(tb.len())?;
    let crc_len = if seg.has_block_crc() { CrcKind::Crc24B.len() } else { 0 };
    let mut src = tb.iter().copied();
    let mut blocks = Vec::with_capacity(seg.n_blocks);
    for r in 0..seg.n_blocks {
        let k = seg.block_size(r);
        let fill = if r == 0 { seg.filler } else { 0 };
        let mut data: Vec<u8> = core::iter::repeat_n(0u8, fill).collect();
        data.extend(src.by_ref().take(k - crc_len - fill));
        let block = if seg.has_block_crc() { crc_attach(&data, CrcKind::Crc24B) } else { data };
        debug_assert_eq!(block.len(), k);
        blocks.push(block);
    }
    Ok((seg, blocks))
}

/// Reassembles a transport block, dropping filler and per-block CRC bits.
pub fn desegment(seg: &Segmentation, blocks: &[Vec<u8>]) -> Result<Vec<u8>> {
    if blocks.len() != seg.n_blocks {
        return Err(invalid("code block count does not match segmentation"));
    }
    let crc_len = if seg.has_block_crc() { CrcKind::Crc24B.len() } else { 0 };
    let mut tb = Vec::with_capacity(seg.input_len);
    for (r, block) in blocks.iter().enumerate() {
        if block.len() != seg.block_size(r) {
            return Err(invalid("code block size does not match segmentation"));
        }
        let fill = if r == 0 { seg.filler } else { 0 };
        tb.extend_from_slice(&block[fill..block.len() - crc_len]);
    }
    Ok(tb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::crc_check;
    use proptest::prelude::*;

    #[test]
    fn small_block_is_not_split() {
        let tb = crc_attach(&[1u8; 76], CrcKind::Crc24A);
        let (seg, blocks) = segment_code_blocks(&tb).unwrap();
        assert_eq!(seg.n_blocks, 1);
        assert_eq!(blocks.len(), 1);
        assert!(!seg.has_block_crc());
        // 100 bits round up to K = 104.
        assert_eq!(seg.k_plus, 104);
        assert_eq!(seg.filler, 4);
        assert_eq!(&blocks[0][4..], tb.as_slice());
    }

    #[test]
    fn seven_thousand_bits_make_two_blocks() {
        // C = ceil(7000 / 6120) = 2, B' = 7048, K+ = 3584, K- = 3520, C- = 1, C+ = 1, F = 56.
        let tb: Vec<u8> = (0..7000).map(|i| (i % 3 == 0) as u8).collect();
        let (seg, blocks) = segment_code_blocks(&tb).unwrap();
        assert_eq!(
            (seg.n_blocks, seg.k_plus, seg.k_minus, seg.n_plus, seg.n_minus, seg.filler),
            (2, 3584, 3520, 1, 1, 56)
        );
        assert_eq!(blocks[0].len(), 3520);
        assert_eq!(blocks[1].len(), 3584);
        for b in &blocks {
            assert!(crc_check(b, CrcKind::Crc24B).unwrap());
        }
        assert_eq!(desegment(&seg, &blocks).unwrap(), tb);
    }

    #[test]
    fn largest_single_block() {
        let seg = Segmentation::for_length(6144).unwrap();
        assert_eq!((seg.n_blocks, seg.filler), (1, 0));
        let seg = Segmentation::for_length(6145).unwrap();
        assert_eq!(seg.n_blocks, 2);
    }

    #[test]
    fn block_count_mismatch_rejected() {
        let seg = Segmentation::for_length(200).unwrap();
        assert!(desegment(&seg, &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn desegment_inverts_segment(len in 1usize..20_000, seed in any::<u64>()) {
            let tb: Vec<u8> = (0..len).map(|i| ((seed >> (i % 64)) & 1) as u8 ^ (i % 7 == 0) as u8).collect();
            let (seg, blocks) = segment_code_blocks(&tb).unwrap();
            prop_assert_eq!(seg.n_plus + seg.n_minus, seg.n_blocks);
            prop_assert!(seg.filler < 64);
            prop_assert_eq!(desegment(&seg, &blocks).unwrap(), tb);
        }
    }
}
