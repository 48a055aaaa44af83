//! Length-31 Gold sequence scrambling.

use alloc::vec::Vec;

/// Sequence offset `N_c` applied before the first output bit.
const NC: usize = 1600;

/// First `len` bits of the Gold sequence for initial value `c_init` (31 bits used).
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<u8> {
    // x1 starts at 1, x2 at c_init; both advance by x(n+31) = feedback taps.
    let mut x1: u32 = 1;
    let mut x2: u32 = c_init & 0x7FFF_FFFF;
    let mut out = Vec::with_capacity(len);
    for n in 0..NC + len {
        if n >= NC {
            out.push(((x1 ^ x2) & 1) as u8);
        }
        let f1 = ((x1 >> 3) ^ x1) & 1;
        let f2 = ((x2 >> 3) ^ (x2 >> 2) ^ (x2 >> 1) ^ x2) & 1;
        x1 = (x1 >> 1) | (f1 << 30);
        x2 = (x2 >> 1) | (f2 << 30);
    }
    out
}

/// XORs `bits` with the Gold sequence; applying it twice restores the input.
pub fn scramble(bits: &[u8], c_init: u32) -> Vec<u8> {
    bits.iter().zip(gold_sequence(c_init, bits.len())).map(|(&b, c)| b ^ c).collect()
}

/// Soft counterpart of [`scramble`]: flips the sign of every LLR whose scrambling bit is one.
pub fn descramble_llrs(llrs: &[f64], c_init: u32) -> Vec<f64> {
    llrs.iter().zip(gold_sequence(c_init, llrs.len())).map(|(&l, c)| if c == 1 { -l } else { l }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    /// Plain recursion over explicit arrays: x1(n+31) = x1(n+3) + x1(n),
    /// x2(n+31) = x2(n+3) + x2(n+2) + x2(n+1) + x2(n).
    fn oracle(c_init: u32, len: usize) -> Vec<u8> {
        let total = NC + len + 31;
        let mut x1 = vec![0u8; total];
        let mut x2 = vec![0u8; total];
        x1[0] = 1;
        for i in 0..31 {
            x2[i] = ((c_init >> i) & 1) as u8;
        }
        for n in 0..total - 31 {
            x1[n + 31] = x1[n + 3] ^ x1[n];
            x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n];
        }
        (0..len).map(|n| x1[n + NC] ^ x2[n + NC]).collect()
    }

    #[test]
    fn zero_init_matches_recursion() {
        assert_eq!(gold_sequence(0, 32), oracle(0, 32));
        // With x2 all zero the output is the m-sequence x1 alone.
        let x1_only = oracle(0, 32);
        assert!(x1_only.contains(&1));
    }

    #[test]
    fn arbitrary_inits_match_recursion() {
        for init in [1u32, 510, 0x1234_5678, 0x7FFF_FFFF] {
            assert_eq!(gold_sequence(init, 200), oracle(init, 200));
        }
    }

    #[test]
    fn different_inits_differ() {
        let a = gold_sequence(510, 100);
        for init in [0u32, 1, 509, 511, 1 << 14] {
            assert_ne!(a, gold_sequence(init, 100));
        }
    }

    #[test]
    fn llr_descrambling_matches_hard_scrambling() {
        let bits = [0u8, 1, 1, 0, 1, 0, 0, 0, 1, 1];
        let scrambled = scramble(&bits, 77);
        let llrs: Vec<f64> = scrambled.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
        let back = crate::coding::hard_decision(&descramble_llrs(&llrs, 77));
        assert_eq!(back, bits);
    }

    proptest! {
        #[test]
        fn involution(bits in proptest::collection::vec(0u8..2, 0..500), init in 0u32..(1 << 31)) {
            prop_assert_eq!(scramble(&scramble(&bits, init), init), bits);
        }
    }
}
