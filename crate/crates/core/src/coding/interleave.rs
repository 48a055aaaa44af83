//! Row-in/column-out channel interleaver operating on modulation-symbol groups.
//!
//! Coded bits are grouped into `qm`-bit tuples and written row by row into a matrix with one
//! column per data-bearing SC-FDMA symbol; reading column by column then places consecutive
//! tuples on successive symbols.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

fn shape(len: usize, columns: usize, qm: usize) -> Result<usize> {
    if columns == 0 || qm == 0 || !len.is_multiple_of(qm * columns) {
        return Err(invalid("interleaver input must fill a whole number of rows of symbol groups"));
    }
    Ok(len / (qm * columns))
}

/// Source tuple index for each output tuple.
fn order(rows: usize, columns: usize) -> impl Iterator<Item = usize> {
    (0..columns).flat_map(move |c| (0..rows).map(move |r| r * columns + c))
}

pub fn channel_interleave(bits: &[u8], columns: usize, qm: usize) -> Result<Vec<u8>> {
    let rows = shape(bits.len(), columns, qm)?;
    Ok(order(rows, columns).flat_map(|g| bits[g * qm..(g + 1) * qm].iter().copied()).collect())
}

pub fn channel_deinterleave(llrs: &[f64], columns: usize, qm: usize) -> Result<Vec<f64>> {
    let rows = shape(llrs.len(), columns, qm)?;
    let mut out = alloc::vec![0.0; llrs.len()];
    for (o, g) in order(rows, columns).enumerate() {
        out[g * qm..(g + 1) * qm].copy_from_slice(&llrs[o * qm..(o + 1) * qm]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn consecutive_tuples_land_on_consecutive_columns() {
        // 3 columns, 2 rows of QPSK tuples: tuples 0 1 2 / 3 4 5 -> read 0 3 1 4 2 5.
        let bits: Vec<u8> = (0..12).map(|i| (i / 2) as u8).collect();
        let out = channel_interleave(&bits, 3, 2).unwrap();
        assert_eq!(out, [0, 0, 3, 3, 1, 1, 4, 4, 2, 2, 5, 5]);
    }

    #[test]
    fn ragged_input_rejected() {
        assert!(channel_interleave(&[0; 10], 3, 2).is_err());
        assert!(channel_deinterleave(&[0.0; 10], 0, 2).is_err());
    }

    proptest! {
        #[test]
        fn deinterleave_inverts(rows in 1usize..40, columns in 1usize..14, seed in any::<u64>()) {
            let n = rows * columns * 2;
            let values: Vec<f64> = (0..n).map(|i| (seed.rotate_left(i as u32 % 64) % 1000) as f64 + i as f64).collect();
            let bits: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let tx = channel_interleave(&bits, columns, 2).unwrap();
            prop_assert_eq!(tx.len(), n);
            let perm_applied: Vec<f64> = {
                let r = rows;
                (0..columns).flat_map(|c| (0..r).map(move |rr| rr * columns + c))
                    .flat_map(|g| [values[2 * g], values[2 * g + 1]]).collect()
            };
            prop_assert_eq!(channel_deinterleave(&perm_applied, columns, 2).unwrap(), values);
        }
    }
}
