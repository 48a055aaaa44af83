//! Circular-buffer rate matching for the turbo and tail-biting convolutional codes.
//!
//! Both matchers are expressed as a selection pattern: output bit `i` is codeword bit
//! `pattern[i]`, where codeword bits are numbered stream by stream. Matching gathers along the
//! pattern; recovery scatters soft values back, summing repeats and leaving punctured positions
//! at zero.

use alloc::vec;
use alloc::vec::Vec;

use super::conv::ConvCodeword;
use super::turbo::TurboCodeword;
use crate::error::{invalid, Result};

const COLUMNS: usize = 32;

const TURBO_COLUMN_ORDER: [usize; COLUMNS] = [
    0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14, 30, 1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7,
    23, 15, 31,
];

const CONV_COLUMN_ORDER: [usize; COLUMNS] = [
    1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31, 0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6,
    22, 14, 30,
];

/// Sub-block interleaver of one stream of `d` bits. Entry `k` is the source bit index, or `None`
/// for a dummy position.
fn subblock(d: usize, order: &[usize; COLUMNS], shifted: bool) -> Vec<Option<usize>> {
    let rows = d.div_ceil(COLUMNS);
    let size = rows * COLUMNS;
    let dummies = size - d;
    (0..size)
        .map(|k| {
            let mut idx = order[k / rows] + COLUMNS * (k % rows);
            if shifted {
                idx = (idx + 1) % size;
            }
            idx.checked_sub(dummies)
        })
        .collect()
}

fn select(buffer: &[Option<usize>], start: usize, target_len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(target_len);
    let mut j = start;
    while out.len() < target_len {
        if let Some(pos) = buffer[j % buffer.len()] {
            out.push(pos);
        }
        j += 1;
    }
    out
}

/// Selection pattern for a turbo codeword of `3d` bits (`d = K + 4`).
pub fn turbo_pattern(d: usize, target_len: usize, rv: usize) -> Result<Vec<usize>> {
    if rv > 3 {
        return Err(invalid("redundancy version must be 0..=3"));
    }
    if target_len == 0 || d == 0 {
        return Err(invalid("rate matching needs a non-empty codeword and target"));
    }
    let v0 = subblock(d, &TURBO_COLUMN_ORDER, false);
    let v1 = subblock(d, &TURBO_COLUMN_ORDER, false);
    let v2 = subblock(d, &TURBO_COLUMN_ORDER, true);
    let kpi = v0.len();
    let rows = kpi / COLUMNS;
    let mut buffer = Vec::with_capacity(3 * kpi);
    buffer.extend(v0.iter().copied());
    for (a, b) in v1.iter().zip(&v2) {
        buffer.push(a.map(|i| d + i));
        buffer.push(b.map(|i| 2 * d + i));
    }
    let ncb = buffer.len();
    let k0 = rows * (2 * ncb.div_ceil(8 * rows) * rv + 2);
    Ok(select(&buffer, k0, target_len))
}

/// Selection pattern for a tail-biting codeword of `3d` bits.
pub fn conv_pattern(d: usize, target_len: usize) -> Result<Vec<usize>> {
    if target_len == 0 || d == 0 {
        return Err(invalid("rate matching needs a non-empty codeword and target"));
    }
    let mut buffer = Vec::with_capacity(3 * d.div_ceil(COLUMNS) * COLUMNS);
    for s in 0..3 {
        buffer.extend(subblock(d, &CONV_COLUMN_ORDER, false).into_iter().map(|p| p.map(|i| s * d + i)));
    }
    Ok(select(&buffer, 0, target_len))
}

fn gather(bits: &[u8], pattern: &[usize]) -> Vec<u8> {
    pattern.iter().map(|&p| bits[p]).collect()
}

fn scatter(llrs: &[f64], pattern: &[usize], len: usize) -> Result<Vec<f64>> {
    if llrs.len() != pattern.len() {
        return Err(invalid("soft input length does not match the rate-matched length"));
    }
    let mut out = vec![0.0; len];
    for (&l, &p) in llrs.iter().zip(pattern) {
        out[p] += l;
    }
    Ok(out)
}

pub fn turbo_rate_match(cw: &TurboCodeword, target_len: usize, rv: usize) -> Result<Vec<u8>> {
    let d = cw.streams[0].len();
    Ok(gather(&cw.concat(), &turbo_pattern(d, target_len, rv)?))
}

/// Soft inverse of [`turbo_rate_match`] for block size `k`; returns `3k + 12` LLRs.
pub fn turbo_rate_recover(llrs: &[f64], k: usize, rv: usize) -> Result<Vec<f64>> {
    let d = k + 4;
    scatter(llrs, &turbo_pattern(d, llrs.len(), rv)?, 3 * d)
}

pub fn conv_rate_match(cw: &ConvCodeword, target_len: usize) -> Result<Vec<u8>> {
    let d = cw.streams[0].len();
    Ok(gather(&cw.concat(), &conv_pattern(d, target_len)?))
}

/// Soft inverse of [`conv_rate_match`] for `info_len` information bits.
pub fn conv_rate_recover(llrs: &[f64], info_len: usize) -> Result<Vec<f64>> {
    scatter(llrs, &conv_pattern(info_len, llrs.len())?, 3 * info_len)
}
