//! Rate-1/3 tail-biting convolutional code with constraint length 7 (octal generators 133, 171,
//! 165), used for the sidelink control message.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

const MEMORY: usize = 6;
const N_STATES: usize = 1 << MEMORY;
/// Generators as 7-bit windows, current input in the most significant position.
const GENERATORS: [u8; 3] = [0o133, 0o171, 0o165];

/// The three parity streams of a tail-biting codeword; each as long as the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCodeword {
    pub streams: [Vec<u8>; 3],
}

impl ConvCodeword {
    pub fn len(&self) -> usize {
        3 * self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams[0].is_empty()
    }

    /// Streams concatenated as `d0 | d1 | d2`.
    pub fn concat(&self) -> Vec<u8> {
        self.streams.concat()
    }
}

#[inline]
fn outputs(window: u8) -> [u8; 3] {
    GENERATORS.map(|g| ((window & g).count_ones() & 1) as u8)
}

/// Register content (6 bits, most recent input highest) after feeding `bits`.
pub(crate) fn final_state(bits: &[u8]) -> u8 {
    bits.iter().fold(0u8, |s, &b| ((b << MEMORY) | s) >> 1)
}

/// Encodes with the register pre-loaded from the last six input bits, so that the start and end
/// states coincide.
pub fn conv_encode(bits: &[u8]) -> Result<ConvCodeword> {
    if bits.len() < MEMORY {
        return Err(invalid("tail-biting encoding needs at least 6 input bits"));
    }
    let mut state = final_state(&bits[bits.len() - MEMORY..]);
    let mut streams =
        [Vec::with_capacity(bits.len()), Vec::with_capacity(bits.len()), Vec::with_capacity(bits.len())];
    for &b in bits {
        let window = ((b & 1) << MEMORY) | state;
        for (stream, o) in streams.iter_mut().zip(outputs(window)) {
            stream.push(o);
        }
        state = window >> 1;
    }
    Ok(ConvCodeword { streams })
}

/// Per-step branch metrics, indexed by the 3-bit output pattern `d0 d1 d2`.
fn branch_table(soft: &[f64], info_len: usize) -> Vec<[f64; 8]> {
    (0..info_len)
        .map(|k| {
            let l = [soft[k], soft[info_len + k], soft[2 * info_len + k]];
            let mut t = [0.0; 8];
            for (pattern, m) in t.iter_mut().enumerate() {
                *m = (0..3)
                    .map(|i| if (pattern >> (2 - i)) & 1 == 0 { 0.5 * l[i] } else { -0.5 * l[i] })
                    .sum();
            }
            t
        })
        .collect()
}

struct Trellis {
    /// For each next state: the two (previous state, output pattern) pairs that reach it.
    incoming: [[(u8, u8); 2]; N_STATES],
}

impl Trellis {
    fn new() -> Self {
        let mut incoming = [[(0u8, 0u8); 2]; N_STATES];
        let mut fill = [0usize; N_STATES];
        for prev in 0..N_STATES as u8 {
            for b in 0..2u8 {
                let window = (b << MEMORY) | prev;
                let next = (window >> 1) as usize;
                let o = outputs(window);
                incoming[next][fill[next]] = (prev, (o[0] << 2) | (o[1] << 1) | o[2]);
                fill[next] += 1;
            }
        }
        Self { incoming }
    }

    /// Forward recursion. Returns final metrics and, when `decisions` is given, records which of
    /// the two incoming branches survived at each step.
    fn forward(
        &self,
        table: &[[f64; 8]],
        init: &[f64; N_STATES],
        mut decisions: Option<&mut Vec<u64>>,
    ) -> [f64; N_STATES] {
        let mut metric = *init;
        for bm in table {
            let mut next = [f64::NEG_INFINITY; N_STATES];
            let mut choice = 0u64;
            for (s, inc) in self.incoming.iter().enumerate() {
                let a = metric[inc[0].0 as usize] + bm[inc[0].1 as usize];
                let b = metric[inc[1].0 as usize] + bm[inc[1].1 as usize];
                if b > a {
                    next[s] = b;
                    choice |= 1 << s;
                } else {
                    next[s] = a;
                }
            }
            if let Some(d) = decisions.as_deref_mut() {
                d.push(choice);
            }
            metric = next;
        }
        metric
    }
}

/// Exact maximum-likelihood decoding of a tail-biting codeword.
///
/// `soft` holds the three streams back to back (`3 * info_len` LLRs). An unconstrained forward
/// pass bounds the metric of every tail-biting path ending in each state; start states are then
/// tried in order of decreasing bound until no remaining bound can beat the best path found.
pub fn conv_decode(soft: &[f64], info_len: usize) -> Result<Vec<u8>> {
    if info_len < MEMORY {
        return Err(invalid("tail-biting decoding needs at least 6 information bits"));
    }
    if soft.len() != 3 * info_len {
        return Err(invalid("soft input length must be three times the information length"));
    }
    let trellis = Trellis::new();
    let table = branch_table(soft, info_len);

    let bounds = trellis.forward(&table, &[0.0; N_STATES], None);
    let mut order: Vec<usize> = (0..N_STATES).collect();
    order.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]));

    let mut best: Option<(f64, usize, Vec<u64>)> = None;
    let mut decisions = Vec::with_capacity(info_len);
    for &start in &order {
        if let Some((m, _, _)) = &best {
            if *m >= bounds[start] {
                break;
            }
        }
        let mut init = [f64::NEG_INFINITY; N_STATES];
        init[start] = 0.0;
        decisions.clear();
        let end = trellis.forward(&table, &init, Some(&mut decisions));
        if best.as_ref().is_none_or(|(m, _, _)| end[start] > *m) {
            best = Some((end[start], start, decisions.clone()));
        }
    }
    let (_, start, decisions) = best.expect("at least one start state is evaluated");

    let mut bits = vec![0u8; info_len];
    let mut state = start;
    for k in (0..info_len).rev() {
        let branch = ((decisions[k] >> state) & 1) as usize;
        // The newest input bit is the top bit of the state it leads to.
        bits[k] = ((state >> (MEMORY - 1)) & 1) as u8;
        state = trellis.incoming[state][branch].0 as usize;
    }
    Ok(bits)
}
