use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use sidelink_core::coding::{
    bit_to_llr, channel_deinterleave, channel_interleave, conv_decode, conv_encode, conv_rate_match,
    conv_rate_recover, crc_attach, crc_check, descramble_llrs, desegment, hard_decision, scramble,
    segment_code_blocks, turbo_encode, turbo_rate_match, turbo_rate_recover, CrcKind, TurboDecoder,
};

fn random_bits(rng: &mut StdRng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn bpsk_llrs(bits: &[u8], snr_db: f64, rng: &mut StdRng) -> Vec<f64> {
    let sigma2 = 10f64.powf(-snr_db / 10.0);
    bits.iter()
        .map(|&b| {
            let x = if b == 0 { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(rng);
            2.0 * (x + sigma2.sqrt() * n) / sigma2
        })
        .collect()
}

/// Transmit side of the shared-channel chain up to scrambled bits, and the noiseless inverse.
fn turbo_chain(tb: &[u8], e_total: usize, c_init: u32) -> Vec<u8> {
    let with_crc = crc_attach(tb, CrcKind::Crc24A);
    let (seg, blocks) = segment_code_blocks(&with_crc).unwrap();
    let per_block = e_total / seg.n_blocks;
    let mut coded = Vec::new();
    for b in &blocks {
        coded.extend(turbo_rate_match(&turbo_encode(b).unwrap(), per_block, 0).unwrap());
    }
    let llrs: Vec<f64> = scramble(&coded, c_init).iter().map(|&b| bit_to_llr(b, 8.0)).collect();
    let llrs = descramble_llrs(&llrs, c_init);

    let mut decoded = Vec::new();
    for (r, chunk) in llrs.chunks(per_block).enumerate() {
        let k = seg.block_size(r);
        let soft = turbo_rate_recover(chunk, k, 0).unwrap();
        let filler = if r == 0 { seg.filler } else { 0 };
        let crc = seg.has_block_crc().then_some(CrcKind::Crc24B);
        let out = TurboDecoder::new(k, 4).unwrap().with_filler(filler).decode(&soft, crc).unwrap();
        decoded.push(out.bits);
    }
    let joined = desegment(&seg, &decoded).unwrap();
    assert!(crc_check(&joined, CrcKind::Crc24A).unwrap());
    joined[..tb.len()].to_vec()
}

#[test]
fn single_block_transport_chain_is_lossless() {
    let mut rng = StdRng::seed_from_u64(1);
    let tb = random_bits(&mut rng, 1000);
    assert_eq!(turbo_chain(&tb, 9 * 168 * 2, 0x1234), tb);
}

#[test]
fn multi_block_transport_chain_is_lossless() {
    let mut rng = StdRng::seed_from_u64(2);
    for len in [6200, 9000, 13000] {
        let tb = random_bits(&mut rng, len);
        let e = 3 * (len + 200);
        assert_eq!(turbo_chain(&tb, e, 77), tb, "tb length {len}");
    }
}

#[test]
fn control_chain_is_lossless_through_interleaver() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let sci = random_bits(&mut rng, 48);
        let block = crc_attach(&sci, CrcKind::Crc16);
        let e = 288;
        let tx = conv_rate_match(&conv_encode(&block).unwrap(), e).unwrap();
        let cols = 9;
        let il = channel_interleave(&tx, cols, 2).unwrap();
        let llrs: Vec<f64> = il.iter().map(|&b| bit_to_llr(b, 4.0)).collect();
        let back = channel_deinterleave(&llrs, cols, 2).unwrap();
        let soft = conv_rate_recover(&back, block.len()).unwrap();
        let dec = conv_decode(&soft, block.len()).unwrap();
        assert!(crc_check(&dec, CrcKind::Crc16).unwrap());
        assert_eq!(&dec[..48], &sci[..]);
    }
}

#[test]
fn conv_code_at_8db_bpsk_is_nearly_error_free() {
    let mut rng = StdRng::seed_from_u64(4);
    let info_len = 40;
    let trials = 10_000;
    let mut errors = 0;
    for _ in 0..trials {
        let bits = random_bits(&mut rng, info_len);
        let cw = conv_encode(&bits).unwrap().concat();
        let llrs = bpsk_llrs(&cw, 8.0, &mut rng);
        if conv_decode(&llrs, info_len).unwrap() != bits {
            errors += 1;
        }
    }
    assert!(errors * 1000 < trials, "BLER {errors}/{trials}");
}

#[test]
fn turbo_beats_uncoded_at_low_snr() {
    let mut rng = StdRng::seed_from_u64(5);
    let k = 1024;
    let dec = TurboDecoder::new(k, 4).unwrap();
    let (mut coded_err, mut raw_err) = (0usize, 0usize);
    for _ in 0..20 {
        let bits = random_bits(&mut rng, k);
        let cw = turbo_encode(&bits).unwrap().concat();
        let llrs = bpsk_llrs(&cw, 0.0, &mut rng);
        raw_err += hard_decision(&llrs[..k]).iter().zip(&bits).filter(|(a, b)| a != b).count();
        let out = dec.decode(&llrs, None).unwrap();
        coded_err += out.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
    }
    assert!(coded_err * 100 < raw_err, "coded {coded_err} raw {raw_err}");
}
