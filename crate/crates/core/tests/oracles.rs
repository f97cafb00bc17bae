//! Library results checked against slow, independent reimplementations.

use std::collections::HashSet;

use puf_ldpc::decode::{derive_soft, BitflipDecoder, SoftWeights};
use puf_ldpc::eval::{estimate_perr, ChannelParams, Deltas};
use puf_ldpc::geometry::{build_eg, build_pg};
use puf_ldpc::sketch::{build_instance_code, random_codeword, syndrome_enroll, syndrome_reproduce, ConstructionConfig, Response};
use puf_ldpc::sparsemat::SparseBinaryMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn syn_weight(dense: &[Vec<u8>], v: &[u8]) -> usize {
    dense
        .iter()
        .filter(|row| row.iter().zip(v).filter(|(&a, &b)| a & b == 1).count() % 2 == 1)
        .count()
}

/// Flip argmin of syndrome weight after the flip plus Delta, lowest index
/// first; stop on zero syndrome, after `max_iters` flips, or on a repeat.
fn oracle_decode(dense: &[Vec<u8>], r: &[u8], delta: &[u32], max_iters: usize) -> (Vec<u8>, bool) {
    let n = r.len();
    let mut word = r.to_vec();
    let mut seen = HashSet::from([word.clone()]);
    for _ in 0..max_iters {
        if syn_weight(dense, &word) == 0 {
            break;
        }
        let j = (0..n)
            .min_by_key(|&j| {
                let mut t = word.clone();
                t[j] ^= 1;
                (syn_weight(dense, &t) as u64 + delta[j] as u64, j)
            })
            .unwrap();
        word[j] ^= 1;
        if syn_weight(dense, &word) != 0 && !seen.insert(word.clone()) {
            break;
        }
    }
    let ok = syn_weight(dense, &word) == 0;
    (word, ok)
}

fn patterns(n: usize, max_weight: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        if (mask.count_ones() as usize) <= max_weight {
            out.push((0..n).map(|j| (mask >> j & 1) as u8).collect());
        }
    }
    out
}

fn check_against_oracle(h: &SparseBinaryMatrix, soft: Option<&SoftWeights>, max_weight: usize) {
    let dense = h.to_dense();
    let n = h.n_cols();
    let zeros = vec![0; n];
    let delta = soft.map_or(&zeros, |s| &s.delta);
    let dec = BitflipDecoder::new(h.clone());
    for e in patterns(n, max_weight) {
        let fast = dec.decode(&e, soft).unwrap();
        let (slow, ok) = oracle_decode(&dense, &e, delta, n);
        assert_eq!(fast.word, slow, "pattern {e:?}");
        assert_eq!(fast.converged, ok);
    }
}

#[test]
fn decoder_matches_oracle_on_eg24() {
    check_against_oracle(&build_eg(2, 4).unwrap().incidence_matrix(), None, 3);
}

#[test]
fn decoder_matches_oracle_on_pg22_and_eg32() {
    check_against_oracle(&build_pg(2, 2).unwrap().incidence_matrix(), None, 7);
    check_against_oracle(&build_eg(3, 2).unwrap().incidence_matrix(), None, 8);
}

#[test]
fn decoder_matches_oracle_with_soft_weights() {
    let h = build_eg(2, 4).unwrap().incidence_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let reads: Vec<Vec<u8>> = (0..3).map(|_| (0..16).map(|_| rng.gen_bool(0.2) as u8).collect()).collect();
        let refs: Vec<&[u8]> = reads.iter().map(Vec::as_slice).collect();
        let soft = derive_soft(&refs, 10, 6).unwrap();
        check_against_oracle(&h, Some(&soft), 2);
    }
}

#[test]
fn decoder_matches_oracle_on_instance_codes() {
    for seed in 0..5 {
        let r = Response::random(16, &mut ChaCha8Rng::seed_from_u64(seed));
        let code = build_instance_code(&r, &ConstructionConfig::for_length(16, 5, seed)).unwrap();
        check_against_oracle(&code.h, None, 2);
    }
}

#[test]
fn exhaustive_perr_equals_brute_force_count() {
    let h = build_eg(2, 4).unwrap().incidence_matrix();
    let dense = h.to_dense();
    let r_i = Response::new(random_codeword(&h, &mut ChaCha8Rng::seed_from_u64(3))).unwrap();
    let dec = BitflipDecoder::new(h);
    let ch = ChannelParams::new(0.0, 1, 0).unwrap();
    for w in 0..=4 {
        let est = estimate_perr(&dec, &r_i, w, 5000, &ch, Deltas::N128).unwrap();
        assert!(est.exhaustive);
        let failures = patterns(16, w)
            .into_iter()
            .filter(|e| e.iter().filter(|&&b| b == 1).count() == w)
            .filter(|e| {
                let r: Vec<u8> = r_i.bits().iter().zip(e).map(|(a, b)| a ^ b).collect();
                let zeros = vec![0; 16];
                oracle_decode(&dense, &r, &zeros, 16).0 != r_i.bits()
            })
            .count();
        assert_eq!(est.failures, failures, "weight {w}");
    }
}

#[test]
fn syndrome_sketch_agrees_with_direct_decoding() {
    let h = build_eg(2, 4).unwrap().incidence_matrix();
    let dec = BitflipDecoder::new(h.clone());
    let r_i = Response::random(16, &mut ChaCha8Rng::seed_from_u64(12));
    let helper = syndrome_enroll(&r_i, &h, "eg24").unwrap();
    for e in patterns(16, 3) {
        let noisy = Response::new(r_i.bits().iter().zip(&e).map(|(a, b)| a ^ b).collect()).unwrap();
        let direct_ok = dec.decode(&e, None).unwrap().word.iter().all(|&b| b == 0);
        let sketch_ok = syndrome_reproduce(&noisy, &helper, &dec).is_ok_and(|r| r == r_i);
        assert_eq!(direct_ok, sketch_ok, "pattern {e:?}");
    }
}
