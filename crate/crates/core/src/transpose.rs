//! Standard <-> bitslice transposition.
//!
//! Element `k` with value `v` contributes bit `j` of `v` to bit `k` of lane `j`.
//! Elements are handled in blocks of 64: each block is a 64x64 bit matrix
//! transposed with the recursive block-swap method, so a full 256-element
//! vector costs four 64x64 transposes instead of `256 * n` bit moves.

use crate::lane::Lane;

/// In-place transpose of a 64x64 bit matrix: afterwards bit `c` of row `r`
/// holds what was bit `r` of row `c`.
pub fn transpose64(m: &mut [u64; 64]) {
    let mut j = 32;
    let mut mask: u64 = 0x0000_0000_ffff_ffff;
    while j != 0 {
        let mut k = 0;
        while k < 64 {
            let t = ((m[k] >> j) ^ m[k + j]) & mask;
            m[k] ^= t << j;
            m[k + j] ^= t;
            k = (k + j + 1) & !j;
        }
        j >>= 1;
        mask ^= mask << j;
    }
}

/// Transposes `values` (one `n`-bit value per element, `n <= 64`) into `n`
/// lanes. Elements past `values.len()` are zero.
pub fn to_lanes<L: Lane>(values: &[u64], n: usize) -> Vec<L> {
    assert!(n <= 64, "field wider than 64 bits");
    assert!(values.len() <= L::WIDTH, "more values than lane width");
    let mut lanes = vec![L::zeros(); n];
    let mut block = [0u64; 64];
    for (chunk_idx, chunk) in values.chunks(64).enumerate() {
        block[..chunk.len()].copy_from_slice(chunk);
        block[chunk.len()..].fill(0);
        transpose64(&mut block);
        for (j, lane) in lanes.iter_mut().enumerate() {
            lane.set_word(chunk_idx, block[j]);
        }
    }
    lanes
}

/// Inverse of [`to_lanes`] for the first `count` elements.
pub fn from_lanes<L: Lane>(lanes: &[L], count: usize) -> Vec<u64> {
    assert!(lanes.len() <= 64, "field wider than 64 bits");
    assert!(count <= L::WIDTH, "count exceeds lane width");
    let mut out = Vec::with_capacity(count);
    let mut block = [0u64; 64];
    for chunk_idx in 0..count.div_ceil(64) {
        block.fill(0);
        for (j, lane) in lanes.iter().enumerate() {
            block[j] = lane.word(chunk_idx);
        }
        transpose64(&mut block);
        let take = (count - chunk_idx * 64).min(64);
        out.extend_from_slice(&block[..take]);
    }
    out
}

/// Bit-by-bit reference transposition.
pub fn to_lanes_naive<L: Lane>(values: &[u64], n: usize) -> Vec<L> {
    let mut lanes = vec![L::zeros(); n];
    for (k, &v) in values.iter().enumerate() {
        for (j, lane) in lanes.iter_mut().enumerate() {
            lane.set_bit(k, (v >> j) & 1 == 1);
        }
    }
    lanes
}

/// Bit-by-bit reference inverse.
pub fn from_lanes_naive<L: Lane>(lanes: &[L], count: usize) -> Vec<u64> {
    (0..count)
        .map(|k| {
            lanes
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, lane)| acc | (u64::from(lane.bit(k)) << j))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane::{Lane256, Lane512};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transpose64_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let orig: [u64; 64] = std::array::from_fn(|_| rng.gen());
        let mut m = orig;
        transpose64(&mut m);
        for (r, row) in m.iter().enumerate() {
            for (c, col) in orig.iter().enumerate() {
                assert_eq!((row >> c) & 1, (col >> r) & 1);
            }
        }
        transpose64(&mut m);
        assert_eq!(m, orig);
    }

    fn blocked_matches_naive<L: Lane>(rng: &mut ChaCha8Rng) {
        for n in [1usize, 6, 8, 16, 32, 64] {
            for len in [0, 1, L::WIDTH / 2 + 1, L::WIDTH] {
                let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                let values: Vec<u64> = (0..len).map(|_| rng.gen::<u64>() & mask).collect();
                let fast = to_lanes::<L>(&values, n);
                assert_eq!(fast, to_lanes_naive::<L>(&values, n));
                assert_eq!(from_lanes(&fast, len), values);
                assert_eq!(from_lanes_naive(&fast, len), values);
            }
        }
    }

    #[test]
    fn blocked_transpose_matches_naive_all_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        blocked_matches_naive::<u8>(&mut rng);
        blocked_matches_naive::<u16>(&mut rng);
        blocked_matches_naive::<u32>(&mut rng);
        blocked_matches_naive::<u64>(&mut rng);
        blocked_matches_naive::<u128>(&mut rng);
        blocked_matches_naive::<Lane256>(&mut rng);
        blocked_matches_naive::<Lane512>(&mut rng);
    }

    #[test]
    fn sixteen_bytes_become_eight_sixteen_bit_lanes() {
        let values: Vec<u64> = (0..16).map(|i| (i * 17) as u64 & 0xff).collect();
        let lanes = to_lanes::<u16>(&values, 8);
        assert_eq!(lanes.len(), 8);
        for (j, lane) in lanes.iter().enumerate() {
            for (k, v) in values.iter().enumerate() {
                assert_eq!(lane.bit(k), (v >> j) & 1 == 1);
            }
        }
    }
}
