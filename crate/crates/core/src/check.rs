//! Verification drivers comparing the bitslice pipelines with the oracle.
//!
//! Pairs are packed `W` at a time into [`Lane256`] vectors and the work is
//! sharded across threads with rayon. Reports are sorted so that their
//! contents do not depend on scheduling.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{bfp_op_with, round_stage, RoundFn};
use crate::format::{classify, BfpVector, Encoding, FormatSpec, FpClass, Rounding, Subnormals};
use crate::lane::{Lane, Lane256};
use crate::op::OpKind;
use crate::oracle::oracle_op;

/// Largest encoding width for which the exhaustive sweep is allowed.
pub const MAX_EXHAUSTIVE_BITS: u32 = 16;

pub const MISMATCH_CSV_HEADER: &str = "a_hex,b_hex,op,mode,got_hex,expected_hex";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("exhaustive check needs at most {MAX_EXHAUSTIVE_BITS}-bit encodings, format has {0}")]
    TooWide(u32),
    #[error("the binary32 cross-check needs format (1,8,23) with gradual underflow and RN, got {0}")]
    NotBinary32(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mismatch {
    pub a: Encoding,
    pub b: Encoding,
    pub op: OpKind,
    pub mode: Rounding,
    pub got: Encoding,
    pub expected: Encoding,
}

impl Mismatch {
    /// One CSV row, hex fields zero-padded to the encoding width.
    pub fn csv_row(&self, spec: &FormatSpec) -> String {
        let digits = spec.total_bits().div_ceil(4) as usize;
        format!(
            "{:0d$x},{:0d$x},{},{},{:0d$x},{:0d$x}",
            self.a,
            self.b,
            self.op,
            self.mode,
            self.got,
            self.expected,
            d = digits
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    /// Number of operand pairs evaluated.
    pub checked: u64,
    /// Sorted, deduplicated.
    pub mismatches: Vec<Mismatch>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn merge(&mut self, other: Report) {
        self.checked += other.checked;
        self.mismatches.extend(other.mismatches);
        self.mismatches.sort_unstable();
        self.mismatches.dedup();
    }
}

pub fn write_mismatch_csv<W: Write>(
    mut out: W,
    spec: &FormatSpec,
    mismatches: &[Mismatch],
) -> io::Result<()> {
    writeln!(out, "{MISMATCH_CSV_HEADER}")?;
    for m in mismatches {
        writeln!(out, "{}", m.csv_row(spec))?;
    }
    Ok(())
}

fn same_class_or_bits(a: Encoding, b: Encoding, spec: &FormatSpec) -> bool {
    a == b || (classify(a, spec) == FpClass::NaN && classify(b, spec) == FpClass::NaN)
}

/// Evaluates `pairs` with the bitslice pipeline, `L::WIDTH` at a time, and
/// returns the results in order.
pub fn eval_pairs<L: Lane>(
    spec: &FormatSpec,
    op: OpKind,
    pairs: &[(Encoding, Encoding)],
    round: RoundFn<L>,
) -> Vec<Encoding> {
    let mut out = Vec::with_capacity(pairs.len());
    let mut a = Vec::with_capacity(L::WIDTH);
    let mut b = Vec::with_capacity(L::WIDTH);
    for chunk in pairs.chunks(L::WIDTH) {
        a.clear();
        b.clear();
        a.extend(chunk.iter().map(|p| p.0));
        b.extend(chunk.iter().map(|p| p.1));
        let x = BfpVector::<L>::pack(&a, spec).expect("encoding in range");
        let y = BfpVector::<L>::pack(&b, spec).expect("encoding in range");
        let r = bfp_op_with(op, &x, &y, round).expect("same spec");
        out.extend(r.unpack(chunk.len()).expect("count within width"));
    }
    out
}

/// Compares pipeline and oracle on `pairs`; `mode` overrides the spec's.
pub fn check_pairs(
    spec: &FormatSpec,
    op: OpKind,
    mode: Rounding,
    pairs: &[(Encoding, Encoding)],
    round: RoundFn<Lane256>,
) -> Report {
    let spec = spec.with_rounding(mode);
    let block = Lane256::WIDTH * 16;
    let mut mismatches: Vec<Mismatch> = pairs
        .par_chunks(block)
        .flat_map_iter(|chunk| {
            let got = eval_pairs::<Lane256>(&spec, op, chunk, round);
            chunk
                .iter()
                .zip(got)
                .filter_map(|(&(a, b), got)| {
                    let expected = oracle_op(op, a, b, &spec, mode);
                    (got != expected).then_some(Mismatch {
                        a,
                        b,
                        op,
                        mode,
                        got,
                        expected,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    mismatches.sort_unstable();
    mismatches.dedup();
    Report {
        checked: pairs.len() as u64,
        mismatches,
    }
}

/// Every encoding pair of `spec` through `op` under `mode`.
pub fn exhaustive_check(spec: &FormatSpec, op: OpKind, mode: Rounding) -> Result<Report, CheckError> {
    exhaustive_check_with(spec, op, mode, round_stage::<Lane256>)
}

/// [`exhaustive_check`] with a replacement rounding stage.
pub fn exhaustive_check_with(
    spec: &FormatSpec,
    op: OpKind,
    mode: Rounding,
    round: RoundFn<Lane256>,
) -> Result<Report, CheckError> {
    let bits = spec.total_bits();
    if bits > MAX_EXHAUSTIVE_BITS {
        return Err(CheckError::TooWide(bits));
    }
    let count = 1u64 << bits;
    // one shard per range of `a` values keeps memory bounded for 16-bit formats
    let rows_per_shard = (4096 / count).max(1);
    let mut report = (0..count.div_ceil(rows_per_shard))
        .into_par_iter()
        .map(|shard| {
            let lo = shard * rows_per_shard;
            let hi = (lo + rows_per_shard).min(count);
            let pairs: Vec<(Encoding, Encoding)> = (lo..hi)
                .flat_map(|a| (0..count).map(move |b| (a, b)))
                .collect();
            let spec = spec.with_rounding(mode);
            let got = eval_pairs::<Lane256>(&spec, op, &pairs, round);
            let mismatches = pairs
                .iter()
                .zip(got)
                .filter_map(|(&(a, b), got)| {
                    let expected = oracle_op(op, a, b, &spec, mode);
                    (got != expected).then_some(Mismatch {
                        a,
                        b,
                        op,
                        mode,
                        got,
                        expected,
                    })
                })
                .collect();
            Report {
                checked: pairs.len() as u64,
                mismatches,
            }
        })
        .reduce(Report::default, |mut acc, r| {
            acc.checked += r.checked;
            acc.mismatches.extend(r.mismatches);
            acc
        });
    report.mismatches.sort_unstable();
    Ok(report)
}

/// Boundary encodings of `spec`: signed zeros, infinities, NaNs, the
/// smallest and largest subnormals and normals, and one.
pub fn directed_values(spec: &FormatSpec) -> Vec<Encoding> {
    let s = spec.sig_bits();
    let frac_mask = spec.fraction_mask();
    let one = (spec.bias() as u64) << s;
    let min_normal = 1u64 << s;
    let positive = [
        spec.zero(false),
        1,
        frac_mask,
        min_normal,
        min_normal | 1,
        one,
        one | 1,
        spec.max_finite(false),
        spec.max_finite(false) - 1,
        spec.infinity(false),
        spec.canonical_nan(),
        spec.infinity(false) | 1,
        spec.infinity(false) | frac_mask,
    ];
    let sign = spec.sign_bit();
    positive.iter().flat_map(|&v| [v, v | sign]).collect()
}

/// `n` operand pairs: mostly uniform encodings, with a share of directed
/// boundary values and of pairs with equal exponents (cancellation in add
/// and sub).
pub fn random_pairs(spec: &FormatSpec, n: usize, seed: u64) -> Vec<(Encoding, Encoding)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directed = directed_values(spec);
    let mask = spec.encoding_mask();
    let exp_and_sign = mask & !spec.fraction_mask();
    let pick = |rng: &mut ChaCha8Rng| -> Encoding {
        if rng.gen_ratio(1, 8) {
            directed[rng.gen_range(0..directed.len())]
        } else {
            rng.gen::<u64>() & mask
        }
    };
    (0..n)
        .map(|_| {
            let a = pick(&mut rng);
            let b = match rng.gen_range(0..4) {
                0 => (a & exp_and_sign) ^ (rng.gen::<u64>() & (spec.fraction_mask() | spec.sign_bit())),
                _ => pick(&mut rng),
            };
            (a, b)
        })
        .collect()
}

/// `n` random pairs (see [`random_pairs`]) through `op` under `mode`.
pub fn random_check(spec: &FormatSpec, op: OpKind, mode: Rounding, n: usize, seed: u64) -> Report {
    let pairs = random_pairs(spec, n, seed);
    check_pairs(spec, op, mode, &pairs, round_stage::<Lane256>)
}

/// Whether `spec` is binary32-shaped with gradual underflow and RN.
pub fn is_binary32(spec: &FormatSpec) -> bool {
    spec.exp_bits() == 8
        && spec.sig_bits() == 23
        && spec.subnormals() == Subnormals::Gradual
        && spec.rounding() == Rounding::NearestEven
}

/// Compares the (1,8,23) RN pipeline with the host's binary32 arithmetic on
/// `n` random pairs. NaNs are compared by class only.
pub fn ieee32_check(spec: &FormatSpec, op: OpKind, n: usize, seed: u64) -> Result<Report, CheckError> {
    if !is_binary32(spec) {
        return Err(CheckError::NotBinary32(spec.to_string()));
    }
    let pairs = random_pairs(spec, n, seed);
    let block = Lane256::WIDTH * 16;
    let mut mismatches: Vec<Mismatch> = pairs
        .par_chunks(block)
        .flat_map_iter(|chunk| {
            let got = eval_pairs::<Lane256>(spec, op, chunk, round_stage::<Lane256>);
            chunk
                .iter()
                .zip(got)
                .filter_map(|(&(a, b), got)| {
                    let native = op
                        .apply_f32(f32::from_bits(a as u32), f32::from_bits(b as u32))
                        .to_bits() as Encoding;
                    (!same_class_or_bits(got, native, spec)).then_some(Mismatch {
                        a,
                        b,
                        op,
                        mode: Rounding::NearestEven,
                        got,
                        expected: native,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    mismatches.sort_unstable();
    Ok(Report {
        checked: n as u64,
        mismatches,
    })
}
