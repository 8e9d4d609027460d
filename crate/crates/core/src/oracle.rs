//! Scalar reference arithmetic on exact integers.
//!
//! Each operation forms the exact result (or an exact prefix plus a sticky
//! flag) as a `u128` significand and a power-of-two exponent, then rounds it
//! once with [`round_extended`]. Nothing here touches lanes or circuits, so a
//! bug in the bitslice pipelines cannot be mirrored by the reference.

use crate::format::{Encoding, FormatSpec, Rounding, Subnormals};
use crate::op::OpKind;

/// `(-1)^negative * significand * 2^exponent`, plus a nonzero amount smaller
/// than `2^exponent` when `sticky` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtendedValue {
    pub negative: bool,
    pub exponent: i64,
    pub significand: u128,
    pub sticky: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Finite,
    Inf,
    NaN,
}

#[derive(Clone, Copy, Debug)]
struct Operand {
    negative: bool,
    kind: Kind,
    /// Integer significand, hidden bit included; 0 for zeros.
    sig: u64,
    /// Weight of the significand LSB.
    exp: i64,
}

fn unpack(enc: Encoding, spec: &FormatSpec) -> Operand {
    let s = spec.sig_bits();
    let e = spec.exp_bits();
    let frac = enc & ((1u64 << s) - 1);
    let field = (enc >> s) & ((1u64 << e) - 1);
    let negative = (enc >> (e + s)) & 1 == 1;
    let bias = i64::from(spec.bias());
    let all_ones = (1u64 << e) - 1;
    let (kind, sig, exp) = if field == all_ones {
        (if frac == 0 { Kind::Inf } else { Kind::NaN }, 0, 0)
    } else if field == 0 {
        (Kind::Finite, frac, 1 - bias - i64::from(s))
    } else {
        (
            Kind::Finite,
            frac | (1 << s),
            field as i64 - bias - i64::from(s),
        )
    };
    Operand {
        negative,
        kind,
        sig,
        exp,
    }
}

fn pack(spec: &FormatSpec, negative: bool, field: u64, frac: u64) -> Encoding {
    let s = spec.sig_bits();
    let e = spec.exp_bits();
    (u64::from(negative) << (e + s)) | (field << s) | frac
}

fn canonical_nan(spec: &FormatSpec) -> Encoding {
    pack(spec, false, (1 << spec.exp_bits()) - 1, 1 << (spec.sig_bits() - 1))
}

fn infinity(spec: &FormatSpec, negative: bool) -> Encoding {
    pack(spec, negative, (1 << spec.exp_bits()) - 1, 0)
}

fn zero(spec: &FormatSpec, negative: bool) -> Encoding {
    pack(spec, negative, 0, 0)
}

/// Rounds an exact value once to the format under `mode`, applying the
/// format's subnormal policy and the overflow rule (RN: infinity, RZ: the
/// largest finite value).
///
/// When `sticky` is set the significand must extend at least one bit below
/// the rounding position.
pub fn round_extended(v: &ExtendedValue, spec: &FormatSpec, mode: Rounding) -> Encoding {
    if v.significand == 0 {
        debug_assert!(!v.sticky, "sticky without significand");
        return zero(spec, v.negative);
    }
    let s = i64::from(spec.sig_bits());
    let bias = i64::from(spec.bias());
    let msb = 127 - i64::from(v.significand.leading_zeros());
    let lead = v.exponent + msb;
    let mut ulp = lead.max(1 - bias) - s;
    let drop = ulp - v.exponent;

    let mut mant: u128 = if drop <= 0 {
        debug_assert!(!v.sticky, "sticky bits above the rounding position");
        v.significand << -drop
    } else {
        let kept = if drop >= 128 { 0 } else { v.significand >> drop };
        let guard = drop <= 128 && (v.significand >> (drop - 1)) & 1 == 1;
        let below = if drop >= 129 {
            v.significand != 0
        } else {
            v.significand & ((1u128 << (drop - 1)) - 1) != 0
        };
        let up = match mode {
            Rounding::TowardZero => false,
            Rounding::NearestEven => guard && (below || v.sticky || kept & 1 == 1),
        };
        kept + u128::from(up)
    };
    if mant == 1 << (s + 1) {
        mant >>= 1;
        ulp += 1;
    }

    if mant >= 1 << s {
        let field = ulp + s + bias;
        let all_ones = (1i64 << spec.exp_bits()) - 1;
        if field >= all_ones {
            return match mode {
                Rounding::NearestEven => infinity(spec, v.negative),
                Rounding::TowardZero => pack(
                    spec,
                    v.negative,
                    (all_ones - 1) as u64,
                    (1 << spec.sig_bits()) - 1,
                ),
            };
        }
        pack(
            spec,
            v.negative,
            field as u64,
            (mant as u64) & ((1 << s) - 1),
        )
    } else if mant == 0 || spec.subnormals() == Subnormals::FlushToZero {
        zero(spec, v.negative)
    } else {
        pack(spec, v.negative, 0, mant as u64)
    }
}

fn finite(negative: bool, significand: u128, exponent: i64, sticky: bool) -> ExtendedValue {
    ExtendedValue {
        negative,
        exponent,
        significand,
        sticky,
    }
}

pub fn oracle_add(a: Encoding, b: Encoding, spec: &FormatSpec, mode: Rounding) -> Encoding {
    add_operands(unpack(a, spec), unpack(b, spec), spec, mode)
}

pub fn oracle_sub(a: Encoding, b: Encoding, spec: &FormatSpec, mode: Rounding) -> Encoding {
    let mut y = unpack(b, spec);
    y.negative = !y.negative;
    add_operands(unpack(a, spec), y, spec, mode)
}

fn add_operands(x: Operand, y: Operand, spec: &FormatSpec, mode: Rounding) -> Encoding {
    match (x.kind, y.kind) {
        (Kind::NaN, _) | (_, Kind::NaN) => return canonical_nan(spec),
        (Kind::Inf, Kind::Inf) if x.negative != y.negative => return canonical_nan(spec),
        (Kind::Inf, _) => return infinity(spec, x.negative),
        (_, Kind::Inf) => return infinity(spec, y.negative),
        _ => {}
    }
    if x.sig == 0 && y.sig == 0 {
        return zero(spec, x.negative && y.negative);
    }
    if x.sig == 0 {
        return round_extended(&finite(y.negative, y.sig.into(), y.exp, false), spec, mode);
    }
    if y.sig == 0 {
        return round_extended(&finite(x.negative, x.sig.into(), x.exp, false), spec, mode);
    }

    let (hi, lo) = if x.exp >= y.exp { (x, y) } else { (y, x) };
    let d = hi.exp - lo.exp;
    // Past this distance the smaller operand only matters through its sign
    // and the fact that it is nonzero.
    let cap = i64::from(spec.precision()) + 2;
    if d > cap {
        let m = u128::from(hi.sig) << cap;
        let m = if hi.negative == lo.negative { m } else { m - 1 };
        return round_extended(&finite(hi.negative, m, hi.exp - cap, true), spec, mode);
    }
    let signed = |op: &Operand, m: u128| -> i128 {
        if op.negative {
            -(m as i128)
        } else {
            m as i128
        }
    };
    let total = signed(&hi, u128::from(hi.sig) << d) + signed(&lo, u128::from(lo.sig));
    if total == 0 {
        return zero(spec, false);
    }
    round_extended(
        &finite(total < 0, total.unsigned_abs(), lo.exp, false),
        spec,
        mode,
    )
}

pub fn oracle_mul(a: Encoding, b: Encoding, spec: &FormatSpec, mode: Rounding) -> Encoding {
    let x = unpack(a, spec);
    let y = unpack(b, spec);
    let negative = x.negative != y.negative;
    match (x.kind, y.kind) {
        (Kind::NaN, _) | (_, Kind::NaN) => return canonical_nan(spec),
        (Kind::Inf, _) if y.sig == 0 && y.kind == Kind::Finite => return canonical_nan(spec),
        (_, Kind::Inf) if x.sig == 0 && x.kind == Kind::Finite => return canonical_nan(spec),
        (Kind::Inf, _) | (_, Kind::Inf) => return infinity(spec, negative),
        _ => {}
    }
    let product = u128::from(x.sig) * u128::from(y.sig);
    round_extended(&finite(negative, product, x.exp + y.exp, false), spec, mode)
}

pub fn oracle_div(a: Encoding, b: Encoding, spec: &FormatSpec, mode: Rounding) -> Encoding {
    let x = unpack(a, spec);
    let y = unpack(b, spec);
    let negative = x.negative != y.negative;
    match (x.kind, y.kind) {
        (Kind::NaN, _) | (_, Kind::NaN) | (Kind::Inf, Kind::Inf) => return canonical_nan(spec),
        (Kind::Inf, _) => return infinity(spec, negative),
        (_, Kind::Inf) => return zero(spec, negative),
        _ => {}
    }
    match (x.sig == 0, y.sig == 0) {
        (true, true) => return canonical_nan(spec),
        (false, true) => return infinity(spec, negative),
        (true, false) => return zero(spec, negative),
        _ => {}
    }
    let p = i64::from(spec.precision());
    let normalize = |op: &Operand| {
        let shift = i64::from(op.sig.leading_zeros()) - (64 - p);
        (u128::from(op.sig) << shift, op.exp - shift)
    };
    let (xs, xe) = normalize(&x);
    let (ys, ye) = normalize(&y);
    // quotient with at least p + 2 significant bits
    let extra = p + 2;
    let scaled = xs << extra;
    let q = scaled / ys;
    let r = scaled % ys;
    round_extended(&finite(negative, q, xe - ye - extra, r != 0), spec, mode)
}

/// Dispatches on `op`; `mode` overrides `spec.rounding()`.
pub fn oracle_op(
    op: OpKind,
    a: Encoding,
    b: Encoding,
    spec: &FormatSpec,
    mode: Rounding,
) -> Encoding {
    match op {
        OpKind::Add => oracle_add(a, b, spec, mode),
        OpKind::Sub => oracle_sub(a, b, spec, mode),
        OpKind::Mul => oracle_mul(a, b, spec, mode),
        OpKind::Div => oracle_div(a, b, spec, mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{classify, decode_scalar, FpClass};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const RN: Rounding = Rounding::NearestEven;
    const RZ: Rounding = Rounding::TowardZero;

    fn fp8() -> FormatSpec {
        FormatSpec::fp8(RN)
    }

    #[test]
    fn fp8_examples() {
        let s = fp8();
        assert_eq!(oracle_add(0x3c, 0x42, &s, RN), 0x48);
        assert_eq!(oracle_add(0x3c, 0x42, &s, RZ), 0x48);
        assert_eq!(oracle_mul(0x3c, 0x42, &s, RN), 0x47);
        assert_eq!(oracle_mul(0x3d, 0x3b, &s, RZ), 0x40);
        assert_eq!(oracle_mul(0x3d, 0x3b, &s, RN), 0x41);
        assert_eq!(oracle_div(0x38, 0x40, &s, RN), 0x30);
    }

    #[test]
    fn one_third() {
        let s = fp8();
        // 3.0 = 1.100b * 2^1 -> 0x44
        let three = 0x44;
        assert_eq!(decode_scalar(three, &s), 3.0);
        // 1/3 = 1.010|101..b * 2^-2: truncation gives 0 0101 010, the
        // dropped tail is above half so RN rounds up
        assert_eq!(oracle_div(0x38, three, &s, RZ), 0x2a);
        assert_eq!(oracle_div(0x38, three, &s, RN), 0x2b);
        assert_eq!(oracle_div(0x40, three, &s, RZ), 0x32);
        assert_eq!(oracle_div(0x40, three, &s, RN), 0x33);
    }

    #[test]
    fn specials() {
        let s = fp8();
        let nan = s.canonical_nan();
        let inf = s.infinity(false);
        let ninf = s.infinity(true);
        for mode in [RZ, RN] {
            assert_eq!(oracle_add(inf, ninf, &s, mode), nan);
            assert_eq!(oracle_add(inf, inf, &s, mode), inf);
            assert_eq!(oracle_sub(inf, inf, &s, mode), nan);
            assert_eq!(oracle_add(0x79, 0x38, &s, mode), nan);
            assert_eq!(oracle_mul(0x00, inf, &s, mode), nan);
            assert_eq!(oracle_mul(0x80, 0x38, &s, mode), 0x80);
            assert_eq!(oracle_div(0x00, 0x00, &s, mode), nan);
            assert_eq!(oracle_div(inf, ninf, &s, mode), nan);
            assert_eq!(oracle_div(0xb8, 0x00, &s, mode), ninf);
            assert_eq!(oracle_div(0x38, ninf, &s, mode), 0x80);
            // x - x = +0, (-0) + (-0) = -0
            assert_eq!(oracle_sub(0x3c, 0x3c, &s, mode), 0x00);
            assert_eq!(oracle_add(0x80, 0x80, &s, mode), 0x80);
            assert_eq!(oracle_add(0x80, 0x00, &s, mode), 0x00);
        }
        // overflow
        assert_eq!(oracle_mul(0x77, 0x77, &s, RN), inf);
        assert_eq!(oracle_mul(0x77, 0x77, &s, RZ), 0x77);
        assert_eq!(oracle_add(0xf7, 0xf7, &s, RZ), 0xf7);
    }

    #[test]
    fn identities_hold_for_all_finite_fp8() {
        let s = fp8();
        for x in 0..=0xffu64 {
            let c = classify(x, &s);
            if matches!(c, FpClass::NaN | FpClass::Inf) {
                continue;
            }
            for mode in [RZ, RN] {
                let expected_add = if x == 0x80 { 0x00 } else { x };
                assert_eq!(oracle_add(x, 0x00, &s, mode), expected_add);
                assert_eq!(oracle_mul(x, 0x38, &s, mode), x);
                assert_eq!(oracle_div(x, 0x38, &s, mode), x);
            }
        }
    }

    #[test]
    fn round_extended_ties_to_even() {
        let s = fp8();
        // significand 1.xyz with a trailing half ulp: m = (8 + k) * 2 + 1, exp chosen so
        // the value sits in binade 2^0
        for k in 0..8u128 {
            let v = ExtendedValue {
                negative: false,
                exponent: -4,
                significand: (8 + k) * 2 + 1,
                sticky: false,
            };
            let rn = round_extended(&v, &s, RN);
            let rz = round_extended(&v, &s, RZ);
            assert_eq!(rz, 0x38 + k as u64);
            let expected = if k % 2 == 0 { 0x38 + k } else { 0x38 + k + 1 };
            assert_eq!(rn, expected as u64);
            let above = round_extended(&ExtendedValue { sticky: true, ..v }, &s, RN);
            assert_eq!(above, 0x38 + k as u64 + 1);
        }
    }

    #[test]
    fn round_extended_threshold_and_monotone() {
        let s = fp8();
        // 240 exact, 248 halfway to the overflow boundary
        let at = |m: u128, mode| {
            round_extended(
                &ExtendedValue {
                    negative: false,
                    exponent: 0,
                    significand: m,
                    sticky: false,
                },
                &s,
                mode,
            )
        };
        assert_eq!(at(240, RN), 0x77);
        assert_eq!(at(247, RN), 0x77);
        assert_eq!(at(248, RN), 0x78);
        assert_eq!(at(10_000, RZ), 0x77);
        for mode in [RZ, RN] {
            let mut prev = 0;
            for m in 0..2000u128 {
                let r = at(m, mode);
                assert!(r >= prev, "not monotone at {m}");
                prev = r;
            }
        }
        for m in 1..2000u128 {
            assert!(decode_scalar(at(m, RZ), &s) <= m as f64);
        }
    }

    fn random_operand(rng: &mut ChaCha8Rng, bits: u32) -> u64 {
        let r: u64 = rng.gen();
        match rng.gen_range(0..8) {
            // small exponent spread so additions actually interact
            0 => r & 0x8000_0000_ffff_ffff,
            _ => r,
        }
        .rotate_left(0)
            & if bits == 64 { u64::MAX } else { (1 << bits) - 1 }
    }

    fn same(a: u64, b: u64, spec: &FormatSpec) -> bool {
        a == b || (classify(a, spec) == FpClass::NaN && classify(b, spec) == FpClass::NaN)
    }

    #[test]
    fn matches_native_binary32() {
        let spec = FormatSpec::fp32(RN);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200_000 {
            let a = random_operand(&mut rng, 32);
            let b = if rng.gen_bool(0.5) {
                random_operand(&mut rng, 32)
            } else {
                // nearby exponent
                (a & 0xff80_0000) ^ (rng.gen::<u64>() & 0x81ff_ffff)
            };
            let (fa, fb) = (f32::from_bits(a as u32), f32::from_bits(b as u32));
            for op in OpKind::ALL {
                let native = op.apply_f32(fa, fb).to_bits() as u64;
                let got = oracle_op(op, a, b, &spec, RN);
                assert!(same(got, native, &spec), "{op} {a:#x} {b:#x}: {got:#x} vs {native:#x}");
            }
        }
    }

    #[test]
    fn matches_native_binary64() {
        let spec = FormatSpec::fp64(RN);
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..200_000 {
            let a: u64 = random_operand(&mut rng, 64);
            let b: u64 = if rng.gen_bool(0.5) {
                random_operand(&mut rng, 64)
            } else {
                (a & 0xfff0_0000_0000_0000) ^ (rng.gen::<u64>() & 0x803f_ffff_ffff_ffff)
            };
            let (fa, fb) = (f64::from_bits(a), f64::from_bits(b));
            for op in OpKind::ALL {
                let native = op.apply_f64(fa, fb).to_bits();
                let got = oracle_op(op, a, b, &spec, RN);
                assert!(same(got, native, &spec), "{op} {a:#x} {b:#x}: {got:#x} vs {native:#x}");
            }
        }
    }

    #[test]
    fn fp8_products_match_exact_rational_rounding() {
        // Independent check through binary64: every fp8 product is exact in
        // binary64, so encode_scalar(decode(a) * decode(b)) is the correctly
        // rounded result.
        use crate::format::encode_scalar;
        for mode in [RZ, RN] {
            let s = FormatSpec::fp8(mode);
            for a in 0..=0xffu64 {
                for b in 0..=0xffu64 {
                    let exact = decode_scalar(a, &s) * decode_scalar(b, &s);
                    let sum = decode_scalar(a, &s) + decode_scalar(b, &s);
                    assert!(same(oracle_mul(a, b, &s, mode), encode_scalar(exact, &s), &s));
                    assert!(same(oracle_add(a, b, &s, mode), encode_scalar(sum, &s), &s));
                }
            }
        }
    }
}
