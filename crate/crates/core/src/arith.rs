//! Floating-point pipelines over bitslice vectors.
//!
//! Every stage is an integer circuit from [`crate::bitslice`], evaluated once
//! per lane word, so one call processes all `W` elements. Per element:
//!
//! * add/sub: sign, exponent compare and swap, alignment shift with sticky,
//!   add or subtract, normalize, round.
//! * mul: sign, exponent add with fused bias correction, significand
//!   multiply, normalize, round.
//! * div: sign, operand normalize, exponent subtract with fused bias, restoring
//!   divide, round.
//!
//! All three end in a shared stage that handles gradual underflow, rounding,
//! overflow and flush-to-zero, followed by the special-value overlay.

use thiserror::Error;

use crate::bitslice::{
    add_offset, and_reduce, increment, less_than, mul_shift_add, normalize_left, or_reduce,
    restoring_div, ripple_add, ripple_add_offset, ripple_sub, shift_stages, var_shift_right,
    BitField,
};
use crate::format::{BfpVector, FormatSpec, Rounding, Subnormals};
use crate::lane::{mux, Lane};
use crate::op::OpKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("operand formats differ: {left} vs {right}")]
    SpecMismatch { left: String, right: String },
}

/// Information shifted out below the kept significand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuardState<L> {
    /// First bit below the kept significand.
    pub guard: L,
    /// OR of every bit below the guard bit.
    pub sticky: L,
}

/// Signature of the rounding stage. Swappable so tests can inject a faulty one.
pub type RoundFn<L> = fn(&BitField<L>, &GuardState<L>, Rounding) -> (BitField<L>, L);

/// Rounds a truncated significand.
///
/// RZ returns `sig` unchanged with a zero carry. RN adds one where
/// `guard & (sticky | lsb)`; the carry flags elements whose significand
/// wrapped to zero.
pub fn round_stage<L: Lane>(
    sig: &BitField<L>,
    gs: &GuardState<L>,
    mode: Rounding,
) -> (BitField<L>, L) {
    match mode {
        Rounding::TowardZero => (sig.clone(), L::zeros()),
        Rounding::NearestEven => {
            let lsb = if sig.is_empty() { L::zeros() } else { sig.lane(0) };
            let up = gs.guard.and(gs.sticky.or(lsb));
            increment(sig, up)
        }
    }
}

/// Per-lane view of one operand.
struct Operand<L> {
    sign: L,
    /// Exponent and fraction lanes, without the sign.
    mag: BitField<L>,
    exp_zero: L,
    nan: L,
    inf: L,
    zero: L,
}

impl<L: Lane> Operand<L> {
    fn new(field: &BitField<L>, spec: &FormatSpec, flip_sign: bool) -> Self {
        let s = spec.sig_bits() as usize;
        let e = spec.exp_bits() as usize;
        let lanes = field.lanes();
        let sign = lanes[e + s];
        let sign = if flip_sign { sign.not() } else { sign };
        let exp = &lanes[s..s + e];
        let exp_zero = or_reduce(exp).not();
        let exp_ones = and_reduce(exp);
        let frac_nz = or_reduce(&lanes[..s]);
        let frac_z = frac_nz.not();
        Operand {
            sign,
            mag: field.slice(0..e + s),
            exp_zero,
            nan: exp_ones.and(frac_nz),
            inf: exp_ones.and(frac_z),
            zero: exp_zero.and(frac_z),
        }
    }
}

/// Significand with hidden bit (`s + 1` lanes).
fn significand<L: Lane>(mag: &BitField<L>, exp_zero: L, s: usize) -> BitField<L> {
    let mut lanes = Vec::with_capacity(s + 1);
    lanes.extend_from_slice(&mag.lanes()[..s]);
    lanes.push(exp_zero.not());
    BitField::from_lanes(lanes)
}

/// Exponent field with subnormals read as 1, zero-extended to `width` lanes.
fn effective_exp<L: Lane>(mag: &BitField<L>, exp_zero: L, s: usize, width: usize) -> BitField<L> {
    let mut lanes = Vec::with_capacity(width);
    lanes.extend_from_slice(&mag.lanes()[s..]);
    lanes[0] = lanes[0].or(exp_zero);
    lanes.resize(width, L::zeros());
    BitField::from_lanes(lanes)
}

/// Width of the signed internal exponent.
///
/// `e + 2` lanes cover every standard format. Formats with a long
/// significand and a short exponent need more, since normalization shifts
/// can push the exponent further below zero than the bias range.
pub fn exp_width(spec: &FormatSpec, op: OpKind) -> usize {
    let e = spec.exp_bits() as i64;
    let p = spec.precision() as i64;
    let bias = spec.bias() as i64;
    let emax = (1i64 << e) - 2;
    let (lo, hi, lz_bits) = match op {
        OpKind::Add | OpKind::Sub => (-p - 2, emax + 1, shift_stages(p as usize + 4) + 1),
        OpKind::Mul => (4 - bias - 2 * p, 2 * emax - bias + 1, shift_stages(2 * p as usize) + 1),
        OpKind::Div => (
            (2 - p) - emax - 1 + bias,
            emax - (2 - p) + bias,
            shift_stages(p as usize) + 1,
        ),
    };
    let mut k = (e as usize + 2).max(lz_bits + 1);
    // room for the post-rounding increment and for 1 - lo
    while (hi + 1).max(1 - lo) > (1i64 << (k - 1)) - 1 {
        k += 1;
    }
    k
}

/// Output of an operation-specific front end, ready for the shared back end.
struct Unrounded<L> {
    sign: L,
    /// Elements whose exact result is zero.
    zero: L,
    zero_sign: L,
    /// Normalized: the leading one of nonzero elements sits in the top lane.
    sig: BitField<L>,
    /// Nonzero bits below `sig`.
    sticky: L,
    /// Signed biased exponent of the top lane of `sig`.
    exp: BitField<L>,
}

/// Shared back end: subnormal shift, rounding, overflow, flush-to-zero and
/// exact-zero masking. Returns the encoding lanes.
fn finish<L: Lane>(spec: &FormatSpec, u: Unrounded<L>, round: RoundFn<L>) -> Vec<L> {
    let s = spec.sig_bits() as usize;
    let e = spec.exp_bits() as usize;
    let p = s + 1;
    let w = u.sig.len();
    let width = u.exp.len();
    let mode = spec.rounding();

    // exp <= 0: shift right by 1 - exp into the subnormal range
    let uf = u.exp.lane(width - 1).or(u.exp.any().not());
    let keep = uf.not();
    let mut amount = add_offset(&u.exp.not(), L::zeros(), 2).into_lanes();
    amount.iter_mut().for_each(|l| *l = l.and(uf));
    let amount = BitField::from_lanes(amount);
    let mut exp_field = u.exp.into_lanes();
    exp_field.iter_mut().for_each(|l| *l = l.and(keep));
    let exp_field = BitField::from_lanes(exp_field);

    let (sig, exp_field) = match mode {
        Rounding::NearestEven => {
            let (shifted, out) = var_shift_right(&u.sig, &amount, true);
            let gs = GuardState {
                guard: shifted.lane(w - p - 1),
                sticky: or_reduce(&shifted.lanes()[..w - p - 1]).or(out).or(u.sticky),
            };
            let (sig, carry) = round(&shifted.slice(w - p..w), &gs, mode);
            // a rounded-up subnormal that reaches the hidden bit becomes normal
            let bump = carry.or(uf.and(sig.lane(p - 1)));
            (sig, increment(&exp_field, bump).0)
        }
        Rounding::TowardZero => {
            let (shifted, _) = var_shift_right(&u.sig.slice(w - p..w), &amount, false);
            let gs = GuardState {
                guard: L::zeros(),
                sticky: L::zeros(),
            };
            (round(&shifted, &gs, mode).0, exp_field)
        }
    };

    let ovf = or_reduce(&exp_field.lanes()[e..]).or(and_reduce(&exp_field.lanes()[..e]));
    let not_ovf = ovf.not();
    let mut frac: Vec<L> = Vec::with_capacity(s + e + 1);
    frac.extend_from_slice(&sig.lanes()[..s]);
    let mut exp: Vec<L> = exp_field.lanes()[..e].to_vec();
    match mode {
        Rounding::NearestEven => {
            frac.iter_mut().for_each(|l| *l = l.and(not_ovf));
            exp.iter_mut().for_each(|l| *l = l.or(ovf));
        }
        Rounding::TowardZero => {
            frac.iter_mut().for_each(|l| *l = l.or(ovf));
            exp[0] = exp[0].and(not_ovf);
            exp[1..].iter_mut().for_each(|l| *l = l.or(ovf));
        }
    }

    let mut clear = u.zero;
    if spec.subnormals() == Subnormals::FlushToZero {
        clear = clear.or(or_reduce(&exp).not());
    }
    let keep = clear.not();
    let keep_exp = u.zero.not();
    frac.iter_mut().for_each(|l| *l = l.and(keep));
    exp.iter_mut().for_each(|l| *l = l.and(keep_exp));
    let sign = mux(u.zero, u.zero_sign, u.sign);

    frac.extend(exp);
    frac.push(sign);
    frac
}

fn add_front<L: Lane>(spec: &FormatSpec, x: &Operand<L>, y: &Operand<L>) -> Unrounded<L> {
    let s = spec.sig_bits() as usize;
    let width = exp_width(spec, OpKind::Add);

    // order by magnitude so the subtraction below never goes negative
    let swap = less_than(&x.mag, &y.mag);
    let exchange = |a: L, b: L| {
        let d = a.xor(b).and(swap);
        (a.xor(d), b.xor(d))
    };
    let n = x.mag.len();
    let (mut big, mut small) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (&a, &b) in x.mag.lanes().iter().zip(y.mag.lanes()) {
        let (hi, lo) = exchange(a, b);
        big.push(hi);
        small.push(lo);
    }
    let (big, small) = (BitField::from_lanes(big), BitField::from_lanes(small));
    let (sign_big, sign_small) = exchange(x.sign, y.sign);
    let (ez_big, ez_small) = exchange(x.exp_zero, y.exp_zero);

    let eff_big = effective_exp(&big, ez_big, s, width);
    let e = spec.exp_bits() as usize;
    let dexp = ripple_sub(
        &effective_exp(&big, ez_big, s, e),
        &effective_exp(&small, ez_small, s, e),
    )
    .0;

    // three low lanes: guard, round and sticky positions
    let low = BitField::zeros(3);
    let big_sig = BitField::concat(&low, &significand(&big, ez_big, s));
    let small_sig = BitField::concat(&low, &significand(&small, ez_small, s));
    let (aligned, out) = var_shift_right(&small_sig, &dexp, true);
    let mut aligned = aligned.into_lanes();
    aligned[0] = aligned[0].or(out);

    let eff_sub = sign_big.xor(sign_small);
    aligned.iter_mut().for_each(|l| *l = l.xor(eff_sub));
    let addend = BitField::from_lanes(aligned);
    let (partial, carry) = ripple_add(&big_sig, &addend, eff_sub);
    let mut sum = Vec::with_capacity(partial.len() + 1);
    sum.extend_from_slice(partial.lanes());
    sum.push(carry.and(eff_sub.not()));

    let (norm, lz, is_zero) = normalize_left(&BitField::from_lanes(sum));
    // exponent of the top lane: big + 1 - lz
    let exp = ripple_add_offset(&eff_big, &lz.not_resized(width), L::ones(), 1);

    Unrounded {
        sign: sign_big,
        zero: is_zero,
        zero_sign: sign_big.and(sign_small),
        sig: norm,
        sticky: L::zeros(),
        exp,
    }
}

fn mul_front<L: Lane>(spec: &FormatSpec, x: &Operand<L>, y: &Operand<L>) -> Unrounded<L> {
    let s = spec.sig_bits() as usize;
    let width = exp_width(spec, OpKind::Mul);
    let sign = x.sign.xor(y.sign);
    let product = mul_shift_add(
        &significand(&x.mag, x.exp_zero, s),
        &significand(&y.mag, y.exp_zero, s),
    );
    let (norm, lz, is_zero) = normalize_left(&product);
    // ex + ey - bias + 1 - lz
    let sum = ripple_add_offset(
        &effective_exp(&x.mag, x.exp_zero, s, width),
        &effective_exp(&y.mag, y.exp_zero, s, width),
        L::zeros(),
        1 - i64::from(spec.bias()),
    );
    let exp = ripple_add(&sum, &lz.not_resized(width), L::ones()).0;
    Unrounded {
        sign,
        zero: is_zero,
        zero_sign: sign,
        sig: norm,
        sticky: L::zeros(),
        exp,
    }
}

fn div_front<L: Lane>(spec: &FormatSpec, x: &Operand<L>, y: &Operand<L>) -> Unrounded<L> {
    let s = spec.sig_bits() as usize;
    let p = s + 1;
    let width = exp_width(spec, OpKind::Div);
    let sign = x.sign.xor(y.sign);

    // subnormal operands are normalized before dividing
    let (na, lza, _) = normalize_left(&significand(&x.mag, x.exp_zero, s));
    let (nb, lzb, _) = normalize_left(&significand(&y.mag, y.exp_zero, s));
    let ea = ripple_sub(&effective_exp(&x.mag, x.exp_zero, s, width), &lza.resized(width)).0;
    let eb = ripple_sub(&effective_exp(&y.mag, y.exp_zero, s, width), &lzb.resized(width)).0;

    // Doubling the numerator when na < nb keeps the quotient in [1, 2), so
    // its leading one always lands in the top lane.
    let pre = less_than(&na, &nb);
    let mut num = Vec::with_capacity(p + 1);
    for i in 0..=p {
        let plain = if i < p { na.lane(i) } else { L::zeros() };
        let doubled = if i > 0 { na.lane(i - 1) } else { L::zeros() };
        num.push(mux(pre, doubled, plain));
    }
    let q_bits = match spec.rounding() {
        Rounding::NearestEven => p + 1,
        Rounding::TowardZero => p,
    };
    let (quot, rem_nz) = restoring_div(&BitField::from_lanes(num), &nb, q_bits);
    // ea - eb - pre + bias
    let exp = ripple_add_offset(&ea, &eb.not(), pre.not(), i64::from(spec.bias()));
    Unrounded {
        sign,
        zero: x.zero,
        zero_sign: sign,
        sig: quot,
        sticky: rem_nz,
        exp,
    }
}

/// Per-element special-value rules for one operation.
struct Specials<L> {
    nan: L,
    inf: L,
    zero: L,
    sign: L,
}

fn specials<L: Lane>(op: OpKind, x: &Operand<L>, y: &Operand<L>) -> Specials<L> {
    let any_nan = x.nan.or(y.nan);
    match op {
        OpKind::Add | OpKind::Sub => {
            let opposite = x.sign.xor(y.sign);
            let nan = any_nan.or(x.inf.and(y.inf).and(opposite));
            Specials {
                nan,
                inf: x.inf.or(y.inf).and(nan.not()),
                zero: L::zeros(),
                sign: mux(x.inf, x.sign, y.sign),
            }
        }
        OpKind::Mul => {
            let nan = any_nan
                .or(x.inf.and(y.zero))
                .or(x.zero.and(y.inf));
            let not_nan = nan.not();
            let inf = x.inf.or(y.inf).and(not_nan);
            Specials {
                nan,
                inf,
                zero: x.zero.or(y.zero).and(not_nan),
                sign: x.sign.xor(y.sign),
            }
        }
        OpKind::Div => {
            let nan = any_nan
                .or(x.inf.and(y.inf))
                .or(x.zero.and(y.zero));
            let not_nan = nan.not();
            let inf = x.inf.or(y.zero).and(not_nan);
            Specials {
                nan,
                inf,
                zero: x.zero.or(y.inf).and(not_nan).and(inf.not()),
                sign: x.sign.xor(y.sign),
            }
        }
    }
}

/// Muxes canonical NaN, signed infinity and signed zero over `lanes`.
fn overlay<L: Lane>(lanes: &mut [L], spec: &FormatSpec, sp: &Specials<L>) {
    let s = spec.sig_bits() as usize;
    let e = spec.exp_bits() as usize;
    let forced = sp.nan.or(sp.inf).or(sp.zero).not();
    for l in &mut lanes[..s] {
        *l = l.and(forced);
    }
    lanes[s - 1] = lanes[s - 1].or(sp.nan);
    let keep_exp = sp.zero.not();
    let set_exp = sp.nan.or(sp.inf);
    for l in &mut lanes[s..s + e] {
        *l = l.and(keep_exp).or(set_exp);
    }
    let sign = mux(sp.inf.or(sp.zero), sp.sign, lanes[s + e]);
    lanes[s + e] = sign.and(sp.nan.not());
}

/// Overlays the special-value results of `op` applied to `x` and `y` onto
/// `result`. Elements without a special rule are left as they are.
pub fn apply_special_masks<L: Lane>(
    result: &BfpVector<L>,
    x: &BfpVector<L>,
    y: &BfpVector<L>,
    op: OpKind,
) -> BfpVector<L> {
    let spec = result.spec();
    let xo = Operand::new(x.field(), spec, false);
    let yo = Operand::new(y.field(), spec, op == OpKind::Sub);
    let mut lanes = result.lanes().to_vec();
    overlay(&mut lanes, spec, &specials(op, &xo, &yo));
    BfpVector::from_field(spec, BitField::from_lanes(lanes)).expect("same format")
}

fn same_format(a: &FormatSpec, b: &FormatSpec) -> bool {
    a.exp_bits() == b.exp_bits()
        && a.sig_bits() == b.sig_bits()
        && a.rounding() == b.rounding()
        && a.subnormals() == b.subnormals()
}

/// Runs `op` with a caller-supplied rounding stage.
pub fn bfp_op_with<L: Lane>(
    op: OpKind,
    x: &BfpVector<L>,
    y: &BfpVector<L>,
    round: RoundFn<L>,
) -> Result<BfpVector<L>, ArithError> {
    let spec = x.spec();
    if !same_format(spec, y.spec()) {
        return Err(ArithError::SpecMismatch {
            left: spec.to_string(),
            right: y.spec().to_string(),
        });
    }
    let xo = Operand::new(x.field(), spec, false);
    let yo = Operand::new(y.field(), spec, op == OpKind::Sub);
    let unrounded = match op {
        OpKind::Add | OpKind::Sub => add_front(spec, &xo, &yo),
        OpKind::Mul => mul_front(spec, &xo, &yo),
        OpKind::Div => div_front(spec, &xo, &yo),
    };
    let mut lanes = finish(spec, unrounded, round);
    overlay(&mut lanes, spec, &specials(op, &xo, &yo));
    Ok(BfpVector::from_field(spec, BitField::from_lanes(lanes)).expect("pipeline width"))
}

/// Runs `op` element-wise under `x.spec()`'s rounding mode.
pub fn bfp_op<L: Lane>(
    op: OpKind,
    x: &BfpVector<L>,
    y: &BfpVector<L>,
) -> Result<BfpVector<L>, ArithError> {
    bfp_op_with(op, x, y, round_stage::<L>)
}

pub fn bfp_add<L: Lane>(x: &BfpVector<L>, y: &BfpVector<L>) -> Result<BfpVector<L>, ArithError> {
    bfp_op(OpKind::Add, x, y)
}

/// `x + (-y)`.
pub fn bfp_sub<L: Lane>(x: &BfpVector<L>, y: &BfpVector<L>) -> Result<BfpVector<L>, ArithError> {
    bfp_op(OpKind::Sub, x, y)
}

pub fn bfp_mul<L: Lane>(x: &BfpVector<L>, y: &BfpVector<L>) -> Result<BfpVector<L>, ArithError> {
    bfp_op(OpKind::Mul, x, y)
}

pub fn bfp_div<L: Lane>(x: &BfpVector<L>, y: &BfpVector<L>) -> Result<BfpVector<L>, ArithError> {
    bfp_op(OpKind::Div, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::{classify, Encoding, FpClass};
    use crate::lane::{count_ops, Counted, Lane256};

    const RN: Rounding = Rounding::NearestEven;
    const RZ: Rounding = Rounding::TowardZero;

    fn run<L: Lane>(op: OpKind, spec: &FormatSpec, a: &[Encoding], b: &[Encoding]) -> Vec<Encoding> {
        let x = BfpVector::<L>::pack(a, spec).unwrap();
        let y = BfpVector::<L>::pack(b, spec).unwrap();
        bfp_op(op, &x, &y).unwrap().unpack(a.len()).unwrap()
    }

    fn one(op: OpKind, spec: &FormatSpec, a: Encoding, b: Encoding) -> Encoding {
        run::<u8>(op, spec, &[a], &[b])[0]
    }

    #[test]
    fn fp8_examples() {
        for mode in Rounding::ALL {
            let s = FormatSpec::fp8(mode);
            assert_eq!(one(OpKind::Add, &s, 0x3c, 0x42), 0x48);
            assert_eq!(one(OpKind::Mul, &s, 0x3c, 0x42), 0x47);
            assert_eq!(one(OpKind::Div, &s, 0x38, 0x40), 0x30);
            assert_eq!(one(OpKind::Sub, &s, 0x42, 0x3c), 0x38);
        }
        assert_eq!(one(OpKind::Mul, &FormatSpec::fp8(RZ), 0x3d, 0x3b), 0x40);
        assert_eq!(one(OpKind::Mul, &FormatSpec::fp8(RN), 0x3d, 0x3b), 0x41);
        // 1/3: truncated 0x2a, the discarded tail is above half
        assert_eq!(one(OpKind::Div, &FormatSpec::fp8(RZ), 0x38, 0x44), 0x2a);
        assert_eq!(one(OpKind::Div, &FormatSpec::fp8(RN), 0x38, 0x44), 0x2b);
    }

    #[test]
    fn round_stage_examples() {
        let sig = BitField::<u8>::splat(4, 0b1001);
        let gs = |g: bool, st: bool| GuardState {
            guard: u8::splat(g),
            sticky: u8::splat(st),
        };
        // tie with odd lsb rounds up
        let (r, c) = round_stage(&sig, &gs(true, false), RN);
        assert_eq!((r.element(0), c), (0b1010, 0));
        // tie with even lsb stays
        let even = BitField::<u8>::splat(4, 0b1010);
        assert_eq!(round_stage(&even, &gs(true, false), RN).0.element(0), 0b1010);
        assert_eq!(round_stage(&even, &gs(true, true), RN).0.element(0), 0b1011);
        for st in [false, true] {
            assert_eq!(round_stage(&sig, &gs(false, st), RN).0, sig);
        }
        for (g, st) in [(false, false), (true, false), (true, true)] {
            assert_eq!(round_stage(&sig, &gs(g, st), RZ), (sig.clone(), 0));
        }
        let full = BitField::<u8>::splat(4, 0b1111);
        let (r, c) = round_stage(&full, &gs(true, true), RN);
        assert_eq!((r.element(0), c), (0, 0xff));
    }

    #[test]
    fn special_examples() {
        let s = FormatSpec::fp8(RN);
        let nan = s.canonical_nan();
        let inf = s.infinity(false);
        let ninf = s.infinity(true);
        for op in OpKind::ALL {
            assert_eq!(one(op, &s, 0x7c, 0x38), nan);
            assert_eq!(one(op, &s, 0x38, 0xff), nan);
        }
        assert_eq!(one(OpKind::Add, &s, inf, inf), inf);
        assert_eq!(one(OpKind::Add, &s, ninf, 0x38), ninf);
        assert_eq!(one(OpKind::Sub, &s, inf, inf), nan);
        assert_eq!(one(OpKind::Add, &s, inf, ninf), nan);
        assert_eq!(one(OpKind::Mul, &s, 0x80, inf), nan);
        assert_eq!(one(OpKind::Mul, &s, 0xb8, inf), ninf);
        assert_eq!(one(OpKind::Div, &s, 0x00, 0x00), nan);
        assert_eq!(one(OpKind::Div, &s, 0xb8, 0x00), ninf);
        assert_eq!(one(OpKind::Div, &s, 0xb8, inf), 0x80);
        assert_eq!(one(OpKind::Sub, &s, 0x3c, 0x3c), 0x00);
        assert_eq!(one(OpKind::Add, &s, 0x80, 0x80), 0x80);
    }

    #[test]
    fn apply_special_masks_leaves_ordinary_elements() {
        let s = FormatSpec::fp8(RN);
        let x = BfpVector::<u8>::pack(&[0x38, 0x78, 0x79], &s).unwrap();
        let y = BfpVector::<u8>::pack(&[0x40, 0x78, 0x38], &s).unwrap();
        let junk = BfpVector::<u8>::pack(&[0x11, 0x22, 0x33], &s).unwrap();
        let out = apply_special_masks(&junk, &x, &y, OpKind::Sub);
        assert_eq!(out.unpack(3).unwrap(), vec![0x11, s.canonical_nan(), s.canonical_nan()]);
        let out = apply_special_masks(&junk, &x, &y, OpKind::Add);
        assert_eq!(out.unpack(3).unwrap(), vec![0x11, 0x78, s.canonical_nan()]);
    }

    #[test]
    fn spec_mismatch_is_rejected() {
        let a = BfpVector::<u16>::pack(&[0x38], &FormatSpec::fp8(RN)).unwrap();
        let b = BfpVector::<u16>::pack(&[0x38], &FormatSpec::fp8(RZ)).unwrap();
        assert!(matches!(bfp_add(&a, &b), Err(ArithError::SpecMismatch { .. })));
    }

    #[test]
    fn identities_over_all_finite_fp8() {
        for mode in Rounding::ALL {
            let s = FormatSpec::fp8(mode);
            let xs: Vec<Encoding> = (0..=0xffu64)
                .filter(|&x| !matches!(classify(x, &s), FpClass::NaN | FpClass::Inf))
                .collect();
            let n = xs.len();
            let add = run::<Lane256>(OpKind::Add, &s, &xs, &vec![0x00; n]);
            let mul = run::<Lane256>(OpKind::Mul, &s, &xs, &vec![0x38; n]);
            let div = run::<Lane256>(OpKind::Div, &s, &xs, &vec![0x38; n]);
            for (i, &x) in xs.iter().enumerate() {
                assert_eq!(add[i], if x == 0x80 { 0x00 } else { x }, "{x:#x} + 0");
                assert_eq!(mul[i], x, "{x:#x} * 1");
                assert_eq!(div[i], x, "{x:#x} / 1");
            }
        }
    }

    #[test]
    fn exp_width_is_e_plus_two_for_standard_formats() {
        for spec in [
            FormatSpec::fp8(RN),
            FormatSpec::fp16(RN),
            FormatSpec::fp32(RN),
            FormatSpec::fp64(RN),
        ] {
            for op in OpKind::ALL {
                assert_eq!(exp_width(&spec, op), spec.exp_bits() as usize + 2);
            }
        }
        let lopsided = FormatSpec::new("x", 2, 52, RN).unwrap();
        assert!(exp_width(&lopsided, OpKind::Add) > 4);
    }

    fn gate_count(op: OpKind, spec: &FormatSpec) -> u64 {
        let x = BfpVector::<Counted<u64>>::pack(&[1, 2, 3], spec).unwrap();
        let y = BfpVector::<Counted<u64>>::pack(&[3, 2, 1], spec).unwrap();
        count_ops(|| bfp_op(op, &x, &y).unwrap()).1.total()
    }

    #[test]
    fn rz_uses_fewer_gates_than_rn() {
        for (e, s) in [(4, 3), (5, 10), (8, 23), (11, 52), (3, 2)] {
            for op in OpKind::ALL {
                let rz = gate_count(op, &FormatSpec::new("f", e, s, RZ).unwrap());
                let rn = gate_count(op, &FormatSpec::new("f", e, s, RN).unwrap());
                assert!(rz < rn, "({e},{s}) {op}: RZ {rz} vs RN {rn}");
            }
        }
    }

    #[test]
    fn gate_count_is_independent_of_width_and_data() {
        let spec = FormatSpec::fp16(RN);
        for op in OpKind::ALL {
            let narrow = {
                let x = BfpVector::<Counted<u8>>::pack(&[0x3c00, 0x7c00], &spec).unwrap();
                let y = BfpVector::<Counted<u8>>::pack(&[0x0001, 0x8000], &spec).unwrap();
                count_ops(|| bfp_op(op, &x, &y).unwrap()).1
            };
            let wide = {
                let x = BfpVector::<Counted<Lane256>>::pack(&[0x1234; 200], &spec).unwrap();
                let y = BfpVector::<Counted<Lane256>>::pack(&[0x4321; 200], &spec).unwrap();
                count_ops(|| bfp_op(op, &x, &y).unwrap()).1
            };
            assert_eq!(narrow, wide, "{op}");
        }
    }
}
