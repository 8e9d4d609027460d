//! Integer circuits over bitslice fields.
//!
//! A [`BitField`] holds one unsigned `n`-bit integer per vector element: lane
//! `i` carries bit `i` (lane 0 is the least significant). Every circuit below
//! is a fixed sequence of lane operations, so its cost depends only on the
//! field widths, never on the data.

use std::ops::Range;

use crate::lane::{mux, Lane};
use crate::transpose;

/// `n` lanes forming one unsigned integer field across `W` elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitField<L> {
    lanes: Vec<L>,
}

impl<L: Lane> BitField<L> {
    pub fn from_lanes(lanes: Vec<L>) -> Self {
        BitField { lanes }
    }

    pub fn zeros(n: usize) -> Self {
        BitField {
            lanes: vec![L::zeros(); n],
        }
    }

    /// Every element holds `value` (truncated to `n` bits; bits past 63 are
    /// the sign extension of `value` read as `i64`).
    pub fn splat(n: usize, value: u64) -> Self {
        let lanes = (0..n)
            .map(|i| {
                let bit = if i < 64 {
                    (value >> i) & 1 == 1
                } else {
                    (value as i64) < 0
                };
                L::splat(bit)
            })
            .collect();
        BitField { lanes }
    }

    /// Transposes per-element values (`n <= 64`) into a field.
    pub fn from_elements(n: usize, values: &[u64]) -> Self {
        BitField {
            lanes: transpose::to_lanes(values, n),
        }
    }

    /// Values of the first `count` elements (`n <= 64`).
    pub fn to_elements(&self, count: usize) -> Vec<u64> {
        transpose::from_lanes(&self.lanes, count)
    }

    /// Value of element `k` (`n <= 64`).
    pub fn element(&self, k: usize) -> u64 {
        self.lanes
            .iter()
            .enumerate()
            .fold(0, |acc, (i, l)| acc | (u64::from(l.bit(k)) << i))
    }

    pub fn len(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    pub fn lanes(&self) -> &[L] {
        &self.lanes
    }

    pub fn lane(&self, i: usize) -> L {
        self.lanes[i]
    }

    pub fn into_lanes(self) -> Vec<L> {
        self.lanes
    }

    /// Zero-extends or truncates to `n` lanes.
    pub fn resized(&self, n: usize) -> Self {
        let mut lanes = Vec::with_capacity(n);
        lanes.extend_from_slice(&self.lanes[..n.min(self.len())]);
        lanes.resize(n, L::zeros());
        BitField { lanes }
    }

    /// `resized(n)` with every lane inverted, including the added ones.
    pub fn not_resized(&self, n: usize) -> Self {
        let mut lanes = Vec::with_capacity(n);
        lanes.extend(self.lanes.iter().take(n).map(|l| l.not()));
        lanes.resize(n, L::ones());
        BitField { lanes }
    }

    pub fn slice(&self, range: Range<usize>) -> Self {
        BitField {
            lanes: self.lanes[range].to_vec(),
        }
    }

    /// `low` in the least significant lanes, `high` above it.
    pub fn concat(low: &Self, high: &Self) -> Self {
        let mut lanes = Vec::with_capacity(low.len() + high.len());
        lanes.extend_from_slice(&low.lanes);
        lanes.extend_from_slice(&high.lanes);
        BitField { lanes }
    }

    pub fn not(&self) -> Self {
        self.map(|l| l.not())
    }

    pub fn map(&self, f: impl FnMut(L) -> L) -> Self {
        BitField {
            lanes: self.lanes.iter().copied().map(f).collect(),
        }
    }

    /// Per element: is any bit set.
    pub fn any(&self) -> L {
        or_reduce(&self.lanes)
    }
}

/// OR of all lanes; all-zeros for an empty slice.
pub fn or_reduce<L: Lane>(lanes: &[L]) -> L {
    match lanes.split_first() {
        Some((&first, rest)) => rest.iter().fold(first, |acc, &l| acc.or(l)),
        None => L::zeros(),
    }
}

/// AND of all lanes; all-ones for an empty slice.
pub fn and_reduce<L: Lane>(lanes: &[L]) -> L {
    match lanes.split_first() {
        Some((&first, rest)) => rest.iter().fold(first, |acc, &l| acc.and(l)),
        None => L::ones(),
    }
}

/// Number of log-shifter stages for an `n`-lane field: stages `k` with `2^k < n`.
pub(crate) fn shift_stages(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Adds `addend` into `acc` lane by lane, returning the carry out.
#[inline]
fn add_in_place<L: Lane>(acc: &mut [L], addend: impl Iterator<Item = L>, carry_in: L) -> L {
    let mut carry = carry_in;
    for (t1, t2) in acc.iter_mut().zip(addend) {
        let xxor = t1.xor(t2);
        let aand = t1.and(t2);
        *t1 = xxor.xor(carry);
        carry = carry.and(xxor).or(aand);
    }
    carry
}

/// Ripple-carry adder: per element `(a + b + carry_in) mod 2^n` and the carry out.
pub fn ripple_add<L: Lane>(a: &BitField<L>, b: &BitField<L>, carry_in: L) -> (BitField<L>, L) {
    assert_eq!(a.len(), b.len(), "ripple_add width mismatch");
    let mut sum = a.lanes.clone();
    let carry = add_in_place(&mut sum, b.lanes.iter().copied(), carry_in);
    (BitField { lanes: sum }, carry)
}

/// Two's-complement subtractor: per element `(a - b) mod 2^n` and the borrow
/// (set iff `a < b`).
pub fn ripple_sub<L: Lane>(a: &BitField<L>, b: &BitField<L>) -> (BitField<L>, L) {
    assert_eq!(a.len(), b.len(), "ripple_sub width mismatch");
    let mut diff = a.lanes.clone();
    let carry = add_in_place(&mut diff, b.lanes.iter().map(|l| l.not()), L::ones());
    (BitField { lanes: diff }, carry.not())
}

/// Per element: `a < b` as unsigned integers.
pub fn less_than<L: Lane>(a: &BitField<L>, b: &BitField<L>) -> L {
    assert_eq!(a.len(), b.len(), "less_than width mismatch");
    let mut carry = L::ones();
    for (&t1, &t2) in a.lanes.iter().zip(&b.lanes) {
        let nb = t2.not();
        let xxor = t1.xor(nb);
        let aand = t1.and(nb);
        carry = carry.and(xxor).or(aand);
    }
    carry.not()
}

/// Per element: `field + cond`, with the carry out.
pub fn increment<L: Lane>(field: &BitField<L>, cond: L) -> (BitField<L>, L) {
    let mut carry = cond;
    let lanes = field
        .lanes
        .iter()
        .map(|&l| {
            let s = l.xor(carry);
            carry = l.and(carry);
            s
        })
        .collect();
    (BitField { lanes }, carry)
}

/// Per element: `(a + carry_in + offset) mod 2^n` where `offset` is a
/// compile-time constant (two's complement for negative values).
///
/// Constant bits specialize each stage to a half adder.
pub fn add_offset<L: Lane>(a: &BitField<L>, carry_in: L, offset: i64) -> BitField<L> {
    let mut carry = carry_in;
    let lanes = a
        .lanes
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let k = (offset >> i.min(63)) & 1 == 1;
            let (s, c) = const_half_add(l, carry, k);
            carry = c;
            s
        })
        .collect();
    BitField { lanes }
}

/// Per element: `(a + b + carry_in + offset) mod 2^n` in a single ripple pass
/// with two carry chains: a full adder for `a + b` feeding a constant half
/// adder for `offset`. Used to fold a bias correction into an exponent sum.
pub fn ripple_add_offset<L: Lane>(
    a: &BitField<L>,
    b: &BitField<L>,
    carry_in: L,
    offset: i64,
) -> BitField<L> {
    assert_eq!(a.len(), b.len(), "ripple_add_offset width mismatch");
    let mut carry = carry_in;
    let mut carry_k = L::zeros();
    let lanes = a
        .lanes
        .iter()
        .zip(&b.lanes)
        .enumerate()
        .map(|(i, (&t1, &t2))| {
            let xxor = t1.xor(t2);
            let aand = t1.and(t2);
            let s = xxor.xor(carry);
            carry = carry.and(xxor).or(aand);
            let k = (offset >> i.min(63)) & 1 == 1;
            let (s, c) = const_half_add(s, carry_k, k);
            carry_k = c;
            s
        })
        .collect();
    BitField { lanes }
}

#[inline(always)]
fn const_half_add<L: Lane>(x: L, carry: L, k: bool) -> (L, L) {
    if k {
        (x.xor(carry).not(), x.or(carry))
    } else {
        (x.xor(carry), x.and(carry))
    }
}

/// Per-element logical right shift by `amount` (saturating at `n`), built as a
/// log shifter: stage `k` selects between the current value and the value
/// shifted by `2^k` using amount bit `k`.
///
/// With `collect_sticky`, the returned lane is the OR of every bit shifted
/// out; otherwise it is all-zeros.
pub fn var_shift_right<L: Lane>(
    field: &BitField<L>,
    amount: &BitField<L>,
    collect_sticky: bool,
) -> (BitField<L>, L) {
    let n = field.len();
    let mut lanes = field.lanes.clone();
    let mut sticky = L::zeros();
    let stages = shift_stages(n);
    for k in 0..amount.len().min(stages) {
        let sel = amount.lanes[k];
        let keep = sel.not();
        let d = 1usize << k;
        if collect_sticky {
            sticky = sticky.or(or_reduce(&lanes[..d]).and(sel));
        }
        for i in 0..n {
            lanes[i] = if i + d < n {
                mux(sel, lanes[i + d], lanes[i])
            } else {
                lanes[i].and(keep)
            };
        }
    }
    if amount.len() > stages {
        let over = or_reduce(&amount.lanes[stages..]);
        if collect_sticky {
            sticky = sticky.or(or_reduce(&lanes).and(over));
        }
        let keep = over.not();
        for l in lanes.iter_mut() {
            *l = l.and(keep);
        }
    }
    (BitField { lanes }, sticky)
}

/// Per-element left shift by `amount`, truncated to `n` bits (saturating at `n`).
pub fn var_shift_left<L: Lane>(field: &BitField<L>, amount: &BitField<L>) -> BitField<L> {
    let n = field.len();
    let mut lanes = field.lanes.clone();
    let stages = shift_stages(n);
    for k in 0..amount.len().min(stages) {
        let sel = amount.lanes[k];
        let keep = sel.not();
        let d = 1usize << k;
        for i in (0..n).rev() {
            lanes[i] = if i >= d {
                mux(sel, lanes[i - d], lanes[i])
            } else {
                lanes[i].and(keep)
            };
        }
    }
    if amount.len() > stages {
        let keep = or_reduce(&amount.lanes[stages..]).not();
        for l in lanes.iter_mut() {
            *l = l.and(keep);
        }
    }
    BitField { lanes }
}

/// Leading-one normalizer.
///
/// Per element, shifts left until the most significant set bit reaches lane
/// `n - 1`. Returns the shifted field, the shift count (`ceil(log2 n) + 1`
/// lanes) and a lane flagging zero elements, whose count reads `n`.
pub fn normalize_left<L: Lane>(field: &BitField<L>) -> (BitField<L>, BitField<L>, L) {
    let n = field.len();
    assert!(n >= 1, "normalize_left on empty field");
    let stages = shift_stages(n);
    let mut lanes = field.lanes.clone();
    let mut count = vec![L::zeros(); stages + 1];
    for k in (0..stages).rev() {
        let d = 1usize << k;
        let top_zero = or_reduce(&lanes[n - d..]).not();
        let keep = top_zero.not();
        count[k] = top_zero;
        for i in (0..n).rev() {
            lanes[i] = if i >= d {
                mux(top_zero, lanes[i - d], lanes[i])
            } else {
                lanes[i].and(keep)
            };
        }
    }
    let is_zero = lanes[n - 1].not();
    let nonzero = lanes[n - 1];
    for (k, c) in count.iter_mut().enumerate() {
        *c = if (n >> k) & 1 == 1 {
            c.or(is_zero)
        } else {
            c.and(nonzero)
        };
    }
    (BitField { lanes }, BitField { lanes: count }, is_zero)
}

/// Shift-and-add multiplier: per element the exact `2n`-bit product.
///
/// Partial product `i` is `a` masked by lane `i` of `b`, accumulated at
/// offset `i` with the ripple adder.
pub fn mul_shift_add<L: Lane>(a: &BitField<L>, b: &BitField<L>) -> BitField<L> {
    assert_eq!(a.len(), b.len(), "mul_shift_add width mismatch");
    let n = a.len();
    let mut acc = vec![L::zeros(); 2 * n];
    if n == 0 {
        return BitField { lanes: acc };
    }
    let b0 = b.lanes[0];
    for (dst, &ai) in acc.iter_mut().zip(&a.lanes) {
        *dst = ai.and(b0);
    }
    for i in 1..n {
        let bi = b.lanes[i];
        let carry = add_in_place(
            &mut acc[i..i + n],
            a.lanes.iter().map(|&aj| aj.and(bi)),
            L::zeros(),
        );
        acc[i + n] = carry;
    }
    BitField { lanes: acc }
}

/// Restoring divider.
///
/// Per element computes `floor(num * 2^(q_bits - 1) / den)` MSB first: each
/// step trial-subtracts `den` from the partial remainder, takes the quotient
/// bit as the inverted borrow, and keeps the trial difference only where the
/// bit is set. The returned lane flags a nonzero final remainder.
///
/// Requires `num.len() <= den.len() + 1` and, per element, `num < 2 * den`.
/// Elements with `den == 0` produce unspecified quotient bits.
pub fn restoring_div<L: Lane>(
    num: &BitField<L>,
    den: &BitField<L>,
    q_bits: usize,
) -> (BitField<L>, L) {
    let w = den.len() + 1;
    assert!(num.len() <= w, "numerator wider than remainder register");
    let rem = num.resized(w);
    let mut rem = rem.lanes;
    let neg_den = den.not_resized(w).lanes;
    let mut trial = vec![L::zeros(); w];
    let mut quot = vec![L::zeros(); q_bits];
    for i in (0..q_bits).rev() {
        trial.copy_from_slice(&rem);
        let q = add_in_place(&mut trial, neg_den.iter().copied(), L::ones());
        quot[i] = q;
        for (r, &t) in rem.iter_mut().zip(&trial) {
            *r = mux(q, t, *r);
        }
        if i > 0 {
            rem.rotate_right(1);
            rem[0] = L::zeros();
        }
    }
    (BitField { lanes: quot }, or_reduce(&rem))
}
