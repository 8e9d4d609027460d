//! Lanes: fixed-width machine words used as one bit-plane of a bitslice vector.
//!
//! Bit `k` of every lane in a vector belongs to element `k`, so a single
//! bitwise instruction on a lane evaluates one gate for `W` elements at once.
//! All circuits in this crate are generic over [`Lane`]; swapping in
//! [`Counted`] turns any circuit into a gate counter without touching the
//! uninstrumented code path.

use std::cell::Cell;
use std::fmt;

/// A `W`-bit word supporting the bitwise logic every circuit is built from.
pub trait Lane: Copy + PartialEq + Eq + fmt::Debug + Send + Sync + 'static {
    /// Number of vector elements carried by one lane.
    const WIDTH: usize;
    /// Number of 64-bit words backing the lane (1 for widths up to 64).
    const WORDS: usize = Self::WIDTH.div_ceil(64);

    fn zeros() -> Self;
    fn ones() -> Self;
    fn and(self, rhs: Self) -> Self;
    fn or(self, rhs: Self) -> Self;
    fn xor(self, rhs: Self) -> Self;
    fn not(self) -> Self;

    /// 64-bit word `i`; element `64 * i + j` is bit `j`.
    fn word(&self, i: usize) -> u64;
    /// Overwrites word `i`. Lanes narrower than 64 bits keep the low bits.
    fn set_word(&mut self, i: usize, w: u64);

    fn bit(&self, k: usize) -> bool {
        (self.word(k / 64) >> (k % 64)) & 1 == 1
    }

    fn set_bit(&mut self, k: usize, v: bool) {
        let i = k / 64;
        let mask = 1u64 << (k % 64);
        let w = self.word(i);
        self.set_word(i, if v { w | mask } else { w & !mask });
    }

    /// Lane whose low 64 element bits are `bits` (truncated to `WIDTH`).
    fn from_low_bits(bits: u64) -> Self {
        let mut lane = Self::zeros();
        lane.set_word(0, bits);
        lane
    }

    /// All-ones when `v`, else all-zeros.
    fn splat(v: bool) -> Self {
        if v {
            Self::ones()
        } else {
            Self::zeros()
        }
    }
}

macro_rules! impl_native_lane {
    ($($t:ty),*) => {$(
        impl Lane for $t {
            const WIDTH: usize = <$t>::BITS as usize;

            #[inline(always)]
            fn zeros() -> Self { 0 }
            #[inline(always)]
            fn ones() -> Self { <$t>::MAX }
            #[inline(always)]
            fn and(self, rhs: Self) -> Self { self & rhs }
            #[inline(always)]
            fn or(self, rhs: Self) -> Self { self | rhs }
            #[inline(always)]
            fn xor(self, rhs: Self) -> Self { self ^ rhs }
            #[inline(always)]
            fn not(self) -> Self { !self }

            #[inline]
            fn word(&self, i: usize) -> u64 {
                debug_assert_eq!(i, 0);
                *self as u64
            }

            #[inline]
            fn set_word(&mut self, i: usize, w: u64) {
                debug_assert_eq!(i, 0);
                *self = w as $t;
            }
        }
    )*};
}

impl_native_lane!(u8, u16, u32, u64);

impl Lane for u128 {
    const WIDTH: usize = 128;

    #[inline(always)]
    fn zeros() -> Self {
        0
    }
    #[inline(always)]
    fn ones() -> Self {
        u128::MAX
    }
    #[inline(always)]
    fn and(self, rhs: Self) -> Self {
        self & rhs
    }
    #[inline(always)]
    fn or(self, rhs: Self) -> Self {
        self | rhs
    }
    #[inline(always)]
    fn xor(self, rhs: Self) -> Self {
        self ^ rhs
    }
    #[inline(always)]
    fn not(self) -> Self {
        !self
    }

    #[inline]
    fn word(&self, i: usize) -> u64 {
        (*self >> (64 * i)) as u64
    }

    #[inline]
    fn set_word(&mut self, i: usize, w: u64) {
        let shift = 64 * i;
        *self = (*self & !((u64::MAX as u128) << shift)) | ((w as u128) << shift);
    }
}

/// A lane wider than the host word, stored as `N` 64-bit words and operated
/// on word by word.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
#[repr(transparent)]
pub struct Wide<const N: usize>(pub [u64; N]);

impl<const N: usize> fmt::Debug for Wide<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Wide(")?;
        for w in self.0.iter().rev() {
            write!(f, "{w:016x}")?;
        }
        write!(f, ")")
    }
}

impl<const N: usize> Lane for Wide<N> {
    const WIDTH: usize = 64 * N;

    #[inline(always)]
    fn zeros() -> Self {
        Wide([0; N])
    }
    #[inline(always)]
    fn ones() -> Self {
        Wide([u64::MAX; N])
    }
    #[inline(always)]
    fn and(self, rhs: Self) -> Self {
        Wide(std::array::from_fn(|i| self.0[i] & rhs.0[i]))
    }
    #[inline(always)]
    fn or(self, rhs: Self) -> Self {
        Wide(std::array::from_fn(|i| self.0[i] | rhs.0[i]))
    }
    #[inline(always)]
    fn xor(self, rhs: Self) -> Self {
        Wide(std::array::from_fn(|i| self.0[i] ^ rhs.0[i]))
    }
    #[inline(always)]
    fn not(self) -> Self {
        Wide(std::array::from_fn(|i| !self.0[i]))
    }

    #[inline]
    fn word(&self, i: usize) -> u64 {
        self.0[i]
    }

    #[inline]
    fn set_word(&mut self, i: usize, w: u64) {
        self.0[i] = w;
    }
}

pub type Lane256 = Wide<4>;
pub type Lane512 = Wide<8>;
pub type Lane1024 = Wide<16>;

/// Lane widths with a concrete [`Lane`] implementation.
pub const SUPPORTED_WIDTHS: [usize; 8] = [8, 16, 32, 64, 128, 256, 512, 1024];

/// Runs `$body` with the type alias `$L` bound to the lane type of width `$w`.
///
/// Panics on an unsupported width; validate with [`SUPPORTED_WIDTHS`] first.
#[macro_export]
macro_rules! with_lane_width {
    ($w:expr, $L:ident => $body:expr) => {
        match $w {
            8 => {
                type $L = u8;
                $body
            }
            16 => {
                type $L = u16;
                $body
            }
            32 => {
                type $L = u32;
                $body
            }
            64 => {
                type $L = u64;
                $body
            }
            128 => {
                type $L = u128;
                $body
            }
            256 => {
                type $L = $crate::lane::Lane256;
                $body
            }
            512 => {
                type $L = $crate::lane::Lane512;
                $body
            }
            1024 => {
                type $L = $crate::lane::Lane1024;
                $body
            }
            other => panic!("unsupported lane width {other}"),
        }
    };
}

/// 2:1 multiplexer: element `k` takes `a` where `sel` is set, else `b`.
#[inline(always)]
pub fn mux<L: Lane>(sel: L, a: L, b: L) -> L {
    b.xor(sel.and(a.xor(b)))
}

/// Tallies of bitwise lane operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    pub and_count: u64,
    pub or_count: u64,
    pub xor_count: u64,
    pub not_count: u64,
}

impl OpCounter {
    pub const ZERO: OpCounter = OpCounter {
        and_count: 0,
        or_count: 0,
        xor_count: 0,
        not_count: 0,
    };

    pub fn total(&self) -> u64 {
        self.and_count + self.or_count + self.xor_count + self.not_count
    }

    fn merged(self, other: OpCounter) -> OpCounter {
        OpCounter {
            and_count: self.and_count + other.and_count,
            or_count: self.or_count + other.or_count,
            xor_count: self.xor_count + other.xor_count,
            not_count: self.not_count + other.not_count,
        }
    }
}

thread_local! {
    static COUNTS: Cell<OpCounter> = const { Cell::new(OpCounter::ZERO) };
}

#[inline]
fn tally(update: impl FnOnce(&mut OpCounter)) {
    COUNTS.with(|c| {
        let mut v = c.get();
        update(&mut v);
        c.set(v);
    });
}

/// Evaluates `f` in a fresh counting context and returns the gate tally of
/// every [`Counted`] operation it performed on this thread.
///
/// Contexts nest: the inner tally is also added to the enclosing one.
pub fn count_ops<R>(f: impl FnOnce() -> R) -> (R, OpCounter) {
    let outer = COUNTS.with(|c| c.replace(OpCounter::ZERO));
    let result = f();
    let inner = COUNTS.with(|c| c.get());
    COUNTS.with(|c| c.set(outer.merged(inner)));
    (result, inner)
}

/// Instrumented lane: behaves like `L` and records each operation in the
/// current thread's counting context.
#[derive(Clone, Copy, PartialEq, Eq)]
#[repr(transparent)]
pub struct Counted<L>(pub L);

impl<L: Lane> fmt::Debug for Counted<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Counted({:?})", self.0)
    }
}

impl<L: Lane> Lane for Counted<L> {
    const WIDTH: usize = L::WIDTH;
    const WORDS: usize = L::WORDS;

    fn zeros() -> Self {
        Counted(L::zeros())
    }
    fn ones() -> Self {
        Counted(L::ones())
    }
    fn and(self, rhs: Self) -> Self {
        tally(|c| c.and_count += 1);
        Counted(self.0.and(rhs.0))
    }
    fn or(self, rhs: Self) -> Self {
        tally(|c| c.or_count += 1);
        Counted(self.0.or(rhs.0))
    }
    fn xor(self, rhs: Self) -> Self {
        tally(|c| c.xor_count += 1);
        Counted(self.0.xor(rhs.0))
    }
    fn not(self) -> Self {
        tally(|c| c.not_count += 1);
        Counted(self.0.not())
    }
    fn word(&self, i: usize) -> u64 {
        self.0.word(i)
    }
    fn set_word(&mut self, i: usize, w: u64) {
        self.0.set_word(i, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_logic_w8() {
        let a: u8 = 0b1100_1010;
        let b: u8 = 0b1010_1010;
        assert_eq!(Lane::and(a, b), 0b1000_1010);
        assert_eq!(Lane::xor(a, u8::zeros()), a);
        assert_eq!(Lane::not(u8::ones()), u8::zeros());
    }

    #[test]
    fn mux_cases() {
        let a: u8 = 0x5a;
        let b: u8 = 0xc3;
        assert_eq!(mux(u8::ones(), a, b), a);
        assert_eq!(mux(u8::zeros(), a, b), b);
        // W = 4 worth of elements in the low nibble.
        assert_eq!(mux(0b0101u8, 0b1111, 0b0000) & 0xf, 0b0101);
    }

    #[test]
    fn mux_brute_force_per_bit() {
        for sel in 0..16u8 {
            for a in 0..16u8 {
                for b in 0..16u8 {
                    let expected = (sel & a) | (!sel & b);
                    assert_eq!(mux(sel, a, b) & 0xf, expected & 0xf);
                    assert_eq!(mux(sel, a, a), a);
                    assert_eq!(mux(sel, a, b), mux(Lane::not(sel), b, a));
                }
            }
        }
    }

    #[test]
    fn words_and_bits_round_trip() {
        let mut w = Lane256::zeros();
        w.set_bit(0, true);
        w.set_bit(70, true);
        w.set_bit(255, true);
        assert!(w.bit(0) && w.bit(70) && w.bit(255));
        assert!(!w.bit(1) && !w.bit(64));
        assert_eq!(w.word(1), 1 << 6);

        let mut x = 0u128;
        x.set_word(1, 0xdead_beef);
        assert_eq!(x.word(1), 0xdead_beef);
        assert_eq!(x.word(0), 0);

        let mut y = 0u16;
        y.set_word(0, 0xffff_ffff);
        assert_eq!(y, 0xffff);
        assert_eq!(u8::from_low_bits(0x1ff), 0xff);
    }

    #[test]
    fn wide_ops_match_words() {
        let a = Wide([1u64, 2, 3, 4]);
        let b = Wide([3u64, 3, 3, 3]);
        assert_eq!(a.and(b), Wide([1, 2, 3, 0]));
        assert_eq!(a.or(b), Wide([3, 3, 3, 7]));
        assert_eq!(a.xor(b), Wide([2, 1, 0, 7]));
        assert_eq!(Lane256::zeros().not(), Lane256::ones());
    }

    #[test]
    fn counted_lane_tallies_each_call() {
        let ((), counts) = count_ops(|| {
            let a = Counted(0b1010u8);
            let b = Counted(0b0110u8);
            let c = a.and(b).or(a).xor(b);
            let _ = c.not();
            let _ = mux(a, b, c);
        });
        assert_eq!(counts.and_count, 2);
        assert_eq!(counts.or_count, 1);
        assert_eq!(counts.xor_count, 3);
        assert_eq!(counts.not_count, 1);
        assert_eq!(counts.total(), 7);
    }

    #[test]
    fn counting_contexts_nest_and_reset() {
        let ((), outer) = count_ops(|| {
            let _ = Counted(1u8).and(Counted(1));
            let ((), inner) = count_ops(|| {
                let _ = Counted(1u8).or(Counted(1));
            });
            assert_eq!(inner.total(), 1);
            assert_eq!(inner.or_count, 1);
        });
        assert_eq!(outer.total(), 2);
        let ((), fresh) = count_ops(|| ());
        assert_eq!(fresh, OpCounter::ZERO);
    }

    #[test]
    fn counting_is_per_thread() {
        let handles: Vec<_> = (0..4)
            .map(|t| {
                std::thread::spawn(move || {
                    let ((), c) = count_ops(|| {
                        for _ in 0..(t + 1) * 100 {
                            let _ = Counted(3u32).xor(Counted(5));
                        }
                    });
                    c.xor_count
                })
            })
            .collect();
        let got: Vec<u64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(got, vec![100, 200, 300, 400]);
    }

    #[test]
    fn dispatch_macro_binds_width() {
        for &w in &SUPPORTED_WIDTHS {
            let width = with_lane_width!(w, L => L::WIDTH);
            assert_eq!(width, w);
        }
    }
}
