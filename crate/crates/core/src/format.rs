//! Custom floating-point formats, scalar conversion helpers and the
//! standard <-> bitslice vector types.
//!
//! An encoding is laid out MSB to LSB as sign, exponent, fraction, IEEE-style:
//! exponent all-ones is reserved for infinities and NaN, all-zeros for zero
//! and subnormals. In a [`BfpVector`] lane `j` holds bit `j` of every
//! element's encoding, so lane 0 is the fraction LSB and lane `e + s` the sign.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::bitslice::BitField;
use crate::lane::Lane;

/// Raw bits of one element, right-aligned in a `u64`.
pub type Encoding = u64;

pub const MIN_EXP_BITS: u32 = 2;
pub const MAX_EXP_BITS: u32 = 11;
pub const MIN_SIG_BITS: u32 = 1;
pub const MAX_SIG_BITS: u32 = 52;
pub const MAX_TOTAL_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("exp_bits = {0} is outside [{MIN_EXP_BITS}, {MAX_EXP_BITS}]")]
    ExpBits(u32),
    #[error("sig_bits = {0} is outside [{MIN_SIG_BITS}, {MAX_SIG_BITS}]")]
    SigBits(u32),
    #[error("1 + exp_bits + sig_bits = {0} exceeds {MAX_TOTAL_BITS}")]
    TotalBits(u32),
    #[error("{len} elements do not fit in a vector of width {width}")]
    TooManyElements { len: usize, width: usize },
    #[error("cannot unpack {count} elements from a vector of width {width}")]
    CountExceedsWidth { count: usize, width: usize },
    #[error("element {index}: encoding {value:#x} has more than {bits} bits")]
    EncodingOutOfRange { index: usize, value: u64, bits: u32 },
    #[error("bit field has {got} lanes, format needs {expected}")]
    FieldWidth { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rounding {
    /// Truncation (RZ).
    TowardZero,
    /// Round to nearest, ties to even (RN).
    NearestEven,
}

impl Rounding {
    pub const ALL: [Rounding; 2] = [Rounding::TowardZero, Rounding::NearestEven];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rounding::TowardZero => "RZ",
            Rounding::NearestEven => "RN",
        }
    }
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "RZ" | "rz" => Ok(Rounding::TowardZero),
            "RN" | "rn" => Ok(Rounding::NearestEven),
            other => Err(format!("unknown rounding mode `{other}` (expected RZ or RN)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Subnormals {
    /// Gradual underflow.
    #[default]
    Gradual,
    /// Subnormal results become signed zero.
    FlushToZero,
}

impl Subnormals {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subnormals::Gradual => "gradual",
            Subnormals::FlushToZero => "ftz",
        }
    }
}

impl fmt::Display for Subnormals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subnormals {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gradual" => Ok(Subnormals::Gradual),
            "ftz" => Ok(Subnormals::FlushToZero),
            other => Err(format!("unknown subnormal policy `{other}` (expected gradual or ftz)")),
        }
    }
}

/// A custom floating-point format: 1 sign bit, `exp_bits` exponent bits and
/// `sig_bits` stored fraction bits (hidden bit excluded).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FormatSpec {
    name: Arc<str>,
    exp_bits: u32,
    sig_bits: u32,
    rounding: Rounding,
    subnormals: Subnormals,
}

impl FormatSpec {
    pub fn new(
        name: &str,
        exp_bits: u32,
        sig_bits: u32,
        rounding: Rounding,
    ) -> Result<Self, FormatError> {
        if !(MIN_EXP_BITS..=MAX_EXP_BITS).contains(&exp_bits) {
            return Err(FormatError::ExpBits(exp_bits));
        }
        if !(MIN_SIG_BITS..=MAX_SIG_BITS).contains(&sig_bits) {
            return Err(FormatError::SigBits(sig_bits));
        }
        if 1 + exp_bits + sig_bits > MAX_TOTAL_BITS {
            return Err(FormatError::TotalBits(1 + exp_bits + sig_bits));
        }
        Ok(FormatSpec {
            name: name.into(),
            exp_bits,
            sig_bits,
            rounding,
            subnormals: Subnormals::Gradual,
        })
    }

    /// (1, 4, 3)
    pub fn fp8(rounding: Rounding) -> Self {
        Self::new("fp8", 4, 3, rounding).expect("valid format")
    }

    /// (1, 5, 10)
    pub fn fp16(rounding: Rounding) -> Self {
        Self::new("fp16", 5, 10, rounding).expect("valid format")
    }

    /// (1, 8, 23)
    pub fn fp32(rounding: Rounding) -> Self {
        Self::new("fp32", 8, 23, rounding).expect("valid format")
    }

    /// (1, 11, 52)
    pub fn fp64(rounding: Rounding) -> Self {
        Self::new("fp64", 11, 52, rounding).expect("valid format")
    }

    pub fn with_rounding(&self, rounding: Rounding) -> Self {
        FormatSpec {
            rounding,
            ..self.clone()
        }
    }

    pub fn with_subnormals(&self, subnormals: Subnormals) -> Self {
        FormatSpec {
            subnormals,
            ..self.clone()
        }
    }

    pub fn with_name(&self, name: &str) -> Self {
        FormatSpec {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn exp_bits(&self) -> u32 {
        self.exp_bits
    }
    pub fn sig_bits(&self) -> u32 {
        self.sig_bits
    }
    pub fn rounding(&self) -> Rounding {
        self.rounding
    }
    pub fn subnormals(&self) -> Subnormals {
        self.subnormals
    }

    pub fn total_bits(&self) -> u32 {
        1 + self.exp_bits + self.sig_bits
    }

    /// Significand precision including the hidden bit.
    pub fn precision(&self) -> u32 {
        self.sig_bits + 1
    }

    pub fn bias(&self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    /// The all-ones exponent field (Inf/NaN).
    pub fn exp_all_ones(&self) -> u64 {
        (1 << self.exp_bits) - 1
    }

    pub fn encoding_mask(&self) -> u64 {
        if self.total_bits() == 64 {
            u64::MAX
        } else {
            (1 << self.total_bits()) - 1
        }
    }

    pub fn fraction_mask(&self) -> u64 {
        (1 << self.sig_bits) - 1
    }

    pub fn sign_bit(&self) -> u64 {
        1 << (self.exp_bits + self.sig_bits)
    }

    /// Bytes per element in `.bfpraw` files.
    pub fn bytes_per_encoding(&self) -> usize {
        self.total_bits().div_ceil(8) as usize
    }

    pub fn canonical_nan(&self) -> Encoding {
        (self.exp_all_ones() << self.sig_bits) | (1 << (self.sig_bits - 1))
    }

    pub fn infinity(&self, negative: bool) -> Encoding {
        self.signed(negative, self.exp_all_ones() << self.sig_bits)
    }

    pub fn max_finite(&self, negative: bool) -> Encoding {
        self.signed(
            negative,
            ((self.exp_all_ones() - 1) << self.sig_bits) | self.fraction_mask(),
        )
    }

    pub fn zero(&self, negative: bool) -> Encoding {
        self.signed(negative, 0)
    }

    fn signed(&self, negative: bool, magnitude: u64) -> Encoding {
        if negative {
            magnitude | self.sign_bit()
        } else {
            magnitude
        }
    }
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (1,{},{}) {} {}",
            self.name, self.exp_bits, self.sig_bits, self.rounding, self.subnormals
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FpClass {
    Zero,
    Subnormal,
    Normal,
    Inf,
    NaN,
}

/// Value-level view of one element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarCustom {
    pub sign: bool,
    pub biased_exp: u32,
    pub fraction: u64,
    pub class: FpClass,
}

impl ScalarCustom {
    pub fn from_encoding(enc: Encoding, spec: &FormatSpec) -> Self {
        let s = spec.sig_bits;
        let fraction = enc & spec.fraction_mask();
        let biased_exp = ((enc >> s) & spec.exp_all_ones()) as u32;
        ScalarCustom {
            sign: enc & spec.sign_bit() != 0,
            biased_exp,
            fraction,
            class: classify(enc, spec),
        }
    }

    pub fn to_encoding(&self, spec: &FormatSpec) -> Encoding {
        let magnitude = (u64::from(self.biased_exp) << spec.sig_bits) | self.fraction;
        if self.sign {
            magnitude | spec.sign_bit()
        } else {
            magnitude
        }
    }
}

pub fn classify(enc: Encoding, spec: &FormatSpec) -> FpClass {
    let exp = (enc >> spec.sig_bits) & spec.exp_all_ones();
    let frac = enc & spec.fraction_mask();
    match (exp, frac) {
        (0, 0) => FpClass::Zero,
        (0, _) => FpClass::Subnormal,
        (e, 0) if e == spec.exp_all_ones() => FpClass::Inf,
        (e, _) if e == spec.exp_all_ones() => FpClass::NaN,
        _ => FpClass::Normal,
    }
}

/// Exact value of an encoding. Every value of a format with `e <= 11` and
/// `s <= 52` is representable in binary64.
pub fn decode_scalar(enc: Encoding, spec: &FormatSpec) -> f64 {
    let v = ScalarCustom::from_encoding(enc, spec);
    let sign = if v.sign { -1.0 } else { 1.0 };
    match v.class {
        FpClass::NaN => f64::NAN,
        FpClass::Inf => sign * f64::INFINITY,
        FpClass::Zero => sign * 0.0,
        FpClass::Subnormal | FpClass::Normal => {
            let (m, exp) = if v.class == FpClass::Normal {
                (v.fraction | (1 << spec.sig_bits), v.biased_exp as i32)
            } else {
                (v.fraction, 1)
            };
            f64_from_parts(v.sign, m, exp - spec.bias() - spec.sig_bits as i32)
        }
    }
}

/// Builds `(-1)^negative * m * 2^k`, which must be exactly representable.
fn f64_from_parts(negative: bool, m: u64, k: i32) -> f64 {
    let sign = u64::from(negative) << 63;
    if m == 0 {
        return f64::from_bits(sign);
    }
    let msb = 63 - m.leading_zeros() as i32;
    let top = k + msb;
    let bits = if top >= -1022 {
        let frac = if msb <= 52 {
            m << (52 - msb)
        } else {
            debug_assert_eq!(m & ((1 << (msb - 52)) - 1), 0, "inexact");
            m >> (msb - 52)
        };
        (((top + 1023) as u64) << 52) | (frac & ((1 << 52) - 1))
    } else {
        let shift = k + 1074;
        if shift >= 0 {
            m << shift
        } else {
            debug_assert_eq!(m & ((1 << -shift) - 1), 0, "inexact");
            m >> -shift
        }
    };
    f64::from_bits(sign | bits)
}

/// Converts a binary64 value to the format, rounding per `spec.rounding()`.
///
/// Overflow gives infinity under RN and the largest finite value under RZ;
/// NaN maps to the canonical quiet NaN.
pub fn encode_scalar(x: f64, spec: &FormatSpec) -> Encoding {
    if x.is_nan() {
        return spec.canonical_nan();
    }
    let negative = x.is_sign_negative();
    if x.is_infinite() {
        return spec.infinity(negative);
    }
    if x == 0.0 {
        return spec.zero(negative);
    }
    let bits = x.to_bits();
    let field = ((bits >> 52) & 0x7ff) as i32;
    let (m, k) = if field == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), field - 1075)
    };

    let s = spec.sig_bits as i32;
    let msb = 63 - m.leading_zeros() as i32;
    let min_exp = 1 - spec.bias();
    let mut ulp_exp = (k + msb).max(min_exp) - s;
    let drop = ulp_exp - k;
    let mut mant = if drop <= 0 {
        m << -drop
    } else {
        let kept = if drop >= 64 { 0 } else { m >> drop };
        let half = if drop > 64 { 0 } else { (m >> (drop - 1)) & 1 };
        let below = if drop >= 65 {
            m
        } else if drop == 1 {
            0
        } else {
            m & ((1u64 << (drop - 1)) - 1)
        };
        let round_up = spec.rounding() == Rounding::NearestEven
            && half == 1
            && (below != 0 || kept & 1 == 1);
        kept + u64::from(round_up)
    };
    if mant == 1 << (s + 1) {
        mant >>= 1;
        ulp_exp += 1;
    }
    if mant >= 1 << s {
        let biased = ulp_exp + s + spec.bias();
        if biased as u64 >= spec.exp_all_ones() {
            return match spec.rounding() {
                Rounding::NearestEven => spec.infinity(negative),
                Rounding::TowardZero => spec.max_finite(negative),
            };
        }
        spec.signed(
            negative,
            ((biased as u64) << s) | (mant & spec.fraction_mask()),
        )
    } else if spec.subnormals() == Subnormals::FlushToZero {
        spec.zero(negative)
    } else {
        spec.signed(negative, mant)
    }
}

/// `W` custom-precision floats in bitslice layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfpVector<L> {
    spec: FormatSpec,
    field: BitField<L>,
}

impl<L: Lane> BfpVector<L> {
    /// Transposes up to `W` encodings into lanes; unused elements are zero.
    pub fn pack(encodings: &[Encoding], spec: &FormatSpec) -> Result<Self, FormatError> {
        if encodings.len() > L::WIDTH {
            return Err(FormatError::TooManyElements {
                len: encodings.len(),
                width: L::WIDTH,
            });
        }
        let mask = spec.encoding_mask();
        if let Some((index, &value)) = encodings.iter().enumerate().find(|(_, &v)| v & !mask != 0)
        {
            return Err(FormatError::EncodingOutOfRange {
                index,
                value,
                bits: spec.total_bits(),
            });
        }
        Ok(BfpVector {
            spec: spec.clone(),
            field: BitField::from_elements(spec.total_bits() as usize, encodings),
        })
    }

    /// Encodings of the first `count` elements.
    pub fn unpack(&self, count: usize) -> Result<Vec<Encoding>, FormatError> {
        if count > L::WIDTH {
            return Err(FormatError::CountExceedsWidth {
                count,
                width: L::WIDTH,
            });
        }
        Ok(self.field.to_elements(count))
    }

    pub fn from_field(spec: &FormatSpec, field: BitField<L>) -> Result<Self, FormatError> {
        let expected = spec.total_bits() as usize;
        if field.len() != expected {
            return Err(FormatError::FieldWidth {
                expected,
                got: field.len(),
            });
        }
        Ok(BfpVector {
            spec: spec.clone(),
            field,
        })
    }

    pub fn spec(&self) -> &FormatSpec {
        &self.spec
    }

    pub fn field(&self) -> &BitField<L> {
        &self.field
    }

    pub fn lanes(&self) -> &[L] {
        self.field.lanes()
    }

    pub fn sign_lane(&self) -> L {
        self.field.lane(self.field.len() - 1)
    }

    pub fn width(&self) -> usize {
        L::WIDTH
    }
}
