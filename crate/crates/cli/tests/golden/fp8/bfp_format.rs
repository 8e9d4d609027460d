// Generated by `bfp gen`; do not edit.
// fp8: 1 sign, 4 exponent, 3 fraction bits, RZ, gradual subnormals, 256 lanes.

pub const NAME: &str = "fp8";
pub const EXP_BITS: u32 = 4;
pub const SIG_BITS: u32 = 3;
pub const BIAS: i32 = 7;
pub const LANE_WIDTH: usize = 256;

pub type Lanes = bfp_core::Lane256;
pub type Vector = bfp_core::BfpVector<Lanes>;

pub fn spec() -> &'static bfp_core::FormatSpec {
    static SPEC: std::sync::OnceLock<bfp_core::FormatSpec> = std::sync::OnceLock::new();
    SPEC.get_or_init(|| {
        bfp_core::FormatSpec::new(NAME, EXP_BITS, SIG_BITS, bfp_core::Rounding::TowardZero)
            .expect("valid format")
            .with_subnormals(bfp_core::Subnormals::Gradual)
    })
}

/// Transposes up to `LANE_WIDTH` encodings into a vector.
pub fn pack(encodings: &[u64]) -> Result<Vector, bfp_core::FormatError> {
    Vector::pack(encodings, spec())
}

pub fn unpack(v: &Vector, count: usize) -> Result<Vec<u64>, bfp_core::FormatError> {
    v.unpack(count)
}

pub fn add(x: &Vector, y: &Vector) -> Vector {
    bfp_core::bfp_add(x, y).expect("operands built by pack share the format")
}

pub fn sub(x: &Vector, y: &Vector) -> Vector {
    bfp_core::bfp_sub(x, y).expect("operands built by pack share the format")
}

pub fn mul(x: &Vector, y: &Vector) -> Vector {
    bfp_core::bfp_mul(x, y).expect("operands built by pack share the format")
}

pub fn div(x: &Vector, y: &Vector) -> Vector {
    bfp_core::bfp_div(x, y).expect("operands built by pack share the format")
}
