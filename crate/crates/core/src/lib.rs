//! Vector arithmetic on custom-precision floating point stored in bitslice
//! layout.
//!
//! A vector of `W` elements is kept as one lane per encoding bit (see
//! [`lane`]). Addition, subtraction, multiplication and division are software
//! circuits assembled from bitwise lane operations ([`bitslice`]), so every
//! instruction processes one bit position of all `W` elements at once.
//! [`oracle`] is an independent scalar reference used to verify the circuits.

pub mod arith;
pub mod bitslice;
pub mod check;
pub mod format;
pub mod lane;
pub mod op;
pub mod oracle;
pub mod transpose;

pub use arith::{
    apply_special_masks, bfp_add, bfp_div, bfp_mul, bfp_op, bfp_op_with, bfp_sub, round_stage,
    ArithError, GuardState, RoundFn,
};
pub use bitslice::BitField;
pub use format::{
    classify, decode_scalar, encode_scalar, BfpVector, Encoding, FormatError, FormatSpec, FpClass,
    Rounding, ScalarCustom, Subnormals,
};
pub use op::OpKind;
pub use lane::{count_ops, mux, Counted, Lane, Lane1024, Lane256, Lane512, OpCounter, Wide};
