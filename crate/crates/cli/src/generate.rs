//! Per-format library generation.
//!
//! `generate` writes two files into the output directory:
//!
//! * `manifest.json`: the format parameters and the entry points.
//! * `bfp_format.rs`: a Rust module with `pack`, `unpack`, `add`, `sub`,
//!   `mul` and `div` specialized to the format and lane width, for use with
//!   `include!` or as a module in a crate depending on `bfp-core`.
//!
//! Output is deterministic: regenerating the same config gives byte-identical
//! files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bfp_core::{FormatSpec, Rounding, Subnormals};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SOURCE_FILE: &str = "bfp_format.rs";
pub const ENTRY_POINTS: [&str; 6] = ["pack", "unpack", "add", "sub", "mul", "div"];

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub sign_bits: u32,
    pub exp_bits: u32,
    pub sig_bits: u32,
    pub total_bits: u32,
    pub bias: i32,
    pub rounding: String,
    pub subnormals: String,
    pub lane_width: usize,
    pub bytes_per_encoding: usize,
    pub source: String,
    pub entry_points: Vec<String>,
}

impl Manifest {
    pub fn new(spec: &FormatSpec, lane_width: usize) -> Self {
        Manifest {
            name: spec.name().to_string(),
            sign_bits: 1,
            exp_bits: spec.exp_bits(),
            sig_bits: spec.sig_bits(),
            total_bits: spec.total_bits(),
            bias: spec.bias(),
            rounding: spec.rounding().to_string(),
            subnormals: spec.subnormals().to_string(),
            lane_width,
            bytes_per_encoding: spec.bytes_per_encoding(),
            source: SOURCE_FILE.to_string(),
            entry_points: ENTRY_POINTS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn lane_type(lane_width: usize) -> &'static str {
    match lane_width {
        8 => "u8",
        16 => "u16",
        32 => "u32",
        64 => "u64",
        128 => "u128",
        256 => "bfp_core::Lane256",
        512 => "bfp_core::Lane512",
        1024 => "bfp_core::Lane1024",
        other => panic!("unsupported lane width {other}"),
    }
}

/// The specialized Rust module for `spec` at `lane_width`.
pub fn render_source(spec: &FormatSpec, lane_width: usize) -> String {
    let rounding = match spec.rounding() {
        Rounding::TowardZero => "TowardZero",
        Rounding::NearestEven => "NearestEven",
    };
    let subnormals = match spec.subnormals() {
        Subnormals::Gradual => "Gradual",
        Subnormals::FlushToZero => "FlushToZero",
    };
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "// Generated by `bfp gen`; do not edit.").unwrap();
    writeln!(
        w,
        "// {}: 1 sign, {} exponent, {} fraction bits, {}, {} subnormals, {} lanes.",
        spec.name(),
        spec.exp_bits(),
        spec.sig_bits(),
        spec.rounding(),
        spec.subnormals(),
        lane_width
    )
    .unwrap();
    writeln!(w).unwrap();
    writeln!(w, "pub const NAME: &str = {:?};", spec.name()).unwrap();
    writeln!(w, "pub const EXP_BITS: u32 = {};", spec.exp_bits()).unwrap();
    writeln!(w, "pub const SIG_BITS: u32 = {};", spec.sig_bits()).unwrap();
    writeln!(w, "pub const BIAS: i32 = {};", spec.bias()).unwrap();
    writeln!(w, "pub const LANE_WIDTH: usize = {lane_width};").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "pub type Lanes = {};", lane_type(lane_width)).unwrap();
    writeln!(w, "pub type Vector = bfp_core::BfpVector<Lanes>;").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "pub fn spec() -> &'static bfp_core::FormatSpec {{").unwrap();
    writeln!(w, "    static SPEC: std::sync::OnceLock<bfp_core::FormatSpec> = std::sync::OnceLock::new();").unwrap();
    writeln!(w, "    SPEC.get_or_init(|| {{").unwrap();
    writeln!(
        w,
        "        bfp_core::FormatSpec::new(NAME, EXP_BITS, SIG_BITS, bfp_core::Rounding::{rounding})"
    )
    .unwrap();
    writeln!(w, "            .expect(\"valid format\")").unwrap();
    writeln!(w, "            .with_subnormals(bfp_core::Subnormals::{subnormals})").unwrap();
    writeln!(w, "    }})").unwrap();
    writeln!(w, "}}").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "/// Transposes up to `LANE_WIDTH` encodings into a vector.").unwrap();
    writeln!(w, "pub fn pack(encodings: &[u64]) -> Result<Vector, bfp_core::FormatError> {{").unwrap();
    writeln!(w, "    Vector::pack(encodings, spec())").unwrap();
    writeln!(w, "}}").unwrap();
    writeln!(w).unwrap();
    writeln!(w, "pub fn unpack(v: &Vector, count: usize) -> Result<Vec<u64>, bfp_core::FormatError> {{").unwrap();
    writeln!(w, "    v.unpack(count)").unwrap();
    writeln!(w, "}}").unwrap();
    for (op, func) in [("add", "bfp_add"), ("sub", "bfp_sub"), ("mul", "bfp_mul"), ("div", "bfp_div")] {
        writeln!(w).unwrap();
        writeln!(w, "pub fn {op}(x: &Vector, y: &Vector) -> Vector {{").unwrap();
        writeln!(w, "    bfp_core::{func}(x, y).expect(\"operands built by pack share the format\")").unwrap();
        writeln!(w, "}}").unwrap();
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<(), GenerateError> {
    fs::write(&path, contents).map_err(|source| GenerateError::Io { path, source })
}

/// Writes the manifest and the specialized source into `out_dir`, creating
/// it if needed.
pub fn generate(
    spec: &FormatSpec,
    lane_width: usize,
    out_dir: &Path,
) -> Result<Manifest, GenerateError> {
    fs::create_dir_all(out_dir).map_err(|source| GenerateError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let manifest = Manifest::new(spec, lane_width);
    write(out_dir.join(MANIFEST_FILE), &manifest.to_json())?;
    write(out_dir.join(SOURCE_FILE), &render_source(spec, lane_width))?;
    Ok(manifest)
}
