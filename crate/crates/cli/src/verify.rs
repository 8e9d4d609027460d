//! `bfp verify`: runs the pipelines against a reference and reports mismatches.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use bfp_core::check::{
    exhaustive_check, ieee32_check, is_binary32, random_check, write_mismatch_csv, Report,
    MAX_EXHAUSTIVE_BITS,
};
use bfp_core::{FormatSpec, OpKind, Rounding};

use crate::{CliError, EXIT_MISMATCH, EXIT_OK};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Every encoding pair.
    Exhaustive,
    /// This many random pairs, directed boundary values mixed in.
    Random(usize),
    /// Random pairs compared with the host's binary32 arithmetic.
    Ieee32(usize),
}

#[derive(Clone, Debug)]
pub struct VerifyRequest {
    pub spec: FormatSpec,
    pub ops: Vec<OpKind>,
    pub modes: Vec<Rounding>,
    pub strategy: Strategy,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub runs: Vec<(OpKind, Rounding, Report)>,
}

impl VerifyOutcome {
    pub fn mismatch_count(&self) -> usize {
        self.runs.iter().map(|r| r.2.mismatches.len()).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.mismatch_count() == 0
    }

    /// `EXIT_OK` when clean, `EXIT_MISMATCH` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_clean() {
            EXIT_OK
        } else {
            EXIT_MISMATCH
        }
    }

    pub fn write_report<W: Write>(&self, out: W, spec: &FormatSpec) -> io::Result<()> {
        let all: Vec<_> = self
            .runs
            .iter()
            .flat_map(|r| r.2.mismatches.iter().copied())
            .collect();
        write_mismatch_csv(out, spec, &all)
    }

    pub fn write_report_file(&self, path: &Path, spec: &FormatSpec) -> Result<(), CliError> {
        let io_err = |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        self.write_report(&mut out, spec).map_err(io_err)?;
        out.flush().map_err(io_err)
    }
}

/// Checks the request's preconditions without running anything.
pub fn validate(req: &VerifyRequest) -> Result<(), CliError> {
    match req.strategy {
        Strategy::Exhaustive if req.spec.total_bits() > MAX_EXHAUSTIVE_BITS => {
            Err(CliError::Usage(format!(
                "exhaustive verification is limited to formats of at most {MAX_EXHAUSTIVE_BITS} bits \
                 ({} has {}); use --random <N> instead",
                req.spec.name(),
                req.spec.total_bits()
            )))
        }
        Strategy::Ieee32(_) => {
            let rn_only = req.modes.iter().all(|&m| m == Rounding::NearestEven);
            if !rn_only || !is_binary32(&req.spec.with_rounding(Rounding::NearestEven)) {
                Err(CliError::Usage(
                    "--ieee32 needs exp_bits = 8, sig_bits = 23, gradual subnormals and RN".into(),
                ))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

pub fn run_verify(req: &VerifyRequest) -> Result<VerifyOutcome, CliError> {
    validate(req)?;
    let mut runs = Vec::new();
    for (i, &op) in req.ops.iter().enumerate() {
        for &mode in &req.modes {
            let seed = req.seed.wrapping_add(i as u64);
            let report = match req.strategy {
                Strategy::Exhaustive => exhaustive_check(&req.spec, op, mode)?,
                Strategy::Random(n) => random_check(&req.spec, op, mode, n, seed),
                Strategy::Ieee32(n) => {
                    ieee32_check(&req.spec.with_rounding(mode), op, n, seed)?
                }
            };
            runs.push((op, mode, report));
        }
    }
    Ok(VerifyOutcome { runs })
}
